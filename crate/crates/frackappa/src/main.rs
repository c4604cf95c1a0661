use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frackappa::config::{Emit, RunConfig};
use frackappa::{check, sweep, validate_config};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "frackappa", version, about = "Static response of space-fractional quantum wells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an α sweep and write the CSV tables
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads, overrides the config
        #[arg(long)]
        jobs: Option<usize>,
        /// Main table path, overrides the config; stdout when neither is set
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write x, V and the lowest five states at one α
    Wavefunctions {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite
    Check,
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    validate_config(&text).map_err(|e| {
        eprint!("{e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `runs/cqho.csv` with kind `trk` becomes `runs/cqho.trk.csv`.
fn sibling(main: &Path, kind: &str) -> PathBuf {
    let stem = main.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    main.with_file_name(format!("{stem}.{kind}.csv"))
}

fn run_sweep_command(config: &Path, jobs: Option<usize>, out: Option<PathBuf>) -> ExitCode {
    let mut cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(j) = jobs {
        if j == 0 {
            eprintln!("--jobs must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        cfg.jobs = j;
    }
    if out.is_some() {
        cfg.output = out;
    }
    let extra = cfg.emit.iter().any(|e| *e != Emit::Sweep);
    if extra && cfg.output.is_none() {
        eprintln!("output: a path is required when emitting tables other than the sweep");
        return ExitCode::from(EXIT_CONFIG);
    }

    let rows = match sweep::run_sweep(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    };

    let main_path = cfg.output.clone();
    let written = (|| -> Result<(), Box<dyn std::error::Error>> {
        if cfg.emits(Emit::Sweep) {
            sweep::write_sweep(&rows, open_out(main_path.as_deref())?)?;
        }
        if let Some(main) = &main_path {
            for kind in &cfg.emit {
                match kind {
                    Emit::Sweep => {}
                    Emit::Lambda => sweep::write_lambda(&rows, File::create(sibling(main, "lambda"))?)?,
                    Emit::Trk => sweep::write_trk(&rows, File::create(sibling(main, "trk"))?)?,
                    Emit::Threelevel => {
                        sweep::write_threelevel(&rows, File::create(sibling(main, "threelevel"))?)?
                    }
                    Emit::Wavefunctions => {
                        for &a in &cfg.alphas() {
                            let path = sibling(main, &format!("wavefunctions.a{a:.4}"));
                            sweep::write_wavefunctions(&cfg, a, File::create(path)?)?;
                        }
                    }
                }
            }
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("writing output failed: {e}");
        return ExitCode::from(EXIT_NUMERIC);
    }

    for row in &rows {
        match &row.outcome {
            Err(msg) => eprintln!("alpha = {}: {msg}", row.alpha),
            Ok(r) if !r.converged() => eprintln!(
                "alpha = {}: convergence guard failed (max delta {:.2e}, trk tail {:.2e})",
                row.alpha,
                r.deltas.max(),
                r.trk00.tail_change
            ),
            Ok(_) => {}
        }
    }
    if rows.iter().any(|r| r.outcome.is_err()) {
        ExitCode::from(EXIT_NUMERIC)
    } else if rows.iter().any(|r| !r.converged()) {
        ExitCode::from(EXIT_CONVERGENCE)
    } else {
        ExitCode::SUCCESS
    }
}

fn run_wavefunctions(config: &Path, alpha: f64, out: Option<PathBuf>) -> ExitCode {
    let cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if !(alpha > 0.5 && alpha <= 1.0) {
        eprintln!("alpha: {alpha} outside the range (0.5, 1]");
        return ExitCode::from(EXIT_CONFIG);
    }
    let result = open_out(out.as_deref())
        .map_err(|e| e.to_string())
        .and_then(|w| sweep::write_wavefunctions(&cfg, alpha, w).map_err(|e| e.to_string()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

fn run_check() -> ExitCode {
    let outcomes = check::run_checks();
    for o in &outcomes {
        println!("{} {:<30} {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    if outcomes.iter().all(|o| o.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERIC)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep { config, jobs, out } => run_sweep_command(&config, jobs, out),
        Command::Wavefunctions { config, alpha, out } => run_wavefunctions(&config, alpha, out),
        Command::Check => run_check(),
    }
}
