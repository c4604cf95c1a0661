//! α sweeps and their CSV tables.

use std::io::Write;

use frackappa_core::analysis::{self, ResponseReport};
use frackappa_core::fracop::FractionalOrder;
use frackappa_core::hamiltonian;
use rayon::prelude::*;

use crate::config::{Emit, RunConfig};

/// Column order of the main sweep table.
pub const SWEEP_COLUMNS: [&str; 19] = [
    "alpha",
    "b_offset",
    "E0",
    "E1",
    "E2",
    "E10",
    "E20",
    "lam00",
    "lam11",
    "lam10",
    "lam20",
    "kappa1",
    "kappa2",
    "kappa1_app",
    "kappa2_app",
    "kappa2_max_frac",
    "trk00_residual",
    "converged",
    "error",
];

/// Twelve significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub alpha: f64,
    pub outcome: Result<ResponseReport, String>,
}

impl SweepRow {
    pub fn report(&self) -> Option<&ResponseReport> {
        self.outcome.as_ref().ok()
    }

    pub fn converged(&self) -> bool {
        self.report().is_some_and(ResponseReport::converged)
    }
}

fn run_one(cfg: &RunConfig, alpha: f64) -> SweepRow {
    let mut settings = cfg.settings();
    if cfg.emits(Emit::Threelevel) {
        settings.field_step = Some(cfg.field_step);
    }
    let outcome = FractionalOrder::new(alpha)
        .and_then(|order| analysis::analyze(&cfg.potential(), order, &settings))
        .map_err(|e| e.to_string());
    SweepRow { alpha, outcome }
}

/// One row per α, in configuration order. Rows run on `cfg.jobs` threads.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, rayon::ThreadPoolBuildError> {
    let alphas = cfg.alphas();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs.max(1)).build()?;
    Ok(pool.install(|| alphas.par_iter().map(|&a| run_one(cfg, a)).collect()))
}

/// Main table: one line per α; failed rows keep α and carry the message.
pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for row in rows {
        let mut rec = vec![num(row.alpha)];
        match &row.outcome {
            Ok(r) => {
                rec.extend(
                    [
                        r.offset,
                        r.energies[0],
                        r.energies[1],
                        r.energies[2],
                        r.e10,
                        r.e20,
                        r.lambda.lam00,
                        r.lambda.lam11,
                        r.lambda.lam10,
                        r.lambda.lam20,
                        r.kappa1,
                        r.kappa2,
                        r.kappa1_app,
                        r.kappa2_app,
                        r.maximum.value,
                        r.trk00.residual,
                    ]
                    .map(num),
                );
                rec.push(r.converged().to_string());
                rec.push(String::new());
            }
            Err(msg) => {
                rec.extend(std::iter::repeat(String::new()).take(SWEEP_COLUMNS.len() - 3));
                rec.push("false".into());
                rec.push(msg.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-form sum-rule matrix: `alpha, k, l, lambda` for `k >= l`.
pub fn write_lambda<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "k", "l", "lambda"])?;
    for row in rows {
        let Some(r) = row.report() else { continue };
        let m = &r.lambda_matrix;
        for k in 0..m.size() {
            for l in 0..=k {
                w.write_record([num(row.alpha), k.to_string(), l.to_string(), num(m.get(k, l))])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trk<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "k", "l", "residual", "tail_change", "converged"])?;
    for row in rows {
        let Some(r) = row.report() else { continue };
        for (k, l, t) in &r.trk {
            w.write_record([
                num(row.alpha),
                k.to_string(),
                l.to_string(),
                num(t.residual),
                num(t.tail_change),
                t.converged.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const THREELEVEL_COLUMNS: [&str; 22] = [
    "alpha",
    "X",
    "E",
    "tl_kappa1",
    "tl_kappa2",
    "kappa1",
    "kappa2",
    "kappa1_ff",
    "kappa2_ff",
    "ff_step",
    "kappa2_max_frac",
    "argmax_X",
    "argmax_E",
    "kappa2_highest",
    "highest_X",
    "highest_E",
    "kappa2_lowest",
    "lowest_X",
    "lowest_E",
    "delta_states",
    "delta_grid",
    "k_sum",
];

/// Three-level comparison with the finite-field cross-check.
pub fn write_threelevel<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THREELEVEL_COLUMNS)?;
    for row in rows {
        let Some(r) = row.report() else { continue };
        let (f1, f2, fh) = r
            .finite_field
            .as_ref()
            .map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.kappa1, f.kappa2, f.step()));
        let m = &r.maximum;
        let d = &r.deltas;
        let mut rec: Vec<String> = [
            row.alpha,
            r.three_level.x,
            r.three_level.e,
            r.three_level.kappa1,
            r.three_level.kappa2,
            r.kappa1,
            r.kappa2,
            f1,
            f2,
            fh,
            m.value,
            m.x,
            m.e,
            m.highest.value,
            m.highest.x,
            m.highest.e,
            m.lowest.value,
            m.lowest.x,
            m.lowest.e,
            d.kappa1_states.max(d.kappa2_states),
            d.kappa1_grid.max(d.kappa2_grid),
        ]
        .map(num)
        .into();
        rec.push(r.k_sum.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const WAVEFUNCTION_STATES: usize = 5;

/// Calibrated grid, potential and the lowest five states at one α.
pub fn write_wavefunctions<W: Write>(cfg: &RunConfig, alpha: f64, out: W) -> Result<(), WaveError> {
    let order = FractionalOrder::new(alpha)?;
    let s = cfg.settings();
    let cal = hamiltonian::calibrate_offset(
        &cfg.potential(),
        &s.grid,
        order,
        &s.consts,
        s.k_states.max(WAVEFUNCTION_STATES),
        s.calib_tol,
        s.max_calib_iter,
    )?;
    let v = cal.system.potential_values()?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string(), "V".to_string()];
    header.extend((0..WAVEFUNCTION_STATES).map(|k| format!("psi{k}")));
    w.write_record(&header)?;
    let states: Vec<&[f64]> = (0..WAVEFUNCTION_STATES).map(|k| cal.spectrum.state(k)).collect();
    for (i, x) in cal.system.grid.points().enumerate() {
        let mut rec = vec![num(x), num(v[i])];
        rec.extend(states.iter().map(|psi| num(psi[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum WaveError {
    #[error(transparent)]
    Numeric(#[from] frackappa_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
