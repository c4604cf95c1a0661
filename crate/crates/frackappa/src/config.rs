//! Run configuration: a JSON document, unknown keys rejected.

use std::fmt;
use std::path::PathBuf;

use frackappa_core::analysis::Settings;
use frackappa_core::hamiltonian::{GridPolicy, Potential};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Cqho,
    #[serde(alias = "slant-well")]
    Slantwell,
    SymmetricHo,
}

impl PotentialKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cqho => "cqho",
            Self::Slantwell => "slantwell",
            Self::SymmetricHo => "symmetric-ho",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Sweep,
    Wavefunctions,
    Lambda,
    Trk,
    Threelevel,
}

impl Emit {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sweep => "sweep",
            Self::Wavefunctions => "wavefunctions",
            Self::Lambda => "lambda",
            Self::Trk => "trk",
            Self::Threelevel => "threelevel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    List(Vec<f64>),
    Range(AlphaRange),
}

impl Default for AlphaSpec {
    fn default() -> Self {
        Self::Range(AlphaRange {
            start: 1.0,
            stop: 0.7,
            step: 0.05,
        })
    }
}

/// Rounds away the drift of repeated float steps.
fn tidy(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

impl AlphaSpec {
    /// The orders in sweep order. A range runs from `start` towards `stop`
    /// inclusive, whichever direction that is.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range(r) => {
                if !(r.step > 0.0) || !r.start.is_finite() || !r.stop.is_finite() {
                    return Vec::new();
                }
                let span = (r.stop - r.start).abs();
                let count = (span / r.step + 1e-9).floor() as usize + 1;
                let sign = if r.stop < r.start { -1.0 } else { 1.0 };
                (0..count).map(|i| tidy(r.start + sign * i as f64 * r.step)).collect()
            }
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    potential: Option<PotentialKind>,
    omega: Option<f64>,
    slope: Option<f64>,
    alpha: Option<AlphaSpec>,
    n_grid: Option<usize>,
    domain_width: Option<f64>,
    k_states: Option<usize>,
    k_sum: Option<usize>,
    calib_tol: Option<f64>,
    calib_max_iter: Option<usize>,
    field_step: Option<f64>,
    output: Option<PathBuf>,
    emit: Option<Vec<Emit>>,
    jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub potential: PotentialKind,
    pub omega: f64,
    pub slope: f64,
    pub alpha: AlphaSpec,
    pub n_grid: usize,
    pub domain_width: f64,
    pub k_states: usize,
    pub k_sum: usize,
    pub calib_tol: f64,
    pub calib_max_iter: usize,
    pub field_step: f64,
    pub output: Option<PathBuf>,
    pub emit: Vec<Emit>,
    pub jobs: usize,
}

pub const MIN_GRID_POINTS: usize = 64;

impl Default for RunConfig {
    fn default() -> Self {
        let settings = Settings::default();
        Self {
            potential: PotentialKind::Cqho,
            omega: 1.0,
            slope: 1.0,
            alpha: AlphaSpec::default(),
            n_grid: settings.grid.points,
            domain_width: settings.grid.width,
            k_states: settings.k_states,
            k_sum: settings.k_sum,
            calib_tol: settings.calib_tol,
            calib_max_iter: settings.max_calib_iter,
            field_step: 1e-3,
            output: None,
            emit: vec![Emit::Sweep],
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn alphas(&self) -> Vec<f64> {
        self.alpha.values()
    }

    /// Initial wall guess is the origin; calibration moves it.
    pub fn potential(&self) -> Potential {
        match self.potential {
            PotentialKind::Cqho => Potential::ClippedOscillator {
                omega: self.omega,
                offset: -1.0,
            },
            PotentialKind::Slantwell => Potential::SlantWell {
                slope: self.slope,
                offset: -1.0,
            },
            PotentialKind::SymmetricHo => Potential::SymmetricOscillator { omega: self.omega },
        }
    }

    pub fn settings(&self) -> Settings {
        Settings {
            grid: GridPolicy {
                points: self.n_grid,
                width: self.domain_width,
            },
            k_states: self.k_states,
            k_sum: self.k_sum,
            calib_tol: self.calib_tol,
            max_calib_iter: self.calib_max_iter,
            ..Settings::default()
        }
    }

    pub fn emits(&self, kind: Emit) -> bool {
        self.emit.contains(&kind)
    }

    /// Every range violation, each prefixed with its field name.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        need(self.omega > 0.0 && self.omega.is_finite(), format!("omega: must be positive, got {}", self.omega));
        need(self.slope > 0.0 && self.slope.is_finite(), format!("slope: must be positive, got {}", self.slope));
        if let AlphaSpec::Range(r) = &self.alpha {
            need(r.step > 0.0 && r.step.is_finite(), format!("alpha.step: must be positive, got {}", r.step));
        }
        let alphas = self.alphas();
        need(!alphas.is_empty(), "alpha: no values to run".into());
        for a in &alphas {
            need(
                *a > 0.5 && *a <= 1.0,
                format!("alpha: {a} outside the range (0.5, 1]"),
            );
        }
        need(
            self.n_grid >= MIN_GRID_POINTS,
            format!("n_grid: must be at least {MIN_GRID_POINTS}, got {}", self.n_grid),
        );
        need(
            self.domain_width > 0.0 && self.domain_width.is_finite(),
            format!("domain_width: must be positive, got {}", self.domain_width),
        );
        need(self.k_states >= 3, format!("k_states: must be at least 3, got {}", self.k_states));
        need(
            self.k_states <= self.n_grid / 4,
            format!("k_states: {} exceeds n_grid/4 = {}", self.k_states, self.n_grid / 4),
        );
        need(self.k_sum >= 2, format!("k_sum: must be at least 2, got {}", self.k_sum));
        // the grid check re-solves on half the points
        let coarse = ((self.n_grid + 1) / 2).saturating_sub(1) / 4;
        need(
            self.k_sum.min(self.k_states) <= coarse,
            format!("k_sum: {} states do not fit the coarse check grid (at most {coarse})", self.k_sum.min(self.k_states)),
        );
        need(
            self.calib_tol > 0.0 && self.calib_tol.is_finite(),
            format!("calib_tol: must be positive, got {}", self.calib_tol),
        );
        need(self.calib_max_iter >= 1, "calib_max_iter: must be at least 1".into());
        need(
            self.field_step > 0.0 && self.field_step.is_finite(),
            format!("field_step: must be positive, got {}", self.field_step),
        );
        need(!self.emit.is_empty(), "emit: at least one output is required".into());
        need(self.jobs >= 1, "jobs: must be at least 1".into());
        errs
    }
}

/// Problems found while reading a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Parses and range-checks a configuration document. Blank input gives the defaults.
pub fn validate_config(raw: &str) -> Result<RunConfig, ConfigError> {
    let raw_cfg: RawConfig = if raw.trim().is_empty() {
        RawConfig::default()
    } else {
        serde_json::from_str(raw).map_err(|e| ConfigError {
            problems: vec![e.to_string()],
        })?
    };
    let d = RunConfig::default();
    let mut emit = raw_cfg.emit.unwrap_or(d.emit);
    emit.sort();
    emit.dedup();
    let cfg = RunConfig {
        potential: raw_cfg.potential.unwrap_or(d.potential),
        omega: raw_cfg.omega.unwrap_or(d.omega),
        slope: raw_cfg.slope.unwrap_or(d.slope),
        alpha: raw_cfg.alpha.unwrap_or(d.alpha),
        n_grid: raw_cfg.n_grid.unwrap_or(d.n_grid),
        domain_width: raw_cfg.domain_width.unwrap_or(d.domain_width),
        k_states: raw_cfg.k_states.unwrap_or(d.k_states),
        k_sum: raw_cfg.k_sum.unwrap_or(d.k_sum),
        calib_tol: raw_cfg.calib_tol.unwrap_or(d.calib_tol),
        calib_max_iter: raw_cfg.calib_max_iter.unwrap_or(d.calib_max_iter),
        field_step: raw_cfg.field_step.unwrap_or(d.field_step),
        output: raw_cfg.output.or(d.output),
        emit,
        jobs: raw_cfg.jobs.unwrap_or(d.jobs),
    };
    let problems = cfg.violations();
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { problems })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(validate_config("").unwrap(), RunConfig::default());
        assert_eq!(validate_config("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn default_sweep_values() {
        assert_eq!(
            RunConfig::default().alphas(),
            vec![1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7]
        );
    }

    #[test]
    fn ascending_range() {
        let spec = AlphaSpec::Range(AlphaRange { start: 0.8, stop: 1.0, step: 0.1 });
        assert_eq!(spec.values(), vec![0.8, 0.9, 1.0]);
    }

    #[test]
    fn out_of_range_alpha_is_named() {
        let err = validate_config(r#"{"alpha": [0.4]}"#).unwrap_err();
        assert!(err.problems[0].contains("alpha") && err.problems[0].contains("(0.5, 1]"));
    }

    #[test]
    fn zero_step_rejected() {
        let err = validate_config(r#"{"alpha": {"start": 1.0, "stop": 0.7, "step": 0}}"#).unwrap_err();
        assert!(err.problems.iter().any(|p| p.starts_with("alpha.step")));
    }

    #[test]
    fn all_problems_reported_together() {
        let err = validate_config(r#"{"n_grid": 10, "omega": -1, "calib_tol": 0}"#).unwrap_err();
        for field in ["n_grid", "omega", "calib_tol"] {
            assert!(err.problems.iter().any(|p| p.starts_with(field)), "{field}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(validate_config(r#"{"n_gird": 100}"#).is_err());
        assert!(validate_config(r#"{"alpha": {"start": 1, "stop": 0.7, "step": 0.1, "x": 1}}"#).is_err());
    }

    #[test]
    fn potentials_and_emits_parse() {
        let cfg = validate_config(r#"{"potential": "symmetric-ho", "emit": ["trk", "sweep", "trk"]}"#).unwrap();
        assert_eq!(cfg.potential, PotentialKind::SymmetricHo);
        assert_eq!(cfg.emit, vec![Emit::Sweep, Emit::Trk]);
        assert_eq!(validate_config(r#"{"potential": "slantwell"}"#).unwrap().potential, PotentialKind::Slantwell);
    }
}
