//! Full response calculation at one fractional order.

use alloc::vec::Vec;

use crate::error::Result;
use crate::fracop::FractionalOrder;
use crate::hamiltonian::{self, Calibration, GridPolicy, PhysicalConstants, Potential};
use crate::response::{self, ConvergenceDeltas, FiniteField, LambdaMatrix, TrkResidual};
use crate::threelevel::{self, FractionalMaximum, LambdaElements, ThreeLevelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub grid: GridPolicy,
    pub k_states: usize,
    pub k_sum: usize,
    pub calib_tol: f64,
    pub max_calib_iter: usize,
    pub consts: PhysicalConstants,
    /// Initial step of the finite-field cross-check; `None` skips it.
    pub field_step: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            grid: GridPolicy::default(),
            k_states: 80,
            k_sum: 40,
            calib_tol: 1e-8,
            max_calib_iter: hamiltonian::DEFAULT_MAX_CALIBRATION_ITERATIONS,
            consts: PhysicalConstants::default(),
            field_step: None,
        }
    }
}

impl Settings {
    /// `k_sum` capped at the number of retained states.
    pub fn effective_k_sum(&self) -> usize {
        self.k_sum.min(self.k_states)
    }
}

/// Three-level model evaluated at the measured `X`, `E` and `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelComparison {
    pub x: f64,
    pub e: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

#[derive(Debug, Clone)]
pub struct ResponseReport {
    pub alpha: f64,
    pub offset: f64,
    pub calibration_iterations: usize,
    pub calibration_residual: f64,
    /// Lowest three energies.
    pub energies: [f64; 3],
    pub e10: f64,
    pub e20: f64,
    pub lambda: LambdaElements,
    /// Sum-rule matrix over the lowest [`LAMBDA_SIZE`] states.
    pub lambda_matrix: LambdaMatrix,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa1_app: f64,
    pub kappa2_app: f64,
    pub maximum: FractionalMaximum,
    pub trk00: TrkResidual,
    /// Residuals for every `k >= ℓ` below [`TRK_SIZE`].
    pub trk: Vec<(usize, usize, TrkResidual)>,
    pub finite_field: Option<FiniteField>,
    pub deltas: ConvergenceDeltas,
    pub three_level: ThreeLevelComparison,
    pub k_states: usize,
    pub k_sum: usize,
}

impl ResponseReport {
    /// Truncation, grid and sum-rule tail checks all pass.
    pub fn converged(&self) -> bool {
        self.deltas.converged() && self.trk00.converged
    }
}

pub const LAMBDA_SIZE: usize = 5;
pub const TRK_SIZE: usize = 3;

/// Calibrated solve plus every derived quantity.
pub fn analyze_calibrated(cal: &Calibration, settings: &Settings) -> Result<ResponseReport> {
    let consts = &settings.consts;
    let spectrum = &cal.spectrum;
    let k_sum = settings.effective_k_sum();
    let e = spectrum.energies();
    let table = response::transition_moments(spectrum, consts);
    let lam = response::lambda_matrix(spectrum, LAMBDA_SIZE.min(spectrum.count()))?;
    let lambda = LambdaElements {
        lam00: lam.get(0, 0),
        lam11: lam.get(1, 1),
        lam10: lam.get(1, 0),
        lam20: lam.get(2, 0),
    };
    let mut trk = Vec::new();
    for k in 0..TRK_SIZE {
        for l in 0..=k {
            trk.push((k, l, response::trk_residual(spectrum, &table, &lam, k, l, consts)?));
        }
    }
    let trk00 = trk[0].2;
    let finite_field = match settings.field_step {
        Some(h) => Some(response::finite_field_response(&cal.system, h)?),
        None => None,
    };
    let kappa1 = response::sos_kappa1(&table, e, k_sum, consts)?;
    let kappa2 = response::sos_kappa2(&table, e, k_sum, consts)?;
    let deltas = response::convergence_report(&cal.system, spectrum, k_sum)?;
    let e10 = e[1] - e[0];
    let e20 = e[2] - e[0];
    let kappa1_app = threelevel::apparent_polarizability(kappa1, e10, consts)?;
    let kappa2_app = threelevel::apparent_intrinsic(kappa2, e10, 1, consts)?;
    let maximum = threelevel::kappa2_max_fractional(lambda, e10, consts)?;

    let x10_max = threelevel::x10_max(e10, lambda.lam00, consts)?;
    let params = ThreeLevelParams {
        consts: *consts,
        ..ThreeLevelParams::new(e10 / e20, (table.get(1, 0).abs() / x10_max).min(1.0), e10, lambda)
    };
    let three_level = ThreeLevelComparison {
        x: params.x,
        e: params.e,
        kappa1: threelevel::tl_kappa1(&params)?,
        kappa2: threelevel::tl_kappa2(&params)?,
    };

    Ok(ResponseReport {
        alpha: spectrum.order().alpha(),
        offset: cal.offset,
        calibration_iterations: cal.iterations,
        calibration_residual: cal.residual,
        energies: [e[0], e[1], e[2]],
        e10,
        e20,
        lambda,
        lambda_matrix: lam,
        kappa1,
        kappa2,
        kappa1_app,
        kappa2_app,
        maximum,
        trk00,
        trk,
        finite_field,
        deltas,
        three_level,
        k_states: spectrum.count(),
        k_sum,
    })
}

/// Calibrates `potential` at `order` and runs [`analyze_calibrated`].
pub fn analyze(potential: &Potential, order: FractionalOrder, settings: &Settings) -> Result<ResponseReport> {
    let cal = hamiltonian::calibrate_offset(
        potential,
        &settings.grid,
        order,
        &settings.consts,
        settings.k_states,
        settings.calib_tol,
        settings.max_calib_iter,
    )?;
    analyze_calibrated(&cal, settings)
}
