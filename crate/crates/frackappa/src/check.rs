//! Quick invariant suite behind `frackappa check`.

use frackappa_core::analysis::{self, Settings};
use frackappa_core::eigen;
use frackappa_core::fracop::{self, FractionalOrder, Grid1D};
use frackappa_core::hamiltonian::{GridPolicy, Potential, System};
use frackappa_core::threelevel::{self, LambdaElements};
use frackappa_core::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn laplacian_limit() -> Result<(bool, String)> {
    let grid = Grid1D::between_walls(0.0, 1.0, 40)?;
    let d = fracop::riesz_matrix(&grid, 2.0)?;
    let h2 = grid.dx() * grid.dx();
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let want = match i.abs_diff(j) {
                0 => -2.0 / h2,
                1 => 1.0 / h2,
                _ => 0.0,
            };
            worst = worst.max((d.get(i, j) - want).abs());
        }
    }
    Ok((worst == 0.0, format!("max deviation {worst:e}")))
}

fn symmetry() -> Result<(bool, String)> {
    let grid = Grid1D::between_walls(0.0, 1.0, 60)?;
    let mut worst = 0.0f64;
    for i in 1..=20 {
        let beta = 1.0 + f64::from(i) / 20.0;
        worst = worst.max(fracop::riesz_matrix(&grid, beta)?.max_asymmetry());
    }
    Ok((worst == 0.0, format!("max asymmetry {worst:e} over 20 orders")))
}

fn definiteness() -> Result<(bool, String)> {
    let grid = Grid1D::between_walls(0.0, 1.0, 400)?;
    let mut worst = f64::NEG_INFINITY;
    for beta in [1.1, 1.4, 1.7, 2.0] {
        let d = fracop::riesz_matrix(&grid, beta)?;
        let top = eigen::symmetric_largest_value(d.entries().as_ref())?;
        let bottom = eigen::symmetric_lowest(d.entries().as_ref(), 1)?.values[0];
        worst = worst.max(top / top.abs().max(bottom.abs()));
    }
    Ok((worst <= 1e-10, format!("largest lambda_max/||D|| = {worst:e}")))
}

fn oscillator() -> Result<(bool, String)> {
    let system = System::new(
        Potential::SymmetricOscillator { omega: 1.0 },
        &GridPolicy { points: 1000, width: 20.0 },
        FractionalOrder::standard(),
        Default::default(),
    )?;
    let e0 = system.solve(3)?.energies()[0];
    Ok(((e0 - 0.5).abs() < 1e-3, format!("E0 = {e0:.8}")))
}

fn clipped_oscillator() -> Result<(bool, String)> {
    let settings = Settings {
        grid: GridPolicy { points: 1000, width: 16.0 },
        k_states: 60,
        ..Settings::default()
    };
    let r = analysis::analyze(
        &Potential::ClippedOscillator { omega: 1.0, offset: -1.0 },
        FractionalOrder::standard(),
        &settings,
    )?;
    let b_ref = -2.0 / core::f64::consts::PI.sqrt();
    let ok = (r.offset - b_ref).abs() < 1e-3
        && (r.lambda.lam00 - 1.0).abs() < 1e-2
        && r.trk00.residual < 1e-2
        && r.converged();
    Ok((
        ok,
        format!(
            "b = {:.6}, lam00 = {:.5}, trk00 = {:.2e}, converged = {}",
            r.offset,
            r.lambda.lam00,
            r.trk00.residual,
            r.converged()
        ),
    ))
}

fn three_level_limit() -> Result<(bool, String)> {
    let c = Default::default();
    let m = threelevel::kappa2_max_fractional(LambdaElements::IDENTITY, 1.0, &c)?;
    let want = threelevel::kappa2_max_standard(1.0, 1, &c)?;
    let rel = (m.value - want).abs() / want;
    Ok((
        rel < 5e-3 && (m.x - 0.7598).abs() < 0.01 && m.e <= 0.02,
        format!("max {:.6} (rel err {rel:.1e}) at X = {:.4}, E = {:.4}", m.value, m.x, m.e),
    ))
}

/// Runs every check; takes a few seconds.
pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        outcome("riesz-laplacian-limit", laplacian_limit()),
        outcome("riesz-symmetry", symmetry()),
        outcome("riesz-negative-semidefinite", definiteness()),
        outcome("oscillator-ground-state", oscillator()),
        outcome("clipped-oscillator-pipeline", clipped_oscillator()),
        outcome("three-level-limit", three_level_limit()),
    ]
}
