//! Static response of a bound particle: transition moments, the fractional
//! sum-rule matrix, sum-over-states polarizability and hyperpolarizability,
//! and an independent finite-field route for the same coefficients.
//!
//! Sign conventions. The field couples as `+eℰx̂`. Expanding the ground
//! energy as `E₀(ℰ) = Σ cₙ ℰⁿ`, the reported coefficients are
//! `κ⁽ⁿ⁾ = (-1)ⁿ (n+1) c_{n+1}`, the convention under which
//! `κ⁽¹⁾ = 2e² Σ' x̂₀ₖx̂ₖ₀/Eₖ₀ > 0` and
//! `κ⁽²⁾ = 3e³ Σ' x̂₀ₖx̄ₖₗx̂ₗ₀/(Eₖ₀Eₗ₀)` hold for both routes.

use alloc::format;
use alloc::vec::Vec;

use faer::Mat;

use crate::error::{param, Error, Result};
use crate::fracop;
use crate::hamiltonian::{self, PhysicalConstants, Spectrum, System};

/// Canonical-position matrix elements `(x̂)_ij` between retained states.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    moments: Mat<f64>,
}

impl TransitionTable {
    pub fn size(&self) -> usize {
        self.moments.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.moments[(i, j)]
    }

    /// `x̄_ij = x̂_ij - δ_ij x̂₀₀`.
    pub fn bar(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.moments[(i, j)] - self.moments[(0, 0)]
        } else {
            self.moments[(i, j)]
        }
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.moments
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.size();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.moments[(i, j)] - self.moments[(j, i)]).abs());
            }
        }
        worst
    }
}

/// `(x̂)_ij = ⟨ψ_i| x̂(x) |ψ_j⟩` for every pair of retained states.
pub fn transition_moments(spectrum: &Spectrum, consts: &PhysicalConstants) -> TransitionTable {
    let grid = spectrum.grid();
    let xhat = hamiltonian::canonical_positions(grid, spectrum.order(), consts);
    let states = spectrum.states();
    let weighted = Mat::from_fn(states.nrows(), states.ncols(), |i, j| xhat[i] * states[(i, j)]);
    let full = states.transpose() * &weighted;
    let k = spectrum.count();
    let dx = grid.dx();
    // mirror the lower triangle so the table is symmetric bit for bit
    let moments = Mat::from_fn(k, k, |i, j| if i >= j { full[(i, j)] } else { full[(j, i)] } * dx);
    TransitionTable { moments }
}

/// Fractional sum-rule elements `λ(α, k, ℓ)`, dimensionless.
#[derive(Debug, Clone)]
pub struct LambdaMatrix {
    values: Mat<f64>,
}

impl LambdaMatrix {
    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[(k, l)]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.size();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)]).abs());
            }
        }
        worst
    }
}

/// `λ_kℓ = ⟨k| ½ξ²D + ½Dξ² − ξDξ |ℓ⟩` for the lowest `size` states, with
/// `ξ = |x|^α sign(x)` and `D` the Riesz matrix of the kinetic term.
///
/// At `α = 1` this is `½[x,[x,d²/dx²]] = 1`.
pub fn lambda_matrix(spectrum: &Spectrum, size: usize) -> Result<LambdaMatrix> {
    if size == 0 || size > spectrum.count() {
        return Err(param("size", format!("must be in 1..={}", spectrum.count())));
    }
    let grid = spectrum.grid();
    let order = spectrum.order();
    let n = grid.len();
    let a = order.alpha();
    let xi: Vec<f64> = grid
        .points()
        .map(|x| if x < 0.0 { -libm::pow(-x, a) } else { libm::pow(x, a) })
        .collect();
    let d = fracop::riesz_matrix(grid, order.beta())?.into_entries();
    let states = spectrum.states();
    let probes = Mat::from_fn(n, 3 * size, |i, c| {
        let (block, l) = (c / size, c % size);
        let psi = states[(i, l)];
        match block {
            0 => psi,
            1 => xi[i] * xi[i] * psi,
            _ => xi[i] * psi,
        }
    });
    let applied = &d * &probes;
    let sandwiched = Mat::from_fn(n, size, |i, l| {
        0.5 * xi[i] * xi[i] * applied[(i, l)] + 0.5 * applied[(i, size + l)] - xi[i] * applied[(i, 2 * size + l)]
    });
    let bra = states.subcols(0, size);
    let mut values = bra.transpose() * &sandwiched;
    let dx = grid.dx();
    for j in 0..size {
        values.col_mut(j).iter_mut().for_each(|v| *v *= dx);
    }
    Ok(LambdaMatrix { values })
}

/// Sum-rule residual for one `(k, ℓ)` element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrkResidual {
    /// `|S_kℓ − (ħ²/2m) λ_kℓ| / (ħ²/2m)` using every retained state.
    pub residual: f64,
    /// Change of `residual` when the last ten states are dropped.
    pub tail_change: f64,
    /// `tail_change < 1e-3`.
    pub converged: bool,
}

pub const TRK_TAIL_STATES: usize = 10;
pub const TRK_TAIL_TOLERANCE: f64 = 1e-3;

/// Compares the closure sum
/// `S_kℓ = Σ_q x̂_kq x̂_qℓ [E_q − ½(E_k + E_ℓ)]` with `(ħ²/2m) λ_kℓ`.
pub fn trk_residual(
    spectrum: &Spectrum,
    table: &TransitionTable,
    lambda: &LambdaMatrix,
    k: usize,
    l: usize,
    consts: &PhysicalConstants,
) -> Result<TrkResidual> {
    let count = spectrum.count().min(table.size());
    if k >= lambda.size() || l >= lambda.size() || k >= count || l >= count {
        return Err(param("k", "state index outside the retained set"));
    }
    let e = spectrum.energies();
    let scale = consts.hbar * consts.hbar / (2.0 * consts.mass);
    let target = scale * lambda.get(k, l);
    let centre = 0.5 * (e[k] + e[l]);
    let partial = |upto: usize| -> f64 {
        (0..upto)
            .map(|q| table.get(k, q) * table.get(q, l) * (e[q] - centre))
            .sum::<f64>()
    };
    let full = (partial(count) - target).abs() / scale;
    let short = if count > TRK_TAIL_STATES {
        (partial(count - TRK_TAIL_STATES) - target).abs() / scale
    } else {
        f64::INFINITY
    };
    let tail_change = (full - short).abs();
    Ok(TrkResidual {
        residual: full,
        tail_change,
        converged: tail_change < TRK_TAIL_TOLERANCE,
    })
}

fn check_sum_range(table: &TransitionTable, energies: &[f64], k_sum: usize) -> Result<()> {
    if k_sum < 2 || k_sum > table.size() || k_sum > energies.len() {
        return Err(param(
            "k_sum",
            format!("{k_sum} must be in 2..={}", table.size().min(energies.len())),
        ));
    }
    Ok(())
}

/// Individual terms `2e² x̂₀ₖx̂ₖ₀ / Eₖ₀`, `k = 1 .. k_sum-1`.
pub fn sos_kappa1_terms(
    table: &TransitionTable,
    energies: &[f64],
    k_sum: usize,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    check_sum_range(table, energies, k_sum)?;
    let e2 = consts.charge * consts.charge;
    Ok((1..k_sum)
        .map(|k| 2.0 * e2 * table.get(0, k) * table.get(k, 0) / (energies[k] - energies[0]))
        .collect())
}

/// Sum-over-states polarizability over the lowest `k_sum` states.
pub fn sos_kappa1(table: &TransitionTable, energies: &[f64], k_sum: usize, consts: &PhysicalConstants) -> Result<f64> {
    Ok(sos_kappa1_terms(table, energies, k_sum, consts)?.iter().sum())
}

/// Sum-over-states hyperpolarizability over the lowest `k_sum` states.
pub fn sos_kappa2(table: &TransitionTable, energies: &[f64], k_sum: usize, consts: &PhysicalConstants) -> Result<f64> {
    check_sum_range(table, energies, k_sum)?;
    let e3 = consts.charge * consts.charge * consts.charge;
    let mut total = 0.0;
    for k in 1..k_sum {
        let left = table.get(0, k) / (energies[k] - energies[0]);
        for l in 1..k_sum {
            total += left * table.bar(k, l) * table.get(l, 0) / (energies[l] - energies[0]);
        }
    }
    Ok(3.0 * e3 * total)
}

/// Polynomial fit of the field-dependent ground energy.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteField {
    pub fields: Vec<f64>,
    pub energies: Vec<f64>,
    /// Taylor coefficients `c_0 ..= c_4` of `E₀(ℰ)`.
    pub coefficients: [f64; 5],
    pub kappa1: f64,
    pub kappa2: f64,
}

impl FiniteField {
    /// `κ⁽ⁿ⁾` for `n = 1, 2`.
    pub fn kappa(&self, n: usize) -> Option<f64> {
        match n {
            1 => Some(self.kappa1),
            2 => Some(self.kappa2),
            _ => None,
        }
    }

    /// Largest field magnitude in the stencil.
    pub fn step(&self) -> f64 {
        self.fields.iter().fold(0.0f64, |m, f| m.max(f.abs())) / 2.0
    }
}

/// Least-squares polynomial of degree 4 through `(t_i, y_i)`, `|t_i| <= 1`.
/// Returns the coefficients and the ratio of extreme `R` diagonals.
fn quartic_fit(t: &[f64], y: &[f64]) -> ([f64; 5], f64) {
    const P: usize = 5;
    let m = t.len();
    let mut a: Vec<[f64; P]> = t
        .iter()
        .map(|&ti| {
            let mut row = [1.0; P];
            for p in 1..P {
                row[p] = row[p - 1] * ti;
            }
            row
        })
        .collect();
    let mut b = y.to_vec();
    // Householder QR, columns in place
    for j in 0..P {
        let norm = libm::sqrt((j..m).map(|i| a[i][j] * a[i][j]).sum::<f64>());
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| a[i][j]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for c in j..P {
            let dot: f64 = (j..m).map(|i| v[i - j] * a[i][c]).sum();
            let f = 2.0 * dot / vv;
            for i in j..m {
                a[i][c] -= f * v[i - j];
            }
        }
        let dot: f64 = (j..m).map(|i| v[i - j] * b[i]).sum();
        let f = 2.0 * dot / vv;
        for i in j..m {
            b[i] -= f * v[i - j];
        }
    }
    let mut coef = [0.0; P];
    for j in (0..P).rev() {
        let mut s = b[j];
        for c in (j + 1)..P {
            s -= a[j][c] * coef[c];
        }
        coef[j] = s / a[j][j];
    }
    let diag: Vec<f64> = (0..P).map(|j| a[j][j].abs()).collect();
    let hi = diag.iter().copied().fold(0.0, f64::max);
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
    (coef, hi / lo)
}

pub const MAX_FIT_CONDITION: f64 = 1e8;

/// Ground-state energy of `system` with a static field `ℰ` coupled to `x̂`.
pub fn field_energy(system: &System, base: &Mat<f64>, xhat: &[f64], field: f64) -> Result<f64> {
    let e = system.consts.charge;
    let mut h = base.clone();
    for (i, x) in xhat.iter().enumerate() {
        h[(i, i)] += e * field * x;
    }
    let spectrum = hamiltonian::solve(&h, 1, &system.grid, system.order)?;
    Ok(spectrum.energies()[0])
}

/// `κ⁽¹⁾` and `κ⁽²⁾` from a quartic fit of `E₀(ℰ)` over the given fields.
///
/// Needs at least five distinct fields; the offset of `system` is held fixed.
pub fn finite_field_kappa(system: &System, fields: &[f64]) -> Result<FiniteField> {
    let mut distinct = fields.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 5 {
        return Err(param("fields", "need at least five distinct field values"));
    }
    let scale = distinct.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(param("fields", "field values must be finite and not all zero"));
    }
    let base = system.hamiltonian()?;
    let xhat = system.canonical_positions();
    let energies = fields
        .iter()
        .map(|&f| field_energy(system, &base, &xhat, f))
        .collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = fields.iter().map(|f| f / scale).collect();
    let (scaled, condition) = quartic_fit(&t, &energies);
    if !(condition < MAX_FIT_CONDITION) {
        return Err(Error::IllConditioned(format!(
            "field stencil gives condition number {condition:e}; choose a different step"
        )));
    }
    let mut coefficients = [0.0; 5];
    for (p, c) in scaled.iter().enumerate() {
        coefficients[p] = c / libm::pow(scale, p as f64);
    }
    Ok(FiniteField {
        fields: fields.to_vec(),
        energies,
        coefficients,
        kappa1: -2.0 * coefficients[2],
        kappa2: 3.0 * coefficients[3],
    })
}

/// The five-point stencil `{0, ±h, ±2h}`.
pub fn symmetric_stencil(step: f64) -> [f64; 5] {
    [-2.0 * step, -step, 0.0, step, 2.0 * step]
}

/// Rounding floor on a computed ground energy, `ε · max|H_ii|`.
pub fn energy_noise_floor(system: &System) -> Result<f64> {
    let h = system.hamiltonian()?;
    let largest = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
    Ok(f64::EPSILON * largest)
}

pub const FIELD_SIGNAL_TO_NOISE: f64 = 1e6;
const MAX_STEP_ADJUSTMENTS: usize = 12;

/// Finite-field response on the symmetric stencil, enlarging the step by
/// powers of two until the quadratic energy shift exceeds [`FIELD_SIGNAL_TO_NOISE`] times the
/// rounding floor, and halving it when the fit is ill conditioned.
pub fn finite_field_response(system: &System, initial_step: f64) -> Result<FiniteField> {
    if !(initial_step > 0.0) {
        return Err(param("field_step", "must be positive"));
    }
    let noise = energy_noise_floor(system)?;
    let mut step = initial_step;
    let mut last_err = None;
    for _ in 0..MAX_STEP_ADJUSTMENTS {
        match finite_field_kappa(system, &symmetric_stencil(step)) {
            Ok(fit) => {
                let shift = (fit.coefficients[2] * step * step).abs();
                if shift >= FIELD_SIGNAL_TO_NOISE * noise {
                    return Ok(fit);
                }
                // shift grows as step², jump straight to a power-of-two multiple
                let needed = libm::sqrt(FIELD_SIGNAL_TO_NOISE * noise / shift.max(f64::MIN_POSITIVE));
                let doublings = libm::ceil(libm::log2(needed)).clamp(1.0, 30.0);
                step *= libm::exp2(doublings);
            }
            Err(Error::IllConditioned(msg)) => {
                last_err = Some(msg);
                step *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::IllConditioned(last_err.unwrap_or_else(|| {
        format!("quadratic energy shift stayed below {FIELD_SIGNAL_TO_NOISE:e} x noise floor {noise:e}")
    })))
}

/// Relative change `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_change(a: f64, b: f64, floor: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / a.abs().max(b.abs()).max(floor)
}

/// Absolute floor used when a coefficient vanishes by symmetry.
pub const KAPPA_FLOOR: f64 = 1e-6;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-2;

/// Sensitivity of the sum-over-states coefficients to truncation and grid spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceDeltas {
    /// Relative change of κ⁽¹⁾ between the two state counts.
    pub kappa1_states: f64,
    pub kappa2_states: f64,
    /// Relative change of κ⁽¹⁾ between spacings `2dx` and `dx`.
    pub kappa1_grid: f64,
    pub kappa2_grid: f64,
}

impl ConvergenceDeltas {
    pub fn max(&self) -> f64 {
        self.kappa1_states
            .max(self.kappa2_states)
            .max(self.kappa1_grid)
            .max(self.kappa2_grid)
    }

    pub fn converged(&self) -> bool {
        self.max() < CONVERGENCE_TOLERANCE
    }
}

/// State-count delta: `k_sum` against `k_sum + 10` when the spectrum holds
/// enough states, otherwise `k_sum − 10` against `k_sum`.
pub fn state_deltas(
    table: &TransitionTable,
    energies: &[f64],
    k_sum: usize,
    consts: &PhysicalConstants,
) -> Result<(f64, f64)> {
    check_sum_range(table, energies, k_sum)?;
    let available = table.size().min(energies.len());
    let (small, large) = if k_sum + TRK_TAIL_STATES <= available {
        (k_sum, k_sum + TRK_TAIL_STATES)
    } else {
        (k_sum.saturating_sub(TRK_TAIL_STATES).max(2), k_sum)
    };
    let d1 = relative_change(
        sos_kappa1(table, energies, small, consts)?,
        sos_kappa1(table, energies, large, consts)?,
        KAPPA_FLOOR,
    );
    let d2 = relative_change(
        sos_kappa2(table, energies, small, consts)?,
        sos_kappa2(table, energies, large, consts)?,
        KAPPA_FLOOR,
    );
    Ok((d1, d2))
}

/// Convergence report for a solved system. State-count deltas come from
/// `spectrum`; grid deltas compare it with a solve at twice the spacing and
/// the same offset, which bounds the error of the coarser of the pair.
pub fn convergence_report(system: &System, spectrum: &Spectrum, k_sum: usize) -> Result<ConvergenceDeltas> {
    let consts = &system.consts;
    let table = transition_moments(spectrum, consts);
    let energies = spectrum.energies();
    let (kappa1_states, kappa2_states) = state_deltas(&table, energies, k_sum, consts)?;
    let coarse = system.coarsened()?;
    let coarse_spectrum = coarse.solve(k_sum)?;
    let coarse_table = transition_moments(&coarse_spectrum, consts);
    let k1 = sos_kappa1(&table, energies, k_sum, consts)?;
    let k2 = sos_kappa2(&table, energies, k_sum, consts)?;
    let c1 = sos_kappa1(&coarse_table, coarse_spectrum.energies(), k_sum, consts)?;
    let c2 = sos_kappa2(&coarse_table, coarse_spectrum.energies(), k_sum, consts)?;
    Ok(ConvergenceDeltas {
        kappa1_states,
        kappa2_states,
        kappa1_grid: relative_change(k1, c1, KAPPA_FLOOR),
        kappa2_grid: relative_change(k2, c2, KAPPA_FLOOR),
    })
}
