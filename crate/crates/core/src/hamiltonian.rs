//! Fractional Hamiltonian on a hard-wall grid, its low-lying spectrum, and
//! the particle-centric offset calibration.
//!
//! Everything is in atomic units. The canonical position is
//! `x̂ = (ħ/mc)^(1-α) |x|^α sign(x)` and the kinetic operator is
//! `-(mc²/2) (ħ/mc)^(2α) D`, with `D` the Riesz derivative of order `2α`
//! acting on the raw coordinate `x`.

use alloc::format;
use alloc::vec::Vec;

use faer::Mat;

use crate::eigen;
use crate::error::{param, Error, Result};
use crate::fracop::{self, FractionalOrder, Grid1D};

/// Mass, charge magnitude, reduced Planck constant and speed of light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub mass: f64,
    pub charge: f64,
    pub hbar: f64,
    pub light_speed: f64,
}

impl Default for PhysicalConstants {
    /// Atomic units with `c` equal to the inverse fine-structure constant.
    fn default() -> Self {
        Self {
            mass: 1.0,
            charge: 1.0,
            hbar: 1.0,
            light_speed: 137.035999,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("charge", self.charge),
            ("hbar", self.hbar),
            ("light_speed", self.light_speed),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(param(name, "must be finite and positive"));
            }
        }
        Ok(())
    }

    /// Reduced Compton wavelength `ħ/mc`.
    pub fn compton_length(&self) -> f64 {
        self.hbar / (self.mass * self.light_speed)
    }

    /// Factor by which raw lengths stretch at order `alpha` relative to `alpha = 1`.
    ///
    /// Substituting `x = s y` with `s = (ħ/mc)^((α-1)/α)` makes the canonical
    /// position `|y|^α sign(y)` and the kinetic prefactor `ħ²/2m`, so the
    /// physics in canonical units does not depend on `c`.
    pub fn stretch(&self, order: FractionalOrder) -> f64 {
        let a = order.alpha();
        libm::pow(self.compton_length(), (a - 1.0) / a)
    }

    /// `(mc²/2)(ħ/mc)^(2α)`, written so that `α = 1` gives `ħ²/2m` exactly.
    pub fn kinetic_prefactor(&self, order: FractionalOrder) -> f64 {
        let a = order.alpha();
        self.hbar * self.hbar / (2.0 * self.mass) * libm::pow(self.compton_length(), 2.0 * a - 2.0)
    }
}

/// Canonical position `(ħ/mc)^(1-α) |x|^α sign(x)`.
///
/// Takes a bare `alpha` because the map itself is defined for any `0 < α <= 1`.
pub fn canonical_position(x: f64, alpha: f64, consts: &PhysicalConstants) -> f64 {
    let a = alpha;
    if x == 0.0 {
        return 0.0;
    }
    let magnitude = libm::pow(consts.compton_length(), 1.0 - a) * libm::pow(x.abs(), a);
    if x < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Inverse of [`canonical_position`].
pub fn raw_position(xhat: f64, alpha: f64, consts: &PhysicalConstants) -> f64 {
    let a = alpha;
    if xhat == 0.0 {
        return 0.0;
    }
    let magnitude = libm::pow(xhat.abs() / libm::pow(consts.compton_length(), 1.0 - a), 1.0 / a);
    if xhat < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Canonical image `b̂` of a raw wall offset `b`.
pub fn fractional_offset(b: f64, alpha: f64, consts: &PhysicalConstants) -> f64 {
    canonical_position(b, alpha, consts)
}

/// Canonical positions of every grid point.
pub fn canonical_positions(grid: &Grid1D, order: FractionalOrder, consts: &PhysicalConstants) -> Vec<f64> {
    grid.points().map(|x| canonical_position(x, order.alpha(), consts)).collect()
}

/// Confining potentials, expressed in the canonical coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `½ m ω² (x̂ - b̂)²` right of a hard wall at `x = offset`.
    ClippedOscillator { omega: f64, offset: f64 },
    /// `A (x̂ - b̂)` right of a hard wall at `x = offset`.
    SlantWell { slope: f64, offset: f64 },
    /// `½ m ω² x̂²` on a box centred at the origin.
    SymmetricOscillator { omega: f64 },
    /// Values given directly on the grid.
    Tabulated(Vec<f64>),
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        if self.offset().is_some_and(|b| !b.is_finite()) {
            return Err(param("offset", "must be finite"));
        }
        match self {
            Self::ClippedOscillator { omega, .. } | Self::SymmetricOscillator { omega } if !(*omega > 0.0) => {
                Err(param("omega", "must be positive"))
            }
            Self::SlantWell { slope, .. } if !(*slope > 0.0) => Err(param("slope", "must be positive")),
            Self::Tabulated(v) if v.iter().any(|x| !x.is_finite()) => {
                Err(param("samples", "tabulated potential must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Raw position of the hard wall, when the potential has one.
    pub fn offset(&self) -> Option<f64> {
        match self {
            Self::ClippedOscillator { offset, .. } | Self::SlantWell { offset, .. } => Some(*offset),
            _ => None,
        }
    }

    pub fn with_offset(&self, b: f64) -> Self {
        match self {
            Self::ClippedOscillator { omega, .. } => Self::ClippedOscillator { omega: *omega, offset: b },
            Self::SlantWell { slope, .. } => Self::SlantWell { slope: *slope, offset: b },
            other => other.clone(),
        }
    }
}

/// Potential sampled on the grid.
///
/// Walled potentials require every grid point to lie strictly right of the wall.
pub fn potential_on_grid(
    potential: &Potential,
    grid: &Grid1D,
    order: FractionalOrder,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    potential.validate()?;
    if let Some(b) = potential.offset() {
        if grid.x_min() <= b {
            return Err(Error::Configuration(format!(
                "grid starts at x = {} inside the wall region x <= {b}",
                grid.x_min()
            )));
        }
    }
    let bhat = potential.offset().map(|b| fractional_offset(b, order.alpha(), consts));
    let m = consts.mass;
    let values = match potential {
        Potential::ClippedOscillator { omega, .. } => {
            let bhat = bhat.unwrap_or_default();
            grid.points()
                .map(|x| {
                    let d = canonical_position(x, order.alpha(), consts) - bhat;
                    0.5 * m * omega * omega * d * d
                })
                .collect()
        }
        Potential::SlantWell { slope, .. } => {
            let bhat = bhat.unwrap_or_default();
            grid.points().map(|x| slope * (canonical_position(x, order.alpha(), consts) - bhat)).collect()
        }
        Potential::SymmetricOscillator { omega } => grid
            .points()
            .map(|x| {
                let xh = canonical_position(x, order.alpha(), consts);
                0.5 * m * omega * omega * xh * xh
            })
            .collect(),
        Potential::Tabulated(v) => {
            if v.len() != grid.len() {
                return Err(Error::LengthMismatch { expected: grid.len(), found: v.len() });
            }
            v.clone()
        }
    };
    Ok(values)
}

/// Kinetic matrix `-(mc²/2)(ħ/mc)^(2α) D`.
pub fn kinetic_matrix(grid: &Grid1D, order: FractionalOrder, consts: &PhysicalConstants) -> Result<Mat<f64>> {
    let d = fracop::riesz_matrix(grid, order.beta())?;
    let scale = -consts.kinetic_prefactor(order);
    let mut t = d.into_entries();
    for j in 0..t.ncols() {
        t.col_mut(j).iter_mut().for_each(|v| *v *= scale);
    }
    Ok(t)
}

/// Fractional Hamiltonian matrix, exactly symmetric.
pub fn assemble(
    grid: &Grid1D,
    order: FractionalOrder,
    potential: &[f64],
    consts: &PhysicalConstants,
) -> Result<Mat<f64>> {
    if potential.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: potential.len() });
    }
    let mut h = kinetic_matrix(grid, order, consts)?;
    for (i, v) in potential.iter().enumerate() {
        h[(i, i)] += v;
    }
    Ok(h)
}

/// Lowest eigenstates of a fractional Hamiltonian.
#[derive(Debug, Clone)]
pub struct Spectrum {
    order: FractionalOrder,
    grid: Grid1D,
    energies: Vec<f64>,
    states: Mat<f64>,
}

impl Spectrum {
    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn count(&self) -> usize {
        self.energies.len()
    }

    /// Grid samples of state `k`, normalized so that `Σ ψ² dx = 1`.
    pub fn state(&self, k: usize) -> &[f64] {
        self.states
            .col(k)
            .try_as_col_major()
            .expect("owned matrices are column major")
            .as_slice()
    }

    /// All states, one per column.
    pub fn states(&self) -> &Mat<f64> {
        &self.states
    }

    /// `E_k - E_0`.
    pub fn transition_energy(&self, k: usize) -> f64 {
        self.energies[k] - self.energies[0]
    }
}

/// Lowest `k_states` eigenpairs of `h`, normalized and sign fixed.
pub fn solve(h: &Mat<f64>, k_states: usize, grid: &Grid1D, order: FractionalOrder) -> Result<Spectrum> {
    let n = grid.len();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::LengthMismatch { expected: n, found: h.nrows() });
    }
    if k_states == 0 || k_states > n / 4 {
        return Err(param("k_states", format!("{k_states} must be in 1..={} for {n} grid points", n / 4)));
    }
    let pairs = eigen::symmetric_lowest(h.as_ref(), k_states)?;
    if let Some(w) = pairs.values.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Eigensolver(format!(
            "energies {w} and {} are not strictly ascending ({:e}, {:e})",
            w + 1,
            pairs.values[w],
            pairs.values[w + 1]
        )));
    }
    let mut states = pairs.vectors;
    let scale = 1.0 / libm::sqrt(grid.dx());
    for j in 0..states.ncols() {
        let col = states.col(j);
        let norm = libm::sqrt(col.iter().map(|v| v * v).sum::<f64>());
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = col.iter().copied().find(|v| v.abs() > 1e-6 * peak).unwrap_or(1.0);
        let s = if lead < 0.0 { -scale / norm } else { scale / norm };
        states.col_mut(j).iter_mut().for_each(|v| *v *= s);
    }
    Ok(Spectrum {
        order,
        grid: *grid,
        energies: pairs.values,
        states,
    })
}

/// Grid size and extent used to place a potential in a hard-wall box.
///
/// `width` is the box length at `α = 1`; at other orders it is multiplied by
/// [`PhysicalConstants::stretch`] so the box covers the same region in
/// canonical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    pub points: usize,
    pub width: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            points: 3000,
            width: 16.0,
        }
    }
}

impl GridPolicy {
    pub fn grid_for(&self, potential: &Potential, order: FractionalOrder, consts: &PhysicalConstants) -> Result<Grid1D> {
        if !(self.width > 0.0) {
            return Err(param("width", "must be positive"));
        }
        let length = self.width * consts.stretch(order);
        match potential {
            Potential::ClippedOscillator { offset, .. } | Potential::SlantWell { offset, .. } => {
                Grid1D::between_walls(*offset, offset + length, self.points)
            }
            Potential::SymmetricOscillator { .. } => Grid1D::between_walls(-0.5 * length, 0.5 * length, self.points),
            Potential::Tabulated(_) => Err(Error::Configuration(
                "tabulated potentials carry their own grid; use System::with_grid".into(),
            )),
        }
    }
}

/// A potential placed on a concrete grid at a given order.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub potential: Potential,
    pub grid: Grid1D,
    pub order: FractionalOrder,
    pub consts: PhysicalConstants,
}

impl System {
    pub fn new(potential: Potential, policy: &GridPolicy, order: FractionalOrder, consts: PhysicalConstants) -> Result<Self> {
        let grid = policy.grid_for(&potential, order, &consts)?;
        Self::with_grid(potential, grid, order, consts)
    }

    pub fn with_grid(potential: Potential, grid: Grid1D, order: FractionalOrder, consts: PhysicalConstants) -> Result<Self> {
        consts.validate()?;
        potential.validate()?;
        let system = Self { potential, grid, order, consts };
        // surfaces wall and length errors at construction
        system.potential_values()?;
        Ok(system)
    }

    pub fn potential_values(&self) -> Result<Vec<f64>> {
        potential_on_grid(&self.potential, &self.grid, self.order, &self.consts)
    }

    pub fn canonical_positions(&self) -> Vec<f64> {
        canonical_positions(&self.grid, self.order, &self.consts)
    }

    pub fn hamiltonian(&self) -> Result<Mat<f64>> {
        assemble(&self.grid, self.order, &self.potential_values()?, &self.consts)
    }

    pub fn solve(&self, k_states: usize) -> Result<Spectrum> {
        solve(&self.hamiltonian()?, k_states, &self.grid, self.order)
    }

    /// Same potential and box with `factor` times finer spacing.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        self.regridded(self.grid.refined(factor)?)
    }

    /// Same potential and box with about twice the spacing.
    pub fn coarsened(&self) -> Result<Self> {
        self.regridded(self.grid.coarsened()?)
    }

    fn regridded(&self, grid: Grid1D) -> Result<Self> {
        let potential = match &self.potential {
            Potential::Tabulated(_) => {
                return Err(Error::Configuration("tabulated potentials cannot be refined".into()))
            }
            p => p.clone(),
        };
        Self::with_grid(potential, grid, self.order, self.consts)
    }
}

/// `⟨k|x̂|k⟩` by quadrature.
pub fn canonical_expectation(spectrum: &Spectrum, xhat: &[f64], k: usize) -> f64 {
    let psi = spectrum.state(k);
    psi.iter().zip(xhat).map(|(p, x)| p * p * x).sum::<f64>() * spectrum.grid().dx()
}

/// Result of [`calibrate_offset`].
#[derive(Debug, Clone)]
pub struct Calibration {
    pub system: System,
    pub spectrum: Spectrum,
    /// Raw wall position `b`.
    pub offset: f64,
    /// Final `⟨0|x̂|0⟩`.
    pub residual: f64,
    pub iterations: usize,
}

pub const DEFAULT_MAX_CALIBRATION_ITERATIONS: usize = 50;

/// Moves the wall until the ground state sits at the canonical origin.
///
/// Secant iteration on `g(b) = ⟨0|x̂|0⟩`, rebuilding the grid around the wall
/// at every step. The second point is `b0 - x(g(b0))`, the raw shift that
/// would cancel the first residual. Potentials without a wall are solved
/// once and returned with zero iterations.
pub fn calibrate_offset(
    potential: &Potential,
    policy: &GridPolicy,
    order: FractionalOrder,
    consts: &PhysicalConstants,
    k_states: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Calibration> {
    if !(tol > 0.0) {
        return Err(param("tol", "must be positive"));
    }
    let evaluate = |b: f64| -> Result<(System, Spectrum, f64)> {
        let system = System::new(potential.with_offset(b), policy, order, *consts)?;
        let spectrum = system.solve(k_states)?;
        let g = canonical_expectation(&spectrum, &system.canonical_positions(), 0);
        Ok((system, spectrum, g))
    };

    let Some(b0) = potential.offset() else {
        let (system, spectrum, g) = evaluate(0.0)?;
        return Ok(Calibration {
            system,
            spectrum,
            offset: 0.0,
            residual: g,
            iterations: 0,
        });
    };

    let (system, spectrum, g0) = evaluate(b0)?;
    if g0.abs() < tol {
        return Ok(Calibration { system, spectrum, offset: b0, residual: g0, iterations: 0 });
    }
    let (mut b_prev, mut g_prev) = (b0, g0);
    let mut b = b0 - raw_position(g0, order.alpha(), consts);
    for iteration in 1..=max_iter {
        let (system, spectrum, g) = evaluate(b)?;
        if g.abs() < tol {
            return Ok(Calibration {
                system,
                spectrum,
                offset: b,
                residual: g,
                iterations: iteration,
            });
        }
        if g == g_prev {
            return Err(Error::Calibration { iterations: iteration, residual: g });
        }
        let next = b - g * (b - b_prev) / (g - g_prev);
        b_prev = b;
        g_prev = g;
        b = next;
        if iteration == max_iter {
            return Err(Error::Calibration { iterations: iteration, residual: g });
        }
    }
    Err(Error::Calibration { iterations: max_iter, residual: g_prev })
}
