//! Three-level model limited by the fractional sum rules.
//!
//! `X = |x̂₁₀| / x̂₁₀^max` and `E = E₁₀ / E₂₀` parameterize every moment.

use crate::error::{param, Error, Result};
use crate::hamiltonian::PhysicalConstants;

/// Elements of the sum-rule matrix entering the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaElements {
    pub lam00: f64,
    pub lam11: f64,
    pub lam10: f64,
    pub lam20: f64,
}

impl LambdaElements {
    /// Values of the ordinary sum rules.
    pub const IDENTITY: Self = Self {
        lam00: 1.0,
        lam11: 1.0,
        lam10: 0.0,
        lam20: 0.0,
    };

    pub fn scaled(self, s: f64) -> Self {
        Self {
            lam00: self.lam00 * s,
            lam11: self.lam11 * s,
            lam10: self.lam10 * s,
            lam20: self.lam20 * s,
        }
    }
}

impl Default for LambdaElements {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelParams {
    /// `E₁₀ / E₂₀`.
    pub e: f64,
    /// `|x̂₁₀| / x̂₁₀^max`.
    pub x: f64,
    pub e10: f64,
    pub lambda: LambdaElements,
    pub electrons: u32,
    pub consts: PhysicalConstants,
}

impl ThreeLevelParams {
    pub fn new(e: f64, x: f64, e10: f64, lambda: LambdaElements) -> Self {
        Self {
            e,
            x,
            e10,
            lambda,
            electrons: 1,
            consts: PhysicalConstants::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.e) {
            return Err(param("E", "energy ratio must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.x) {
            return Err(param("X", "normalized moment must lie in [0, 1]"));
        }
        if !(self.e10 > 0.0) || !self.e10.is_finite() {
            return Err(param("E10", "must be positive and finite"));
        }
        let l = self.lambda;
        if !(l.lam00 > 0.0) || !l.lam00.is_finite() {
            return Err(param("lam00", "must be positive and finite"));
        }
        if !(l.lam11.is_finite() && l.lam10.is_finite() && l.lam20.is_finite()) {
            return Err(param("lambda", "elements must be finite"));
        }
        if self.electrons == 0 {
            return Err(param("N_electrons", "must be at least 1"));
        }
        self.consts.validate()
    }

    /// `ħ / √(2mE₁₀)`.
    fn unit(&self) -> f64 {
        moment_unit(self.e10, &self.consts)
    }

    /// `√(X²λ₀₀ + λ₁₁)`, which must be real.
    fn mixed_root(&self) -> Result<f64> {
        let arg = self.x * self.x * self.lambda.lam00 + self.lambda.lam11;
        if arg < 0.0 {
            return Err(Error::Singular {
                equation: "x12",
                reason: "X^2 lam00 + lam11 is negative",
            });
        }
        Ok(libm::sqrt(arg))
    }
}

fn moment_unit(e10: f64, consts: &PhysicalConstants) -> f64 {
    consts.hbar / libm::sqrt(2.0 * consts.mass * e10)
}

/// Largest `|x̂₁₀|` allowed by the `(0,0)` sum rule.
pub fn x10_max(e10: f64, lam00: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(e10 > 0.0) {
        return Err(param("E10", "must be positive"));
    }
    if !(lam00 > 0.0) {
        return Err(param("lam00", "must be positive"));
    }
    Ok(moment_unit(e10, consts) * libm::sqrt(lam00))
}

pub fn moment_x10(p: &ThreeLevelParams) -> Result<f64> {
    p.validate()?;
    Ok(p.unit() * p.x * libm::sqrt(p.lambda.lam00))
}

pub fn moment_x20(p: &ThreeLevelParams) -> Result<f64> {
    p.validate()?;
    Ok(p.unit() * libm::sqrt(p.e * (1.0 - p.x * p.x)) * libm::sqrt(p.lambda.lam00))
}

pub fn moment_x12(p: &ThreeLevelParams) -> Result<f64> {
    p.validate()?;
    Ok(p.unit() * libm::sqrt(p.e / (1.0 - p.e)) * p.mixed_root()?)
}

pub fn moment_x11bar(p: &ThreeLevelParams) -> Result<f64> {
    p.validate()?;
    if p.x == 0.0 {
        return Err(Error::Singular {
            equation: "x11bar",
            reason: "X = 0",
        });
    }
    let l = p.lambda;
    let first = (p.e - 2.0) / libm::sqrt(1.0 - p.e) * libm::sqrt(1.0 - p.x * p.x) / p.x * p.mixed_root()?;
    let second = l.lam10 / (p.x * libm::sqrt(l.lam00));
    Ok(p.unit() * (first - second))
}

pub fn moment_x22bar(p: &ThreeLevelParams) -> Result<f64> {
    p.validate()?;
    if p.x == 1.0 {
        return Err(Error::Singular {
            equation: "x22bar",
            reason: "X = 1",
        });
    }
    let l = p.lambda;
    let rest = 1.0 - p.x * p.x;
    let first = (1.0 - 2.0 * p.e) / libm::sqrt(1.0 - p.e) * p.x / libm::sqrt(rest) * p.mixed_root()?;
    let second = libm::sqrt(p.e / rest) * l.lam20 / libm::sqrt(l.lam00);
    Ok(p.unit() * (first - second))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedMoments {
    pub x10: f64,
    pub x20: f64,
    pub x12: f64,
    pub x11bar: f64,
    pub x22bar: f64,
}

/// All five moments; fails where any of them is singular.
pub fn constrained_moments(p: &ThreeLevelParams) -> Result<ConstrainedMoments> {
    Ok(ConstrainedMoments {
        x10: moment_x10(p)?,
        x20: moment_x20(p)?,
        x12: moment_x12(p)?,
        x11bar: moment_x11bar(p)?,
        x22bar: moment_x22bar(p)?,
    })
}

/// `e²ħ²/(mE₁₀²) · [X² + E²(1−X²)] λ₀₀`.
pub fn tl_kappa1(p: &ThreeLevelParams) -> Result<f64> {
    p.validate()?;
    let c = &p.consts;
    let scale = polarizability_unit(p.e10, c);
    Ok(scale * (p.x * p.x + p.e * p.e * (1.0 - p.x * p.x)) * p.lambda.lam00)
}

fn polarizability_unit(e10: f64, c: &PhysicalConstants) -> f64 {
    c.charge * c.charge * c.hbar * c.hbar / (c.mass * e10 * e10)
}

fn hyper_unit(e10: f64, c: &PhysicalConstants) -> f64 {
    let e3 = c.charge * c.charge * c.charge;
    let h3 = c.hbar * c.hbar * c.hbar;
    1.5 * e3 * h3 / libm::sqrt(2.0 * c.mass * c.mass * c.mass * libm::pow(e10, 7.0))
}

/// Bracket of the three-level hyperpolarizability, without the unit prefactor.
fn hyper_bracket(x: f64, e: f64, l: &LambdaElements) -> f64 {
    let rest = libm::sqrt((1.0 - x * x).max(0.0));
    let root00 = libm::sqrt(l.lam00);
    let mixed = libm::sqrt((x * x * l.lam00 + l.lam11).max(0.0));
    x * rest * libm::pow(1.0 - e, 1.5) * (2.0 + 3.0 * e + 2.0 * e * e) * l.lam00 * mixed
        - x * root00 * l.lam10
        - rest * libm::pow(e, 3.5) * root00 * l.lam20
}

/// Three-level hyperpolarizability including the off-diagonal subtraction terms.
pub fn tl_kappa2(p: &ThreeLevelParams) -> Result<f64> {
    p.validate()?;
    p.mixed_root()?;
    Ok(hyper_unit(p.e10, &p.consts) * hyper_bracket(p.x, p.e, &p.lambda))
}

/// `∜3 e³ħ³ √(N³ / (m³E₁₀⁷))`.
pub fn kappa2_max_standard(e10: f64, electrons: u32, consts: &PhysicalConstants) -> Result<f64> {
    if !(e10 > 0.0) {
        return Err(param("E10", "must be positive"));
    }
    if electrons == 0 {
        return Err(param("N_electrons", "must be at least 1"));
    }
    let cube = |v: f64| v * v * v;
    let c = consts;
    let n3 = cube(f64::from(electrons));
    Ok(libm::pow(3.0, 0.25)
        * cube(c.charge)
        * cube(c.hbar)
        * libm::sqrt(n3 / (cube(c.mass) * libm::pow(e10, 7.0))))
}

/// `κ⁽¹⁾ mE₁₀² / (e²ħ²)`.
pub fn apparent_polarizability(kappa1: f64, e10: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(e10 > 0.0) {
        return Err(param("E10", "must be positive"));
    }
    Ok(kappa1 / polarizability_unit(e10, consts))
}

/// `κ⁽²⁾ / κ⁽²⁾_max` of the ordinary three-level limit.
pub fn apparent_intrinsic(kappa2: f64, e10: f64, electrons: u32, consts: &PhysicalConstants) -> Result<f64> {
    Ok(kappa2 / kappa2_max_standard(e10, electrons, consts)?)
}

pub const X_RANGE: (f64, f64) = (0.01, 0.99);
pub const E_RANGE: (f64, f64) = (0.0, 0.95);
pub const DEFAULT_RESOLUTION: usize = 200;
const GOLDEN_ITERATIONS: usize = 80;
const REFINEMENT_SWEEPS: usize = 3;

/// One extremum of the three-level hyperpolarizability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub x: f64,
    pub e: f64,
}

/// Result of [`kappa2_max_fractional`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalMaximum {
    /// Largest `|κ⁽²⁾|`, always non-negative.
    pub value: f64,
    pub x: f64,
    pub e: f64,
    /// Largest signed value.
    pub highest: Extremum,
    /// Smallest signed value.
    pub lowest: Extremum,
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..GOLDEN_ITERATIONS {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    // keep the interval ends in play so boundary maxima are found
    let mut best = (0.5 * (lo + hi), f(0.5 * (lo + hi)));
    for t in [lo, hi] {
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    best
}

fn maximize(f: &impl Fn(f64, f64) -> f64, resolution: usize) -> Extremum {
    let (x0, x1) = X_RANGE;
    let (e0, e1) = E_RANGE;
    let steps = (resolution - 1) as f64;
    let dx = (x1 - x0) / steps;
    let de = (e1 - e0) / steps;
    let mut best = Extremum { value: f64::NEG_INFINITY, x: x0, e: e0 };
    for i in 0..resolution {
        let x = x0 + i as f64 * dx;
        for j in 0..resolution {
            let e = e0 + j as f64 * de;
            let v = f(x, e);
            if v > best.value {
                best = Extremum { value: v, x, e };
            }
        }
    }
    for _ in 0..REFINEMENT_SWEEPS {
        let (x, vx) = golden_max(|x| f(x, best.e), (best.x - dx).max(x0), (best.x + dx).min(x1));
        if vx > best.value {
            best.x = x;
            best.value = vx;
        }
        let (e, ve) = golden_max(|e| f(best.x, e), (best.e - de).max(e0), (best.e + de).min(e1));
        if ve > best.value {
            best.e = e;
            best.value = ve;
        }
    }
    best
}

/// Maximum of `|κ⁽²⁾|` over `X ∈ [0.01, 0.99]`, `E ∈ [0, 0.95]` on the default grid.
pub fn kappa2_max_fractional(lambda: LambdaElements, e10: f64, consts: &PhysicalConstants) -> Result<FractionalMaximum> {
    kappa2_max_fractional_with(lambda, e10, consts, DEFAULT_RESOLUTION)
}

/// As [`kappa2_max_fractional`] with a `resolution × resolution` coarse scan
/// followed by golden-section refinement along each axis.
pub fn kappa2_max_fractional_with(
    lambda: LambdaElements,
    e10: f64,
    consts: &PhysicalConstants,
    resolution: usize,
) -> Result<FractionalMaximum> {
    if resolution < 3 {
        return Err(param("resolution", "must be at least 3"));
    }
    let probe = ThreeLevelParams {
        consts: *consts,
        ..ThreeLevelParams::new(0.0, 0.5, e10, lambda)
    };
    probe.validate()?;
    let unit = hyper_unit(e10, consts);
    let k2 = |x: f64, e: f64| unit * hyper_bracket(x, e, &lambda);
    let high = maximize(&k2, resolution);
    let low = maximize(&|x, e| -k2(x, e), resolution);
    let lowest = Extremum { value: -low.value, ..low };
    let pick = if high.value.abs() >= lowest.value.abs() { high } else { lowest };
    Ok(FractionalMaximum {
        value: pick.value.abs(),
        x: pick.x,
        e: pick.e,
        highest: high,
        lowest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn au() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn max_moment_values() {
        assert!((x10_max(2.0, 1.0, &au()).unwrap() - 0.5).abs() < 1e-15);
        let full = x10_max(2.0, 1.0, &au()).unwrap();
        assert!((x10_max(2.0, 0.25, &au()).unwrap() - 0.5 * full).abs() < 1e-15);
        assert!(x10_max(0.0, 1.0, &au()).is_err());
        assert!(x10_max(1.0, 0.0, &au()).is_err());
    }

    #[test]
    fn moment_examples() {
        let id = LambdaElements::IDENTITY;
        assert_eq!(moment_x20(&ThreeLevelParams::new(0.4, 1.0, 1.0, id)).unwrap(), 0.0);
        let x12 = moment_x12(&ThreeLevelParams::new(0.5, 1.0, 1.0, id)).unwrap();
        assert!((x12 - 1.0).abs() < 1e-14);
        let p = ThreeLevelParams::new(0.0, 0.6, 1.3, id);
        assert_eq!(moment_x12(&p).unwrap(), 0.0);
        assert!(moment_x11bar(&p).unwrap().is_finite());
    }

    #[test]
    fn singular_moments_are_named() {
        let id = LambdaElements::IDENTITY;
        match constrained_moments(&ThreeLevelParams::new(0.3, 0.0, 1.0, id)) {
            Err(Error::Singular { equation, .. }) => assert_eq!(equation, "x11bar"),
            other => panic!("{other:?}"),
        }
        match constrained_moments(&ThreeLevelParams::new(0.3, 1.0, 1.0, id)) {
            Err(Error::Singular { equation, .. }) => assert_eq!(equation, "x22bar"),
            other => panic!("{other:?}"),
        }
        assert!(constrained_moments(&ThreeLevelParams::new(1.0, 0.5, 1.0, id)).is_err());
    }

    #[test]
    fn polarizability_examples() {
        let id = LambdaElements::IDENTITY;
        let top = tl_kappa1(&ThreeLevelParams::new(0.37, 1.0, 2.0, id)).unwrap();
        assert!((top - 0.25).abs() < 1e-15);
        assert_eq!(tl_kappa1(&ThreeLevelParams::new(0.0, 0.0, 2.0, id)).unwrap(), 0.0);
    }

    #[test]
    fn hyperpolarizability_examples() {
        let id = LambdaElements::IDENTITY;
        let x = libm::pow(3.0, -0.25);
        let v = tl_kappa2(&ThreeLevelParams::new(0.0, x, 1.0, id)).unwrap();
        assert!((v - libm::pow(3.0, 0.25)).abs() < 1e-12);
        let lam = LambdaElements { lam20: 0.0, ..id };
        assert_eq!(tl_kappa2(&ThreeLevelParams::new(0.4, 0.0, 1.0, lam)).unwrap(), 0.0);
        let lam = LambdaElements { lam10: 50.0, ..id };
        assert!(tl_kappa2(&ThreeLevelParams::new(0.4, 0.5, 1.0, lam)).unwrap() < 0.0);
    }

    #[test]
    fn standard_maximum_values() {
        let c = au();
        assert!((kappa2_max_standard(1.0, 1, &c).unwrap() - 1.3160740129524924).abs() < 1e-12);
        let ratio = kappa2_max_standard(1.0, 1, &c).unwrap() / kappa2_max_standard(4.0, 1, &c).unwrap();
        assert!((ratio - 128.0).abs() < 1e-9);
        assert!((kappa2_max_standard(2.0, 1, &c).unwrap() - 0.11632566).abs() < 1e-7);
        assert!(kappa2_max_standard(1.0, 0, &c).is_err());
    }

    #[test]
    fn apparent_values() {
        let c = au();
        let m = kappa2_max_standard(1.7, 1, &c).unwrap();
        assert!((apparent_intrinsic(m, 1.7, 1, &c).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(apparent_intrinsic(0.0, 1.7, 1, &c).unwrap(), 0.0);
        assert!((apparent_polarizability(0.25, 2.0, &c).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_section_finds_interior_and_boundary() {
        let (t, _) = golden_max(|t| -(t - 0.3) * (t - 0.3), 0.0, 1.0);
        assert!((t - 0.3).abs() < 1e-8);
        let (t, _) = golden_max(|t| -t, 0.0, 1.0);
        assert_eq!(t, 0.0);
    }
}
