//! Discrete fractional derivatives on a uniform hard-wall grid.
//!
//! The one-sided operators use shifted Grünwald–Letnikov weights
//! `w_k = (-1)^k C(beta, k)`, placed so that row `i` of the left operator
//! touches samples `i + 1, i, i - 1, ...`. The symmetric (Riesz) operator
//! is the normalized half sum
//!
//! ```text
//! D = -(L + R) / (2 cos(pi beta / 2))
//! ```
//!
//! which is exactly the three-point Laplacian at `beta = 2` and discretizes
//! `-(-d^2/dx^2)^(beta/2)` for `1 < beta < 2`.
//!
//! Samples outside the grid are taken to be zero (hard walls), so every
//! operator here is the truncation of an infinite Toeplitz matrix.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use faer::Mat;

use crate::error::{param, Error, Result};

/// Smallest grid accepted by [`Grid1D::new`].
pub const MIN_POINTS: usize = 8;

/// Uniform grid on the open interior of a hard-wall box.
///
/// Point `i` sits at `x_min + i * dx`. Wavefunctions are implicitly zero at
/// `x_min - dx` and `x_min + n * dx` and everywhere beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    dx: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, dx: f64, n: usize) -> Result<Self> {
        if !x_min.is_finite() {
            return Err(param("x_min", "must be finite"));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(param("dx", "must be finite and positive"));
        }
        if n < MIN_POINTS {
            return Err(param("n", alloc::format!("need at least {MIN_POINTS} points, got {n}")));
        }
        Ok(Self { x_min, dx, n })
    }

    /// Grid of `n` interior points strictly between two hard walls.
    pub fn between_walls(left: f64, right: f64, n: usize) -> Result<Self> {
        if !(right > left) {
            return Err(param("right", "right wall must lie to the right of the left wall"));
        }
        let dx = (right - left) / (n as f64 + 1.0);
        Self::new(left + dx, dx, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Position of the left hard wall (first excluded sample).
    pub fn left_wall(&self) -> f64 {
        self.x_min - self.dx
    }

    /// Position of the right hard wall.
    pub fn right_wall(&self) -> f64 {
        self.x(self.n)
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Same box, `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let n = (self.n + 1) * factor - 1;
        Self::between_walls(self.left_wall(), self.right_wall(), n)
    }

    /// Same walls with roughly twice the spacing, exact when `len()` is odd.
    pub fn coarsened(&self) -> Result<Self> {
        Self::between_walls(self.left_wall(), self.right_wall(), (self.n + 1) / 2 - 1)
    }
}

/// Space fractionality `alpha`; the kinetic operator has order `beta = 2 alpha`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.5 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(param("alpha", alloc::format!("{alpha} is outside (0.5, 1]")))
        }
    }

    pub const fn standard() -> Self {
        Self(1.0)
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn beta(self) -> f64 {
        2.0 * self.0
    }

    pub fn is_standard(self) -> bool {
        self.0 == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Left,
    Right,
    Riesz,
}

/// Dense matrix representation of a fractional derivative on a [`Grid1D`].
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: Mat<f64>,
    kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn entries(&self) -> &Mat<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> Mat<f64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if f.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: f.len() });
        }
        let mut out = vec![0.0; n];
        for j in 0..n {
            let fj = f[j];
            if fj == 0.0 {
                continue;
            }
            for (i, o) in self.entries.col(j).iter().zip(out.iter_mut()) {
                *o += i * fj;
            }
        }
        Ok(out)
    }

    /// `max |D_ij - D_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in (j + 1)..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn transpose(&self) -> Self {
        let kind = match self.kind {
            OperatorKind::Left => OperatorKind::Right,
            OperatorKind::Right => OperatorKind::Left,
            OperatorKind::Riesz => OperatorKind::Riesz,
        };
        Self {
            entries: self.entries.transpose().to_owned(),
            kind,
        }
    }
}

fn check_order(beta: f64) -> Result<()> {
    if beta > 1.0 && beta <= 2.0 {
        Ok(())
    } else {
        Err(param("beta", alloc::format!("{beta} is outside (1, 2]")))
    }
}

/// Grünwald–Letnikov weights `w_0 ..= w_count`.
pub fn gl_weights(beta: f64, count: usize) -> Result<Vec<f64>> {
    check_order(beta)?;
    if count < 2 {
        return Err(param("count", "need at least two weights beyond w_0"));
    }
    let mut w = Vec::with_capacity(count + 1);
    w.push(1.0);
    for k in 1..=count {
        let prev = w[k - 1];
        w.push(prev * (1.0 - (beta + 1.0) / k as f64));
    }
    Ok(w)
}

fn one_sided(grid: &Grid1D, beta: f64, kind: OperatorKind) -> Result<OperatorMatrix> {
    let n = grid.len();
    let w = gl_weights(beta, n + 1)?;
    let scale = libm::pow(grid.dx(), -beta);
    let entries = Mat::from_fn(n, n, |i, j| {
        // distance below the superdiagonal, in the direction of the operator
        let (a, b) = match kind {
            OperatorKind::Left => (i, j),
            _ => (j, i),
        };
        if b <= a + 1 {
            w[a + 1 - b] * scale
        } else {
            0.0
        }
    });
    Ok(OperatorMatrix { entries, kind })
}

/// Left-sided shifted Grünwald–Letnikov operator: `L_ij = w_{i-j+1} / dx^beta` for `j <= i + 1`.
pub fn left_matrix(grid: &Grid1D, beta: f64) -> Result<OperatorMatrix> {
    one_sided(grid, beta, OperatorKind::Left)
}

/// Right-sided operator, the transpose of [`left_matrix`].
pub fn right_matrix(grid: &Grid1D, beta: f64) -> Result<OperatorMatrix> {
    one_sided(grid, beta, OperatorKind::Right)
}

/// Symmetric Riesz derivative of order `beta`.
///
/// Entries depend only on `|i - j|`, so the result is symmetric entry for
/// entry regardless of rounding.
pub fn riesz_matrix(grid: &Grid1D, beta: f64) -> Result<OperatorMatrix> {
    check_order(beta)?;
    let n = grid.len();
    let w = gl_weights(beta, n + 1)?;
    let scale = -(1.0 / libm::pow(grid.dx(), beta)) / (2.0 * libm::cos(PI * beta / 2.0));
    let mut band = Vec::with_capacity(n);
    band.push(2.0 * w[1] * scale);
    if n > 1 {
        band.push((w[0] + w[2]) * scale);
    }
    for d in 2..n {
        band.push(w[d + 1] * scale);
    }
    let entries = Mat::from_fn(n, n, |i, j| band[i.abs_diff(j)]);
    Ok(OperatorMatrix {
        entries,
        kind: OperatorKind::Riesz,
    })
}

/// Rectangle-rule quadrature `sum_i f_i g_i dx`.
pub fn inner_product(f: &[f64], g: &[f64], grid: &Grid1D) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: f.len() });
    }
    if g.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: g.len() });
    }
    Ok(f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * grid.dx())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> Grid1D {
        Grid1D::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn integer_order_weights() {
        assert_eq!(gl_weights(2.0, 3).unwrap(), vec![1.0, -2.0, 1.0, 0.0]);
    }

    #[test]
    fn recurrence_weights() {
        let w = gl_weights(1.5, 2).unwrap();
        assert_eq!(w, vec![1.0, -1.5, 0.375]);
    }

    #[test]
    fn weights_reject_out_of_range_order() {
        assert!(gl_weights(1.0, 4).is_err());
        assert!(gl_weights(2.5, 4).is_err());
        assert!(gl_weights(1.5, 1).is_err());
    }

    #[test]
    fn weight_signs_and_partial_sums() {
        let w = gl_weights(1.8, 2000).unwrap();
        assert_eq!(w[0], 1.0);
        assert!((w[1] + 1.8).abs() < 1e-15);
        assert!(w[2..].iter().all(|&x| x > 0.0));
        let mut partial = 0.0;
        let mut last = f64::INFINITY;
        for (k, x) in w.iter().enumerate() {
            partial += x;
            if k >= 1 {
                assert!(partial.abs() <= last);
                last = partial.abs();
            }
        }
        assert!(partial.abs() < 1e-2);
    }

    #[test]
    fn order_bounds() {
        assert!(FractionalOrder::new(0.5).is_err());
        assert!(FractionalOrder::new(1.01).is_err());
        let a = FractionalOrder::new(0.75).unwrap();
        assert_eq!(a.beta(), 1.5);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 0.0, 10).is_err());
        assert!(Grid1D::new(0.0, 1.0, 7).is_err());
        let g = Grid1D::between_walls(-1.0, 1.0, 9).unwrap();
        assert!((g.dx() - 0.2).abs() < 1e-15);
        assert!((g.left_wall() + 1.0).abs() < 1e-15);
        assert!((g.right_wall() - 1.0).abs() < 1e-14);
        let r = g.refined(2).unwrap();
        assert_eq!(r.len(), 19);
        assert!((r.dx() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn second_order_riesz_is_three_point_laplacian() {
        let d = riesz_matrix(&unit_grid(8), 2.0).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expected = match usize::abs_diff(i, j) {
                    0 => -2.0,
                    1 => 1.0,
                    _ => 0.0,
                };
                assert_eq!(d.get(i, j), expected, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn second_order_one_sided_is_three_point() {
        let l = left_matrix(&unit_grid(8), 2.0).unwrap();
        let r = right_matrix(&unit_grid(8), 2.0).unwrap();
        for i in 1..7 {
            assert_eq!(l.get(i, i - 1), 1.0);
            assert_eq!(l.get(i, i), -2.0);
            assert_eq!(l.get(i, i + 1), 1.0);
            assert_eq!(r.get(i, i - 1), 1.0);
            assert_eq!(r.get(i, i + 1), 1.0);
        }
        assert_eq!(l.get(5, 2), 0.0);
    }

    #[test]
    fn right_is_transpose_of_left() {
        let g = Grid1D::new(0.0, 0.1, 12).unwrap();
        let l = left_matrix(&g, 1.37).unwrap();
        let r = right_matrix(&g, 1.37).unwrap();
        assert_eq!(r.kind(), OperatorKind::Right);
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(l.get(i, j), r.get(j, i));
            }
        }
        assert_eq!(l.transpose().entries(), r.entries());
    }

    #[test]
    fn one_sided_second_derivative_of_parabola() {
        let g = Grid1D::between_walls(0.0, 1.0, 40).unwrap();
        let f: Vec<f64> = g.points().map(|x| x * x).collect();
        for m in [left_matrix(&g, 2.0).unwrap(), right_matrix(&g, 2.0).unwrap()] {
            let out = m.apply(&f).unwrap();
            for v in &out[1..39] {
                assert!((v - 2.0).abs() < 1e-9, "{v}");
            }
        }
    }

    #[test]
    fn riesz_is_symmetric() {
        let g = Grid1D::new(-1.0, 0.05, 40).unwrap();
        for k in 1..=20 {
            let beta = 1.0 + k as f64 / 20.0;
            assert_eq!(riesz_matrix(&g, beta).unwrap().max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn riesz_rejects_unit_order() {
        assert!(riesz_matrix(&unit_grid(8), 1.0).is_err());
    }

    #[test]
    fn rectangle_rule() {
        let g = Grid1D::new(0.0, 0.25, 16).unwrap();
        let ones = vec![1.0; 16];
        assert!((inner_product(&ones, &ones, &g).unwrap() - 4.0).abs() < 1e-15);
        assert!(inner_product(&ones[..3], &ones, &g).is_err());
    }

    #[test]
    fn sine_overlap() {
        let l = 3.0;
        let g = Grid1D::between_walls(0.0, l, 299).unwrap();
        let s: Vec<f64> = g.points().map(|x| libm::sin(PI * x / l)).collect();
        let v = inner_product(&s, &s, &g).unwrap();
        assert!((v - l / 2.0).abs() < 10.0 * g.dx() * g.dx());
    }
}
