//! Lowest eigenpairs of real symmetric matrices.
//!
//! Tridiagonal matrices are handled directly: eigenvalues by Sturm-count
//! bisection, eigenvectors by inverse iteration. Dense matrices are first
//! reduced with faer's blocked Householder tridiagonalization and the
//! tridiagonal eigenvectors are mapped back through the reflectors, which
//! costs `O(n^2 k)` instead of the `O(n^3)` a full decomposition needs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::linalg::evd::tridiag;
use faer::linalg::householder;
use faer::{Conj, Mat, MatRef, Par};

use crate::error::{Error, Result};

/// The `k` smallest eigenvalues (ascending) with unit-norm eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

const INVERSE_ITERATIONS: usize = 3;
const MAX_BISECTIONS: usize = 256;

/// Number of eigenvalues strictly below `sigma` (Sturm sequence).
fn count_below(diag: &[f64], off_sq: &[f64], sigma: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - sigma;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - sigma - off_sq[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `(T - shift I) x = rhs` for tridiagonal `T`, LU with partial pivoting.
struct ShiftedTridiagLu {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    sup2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedTridiagLu {
    fn new(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for p in d.iter_mut() {
            if p.abs() < tiny {
                *p = if *p < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            sub: dl,
            diag: d,
            sup: du,
            sup2: du2,
            swapped,
        }
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = x[i];
                x[i] = x[i + 1];
                x[i + 1] = temp - self.sub[i] * x[i];
            } else {
                x[i + 1] -= self.sub[i] * x[i];
            }
        }
        x[n - 1] /= self.diag[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.sup[n - 2] * x[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.sup[i] * x[i + 1] - self.sup2[i] * x[i + 2]) / self.diag[i];
        }
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// Deterministic start vector with components spread over `[0.5, 1.5)`.
fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (seed as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Lowest `k` eigenpairs of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64], k: usize) -> Result<EigenPairs> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::LengthMismatch {
            expected: n.saturating_sub(1),
            found: off.len(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::Eigensolver(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    if diag.iter().chain(off).any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("matrix has non-finite entries".into()));
    }

    let off_sq: Vec<f64> = off.iter().map(|e| e * e).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let norm = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE * off_sq.iter().copied().fold(1.0, f64::max);
    let pad = 2.0 * f64::EPSILON * norm * n as f64 + pivmin;
    lo -= pad;
    hi += pad;

    let mut values = Vec::with_capacity(k);
    for target in 0..k {
        let (mut a, mut b) = (values.last().copied().unwrap_or(lo).max(lo) - pad, hi);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b || (b - a) <= 2.0 * f64::EPSILON * (a.abs() + b.abs()) + pivmin {
                break;
            }
            if count_below(diag, &off_sq, mid, pivmin) > target {
                b = mid;
            } else {
                a = mid;
            }
        }
        values.push(0.5 * (a + b));
    }

    let tiny = f64::EPSILON * norm;
    let cluster = 1e-3 * norm;
    let mut vectors = Mat::<f64>::zeros(n, k);
    for (j, &lambda) in values.iter().enumerate() {
        let lu = ShiftedTridiagLu::new(diag, off, lambda, tiny);
        let mut x = start_vector(n, j);
        normalize(&mut x);
        // earlier vectors in the same cluster
        let first = values[..j].iter().position(|&v| lambda - v < cluster).unwrap_or(j);
        for _ in 0..INVERSE_ITERATIONS {
            lu.solve_in_place(&mut x);
            for p in first..j {
                let col = vectors.col(p);
                let dot: f64 = col.iter().zip(&x).map(|(a, b)| a * b).sum();
                for (xi, ci) in x.iter_mut().zip(col.iter()) {
                    *xi -= dot * ci;
                }
            }
            if !(normalize(&mut x) > 0.0) || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Eigensolver(format!(
                    "inverse iteration broke down for eigenvalue {j} ({lambda:e})"
                )));
            }
        }
        let residual = tridiagonal_residual(diag, off, lambda, &x);
        if residual > 1e-6 * norm {
            return Err(Error::Eigensolver(format!(
                "inverse iteration for eigenvalue {j} ({lambda:e}) left residual {residual:e}"
            )));
        }
        vectors.col_mut(j).iter_mut().zip(&x).for_each(|(dst, src)| *dst = *src);
    }
    Ok(EigenPairs { values, vectors })
}

fn tridiagonal_residual(diag: &[f64], off: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let n = diag.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut r = (diag[i] - lambda) * x[i];
        if i > 0 {
            r += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            r += off[i] * x[i + 1];
        }
        worst = worst.max(r.abs());
    }
    worst
}

/// True when every entry outside the first sub- and superdiagonal is zero.
pub fn is_tridiagonal(a: MatRef<'_, f64>) -> bool {
    let n = a.nrows();
    (0..n).all(|j| (0..n).all(|i| i.abs_diff(j) <= 1 || a[(i, j)] == 0.0))
}

/// Largest eigenvalue of a dense symmetric matrix.
pub fn symmetric_largest_value(a: MatRef<'_, f64>) -> Result<f64> {
    let negated = Mat::from_fn(a.nrows(), a.ncols(), |i, j| -a[(i, j)]);
    Ok(-symmetric_lowest(negated.as_ref(), 1)?.values[0])
}

/// Lowest `k` eigenpairs of a dense symmetric matrix; only the lower triangle is read.
pub fn symmetric_lowest(a: MatRef<'_, f64>, k: usize) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::LengthMismatch { expected: n, found: a.ncols() });
    }
    if n == 0 {
        return Err(Error::Eigensolver("empty matrix".into()));
    }
    if is_tridiagonal(a) {
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| a[(i + 1, i)]).collect();
        return tridiagonal_lowest(&diag, &off, k);
    }

    let par = Par::Seq;
    let block = faer::linalg::qr::no_pivoting::factor::recommended_block_size::<f64>(n, n);
    let mut reduced = a.to_owned();
    let mut factors = Mat::<f64>::zeros(block, n - 1);
    let mut buffer = MemBuffer::new(StackReq::any_of(&[
        tridiag::tridiag_in_place_scratch::<f64>(n, par, Default::default()),
        householder::apply_block_householder_sequence_on_the_left_in_place_scratch::<f64>(n - 1, block, k),
    ]));
    tridiag::tridiag_in_place(
        reduced.as_mut(),
        factors.as_mut(),
        par,
        MemStack::new(&mut buffer),
        Default::default(),
    );
    let diag: Vec<f64> = (0..n).map(|i| reduced[(i, i)]).collect();
    let off: Vec<f64> = (0..n - 1).map(|i| reduced[(i + 1, i)]).collect();
    let mut pairs = tridiagonal_lowest(&diag, &off, k)?;
    householder::apply_block_householder_sequence_on_the_left_in_place_with_conj(
        reduced.as_ref().submatrix(1, 0, n - 1, n - 1),
        factors.as_ref(),
        Conj::No,
        pairs.vectors.as_mut().subrows_mut(1, n - 1),
        par,
        MemStack::new(&mut buffer),
    );
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn discrete_laplacian_spectrum() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(j pi / (n + 1))
        let n = 50;
        let pairs = tridiagonal_lowest(&vec![2.0; n], &vec![-1.0; n - 1], 6).unwrap();
        for (j, v) in pairs.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * libm::cos((j + 1) as f64 * PI / (n + 1) as f64);
            assert!((v - exact).abs() < 1e-13, "{j}: {v} vs {exact}");
        }
        for j in 0..6 {
            for i in 0..=j {
                let dot: f64 = pairs.vectors.col(i).iter().zip(pairs.vectors.col(j).iter()).map(|(a, b)| a * b).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dense_matches_tridiagonal_route() {
        let n = 40;
        let a = Mat::<f64>::from_fn(n, n, |i, j| {
            let d = i.abs_diff(j) as f64;
            let base = 1.0 / (1.0 + d * d);
            if i == j {
                base + 0.1 * i as f64
            } else {
                -base
            }
        });
        let pairs = symmetric_lowest(a.as_ref(), 5).unwrap();
        let all = a.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        for j in 0..5 {
            assert!((pairs.values[j] - all[j]).abs() < 1e-11);
            // A v = lambda v
            let v = pairs.vectors.col(j);
            let av = &a * v;
            let res = av.iter().zip(v.iter()).map(|(x, y)| (x - pairs.values[j] * y).abs()).fold(0.0, f64::max);
            assert!(res < 1e-10, "residual {res}");
        }
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(tridiagonal_lowest(&[1.0, 2.0], &[0.5], 3).is_err());
        assert!(tridiagonal_lowest(&[1.0, 2.0], &[0.5, 1.0], 1).is_err());
        assert!(tridiagonal_lowest(&[1.0, f64::NAN], &[0.5], 1).is_err());
    }

    #[test]
    fn detects_band_structure() {
        let t = Mat::<f64>::from_fn(5, 5, |i, j| if i.abs_diff(j) <= 1 { 1.0 } else { 0.0 });
        assert!(is_tridiagonal(t.as_ref()));
        let mut d = t.clone();
        d[(4, 0)] = 1e-30;
        assert!(!is_tridiagonal(d.as_ref()));
    }
}
