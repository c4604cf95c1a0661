use frackappa_core::eigen::{symmetric_largest_value, symmetric_lowest};
use frackappa_core::fracop::{gl_weights, left_matrix, riesz_matrix, right_matrix, Grid1D};
use proptest::prelude::*;

#[test]
fn second_difference_limit_is_exact() {
    let grid = Grid1D::between_walls(-1.0, 2.0, 120).unwrap();
    let d = riesz_matrix(&grid, 2.0).unwrap();
    let h2 = grid.dx() * grid.dx();
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let want = match i.abs_diff(j) {
                0 => -2.0 / h2,
                1 => 1.0 / h2,
                _ => 0.0,
            };
            assert_eq!(d.get(i, j), want, "({i},{j})");
        }
    }
}

#[test]
fn weight_partial_sum_tends_to_zero() {
    let w = gl_weights(1.8, 2000).unwrap();
    // independent recurrence w_k = w_{k-1} (k - 1 - β) / k
    let beta = 1.8;
    let mut oracle = 1.0f64;
    let mut total = 1.0f64;
    for k in 1..=2000 {
        oracle *= (k as f64 - 1.0 - beta) / k as f64;
        total += oracle;
        assert!((w[k] - oracle).abs() <= 1e-11 * oracle.abs(), "w[{k}]");
    }
    let sum: f64 = w.iter().sum();
    assert!(sum.abs() < 1e-2);
    assert!((sum - total).abs() < 1e-12);
}

#[test]
fn riesz_is_negative_semidefinite_at_400_points() {
    let grid = Grid1D::between_walls(0.0, 1.0, 400).unwrap();
    for i in 1..=10 {
        let beta = 1.0 + 0.1 * f64::from(i);
        let d = riesz_matrix(&grid, beta).unwrap();
        let top = symmetric_largest_value(d.entries().as_ref()).unwrap();
        let bottom = symmetric_lowest(d.entries().as_ref(), 1).unwrap().values[0];
        let norm = top.abs().max(bottom.abs());
        assert!(top <= 1e-10 * norm, "beta {beta}: {top} vs {norm}");
    }
}

#[test]
fn riesz_of_smooth_bump_matches_fourier_symbol() {
    // a wide Gaussian behaves as on the whole line, where the Riesz
    // derivative multiplies the Fourier transform by -|k|^β
    let beta = 1.5;
    let oracle = |x: f64| {
        let dk = 1e-3;
        let mut s = 0.0;
        for j in 1..12000 {
            let k = j as f64 * dk;
            s += k.powf(beta) * (-k * k / 2.0).exp() * (k * x).cos();
        }
        -s * dk * (2.0 * std::f64::consts::PI).sqrt() / std::f64::consts::PI
    };
    let max_error = |n: usize| {
        let grid = Grid1D::between_walls(-40.0, 40.0, n).unwrap();
        let f: Vec<f64> = grid.points().map(|x| (-x * x / 2.0).exp()).collect();
        let df = riesz_matrix(&grid, beta).unwrap().apply(&f).unwrap();
        grid.points()
            .zip(&df)
            .filter(|(x, _)| x.abs() < 3.0)
            .step_by(7)
            .map(|(x, v)| (v - oracle(x)).abs())
            .fold(0.0, f64::max)
    };
    let coarse = max_error(1999);
    let fine = max_error(3999);
    assert!(fine < 1e-2, "{fine}");
    // first order in dx
    assert!(coarse / fine > 1.7, "{coarse} {fine}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn riesz_is_exactly_symmetric(beta in 1.0001f64..=2.0, n in 8usize..80) {
        let grid = Grid1D::between_walls(0.0, 3.0, n).unwrap();
        prop_assert_eq!(riesz_matrix(&grid, beta).unwrap().max_asymmetry(), 0.0);
    }

    #[test]
    fn one_sided_operators_are_mirror_images(beta in 1.0001f64..=2.0, n in 8usize..60) {
        let grid = Grid1D::between_walls(0.0, 1.0, n).unwrap();
        let l = left_matrix(&grid, beta).unwrap();
        let r = right_matrix(&grid, beta).unwrap();
        let lt = l.transpose();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(lt.get(i, j), r.get(i, j));
            }
        }
    }

    #[test]
    fn quadratic_form_is_non_positive(beta in 1.0001f64..=2.0, seed in any::<u64>()) {
        let grid = Grid1D::between_walls(0.0, 1.0, 50).unwrap();
        let d = riesz_matrix(&grid, beta).unwrap();
        let mut state = seed | 1;
        let v: Vec<f64> = (0..50).map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }).collect();
        let dv = d.apply(&v).unwrap();
        let q: f64 = v.iter().zip(&dv).map(|(a, b)| a * b).sum();
        let scale: f64 = v.iter().zip(&dv).map(|(a, b)| (a * b).abs()).sum();
        prop_assert!(q <= 1e-12 * scale);
    }

    #[test]
    fn weights_follow_recurrence(beta in 1.0001f64..=2.0) {
        let w = gl_weights(beta, 50).unwrap();
        prop_assert_eq!(w[0], 1.0);
        prop_assert!((w[1] + beta).abs() < 1e-15);
        for k in 2..50 {
            prop_assert!(w[k] >= 0.0 || beta == 2.0, "w[{}] = {}", k, w[k]);
        }
    }
}
