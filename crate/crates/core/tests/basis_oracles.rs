mod common;

use common::{adaptive_simpson, cox_de_boor, spline_eval};
use mspline_core::{build_basis, BasisSystem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_design(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.98)).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn breaks(basis: &BasisSystem) -> Vec<f64> {
    basis.breaks().to_vec()
}

/// Integral over `[0, 1]` of `g`, split at the breakpoints so each piece is
/// a polynomial. Span endpoints are nudged inward so the recursion sees the
/// polynomial piece of the span rather than its neighbour.
fn piecewise_integral<F: Fn(f64) -> f64>(basis: &BasisSystem, g: F) -> f64 {
    breaks(basis)
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0].next_up(), w[1].next_down());
            adaptive_simpson(|x| g(x.clamp(lo, hi)), w[0], w[1], 1e-11)
        })
        .sum()
}

#[test]
fn omega_matches_recursive_quadrature() {
    for m in 1..=3 {
        let t = random_design(10 + m as u64, 9);
        let basis = build_basis(&t, m).unwrap();
        let knots = basis.knots().to_vec();
        let order = basis.order();
        let nb = basis.n_basis();
        let omega = basis.omega();
        for i in 0..nb {
            for j in i..nb.min(i + order) {
                let want = piecewise_integral(&basis, |x| {
                    cox_de_boor(&knots, i, order, x, m) * cox_de_boor(&knots, j, order, x, m)
                });
                let scale = (omega.get(i, i) * omega.get(j, j)).sqrt().max(1e-300);
                let got = omega.get(i, j);
                assert!(
                    (got - want).abs() <= 1e-8 * scale,
                    "m={m} ({i},{j}) got {got} want {want}"
                );
            }
        }
    }
}

#[test]
fn omega_is_banded() {
    for m in 1..=3 {
        let basis = build_basis(&random_design(3, 15), m).unwrap();
        assert!(basis.omega().effective_bandwidth() <= 2 * m - 1);
        let d = basis.omega().to_dense();
        for i in 0..d.len() {
            for j in 0..d.len() {
                if i.abs_diff(j) >= 2 * m {
                    assert_eq!(d[i][j], 0.0);
                }
            }
        }
    }
}

#[test]
fn omega_annihilates_low_degree_polynomials() {
    for m in 1..=3 {
        let basis = build_basis(&random_design(21, 12), m).unwrap();
        for deg in 0..m {
            let c = basis.interpolate(|x| x.powi(deg as i32)).unwrap();
            let v = basis.omega().mul_vec(&c);
            let scale = (0..basis.n_basis()).map(|i| basis.omega().get(i, i)).fold(0.0, f64::max);
            assert!(v.iter().all(|x| x.abs() <= 1e-10 * scale.max(1.0)), "m={m} deg={deg}");
        }
    }
}

#[test]
fn derivatives_match_recursion_and_finite_differences() {
    for m in 1..=3 {
        let basis = build_basis(&random_design(40 + m as u64, 11), m).unwrap();
        let knots = basis.knots().to_vec();
        let order = basis.order();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let coef: Vec<f64> = (0..basis.n_basis()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for k in 0..50 {
            let x = 0.01 + 0.98 * (k as f64 + 0.37) / 50.0;
            for j in 0..order {
                let got = basis.eval(&coef, x, j).unwrap();
                let want = spline_eval(&knots, order, &coef, x, j);
                assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "m={m} j={j} x={x}");
            }
            if order >= 2 {
                let h = 1e-6;
                let fd = (basis.eval(&coef, x + h, 0).unwrap() - basis.eval(&coef, x - h, 0).unwrap()) / (2.0 * h);
                let d1 = basis.eval(&coef, x, 1).unwrap();
                assert!((fd - d1).abs() <= 1e-4 * (1.0 + d1.abs()));
            }
        }
    }
}

#[test]
fn first_derivative_of_identity_is_one() {
    let basis = build_basis(&random_design(5, 10), 2).unwrap();
    let c = basis.interpolate(|x| x).unwrap();
    for k in 0..=20 {
        let x = k as f64 / 20.0;
        assert!((basis.eval(&c, x, 1).unwrap() - 1.0).abs() < 1e-10);
        assert!((basis.eval(&c, x, 0).unwrap() - x).abs() < 1e-12);
    }
}

#[test]
fn reproduces_polynomials_below_order() {
    for m in 1..=3 {
        let basis = build_basis(&random_design(60, 10), m).unwrap();
        for deg in 0..2 * m {
            let f = |x: f64| (1.0 + x).powi(deg as i32) - 0.5;
            let c = basis.interpolate(f).unwrap();
            for k in 0..=40 {
                let x = k as f64 / 40.0;
                assert!((basis.eval(&c, x, 0).unwrap() - f(x)).abs() < 1e-10, "m={m} deg={deg}");
            }
        }
    }
}

#[test]
fn design_rows_have_at_most_order_nonzeros() {
    let t = random_design(8, 30);
    for m in 1..=3 {
        let basis = build_basis(&t, m).unwrap();
        let b = basis.design_matrix(&t).unwrap();
        for i in 0..b.nrows() {
            let (first, row) = b.row(i);
            assert!(row.len() <= 2 * m);
            assert!(first + row.len() <= basis.n_basis());
        }
    }
}

proptest! {
    #[test]
    fn partition_of_unity_and_nonnegativity(seed in 0u64..500, m in 1usize..=3, x in 0.0f64..=1.0) {
        let basis = build_basis(&random_design(seed, 8), m).unwrap();
        let (_, vals) = basis.basis_derivatives(x, 0).unwrap();
        let s: f64 = vals.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(vals.iter().all(|v| *v >= -1e-14));
    }

    #[test]
    fn n_basis_counts_breaks(seed in 0u64..500, n in 3usize..40, m in 1usize..=3) {
        let t = random_design(seed, n);
        prop_assume!(t.len() >= 2 * m);
        let basis = build_basis(&t, m).unwrap();
        prop_assert_eq!(basis.n_basis(), basis.breaks().len() + 2 * m - 2);
        prop_assert_eq!(basis.knots().len(), basis.n_basis() + 2 * m);
    }
}
