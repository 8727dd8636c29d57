mod common;

use common::{dense_solve, unit_grid};
use mspline_core::select::gcv_of_fit;
use mspline_core::{gcv_score, select_lambda, DesignData, FitOptions, LossSpec, SearchOptions, SplineProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn noisy(n: usize, seed: u64, f: impl Fn(f64) -> f64) -> DesignData {
    let t = unit_grid(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = Normal::new(0.0, 0.3).unwrap();
    let y = t.iter().map(|&x| f(x) + e.sample(&mut rng)).collect();
    DesignData::new(t, y).unwrap()
}

fn bump(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x).sin() + (-30.0 * (x - 0.6) * (x - 0.6)).exp()
}

#[test]
fn trace_matches_column_solves() {
    let data = noisy(30, 4, bump);
    let problem = SplineProblem::new(data, 2).unwrap();
    let lambda = 3e-4;
    let fit = problem.fit(&LossSpec::huber(), lambda, &FitOptions::default()).unwrap();
    let n = problem.n();
    let a = problem.weighted_system(&fit.raw_weights, lambda, fit.sigma).unwrap().to_dense();
    let b = problem.design().to_dense();
    // H e_i = B A⁻¹ Bᵀ W e_i / n; its i-th entry is the i-th leverage.
    let mut trace = 0.0;
    for i in 0..n {
        let rhs: Vec<f64> = b[i].iter().map(|v| v * fit.raw_weights[i] / n as f64).collect();
        let z = dense_solve(&a, &rhs);
        trace += b[i].iter().zip(&z).map(|(p, q)| p * q).sum::<f64>();
    }
    assert!((trace - fit.edf).abs() <= 1e-8, "{trace} vs {}", fit.edf);
}

#[test]
fn nelder_mead_beats_grid_search() {
    let data = noisy(80, 8, bump);
    let problem = SplineProblem::new(data, 2).unwrap();
    let opts = FitOptions::default();
    for spec in [LossSpec::LeastSquares, LossSpec::huber()] {
        let search = SearchOptions { xtol: 1e-6, max_evals: 200, ..SearchOptions::default() };
        let res = select_lambda(&problem, &spec, &opts, &search).unwrap();
        let grid_min = (0..50)
            .map(|i| 10f64.powf(-10.0 + 12.0 * i as f64 / 49.0))
            .filter_map(|l| gcv_score(&problem, &spec, l, &opts, search.criterion).ok())
            .map(|(s, _, _)| s)
            .fold(f64::INFINITY, f64::min);
        assert!(res.score_opt <= grid_min * (1.0 + 1e-6), "{spec:?}: {} > {grid_min}", res.score_opt);
        let recomputed = gcv_of_fit(&res.fit, search.criterion).unwrap();
        assert_eq!(recomputed, res.score_opt);
        let min_trace = res.trace.iter().map(|e| e.score).fold(f64::INFINITY, f64::min);
        assert!((res.score_opt - min_trace).abs() <= 1e-12 * min_trace);
    }
}

#[test]
fn polynomial_truth_selects_heavy_smoothing() {
    let data = noisy(200, 12, |x| 1.0 - 2.0 * x);
    let problem = SplineProblem::new(data, 2).unwrap();
    let res = select_lambda(&problem, &LossSpec::huber(), &FitOptions::default(), &SearchOptions::default()).unwrap();
    assert!(res.fit.edf <= 3.0, "edf {}", res.fit.edf);
}

#[test]
fn selection_is_deterministic() {
    let data = noisy(70, 1, bump);
    let problem = SplineProblem::new(data, 2).unwrap();
    let run = || select_lambda(&problem, &LossSpec::huber(), &FitOptions::default(), &SearchOptions::default()).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.lambda_opt.to_bits(), b.lambda_opt.to_bits());
    assert_eq!(a.fit.coef, b.fit.coef);
}

#[test]
fn edf_nonincreasing_in_lambda() {
    let data = noisy(60, 3, bump);
    let problem = SplineProblem::new(data, 2).unwrap();
    let mut prev = f64::INFINITY;
    for i in 0..20 {
        let lambda = 10f64.powf(-9.0 + 12.0 * i as f64 / 19.0);
        let fit = problem.fit(&LossSpec::LeastSquares, lambda, &FitOptions::default()).unwrap();
        assert!(fit.edf <= prev + 1e-6, "λ={lambda}: {} after {prev}", fit.edf);
        prev = fit.edf;
    }
}

#[test]
fn failed_candidates_are_traced() {
    // Tiny n: small λ interpolates and the criterion is undefined there.
    let data = noisy(8, 2, bump);
    let problem = SplineProblem::new(data, 2).unwrap();
    let search = SearchOptions { log10_lambda_init: -11.0, ..SearchOptions::default() };
    let res = select_lambda(&problem, &LossSpec::LeastSquares, &FitOptions::default(), &search).unwrap();
    assert!(res.trace.iter().all(|e| e.score.is_finite() || (e.score == f64::INFINITY && e.edf.is_nan())));
    assert!(res.score_opt.is_finite());
}
