use mspline_core::{mad, rice_scale, tau_scale};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn rice_is_consistent_at_the_gaussian() {
    let s = rice_scale(&gaussian(100_000, 1)).unwrap().value;
    assert!((0.97..=1.03).contains(&s), "{s}");
}

#[test]
fn tau_is_consistent_at_the_gaussian() {
    let s = tau_scale(&gaussian(100_000, 2)).unwrap().value;
    assert!((0.95..=1.05).contains(&s), "{s}");
    let m = mad(&gaussian(100_000, 3)).unwrap().value;
    assert!((0.97..=1.03).contains(&m), "{m}");
}

#[test]
fn rice_ignores_smooth_trend() {
    let n = 10_000;
    let e = gaussian(n, 4);
    let trended: Vec<f64> = e
        .iter()
        .enumerate()
        .map(|(i, v)| v + (2.0 * std::f64::consts::PI * (i + 1) as f64 / n as f64).cos())
        .collect();
    let a = rice_scale(&e).unwrap().value;
    let b = rice_scale(&trended).unwrap().value;
    assert!((a - b).abs() / a < 0.02, "{a} vs {b}");
}

#[test]
fn tau_survives_ten_percent_gross_errors() {
    let r = gaussian(1000, 5);
    let clean = tau_scale(&r).unwrap().value;
    let mut dirty = r.clone();
    for v in dirty.iter_mut().step_by(10) {
        *v = 1e6;
    }
    let s = tau_scale(&dirty).unwrap().value;
    assert!((s - clean).abs() / clean < 0.5, "{clean} -> {s}");
}

proptest! {
    #[test]
    fn equivariance(r in prop::collection::vec(-100.0f64..100.0, 5..60), a in 1e-3f64..1e3, c in -1e3f64..1e3) {
        let scaled: Vec<f64> = r.iter().map(|v| a * v).collect();
        let shifted: Vec<f64> = r.iter().map(|v| v + c).collect();
        let flipped: Vec<f64> = r.iter().map(|v| -v).collect();
        for f in [tau_scale, mad, rice_scale] {
            let Ok(s) = f(&r) else { continue };
            let s = s.value;
            prop_assert!((f(&scaled).unwrap().value - a * s).abs() <= 1e-10 * a * s);
            prop_assert!((f(&shifted).unwrap().value - s).abs() <= 1e-8 * (s + c.abs()));
            prop_assert!((f(&flipped).unwrap().value - s).abs() <= 1e-10 * s);
            prop_assert!(s > 0.0);
        }
    }
}
