//! Robust scale estimators used to standardize residuals.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Gaussian 0.75-quantile used to make median-based scales consistent.
pub const GAUSS_Q75: f64 = 0.6745;

/// Bisquare tuning of the τ-scale's location step.
pub const TAU_C1: f64 = 4.5;
/// Truncation of the τ-scale's quadratic ρ.
pub const TAU_C2: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMethod {
    RicePseudo,
    TauResidual,
    Mad,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    pub value: f64,
    pub method: ScaleMethod,
}

/// Sample median; even counts average the two central order statistics.
pub fn median(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = x.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn raw_mad(x: &[f64]) -> (f64, f64) {
    let med = median(x).unwrap();
    let dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    (med, median(&dev).unwrap())
}

/// Rice-type pseudo-residual scale:
/// `median |y[i+1] - y[i]| / (√2 · 0.6745)`, with `y` ordered by design point.
pub fn rice_scale(y: &[f64]) -> Result<ScaleEstimate> {
    if y.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: y.len(),
        });
    }
    let diffs: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let med = median(&diffs).unwrap();
    if !(med > 0.0) || !med.is_finite() {
        return Err(Error::DegenerateScale);
    }
    Ok(ScaleEstimate {
        value: med / (core::f64::consts::SQRT_2 * GAUSS_Q75),
        method: ScaleMethod::RicePseudo,
    })
}

/// Normalized median absolute deviation about the median.
pub fn mad(r: &[f64]) -> Result<ScaleEstimate> {
    if r.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: r.len(),
        });
    }
    let (_, m) = raw_mad(r);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::DegenerateScale);
    }
    Ok(ScaleEstimate {
        value: m / GAUSS_Q75,
        method: ScaleMethod::Mad,
    })
}

/// `E[min(Z², c²)]` for standard normal `Z`.
fn truncated_second_moment(c: f64) -> f64 {
    let phi = libm::exp(-0.5 * c * c) / libm::sqrt(2.0 * core::f64::consts::PI);
    let cdf = 0.5 * (1.0 + libm::erf(c / core::f64::consts::SQRT_2));
    2.0 * ((1.0 - c * c) * cdf - c * phi + c * c) - 1.0
}

/// τ-scale of a residual vector.
///
/// Starting from the normalized MAD `s0`, a bisquare-weighted mean `μ`
/// (tuning 4.5) locates the data, and the scale is
/// `s0 · sqrt(mean(min(((r - μ)/s0)², 9)) / E[min(Z², 9)])`, which is
/// consistent at the Gaussian.
pub fn tau_scale(r: &[f64]) -> Result<ScaleEstimate> {
    let s0 = mad(r)?.value;
    let med = median(r).unwrap();
    let (mut sw, mut swx) = (0.0, 0.0);
    for &x in r {
        let u = (x - med) / (TAU_C1 * s0);
        if u.abs() < 1.0 {
            let w = (1.0 - u * u) * (1.0 - u * u);
            sw += w;
            swx += w * x;
        }
    }
    let mu = swx / sw;
    let c2 = TAU_C2 * TAU_C2;
    let mean_rho = r
        .iter()
        .map(|x| {
            let u = (x - mu) / s0;
            (u * u).min(c2)
        })
        .sum::<f64>()
        / r.len() as f64;
    let value = s0 * libm::sqrt(mean_rho / truncated_second_moment(TAU_C2));
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::DegenerateScale);
    }
    Ok(ScaleEstimate {
        value,
        method: ScaleMethod::TauResidual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn rice_alternating() {
        let s = rice_scale(&[0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let want = 1.0 / (2f64.sqrt() * 0.6745);
        assert!((s.value - want).abs() < 1e-15);
        assert!((s.value - 1.048_342).abs() < 1e-6);
        assert_eq!(s.method, ScaleMethod::RicePseudo);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(rice_scale(&[2.0; 7]).unwrap_err(), Error::DegenerateScale);
        assert_eq!(mad(&[1.5; 4]).unwrap_err(), Error::DegenerateScale);
        assert_eq!(tau_scale(&[1.5; 4]).unwrap_err(), Error::DegenerateScale);
        assert!(matches!(rice_scale(&[1.0]), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn mad_of_three() {
        let s = mad(&[-1.0, 0.0, 1.0]).unwrap();
        assert!((s.value - 1.0 / 0.6745).abs() < 1e-15);
        assert!((s.value - 1.482_580).abs() < 1e-6);
    }

    #[test]
    fn gaussian_truncated_moment() {
        // E[min(Z², 9)] by a fine midpoint rule on [-12, 12].
        let h = 1e-4;
        let mut q = 0.0;
        let mut z = -12.0 + h / 2.0;
        while z < 12.0 {
            let d = libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI);
            q += (z * z).min(9.0) * d * h;
            z += h;
        }
        assert!((truncated_second_moment(3.0) - q).abs() < 1e-8);
    }

    #[test]
    fn tau_of_symmetric_pair() {
        // s0 = 1/0.6745, μ = 0, ((±1)/s0)² = 0.6745², so τ = 1/sqrt(E[min(Z²,9)]).
        let s = tau_scale(&[-1.0, 1.0]).unwrap();
        let want = 1.0 / libm::sqrt(truncated_second_moment(3.0));
        assert!((s.value - want).abs() < 1e-14);
        assert!((s.value - 1.002_505_7).abs() < 1e-6);
    }

    #[test]
    fn equivariance() {
        let r0 = vec![0.3, -1.2, 2.5, 0.1, -0.7, 4.0, -3.3, 0.9];
        let r3: Vec<f64> = r0.iter().map(|v| 3.0 * v).collect();
        let shifted: Vec<f64> = r0.iter().map(|v| v + 10.0).collect();
        for f in [tau_scale, mad] {
            let a = f(&r0).unwrap().value;
            assert!((f(&r3).unwrap().value - 3.0 * a).abs() < 1e-10);
            assert!((f(&shifted).unwrap().value - a).abs() < 1e-10);
        }
        let neg: Vec<f64> = r0.iter().map(|v| -2.0 * v).collect();
        assert!((mad(&neg).unwrap().value - 2.0 * mad(&r0).unwrap().value).abs() < 1e-12);
        let a = rice_scale(&r0).unwrap().value;
        assert!((rice_scale(&shifted).unwrap().value - a).abs() < 1e-12);
        assert!((rice_scale(&r3).unwrap().value - 3.0 * a).abs() < 1e-12);
    }
}
