//! Convex loss functions `ρ`, their scores `ψ = ρ'`, and IRLS weights.
//!
//! Losses follow the factor-2 convention `ρ(x) = x²` on the quadratic
//! core, so least squares has `ψ(x) = 2x` and weight 2.

use crate::error::{Error, Result};

/// Default Huber threshold (95% Gaussian efficiency in the location model).
pub const HUBER_K: f64 = 1.345;

/// Standardized residuals smaller than this use the `r → 0` weight limit.
const ZERO_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    LeastSquares,
    /// `x²` for `|x| <= k`, `2k(|x| - k/2)` beyond.
    Huber { k: f64 },
    /// `|x|` with its corner replaced by `x² / (2 eps)` on `[-eps, eps]`,
    /// shifted by `-eps/2` outside so that `ρ(0) = 0`.
    SmoothedAbs { eps: f64 },
    /// Check loss `|x| + (2α - 1)x` with the `|x|` part smoothed as in
    /// `SmoothedAbs`.
    SmoothedQuantile { alpha: f64, eps: f64 },
    /// `|x|^p` for `1 < p <= 2`.
    Lp { p: f64 },
}

impl LossSpec {
    pub fn huber() -> Self {
        LossSpec::Huber { k: HUBER_K }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LossSpec::LeastSquares => true,
            LossSpec::Huber { k } => k > 0.0 && k.is_finite(),
            LossSpec::SmoothedAbs { eps } => eps > 0.0 && eps.is_finite(),
            LossSpec::SmoothedQuantile { alpha, eps } => {
                alpha > 0.0 && alpha < 1.0 && eps > 0.0 && eps.is_finite()
            }
            LossSpec::Lp { p } => p > 1.0 && p <= 2.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("loss parameters out of range"))
        }
    }

    /// Whether `ρ(-x) = ρ(x)`.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, LossSpec::SmoothedQuantile { alpha, .. } if *alpha != 0.5)
    }

    /// Whether `ψ(x)/x` is nonincreasing in `|x|`, which makes IRLS a
    /// majorize-minimize scheme with monotone objective.
    pub fn has_monotone_weights(&self) -> bool {
        !matches!(self, LossSpec::Lp { .. })
    }

    pub fn rho(&self, x: f64) -> f64 {
        match *self {
            LossSpec::LeastSquares => x * x,
            LossSpec::Huber { k } => {
                let a = x.abs();
                if a <= k {
                    x * x
                } else {
                    2.0 * k * (a - k / 2.0)
                }
            }
            LossSpec::SmoothedAbs { eps } => smoothed_abs(x, eps),
            LossSpec::SmoothedQuantile { alpha, eps } => {
                smoothed_abs(x, eps) + (2.0 * alpha - 1.0) * x
            }
            LossSpec::Lp { p } => libm::pow(x.abs(), p),
        }
    }

    pub fn psi(&self, x: f64) -> f64 {
        self.psi_symmetric(x) + self.drift()
    }

    /// Constant part of `ψ`: `2α - 1` for the check loss, zero otherwise.
    pub fn drift(&self) -> f64 {
        match *self {
            LossSpec::SmoothedQuantile { alpha, .. } => 2.0 * alpha - 1.0,
            _ => 0.0,
        }
    }

    /// Odd part of `ψ`.
    fn psi_symmetric(&self, x: f64) -> f64 {
        match *self {
            LossSpec::LeastSquares => 2.0 * x,
            LossSpec::Huber { k } => 2.0 * x.clamp(-k, k),
            LossSpec::SmoothedAbs { eps } | LossSpec::SmoothedQuantile { eps, .. } => {
                (x / eps).clamp(-1.0, 1.0)
            }
            LossSpec::Lp { p } => p * libm::pow(x.abs(), p - 1.0) * x.signum(),
        }
    }

    /// Slope of `ψ` at zero, the largest IRLS weight. For `Lp` with `p < 2`,
    /// where the slope is infinite, the weight at the zero-residual cutoff.
    pub fn psi_prime_zero(&self) -> f64 {
        match *self {
            LossSpec::LeastSquares | LossSpec::Huber { .. } => 2.0,
            LossSpec::SmoothedAbs { eps } | LossSpec::SmoothedQuantile { eps, .. } => 1.0 / eps,
            LossSpec::Lp { p } => p * libm::pow(ZERO_RESIDUAL, p - 2.0),
        }
    }

    /// `ψ(x)/x` for the odd part of `ψ`, with the `x → 0` limit below
    /// `1e-10`. For the check loss the constant drift is not included; IRLS
    /// carries it on the right-hand side.
    pub fn weight(&self, x: f64) -> f64 {
        if x.abs() < ZERO_RESIDUAL {
            return self.psi_prime_zero();
        }
        match *self {
            LossSpec::Lp { p } => p * libm::pow(x.abs(), p - 2.0),
            _ => self.psi_symmetric(x) / x,
        }
    }
}

fn smoothed_abs(x: f64, eps: f64) -> f64 {
    let a = x.abs();
    if a <= eps {
        x * x / (2.0 * eps)
    } else {
        a - eps / 2.0
    }
}

/// IRLS weight `ψ(r/σ) / (r/σ)`.
pub fn irls_weight(spec: &LossSpec, r: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidScale(sigma));
    }
    Ok(spec.weight(r / sigma))
}

pub fn rho(spec: &LossSpec, x: f64) -> f64 {
    spec.rho(x)
}

pub fn psi(spec: &LossSpec, x: f64) -> f64 {
    spec.psi(x)
}
