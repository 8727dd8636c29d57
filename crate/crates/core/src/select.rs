//! Smoothing-parameter selection by weighted generalized cross-validation.
//!
//! ```text
//! GCV(λ) = n⁻¹ Σ W_i r_i² / (1 - n⁻¹ tr H(λ))²
//! ```
//!
//! with `W_i = ψ(r_i/σ)/(r_i/σ)` at the converged fit and `H(λ)` the hat
//! matrix of the final weighted least-squares step. The classical variant
//! drops the weights.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::{FitOptions, SplineFit, SplineProblem};
use crate::loss::LossSpec;
use crate::nelder_mead::NelderMead1d;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcvCriterion {
    /// Numerator weighted by the converged IRLS weights.
    Weighted,
    /// Plain residual sum of squares.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub log10_lambda_init: f64,
    pub init_step: f64,
    pub max_evals: usize,
    /// Simplex width (log10 units) at which the search stops.
    pub xtol: f64,
    pub log10_lambda_min: f64,
    pub log10_lambda_max: f64,
    pub criterion: GcvCriterion,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            log10_lambda_init: -2.0,
            init_step: 1.0,
            max_evals: 60,
            xtol: 1e-3,
            log10_lambda_min: -12.0,
            log10_lambda_max: 8.0,
            criterion: GcvCriterion::Weighted,
        }
    }
}

/// One evaluated candidate. Failed candidates carry `score = +∞` and
/// `edf = NaN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcvEval {
    pub lambda: f64,
    pub score: f64,
    pub edf: f64,
}

#[derive(Debug, Clone)]
pub struct GcvResult {
    pub lambda_opt: f64,
    pub score_opt: f64,
    pub trace: Vec<GcvEval>,
    pub evaluations: usize,
    pub converged: bool,
    /// Fit at `lambda_opt`.
    pub fit: SplineFit,
}

/// GCV criterion of an existing fit.
pub fn gcv_of_fit(fit: &SplineFit, criterion: GcvCriterion) -> Result<f64> {
    let n = fit.n();
    let nf = n as f64;
    let denom = 1.0 - fit.edf / nf;
    if !(denom > 1e-10) {
        return Err(Error::DegenerateGcv { edf: fit.edf, n });
    }
    let num = match criterion {
        GcvCriterion::Weighted => fit
            .raw_weights
            .iter()
            .zip(&fit.residuals)
            .map(|(w, r)| w * r * r)
            .sum::<f64>(),
        GcvCriterion::Classical => fit.residuals.iter().map(|r| r * r).sum::<f64>(),
    } / nf;
    Ok(num / (denom * denom))
}

/// Fits at `lambda` and returns `(score, edf, fit)`.
pub fn gcv_score(
    problem: &SplineProblem,
    spec: &LossSpec,
    lambda: f64,
    options: &FitOptions,
    criterion: GcvCriterion,
) -> Result<(f64, f64, SplineFit)> {
    let fit = problem.fit(spec, lambda, options)?;
    let score = gcv_of_fit(&fit, criterion)?;
    Ok((score, fit.edf, fit))
}

/// Nelder-Mead search over `log10 λ` minimizing [`gcv_score`].
pub fn select_lambda(
    problem: &SplineProblem,
    spec: &LossSpec,
    options: &FitOptions,
    search: &SearchOptions,
) -> Result<GcvResult> {
    if search.max_evals < 3 {
        return Err(Error::InvalidParameter("max_evals must be at least 3"));
    }
    if !(search.log10_lambda_min < search.log10_lambda_max) || !(search.xtol > 0.0) {
        return Err(Error::InvalidParameter("search bounds are not sane"));
    }
    spec.validate()?;
    options.validate()?;

    let mut trace = Vec::with_capacity(search.max_evals);
    let mut best: Option<(f64, SplineFit)> = None;
    let nm = NelderMead1d {
        init: search.log10_lambda_init,
        step: search.init_step,
        max_evals: search.max_evals,
        xtol: search.xtol,
        lower: search.log10_lambda_min,
        upper: search.log10_lambda_max,
    };
    let outcome = nm.minimize(|u| {
        let lambda = libm::pow(10.0, u);
        match gcv_score(problem, spec, lambda, options, search.criterion) {
            Ok((score, edf, fit)) if score.is_finite() => {
                trace.push(GcvEval { lambda, score, edf });
                if best.as_ref().is_none_or(|(s, _)| score < *s) {
                    best = Some((score, fit));
                }
                score
            }
            _ => {
                trace.push(GcvEval {
                    lambda,
                    score: f64::INFINITY,
                    edf: f64::NAN,
                });
                f64::INFINITY
            }
        }
    });
    let (score_opt, fit) = best.ok_or(Error::SelectionFailed)?;
    Ok(GcvResult {
        lambda_opt: fit.lambda,
        score_opt,
        evaluations: trace.len(),
        trace,
        converged: outcome.converged,
        fit,
    })
}
