//! The four estimators of the simulation study and the loss/scale settings
//! shared by configs and the command line.

use mspline_core::{
    rice_scale, select_lambda, DesignData, FitOptions, GcvCriterion, LossSpec, ScaleMode, SearchOptions, SplineFit,
    SplineProblem,
};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Corner width of the LAD estimator relative to the Rice scale of `y`.
pub const LAD_EPS_FACTOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Estimator {
    /// Huber loss standardized by the Rice pseudo-residual scale.
    Hps,
    /// Huber loss standardized by the τ-scale of a preliminary Huber fit.
    Hpr,
    /// Smoothed absolute loss, unit scale.
    Lad,
    /// Least squares with classical GCV.
    Ls,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Hps, Estimator::Hpr, Estimator::Lad, Estimator::Ls];

    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Hps => "HPS",
            Estimator::Hpr => "HPR",
            Estimator::Lad => "LAD",
            Estimator::Ls => "LS",
        }
    }

    /// Loss, scale mode and GCV variant for data `data`.
    pub fn setup(&self, data: &DesignData) -> AppResult<(LossSpec, ScaleMode, GcvCriterion)> {
        Ok(match self {
            Estimator::Hps => (LossSpec::huber(), ScaleMode::Rice, GcvCriterion::Weighted),
            Estimator::Hpr => (LossSpec::huber(), ScaleMode::TauRefit, GcvCriterion::Weighted),
            Estimator::Lad => {
                let eps = LAD_EPS_FACTOR * rice_scale(data.y())?.value;
                (LossSpec::SmoothedAbs { eps }, ScaleMode::Fixed(1.0), GcvCriterion::Weighted)
            }
            Estimator::Ls => (LossSpec::LeastSquares, ScaleMode::Fixed(1.0), GcvCriterion::Classical),
        })
    }
}

/// How λ is chosen for each fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LambdaMode {
    /// Nelder-Mead search on the GCV criterion.
    Gcv,
    /// `λ = a · n^(-gamma)`.
    Fixed { a: f64, gamma: f64 },
}

impl LambdaMode {
    pub fn validate(&self) -> AppResult<()> {
        if let LambdaMode::Fixed { a, gamma } = self {
            if !(*a > 0.0 && a.is_finite()) || !(*gamma > 0.0 && *gamma < 1.0) {
                return Err(AppError::Usage(format!(
                    "fixed lambda schedule needs a > 0 and gamma in (0, 1), got a={a}, gamma={gamma}"
                )));
            }
        }
        Ok(())
    }
}

/// Fits `estimator` to `problem`, choosing λ according to `mode`.
pub fn fit_estimator(
    estimator: Estimator,
    problem: &SplineProblem,
    m: usize,
    mode: &LambdaMode,
    search: &SearchOptions,
) -> AppResult<SplineFit> {
    let (spec, scale_mode, criterion) = estimator.setup(problem.data())?;
    let options = FitOptions {
        scale_mode,
        m,
        ..FitOptions::default()
    };
    match mode {
        LambdaMode::Gcv => {
            let search = SearchOptions { criterion, ..*search };
            Ok(select_lambda(problem, &spec, &options, &search)?.fit)
        }
        LambdaMode::Fixed { a, gamma } => {
            let lambda = a * (problem.n() as f64).powf(-gamma);
            Ok(problem.fit(&spec, lambda, &options)?)
        }
    }
}

/// Loss as written in configs and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case")]
pub enum LossConfig {
    Ls,
    Huber {
        #[serde(default = "default_k")]
        k: f64,
    },
    /// Smoothed absolute loss; `eps` defaults to `1e-4` times the Rice
    /// scale of the responses.
    Lad { eps: Option<f64> },
    Quantile { alpha: f64, eps: Option<f64> },
    Lp { p: f64 },
}

fn default_k() -> f64 {
    mspline_core::loss::HUBER_K
}

impl LossConfig {
    /// Concrete loss for responses `y`.
    pub fn resolve(&self, y: &[f64]) -> AppResult<LossSpec> {
        let eps_or_default = |eps: Option<f64>| -> AppResult<f64> {
            match eps {
                Some(e) => Ok(e),
                None => Ok(LAD_EPS_FACTOR * rice_scale(y)?.value),
            }
        };
        let spec = match *self {
            LossConfig::Ls => LossSpec::LeastSquares,
            LossConfig::Huber { k } => LossSpec::Huber { k },
            LossConfig::Lad { eps } => LossSpec::SmoothedAbs { eps: eps_or_default(eps)? },
            LossConfig::Quantile { alpha, eps } => LossSpec::SmoothedQuantile {
                alpha,
                eps: eps_or_default(eps)?,
            },
            LossConfig::Lp { p } => LossSpec::Lp { p },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Scale as written in configs and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scale", rename_all = "kebab-case")]
pub enum ScaleConfig {
    Rice,
    TauRefit,
    Fixed { value: f64 },
}

impl ScaleConfig {
    pub fn mode(&self) -> ScaleMode {
        match *self {
            ScaleConfig::Rice => ScaleMode::Rice,
            ScaleConfig::TauRefit => ScaleMode::TauRefit,
            ScaleConfig::Fixed { value } => ScaleMode::Fixed(value),
        }
    }
}
