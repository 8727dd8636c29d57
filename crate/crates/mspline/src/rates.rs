//! Empirical convergence rates at a fixed λ-schedule `λ = A·n^(-γ)`.
//!
//! The constant `A` is calibrated once: GCV is run on a few samples at the
//! smallest `n`, and `A = median(λ_gcv) · n₀^γ`. Errors are integrated over
//! `[0, 1]` by Gauss-Legendre, and slopes are OLS fits of
//! `log(median error)` on `log n`.

use mspline_core::quadrature::gauss_legendre_on;
use mspline_core::{
    select_lambda, DesignData, FitOptions, GcvCriterion, LossSpec, SearchOptions, SplineFit, SplineProblem,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::estimator::{LossConfig, ScaleConfig};
use crate::functions::TestFunction;
use crate::noise::{gen_errors, ErrorDist};
use crate::simulate::default_m;

/// Stream offset that keeps calibration draws apart from the main study.
const CALIBRATION_STREAM: u64 = 1 << 48;
/// Widest quadrature panel used for error integrals.
const MAX_PANEL: f64 = 1.0 / 256.0;
const GAUSS_NODES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub schema: u32,
    pub function: TestFunction,
    #[serde(flatten)]
    pub loss: LossConfig,
    #[serde(default = "default_scale")]
    pub scale: ScaleConfig,
    pub error: ErrorDist,
    /// Multiplier applied to the error draws.
    #[serde(default = "one")]
    pub noise_scale: f64,
    #[serde(default = "default_m")]
    pub m: usize,
    pub n_grid: Vec<usize>,
    /// Exponent of the λ-schedule; defaults to `2m/(2m+1)`.
    pub gamma: Option<f64>,
    /// Constant of the λ-schedule; calibrated by GCV when absent.
    pub a: Option<f64>,
    #[serde(default = "default_calibration_reps")]
    pub calibration_reps: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_orders")]
    pub derivative_orders: Vec<usize>,
}

fn default_scale() -> ScaleConfig {
    ScaleConfig::Fixed { value: 1.0 }
}

fn one() -> f64 {
    1.0
}

fn default_calibration_reps() -> usize {
    10
}

fn default_orders() -> Vec<usize> {
    vec![1]
}

impl RateConfig {
    pub const REQUIRED: &'static [&'static str] =
        &["schema", "function", "loss", "error", "n_grid", "replications", "seed"];

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| {
            let m = self.m as f64;
            2.0 * m / (2.0 * m + 1.0)
        })
    }

    pub fn validate(&self) -> AppResult<()> {
        let mut problems = Vec::new();
        if self.schema != 1 {
            problems.push(format!("schema: unsupported version {}", self.schema));
        }
        if self.n_grid.len() < 4 {
            problems.push("n_grid: needs at least 4 sample sizes".to_string());
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            problems.push("n_grid: must be strictly increasing".to_string());
        }
        if self.n_grid.first().is_some_and(|&n| n < 2 * self.m.max(1) + 2) {
            problems.push("n_grid: smallest n is too small for the penalty order".to_string());
        }
        let g = self.gamma();
        if !(g > 0.0 && g < 1.0) {
            problems.push(format!("gamma: must lie in (0, 1), got {g}"));
        }
        if self.a.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
            problems.push("a: must be positive".to_string());
        }
        if self.a.is_none() && self.calibration_reps == 0 {
            problems.push("calibration_reps: must be at least 1 when a is not given".to_string());
        }
        if self.replications == 0 {
            problems.push("replications: must be at least 1".to_string());
        }
        if self.m == 0 {
            problems.push("m: must be at least 1".to_string());
        }
        if let Some(&j) = self.derivative_orders.iter().find(|&&j| j == 0 || j >= self.m) {
            problems.push(format!("derivative_orders: {j} is outside 1..m-1 (= 1..{})", self.m.saturating_sub(1)));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            problems.push("noise_scale: must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AppError::Usage(format!("invalid rate config: {}", problems.join("; "))))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub lambda: f64,
    pub replications: usize,
    pub failures: usize,
    /// Median over replications of `‖f̂ - f‖₂²`.
    pub median_l2: f64,
    /// Median of `‖f̂ - f‖₂² + λ‖f̂⁽ᵐ⁾ - f⁽ᵐ⁾‖₂²`.
    pub median_m_lambda: f64,
    /// Median of `‖f̂⁽ʲ⁾ - f⁽ʲ⁾‖₂²` for each requested order, in config order.
    pub median_derivative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// `l2`, `m_lambda` or `d<j>`.
    pub norm: String,
    pub slope: f64,
    pub se: f64,
    /// Exponent predicted by the asymptotic theory.
    pub theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub a: f64,
    pub gamma: f64,
    pub calibration_lambdas: Vec<f64>,
    pub rows: Vec<RateRow>,
    pub slopes: Vec<SlopeEstimate>,
}

impl RateReport {
    pub fn slope(&self, norm: &str) -> Option<&SlopeEstimate> {
        self.slopes.iter().find(|s| s.norm == norm)
    }
}

/// OLS slope of `y` on `x` and its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    let se = if x.len() > 2 {
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, se)
}

impl RateConfig {
    /// Sample of size `n` from ChaCha stream `stream`, with the loss resolved
    /// against its responses.
    fn problem(&self, n: usize, stream: u64) -> AppResult<(SplineProblem, LossSpec)> {
        let t: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let eps = gen_errors(self.error, n, &mut rng);
        let y: Vec<f64> = t
            .iter()
            .zip(&eps)
            .map(|(&x, e)| self.function.value(x) + self.noise_scale * e)
            .collect();
        let spec = self.loss.resolve(&y)?;
        let problem = SplineProblem::new(DesignData::new(t, y)?, self.m)?;
        Ok((problem, spec))
    }

    fn options(&self) -> FitOptions {
        FitOptions {
            scale_mode: self.scale.mode(),
            m: self.m,
            ..FitOptions::default()
        }
    }
}

/// Squared `L²` distances between derivatives of the fit and of the truth.
/// Returns `[j = 0, j = m, requested orders...]`.
fn error_norms(fit: &SplineFit, truth: &TestFunction, m: usize, orders: &[usize]) -> AppResult<Vec<f64>> {
    let basis = &fit.basis;
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for w in basis.breaks().windows(2) {
        let pieces = ((w[1] - w[0]) / MAX_PANEL).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / pieces as f64;
        for p in 0..pieces {
            let a = w[0] + p as f64 * h;
            let (x, wt) = gauss_legendre_on(GAUSS_NODES, a, if p + 1 == pieces { w[1] } else { a + h });
            xs.extend(x);
            ws.extend(wt);
        }
    }
    let mut out = Vec::with_capacity(orders.len() + 2);
    for &j in [0, m].iter().chain(orders) {
        let est = basis.derivative_matrix(&xs, j)?.mul_vec(&fit.coef);
        let mut acc = 0.0;
        for ((x, w), e) in xs.iter().zip(&ws).zip(&est) {
            let d = e - truth.derivative(*x, j)?;
            acc += w * d * d;
        }
        out.push(acc);
    }
    Ok(out)
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Runs the rate study on the current rayon pool.
pub fn rate_study(config: &RateConfig) -> AppResult<RateReport> {
    config.validate()?;
    // Truth derivatives must exist for every order we measure.
    for &j in [0, config.m].iter().chain(&config.derivative_orders) {
        config.function.derivative(0.5, j)?;
    }
    let gamma = config.gamma();
    let n0 = config.n_grid[0];

    let calibration_lambdas: Vec<f64> = match config.a {
        Some(_) => Vec::new(),
        None => (0..config.calibration_reps)
            .into_par_iter()
            .map(|r| -> AppResult<f64> {
                let (problem, spec) = config.problem(n0, CALIBRATION_STREAM + r as u64)?;
                let criterion = if spec == LossSpec::LeastSquares {
                    GcvCriterion::Classical
                } else {
                    GcvCriterion::Weighted
                };
                let search = SearchOptions {
                    criterion,
                    ..SearchOptions::default()
                };
                Ok(select_lambda(&problem, &spec, &config.options(), &search)?.lambda_opt)
            })
            .collect::<AppResult<Vec<f64>>>()?,
    };
    let a = match config.a {
        Some(a) => a,
        None => median(&mut calibration_lambdas.clone()) * (n0 as f64).powf(gamma),
    };

    let tasks: Vec<(usize, usize)> = (0..config.n_grid.len())
        .flat_map(|k| (0..config.replications).map(move |r| (k, r)))
        .collect();
    let results: Vec<AppResult<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(k, r)| {
            let n = config.n_grid[k];
            let lambda = a * (n as f64).powf(-gamma);
            let (problem, spec) = config.problem(n, ((k as u64) << 32) | r as u64)?;
            let fit = problem.fit(&spec, lambda, &config.options())?;
            error_norms(&fit, &config.function, config.m, &config.derivative_orders)
        })
        .collect();

    let mut rows = Vec::with_capacity(config.n_grid.len());
    for (k, &n) in config.n_grid.iter().enumerate() {
        let lambda = a * (n as f64).powf(-gamma);
        let ok: Vec<&Vec<f64>> = results[k * config.replications..(k + 1) * config.replications]
            .iter()
            .filter_map(|r| r.as_ref().ok())
            .collect();
        let failures = config.replications - ok.len();
        let column = |i: usize| median(&mut ok.iter().map(|v| v[i]).collect::<Vec<f64>>());
        let median_l2 = column(0);
        let median_m_lambda = {
            let mut v: Vec<f64> = ok.iter().map(|v| v[0] + lambda * v[1]).collect();
            median(&mut v)
        };
        let median_derivative = (0..config.derivative_orders.len()).map(|i| column(i + 2)).collect();
        rows.push(RateRow {
            n,
            lambda,
            replications: ok.len(),
            failures,
            median_l2,
            median_m_lambda,
            median_derivative,
        });
    }
    if rows.iter().any(|r| r.replications == 0) {
        let first = results.iter().find_map(|r| r.as_ref().err()).map(|e| e.to_string());
        return Err(AppError::Numerical(format!(
            "every replication failed at some sample size: {}",
            first.unwrap_or_default()
        )));
    }

    let logn: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let m = config.m as f64;
    let denom = 2.0 * m + 1.0;
    let mut slopes = Vec::new();
    let mut push = |norm: String, vals: Vec<f64>, theory: f64| {
        let logs: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        let (slope, se) = ols_slope(&logn, &logs);
        slopes.push(SlopeEstimate { norm, slope, se, theory });
    };
    push("l2".into(), rows.iter().map(|r| r.median_l2).collect(), -2.0 * m / denom);
    push("m_lambda".into(), rows.iter().map(|r| r.median_m_lambda).collect(), -2.0 * m / denom);
    for (i, &j) in config.derivative_orders.iter().enumerate() {
        push(
            format!("d{j}"),
            rows.iter().map(|r| r.median_derivative[i]).collect(),
            -2.0 * (m - j as f64) / denom,
        );
    }
    Ok(RateReport {
        a,
        gamma,
        calibration_lambdas,
        rows,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_on_five_points_by_hand() {
        // y = 3 - 0.8 x exactly, then one point nudged.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.2, 1.4, 0.6, -0.2, -1.0];
        let (s, se) = ols_slope(&x, &y);
        assert!((s + 0.8).abs() < 1e-12);
        assert!(se.abs() < 1e-12);
        let y2 = [2.2, 1.4, 0.7, -0.2, -1.0];
        // x̄ = 3, Sxx = 10, Sxy changes by (3-3)·0.1 = 0, so the slope is unchanged.
        let (s2, se2) = ols_slope(&x, &y2);
        assert!((s2 + 0.8).abs() < 1e-12);
        // Residuals: intercept rises by 0.02; rss = 4·0.02² + 0.08² = 0.008, se = sqrt(0.008/3/10).
        assert!((se2 - (0.008f64 / 30.0).sqrt()).abs() < 1e-12);
    }
}
