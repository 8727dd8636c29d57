//! Monte-Carlo comparison of the estimators over a grid of regression
//! functions and error laws.
//!
//! Every replication draws its errors from its own ChaCha stream, selected by
//! the replication index and the position of the error law in the config, so
//! results do not depend on how work is spread over threads. The same error
//! vector is shared by all functions and estimators of a replication.

use mspline_core::{DesignData, SearchOptions, SplineProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::estimator::{fit_estimator, Estimator, LambdaMode};
use crate::functions::TestFunction;
use crate::noise::{gen_errors, ErrorDist};

/// Smallest sample size accepted by the harness.
pub const MIN_N: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub functions: Vec<TestFunction>,
    pub errors: Vec<ErrorDist>,
    pub n: usize,
    pub replications: usize,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    #[serde(default = "default_lambda_mode")]
    pub lambda_mode: LambdaMode,
    #[serde(default = "default_m")]
    pub m: usize,
}

fn default_lambda_mode() -> LambdaMode {
    LambdaMode::Gcv
}

pub(crate) fn default_m() -> usize {
    2
}

impl ScenarioConfig {
    pub const REQUIRED: &'static [&'static str] =
        &["schema", "functions", "errors", "n", "replications", "estimators", "seed"];

    pub fn validate(&self) -> AppResult<()> {
        let mut problems = Vec::new();
        if self.schema != 1 {
            problems.push(format!("schema: unsupported version {}", self.schema));
        }
        if self.functions.is_empty() {
            problems.push("functions: must not be empty".to_string());
        }
        if self.errors.is_empty() {
            problems.push("errors: must not be empty".to_string());
        }
        if self.estimators.is_empty() {
            problems.push("estimators: must not be empty".to_string());
        }
        if self.n < MIN_N {
            problems.push(format!("n: must be at least {MIN_N}, got {}", self.n));
        }
        if self.replications == 0 {
            problems.push("replications: must be at least 1".to_string());
        }
        if self.m == 0 || 2 * self.m > self.n {
            problems.push(format!("m: must satisfy 1 <= 2m <= n, got {}", self.m));
        }
        if let Err(e) = self.lambda_mode.validate() {
            problems.push(format!("lambda_mode: {e}"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AppError::Usage(format!("invalid scenario config: {}", problems.join("; "))))
        }
    }

    /// Design points `t_i = i/n`.
    pub fn design(&self) -> Vec<f64> {
        (1..=self.n).map(|i| i as f64 / self.n as f64).collect()
    }
}

/// Aggregate of one (function, error law, estimator) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub function: String,
    pub error: ErrorDist,
    pub estimator: Estimator,
    /// Successful replications.
    pub replications: usize,
    pub failures: usize,
    pub mean_mse: f64,
    /// Sample standard deviation over `sqrt(replications)`.
    pub se_mse: f64,
    pub median_mse: f64,
    pub max_mse: f64,
    /// Per-replication MSEs of the successful fits, in replication order.
    #[serde(skip)]
    pub mses: Vec<f64>,
    /// First failure message, if any.
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
}

impl SimulationReport {
    pub fn cell(&self, function: &str, error: ErrorDist, estimator: Estimator) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.function == function && c.error == error && c.estimator == estimator)
    }
}

/// ChaCha stream for replication `rep` of error law number `law`.
pub fn replication_rng(seed: u64, law: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((law as u64) << 32) | rep as u64);
    rng
}

/// `n⁻¹ Σ (f̂(t_i) - f(t_i))²` from the residuals of a fit to `y = f + ε`.
fn design_mse(truth: &[f64], y: &[f64], residuals: &[f64]) -> f64 {
    let n = truth.len() as f64;
    truth
        .iter()
        .zip(y)
        .zip(residuals)
        .map(|((f, y), r)| {
            let d = y - r - f;
            d * d
        })
        .sum::<f64>()
        / n
}

/// Runs the study on the current rayon pool.
pub fn run_monte_carlo(config: &ScenarioConfig) -> AppResult<SimulationReport> {
    config.validate()?;
    let t = config.design();
    let search = SearchOptions::default();
    let tasks: Vec<(usize, usize)> = (0..config.errors.len())
        .flat_map(|law| (0..config.replications).map(move |rep| (law, rep)))
        .collect();

    // outcomes[task][function][estimator]
    let outcomes: Vec<Vec<Vec<Result<f64, String>>>> = tasks
        .par_iter()
        .map(|&(law, rep)| {
            let mut rng = replication_rng(config.seed, law, rep);
            let eps = gen_errors(config.errors[law], config.n, &mut rng);
            config
                .functions
                .iter()
                .map(|f| {
                    let truth: Vec<f64> = t.iter().map(|&x| f.value(x)).collect();
                    let y: Vec<f64> = truth.iter().zip(&eps).map(|(a, b)| a + b).collect();
                    let problem = DesignData::new(t.clone(), y.clone())
                        .and_then(|d| SplineProblem::new(d, config.m))
                        .map_err(|e| e.to_string());
                    config
                        .estimators
                        .iter()
                        .map(|&est| {
                            let problem = problem.as_ref().map_err(Clone::clone)?;
                            fit_estimator(est, problem, config.m, &config.lambda_mode, &search)
                                .map(|fit| design_mse(&truth, &y, &fit.residuals))
                                .map_err(|e| e.to_string())
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::new();
    for (fi, f) in config.functions.iter().enumerate() {
        for (law, &error) in config.errors.iter().enumerate() {
            for (ei, &estimator) in config.estimators.iter().enumerate() {
                let mut mses = Vec::with_capacity(config.replications);
                let mut failures = 0;
                let mut first_failure = None;
                for rep in 0..config.replications {
                    match &outcomes[law * config.replications + rep][fi][ei] {
                        Ok(v) if v.is_finite() => mses.push(*v),
                        Ok(v) => {
                            failures += 1;
                            first_failure.get_or_insert_with(|| format!("non-finite MSE {v}"));
                        }
                        Err(msg) => {
                            failures += 1;
                            first_failure.get_or_insert_with(|| msg.clone());
                        }
                    }
                }
                cells.push(summarize(f.name(), error, estimator, mses, failures, first_failure));
            }
        }
    }
    Ok(SimulationReport {
        n: config.n,
        replications: config.replications,
        seed: config.seed,
        cells,
    })
}

/// Runs the study on a dedicated pool of `threads` workers.
pub fn run_monte_carlo_with_threads(config: &ScenarioConfig, threads: usize) -> AppResult<SimulationReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run_monte_carlo(config))
}

fn summarize(
    function: String,
    error: ErrorDist,
    estimator: Estimator,
    mses: Vec<f64>,
    failures: usize,
    first_failure: Option<String>,
) -> CellSummary {
    let k = mses.len();
    let (mean, se) = mean_and_se(&mses);
    let mut sorted = mses.clone();
    sorted.sort_by(f64::total_cmp);
    let median = match k {
        0 => f64::NAN,
        _ if k % 2 == 1 => sorted[k / 2],
        _ => 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]),
    };
    CellSummary {
        function,
        error,
        estimator,
        replications: k,
        failures,
        mean_mse: mean,
        se_mse: se,
        median_mse: median,
        max_mse: sorted.last().copied().unwrap_or(f64::NAN),
        mses,
        first_failure,
    }
}

/// Mean and standard error (sample standard deviation over `√k`).
pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let k = v.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            schema: 1,
            functions: vec![TestFunction::F1],
            errors: vec![ErrorDist::Gaussian, ErrorDist::Slash],
            n: 30,
            replications: 3,
            estimators: vec![Estimator::Hps, Estimator::Ls],
            seed: 7,
            lambda_mode: LambdaMode::Gcv,
            m: 2,
        }
    }

    #[test]
    fn zero_replications_rejected() {
        let c = ScenarioConfig { replications: 0, ..small() };
        assert!(matches!(c.validate(), Err(AppError::Usage(_))));
        let c = ScenarioConfig { n: 5, ..small() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn report_has_one_cell_per_combination() {
        let r = run_monte_carlo(&small()).unwrap();
        assert_eq!(r.cells.len(), 4);
        for c in &r.cells {
            assert_eq!(c.replications + c.failures, 3);
            assert!(c.mean_mse >= 0.0);
        }
    }

    #[test]
    fn mean_and_se_by_hand() {
        let (m, s) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mse_from_residuals() {
        let truth = [1.0, 2.0];
        let y = [1.5, 2.0];
        let r = [0.0, 1.0];
        // fitted = y - r = (1.5, 1.0); errors (0.5, -1.0).
        assert_eq!(design_mse(&truth, &y, &r), 0.625);
    }
}
