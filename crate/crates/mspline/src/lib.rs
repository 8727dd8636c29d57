//! Data ingestion, simulation studies, rate experiments and the command-line
//! front end for M-type smoothing splines. The numerical core lives in
//! [`mspline_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod functions;
pub mod ingest;
pub mod noise;
pub mod rates;
pub mod report;
pub mod simulate;

pub use error::{AppError, AppResult};
pub use estimator::{fit_estimator, Estimator, LambdaMode, LossConfig, ScaleConfig};
pub use functions::TestFunction;
pub use noise::{gen_errors, ErrorDist};
pub use rates::{rate_study, RateConfig, RateReport};
pub use simulate::{run_monte_carlo, run_monte_carlo_with_threads, ScenarioConfig, SimulationReport};
