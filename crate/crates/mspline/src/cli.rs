//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mspline_core::{
    select_lambda, FitOptions, GcvCriterion, GcvResult, LossSpec, ScaleMethod, SearchOptions, SplineFit, SplineProblem,
};
use serde_json::json;

use crate::config::{load_config, sha256_hex};
use crate::error::{AppError, AppResult};
use crate::estimator::{LossConfig, ScaleConfig};
use crate::ingest::{ingest_bytes, ColumnRef, DatasetSpec, Ingested};
use crate::rates::{rate_study, RateConfig};
use crate::report::{csv_text, write_file, write_json, write_rates, write_simulation, Provenance};
use crate::simulate::{run_monte_carlo, run_monte_carlo_with_threads, ScenarioConfig};

/// Upper ends of the weight buckets `(0, 0.33]`, `(0.33, 0.66]`, `(0.66, 1]`.
pub const WEIGHT_BUCKETS: [f64; 3] = [0.33, 0.66, 1.0];

#[derive(Debug, Parser)]
#[command(name = "mspline", version, about = "Robust smoothing splines with convex losses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a spline to a dataset and export the curve, residuals and weights.
    Fit(FitArgs),
    /// Choose λ by GCV and report the search.
    Select(SelectArgs),
    /// Run a Monte-Carlo study described by a JSON config.
    Simulate(StudyArgs),
    /// Run a convergence-rate study described by a JSON config.
    Rates(StudyArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Delimited text file with the observations.
    #[arg(long)]
    pub data: PathBuf,
    /// x column: header name or zero-based index.
    #[arg(long, default_value = "0")]
    pub x: String,
    /// y column: header name or zero-based index.
    #[arg(long, default_value = "1")]
    pub y: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long = "decimal", default_value_t = '.')]
    pub decimal_mark: char,
    /// Value marking a missing observation (for example -200).
    #[arg(long, allow_hyphen_values = true)]
    pub missing: Option<f64>,
    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    Ls,
    Huber,
    Lad,
    Quantile,
    Lp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Rice,
    TauRefit,
    Fixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GcvArg {
    Weighted,
    Classical,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "huber")]
    pub loss: LossArg,
    /// Huber threshold.
    #[arg(long, default_value_t = mspline_core::loss::HUBER_K)]
    pub k: f64,
    /// Corner width of the smoothed absolute and check losses
    /// (default: 1e-4 times the Rice scale of y).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Quantile level of the check loss.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Exponent of the Lp loss.
    #[arg(long)]
    pub p: Option<f64>,
    /// Residual scale (default: rice for huber and lp, fixed 1 otherwise).
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    #[arg(long, default_value_t = 1.0)]
    pub scale_value: f64,
    /// Penalty order.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Use at most this many knots.
    #[arg(long)]
    pub max_knots: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// GCV variant (default: classical for ls, weighted otherwise).
    #[arg(long, value_enum)]
    pub gcv: Option<GcvArg>,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub log10_lambda_init: f64,
    #[arg(long, default_value_t = 1.0)]
    pub init_step: f64,
    #[arg(long, default_value_t = 60)]
    pub max_evals: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub xtol: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// `auto` for GCV selection or a positive number.
    #[arg(long, default_value = "auto")]
    pub lambda: String,
    /// Number of equispaced output grid points.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Highest derivative order written to fit.csv.
    #[arg(long, default_value_t = 0)]
    pub derivatives: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Directory for selection.json and gcv_trace.csv; stdout only if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl DataArgs {
    fn spec(&self) -> DatasetSpec {
        DatasetSpec {
            path: self.data.clone(),
            x_column: ColumnRef::parse(&self.x),
            y_column: ColumnRef::parse(&self.y),
            delimiter: self.delimiter,
            decimal_mark: self.decimal_mark,
            missing_sentinel: self.missing,
            header: !self.no_header,
        }
    }
}

impl ModelArgs {
    fn loss_config(&self) -> AppResult<LossConfig> {
        let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| AppError::Usage(format!("--loss needs --{flag}")));
        Ok(match self.loss {
            LossArg::Ls => LossConfig::Ls,
            LossArg::Huber => LossConfig::Huber { k: self.k },
            LossArg::Lad => LossConfig::Lad { eps: self.eps },
            LossArg::Quantile => LossConfig::Quantile {
                alpha: need(self.alpha, "alpha")?,
                eps: self.eps,
            },
            LossArg::Lp => LossConfig::Lp { p: need(self.p, "p")? },
        })
    }

    fn scale_config(&self) -> ScaleConfig {
        let default = match self.loss {
            LossArg::Huber | LossArg::Lp => ScaleArg::Rice,
            _ => ScaleArg::Fixed,
        };
        match self.scale.unwrap_or(default) {
            ScaleArg::Rice => ScaleConfig::Rice,
            ScaleArg::TauRefit => ScaleConfig::TauRefit,
            ScaleArg::Fixed => ScaleConfig::Fixed { value: self.scale_value },
        }
    }

    fn options(&self) -> FitOptions {
        FitOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            scale_mode: self.scale_config().mode(),
            m: self.m,
            max_knots: self.max_knots,
        }
    }
}

impl SearchArgs {
    fn options(&self, spec: &LossSpec) -> SearchOptions {
        let criterion = match self.gcv {
            Some(GcvArg::Weighted) => GcvCriterion::Weighted,
            Some(GcvArg::Classical) => GcvCriterion::Classical,
            None if *spec == LossSpec::LeastSquares => GcvCriterion::Classical,
            None => GcvCriterion::Weighted,
        };
        SearchOptions {
            log10_lambda_init: self.log10_lambda_init,
            init_step: self.init_step,
            max_evals: self.max_evals,
            xtol: self.xtol,
            criterion,
            ..SearchOptions::default()
        }
    }
}

/// Parses `args` and runs the command.
pub fn run_from<I, T>(args: I) -> AppResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| AppError::Usage(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Select(a) => cmd_select(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Rates(a) => cmd_rates(&a),
    }
}

struct Prepared {
    ingested: Ingested,
    input_sha256: String,
    spec: LossSpec,
    options: FitOptions,
    problem: SplineProblem,
}

fn prepare(data: &DataArgs, model: &ModelArgs) -> AppResult<Prepared> {
    let dspec = data.spec();
    dspec.validate()?;
    let bytes = std::fs::read(&dspec.path).map_err(|e| AppError::io(&dspec.path, e))?;
    let ingested = ingest_bytes(&dspec, &bytes)?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    let spec = model.loss_config()?.resolve(ingested.data.y())?;
    let options = model.options();
    options.validate()?;
    let problem = SplineProblem::with_max_knots(ingested.data.clone(), options.m, options.max_knots)?;
    Ok(Prepared {
        ingested,
        input_sha256: sha256_hex(&bytes),
        spec,
        options,
        problem,
    })
}

fn loss_json(spec: &LossSpec) -> serde_json::Value {
    match *spec {
        LossSpec::LeastSquares => json!({ "loss": "ls" }),
        LossSpec::Huber { k } => json!({ "loss": "huber", "k": k }),
        LossSpec::SmoothedAbs { eps } => json!({ "loss": "lad", "eps": eps }),
        LossSpec::SmoothedQuantile { alpha, eps } => json!({ "loss": "quantile", "alpha": alpha, "eps": eps }),
        LossSpec::Lp { p } => json!({ "loss": "lp", "p": p }),
    }
}

fn scale_method_name(m: ScaleMethod) -> &'static str {
    match m {
        ScaleMethod::RicePseudo => "rice",
        ScaleMethod::TauResidual => "tau-refit",
        ScaleMethod::Mad => "mad",
        ScaleMethod::Fixed => "fixed",
    }
}

fn gcv_json(res: &GcvResult, criterion: GcvCriterion) -> serde_json::Value {
    json!({
        "criterion": match criterion { GcvCriterion::Weighted => "weighted", GcvCriterion::Classical => "classical" },
        "lambda_opt": res.lambda_opt,
        "score_opt": res.score_opt,
        "evaluations": res.evaluations,
        "converged": res.converged,
        "trace": res.trace.iter().map(|e| json!({
            "lambda": e.lambda,
            "score": if e.score.is_finite() { json!(e.score) } else { json!(null) },
            "edf": if e.edf.is_finite() { json!(e.edf) } else { json!(null) },
        })).collect::<Vec<_>>(),
    })
}

fn trace_csv(res: &GcvResult) -> String {
    let rows: Vec<Vec<String>> = res
        .trace
        .iter()
        .enumerate()
        .map(|(i, e)| vec![(i + 1).to_string(), e.lambda.to_string(), e.score.to_string(), e.edf.to_string()])
        .collect();
    csv_text(&["evaluation", "lambda", "score", "edf"], &rows)
}

fn weight_bucket(w: f64) -> usize {
    WEIGHT_BUCKETS.iter().position(|&b| w <= b).map_or(3, |i| i + 1)
}

fn ensure_dir(dir: &Path) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn cmd_fit(a: &FitArgs) -> AppResult<()> {
    if a.grid < 2 {
        return Err(AppError::Usage("--grid needs at least 2 points".into()));
    }
    if a.derivatives >= 2 * a.model.m {
        return Err(AppError::Usage(format!(
            "--derivatives must be below 2m = {}",
            2 * a.model.m
        )));
    }
    let p = prepare(&a.data, &a.model)?;
    let (fit, gcv): (SplineFit, Option<serde_json::Value>) = if a.lambda == "auto" {
        let search = a.search.options(&p.spec);
        let res = select_lambda(&p.problem, &p.spec, &p.options, &search)?;
        let g = gcv_json(&res, search.criterion);
        (res.fit, Some(g))
    } else {
        let lambda: f64 = a
            .lambda
            .parse()
            .ok()
            .filter(|l: &f64| *l > 0.0 && l.is_finite())
            .ok_or_else(|| AppError::Usage(format!("--lambda must be 'auto' or a positive number, got '{}'", a.lambda)))?;
        (p.problem.fit(&p.spec, lambda, &p.options)?, None)
    };

    ensure_dir(&a.out)?;
    let map = p.ingested.map;
    let grid: Vec<f64> = (0..a.grid).map(|i| i as f64 / (a.grid - 1) as f64).collect();
    let mut columns = Vec::with_capacity(a.derivatives + 1);
    for j in 0..=a.derivatives {
        let factor = map.slope().powi(j as i32);
        columns.push(fit.predict(&grid, j)?.into_iter().map(|v| v * factor).collect::<Vec<f64>>());
    }
    let mut header = vec!["x".to_string(), "t".to_string(), "f".to_string()];
    header.extend((1..=a.derivatives).map(|j| format!("d{j}")));
    let rows: Vec<Vec<String>> = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut r = vec![map.from_unit(t).to_string(), t.to_string()];
            r.extend(columns.iter().map(|c| c[i].to_string()));
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_file(&a.out.join("fit.csv"), csv_text(&header_refs, &rows).as_bytes())?;

    let data = &p.ingested.data;
    let rows: Vec<Vec<String>> = (0..data.len())
        .map(|i| {
            let y = data.y()[i];
            let r = fit.residuals[i];
            let w = fit.weights[i];
            vec![
                p.ingested.x[i].to_string(),
                y.to_string(),
                (y - r).to_string(),
                r.to_string(),
                w.to_string(),
                weight_bucket(w).to_string(),
            ]
        })
        .collect();
    write_file(
        &a.out.join("residuals.csv"),
        csv_text(&["x", "y", "fitted", "residual", "weight", "weight_bucket"], &rows).as_bytes(),
    )?;

    let summary = json!({
        "schema": 1,
        "tool": format!("mspline {}", env!("CARGO_PKG_VERSION")),
        "input": {
            "path": a.data.data.display().to_string(),
            "sha256": p.input_sha256,
            "rows_read": p.ingested.rows_read,
            "rows_missing": p.ingested.rows_missing,
            "duplicate_groups": p.ingested.duplicate_groups,
            "points": data.len(),
        },
        "warnings": p.ingested.warnings,
        "x_map": { "x_min": map.x_min, "x_max": map.x_max },
        "loss": loss_json(&p.spec),
        "m": p.options.m,
        "lambda": fit.lambda,
        "lambda_mode": if gcv.is_some() { "auto" } else { "fixed" },
        "edf": fit.edf,
        "sigma": fit.sigma,
        "scale": scale_method_name(fit.scale_method),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "objective": fit.objective(),
        "gcv": gcv,
        "breaks": fit.basis.breaks(),
        "coefficients": fit.coef,
    });
    write_json(&a.out.join("summary.json"), &summary)?;
    if !fit.converged {
        eprintln!("warning: IRLS stopped after {} iterations without converging", fit.iterations);
    }
    Ok(())
}

fn cmd_select(a: &SelectArgs) -> AppResult<()> {
    let p = prepare(&a.data, &a.model)?;
    let search = a.search.options(&p.spec);
    let res = select_lambda(&p.problem, &p.spec, &p.options, &search)?;
    let mut out = gcv_json(&res, search.criterion);
    out["edf"] = json!(res.fit.edf);
    out["sigma"] = json!(res.fit.sigma);
    out["loss"] = loss_json(&p.spec);
    println!("{}", serde_json::to_string_pretty(&out).expect("JSON values serialize"));
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        write_json(&dir.join("selection.json"), &out)?;
        write_file(&dir.join("gcv_trace.csv"), trace_csv(&res).as_bytes())?;
    }
    Ok(())
}

fn cmd_simulate(a: &StudyArgs) -> AppResult<()> {
    let loaded = load_config::<ScenarioConfig>(&a.config, ScenarioConfig::REQUIRED)?;
    let report = match a.threads {
        Some(t) => run_monte_carlo_with_threads(&loaded.config, t)?,
        None => run_monte_carlo(&loaded.config)?,
    };
    let prov = Provenance::new("simulate", &loaded.sha256, loaded.config.seed);
    write_simulation(&report, &a.out, &prov)?;
    print!("{}", crate::report::simulation_table(&report, &prov));
    Ok(())
}

fn cmd_rates(a: &StudyArgs) -> AppResult<()> {
    let loaded = load_config::<RateConfig>(&a.config, RateConfig::REQUIRED)?;
    let report = match a.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| AppError::Usage(format!("cannot start {t} worker threads: {e}")))?
            .install(|| rate_study(&loaded.config))?,
        None => rate_study(&loaded.config)?,
    };
    let prov = Provenance::new("rates", &loaded.sha256, loaded.config.seed);
    let orders = &loaded.config.derivative_orders;
    write_rates(&report, orders, &a.out, &prov)?;
    print!("{}", crate::report::rates_table(&report, orders, &prov));
    Ok(())
}
