// `!(end > start)` also rejects NaN grid bounds.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Command-line front end: constant tables, figure data, experiment
//! runners, and rate evaluators, with JSON or CSV output.
//!
//! Exit codes: 0 success (all configured gates passed), 1 configuration or
//! domain error, 2 statistical gate failure.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

type CliError = Box<dyn std::error::Error + Send + Sync>;

use lpball::closed_forms::{
    asymptotic_mean, asymptotic_variance, limit_radius, BodyMode, PNorm,
};
use lpball::limits::{
    clt_experiment, covariance_experiment, default_grid_resolution, hausdorff_experiment,
    mdp_covariance_matrix, mdp_rate_quadratic, stiefel_rate_gaussian, Centering, ExperimentConfig,
    GaussianMeasure, HausdorffConfig, MdpRateInput,
};
use lpball::sampling::SeedSpec;

mod manifest;
use manifest::RunManifest;

/// Default master seed when none is given; a fixed constant, never the
/// wall clock, so unseeded runs are still reproducible.
const DEFAULT_SEED: u64 = 271_828_182_845;

#[derive(Parser)]
#[command(name = "lpball", version, about = "Random projections and sections of l_p balls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Master seed (defaults to a fixed constant).
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    seed: u64,
    /// Worker thread bound; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Print mu, sigma^2 and the limit radius for one (mode, p, m).
    Constants {
        #[arg(long)]
        mode: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        m: u32,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Asymptotic-variance curves over a parameter grid, one row per
    /// (parameter, m) pair.
    FigureData {
        #[arg(long)]
        mode: String,
        /// Comma-separated list of subspace dimensions.
        #[arg(long, value_delimiter = ',')]
        m_list: Vec<u32>,
        /// Parameter grid start:end:count (q for projections, p for sections).
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Rate-function evaluators.
    #[command(subcommand)]
    Rate(RateCommand),
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Standardized volume fluctuations against the normal limit.
    Clt {
        #[arg(long)]
        mode: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        replicates: usize,
        #[arg(long)]
        grid_resolution: Option<usize>,
        #[arg(long, default_value = "asymptotic")]
        centering: String,
        /// Write the standardized samples as CSV to this path.
        #[arg(long)]
        dump_samples: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        gate_mean: f64,
        #[arg(long, default_value_t = 0.1)]
        gate_variance: f64,
        #[arg(long, default_value_t = 0.1)]
        gate_skewness: f64,
        #[arg(long, default_value_t = 0.01)]
        gate_ks_p: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Median Hausdorff distance to the limiting ball over an N ladder.
    Hausdorff {
        #[arg(long)]
        mode: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        m: u32,
        #[arg(long, value_delimiter = ',')]
        n_ladder: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        replicates: usize,
        #[arg(long)]
        grid_resolution: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Empirical process covariance at a direction pair vs the closed form.
    Covariance {
        #[arg(long)]
        q: f64,
        /// Direction u as comma-separated coordinates.
        #[arg(long)]
        u: String,
        /// Direction v as comma-separated coordinates.
        #[arg(long)]
        v: String,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long)]
        replicates: usize,
        #[arg(long, default_value = "exact_finite_n")]
        centering: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Subcommand)]
enum RateCommand {
    /// Entropy rate of a mean-zero Gaussian measure.
    Stiefel {
        #[arg(long)]
        m: usize,
        /// Isotropic standard deviation sigma (covariance sigma^2 Id).
        #[arg(long)]
        sigma: Option<f64>,
        /// Full covariance matrix, rows separated by ';'.
        #[arg(long)]
        covariance: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Quadratic moderate-deviation rate at a perturbation.
    Mdp {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        m: usize,
        /// Evaluation points, rows separated by ';'.
        #[arg(long)]
        points: String,
        /// Function values at the points (defaults to zeros).
        #[arg(long)]
        f_values: Option<String>,
        /// Symmetric perturbation matrix, rows separated by ';' (defaults to zero).
        #[arg(long)]
        z2: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests exit 0; real parse errors exit 1
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Constants { mode, p, m, common } => cmd_constants(&mode, &p, m, &common),
        Command::FigureData { mode, m_list, grid, common } => {
            cmd_figure_data(&mode, &m_list, &grid, &common)
        }
        Command::Simulate(sim) => with_thread_pool(sim_common(&sim).threads, || cmd_simulate(sim)),
        Command::Rate(rate) => cmd_rate(rate),
    }
}

fn sim_common(sim: &SimulateCommand) -> CommonArgs {
    match sim {
        SimulateCommand::Clt { common, .. } => common.clone(),
        SimulateCommand::Hausdorff { common, .. } => common.clone(),
        SimulateCommand::Covariance { common, .. } => common.clone(),
    }
}

fn with_thread_pool<T>(
    threads: usize,
    run: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError>
where
    T: Send,
{
    if threads == 0 {
        run()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        pool.install(run)
    }
}

/// Round to 15 significant digits so printed constants carry a fixed,
/// reproducible precision.
fn sig15(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn parse_mode(s: &str) -> Result<BodyMode, CliError> {
    Ok(s.parse::<BodyMode>()?)
}

fn parse_p(s: &str) -> Result<PNorm, CliError> {
    Ok(s.parse::<PNorm>()?)
}

fn parse_centering(s: &str) -> Result<Centering, CliError> {
    match s {
        "asymptotic" => Ok(Centering::Asymptotic),
        "exact_finite_n" | "exact" => Ok(Centering::ExactFiniteN),
        other => Err(format!("unknown centering {other:?} (use asymptotic | exact_finite_n)").into()),
    }
}

fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}").into()))
        .collect()
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>, CliError> {
    s.split(';').map(parse_vector).collect()
}

fn parse_grid_spec(s: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid spec must be start:end:count, got {s:?}").into());
    }
    let start: f64 = parts[0].parse()?;
    let end: f64 = parts[1].parse()?;
    let count: usize = parts[2].parse()?;
    if count < 2 || !(end > start) {
        return Err(format!("grid spec needs end > start and count >= 2, got {s:?}").into());
    }
    Ok((start, end, count))
}

/// Emit payload and manifest in the requested format. JSON gets the
/// manifest embedded; CSV keeps stdout pure data and sends the manifest to
/// stderr.
fn emit(format: Format, payload: &Value, csv: &str, manifest: RunManifest) {
    match format {
        Format::Json => {
            let mut wrapped = payload.clone();
            wrapped["manifest"] = serde_json::to_value(&manifest).expect("manifest serializes");
            println!("{}", serde_json::to_string_pretty(&wrapped).expect("payload serializes"));
        }
        Format::Csv => {
            print!("{csv}");
            eprintln!("{}", serde_json::to_string(&manifest).expect("manifest serializes"));
        }
    }
}

fn cmd_constants(
    mode_s: &str,
    p_s: &str,
    m: u32,
    common: &CommonArgs,
) -> Result<i32, CliError> {
    let start = std::time::Instant::now();
    let mode = parse_mode(mode_s)?;
    let p = parse_p(p_s)?;
    let mu = sig15(asymptotic_mean(mode, p, m)?);
    let sigma_sq = sig15(asymptotic_variance(mode, p, m)?);
    let radius = sig15(limit_radius(mode, p)?);
    let csv = format!("mu,sigma_sq,radius\n{mu},{sigma_sq},{radius}\n");
    let payload = json!({
        "mode": mode,
        "p": p,
        "m": m,
        "mu": mu,
        "sigma_sq": sigma_sq,
        "radius": radius,
    });
    let manifest = RunManifest::new(
        "constants",
        json!({"mode": mode_s, "p": p_s, "m": m}),
        common.seed,
        start.elapsed().as_secs_f64(),
        csv.as_bytes(),
    );
    emit(common.format, &payload, &csv, manifest);
    Ok(0)
}

fn cmd_figure_data(
    mode_s: &str,
    m_list: &[u32],
    grid_s: &str,
    common: &CommonArgs,
) -> Result<i32, CliError> {
    let start = std::time::Instant::now();
    let mode = parse_mode(mode_s)?;
    let (lo, hi, count) = parse_grid_spec(grid_s)?;
    if m_list.is_empty() {
        return Err("m-list must not be empty".into());
    }
    let mut rows: Vec<(f64, u32, f64)> = Vec::with_capacity(m_list.len() * count);
    for &m in m_list {
        for i in 0..count {
            // division last so that rational grid points (like q = 2) are hit exactly
            let param = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            // the grid parameter is q for projections and p for sections
            let p = match mode {
                BodyMode::Projection => PNorm::new(param)?.conjugate(),
                BodyMode::Section => PNorm::new(param)?,
            };
            let sigma_sq = sig15(asymptotic_variance(mode, p, m)?);
            rows.push((param, m, sigma_sq));
        }
    }
    let mut csv = String::from("param,m,sigma_sq\n");
    for (param, m, sigma_sq) in &rows {
        csv.push_str(&format!("{param},{m},{sigma_sq}\n"));
    }
    let payload = json!({
        "mode": mode,
        "rows": rows.iter().map(|(param, m, s)| json!({"param": param, "m": m, "sigma_sq": s})).collect::<Vec<_>>(),
    });
    let manifest = RunManifest::new(
        "figure-data",
        json!({"mode": mode_s, "m_list": m_list, "grid": grid_s}),
        common.seed,
        start.elapsed().as_secs_f64(),
        csv.as_bytes(),
    );
    emit(common.format, &payload, &csv, manifest);
    Ok(0)
}

#[derive(Serialize)]
struct Gate {
    name: String,
    value: f64,
    threshold: f64,
    pass: bool,
}

fn gate(name: &str, value: f64, threshold: f64) -> Gate {
    Gate { name: name.to_string(), value, threshold, pass: value <= threshold }
}

fn cmd_simulate(sim: SimulateCommand) -> Result<i32, CliError> {
    match sim {
        SimulateCommand::Clt {
            mode,
            p,
            m,
            n,
            replicates,
            grid_resolution,
            centering,
            dump_samples,
            gate_mean,
            gate_variance,
            gate_skewness,
            gate_ks_p,
            common,
        } => {
            let start = std::time::Instant::now();
            let config = ExperimentConfig {
                mode: parse_mode(&mode)?,
                p: parse_p(&p)?,
                m,
                n,
                replicates,
                grid_resolution: grid_resolution.unwrap_or_else(|| default_grid_resolution(m)),
                seed: SeedSpec::new(common.seed, 0),
                centering: parse_centering(&centering)?,
            };
            let run = clt_experiment(&config)?;
            let mut gates = vec![
                gate("abs_mean", run.report.sample_mean.abs(), gate_mean),
                gate("abs_variance_minus_one", (run.report.sample_variance - 1.0).abs(), gate_variance),
                gate("abs_skewness", run.report.sample_skewness.abs(), gate_skewness),
            ];
            if let Some(p_value) = run.report.ks_p_value {
                gates.push(Gate {
                    name: "ks_p_value".into(),
                    value: p_value,
                    threshold: gate_ks_p,
                    pass: p_value > gate_ks_p,
                });
            }
            let samples_csv = samples_to_csv(&run.samples);
            if let Some(path) = &dump_samples {
                std::fs::write(path, &samples_csv)?;
            }
            let all_pass = gates.iter().all(|g| g.pass);
            let payload = json!({
                "report": run.report,
                "gates": gates,
            });
            let csv = report_csv(&payload["report"]);
            let manifest = RunManifest::new(
                "simulate clt",
                json!({
                    "mode": mode, "p": p, "m": m, "n": n, "replicates": replicates,
                    "grid_resolution": config.grid_resolution, "centering": centering,
                }),
                common.seed,
                start.elapsed().as_secs_f64(),
                samples_csv.as_bytes(),
            );
            emit(common.format, &payload, &csv, manifest);
            Ok(if all_pass { 0 } else { 2 })
        }
        SimulateCommand::Hausdorff {
            mode,
            p,
            m,
            n_ladder,
            replicates,
            grid_resolution,
            common,
        } => {
            let start = std::time::Instant::now();
            let config = HausdorffConfig {
                mode: parse_mode(&mode)?,
                p: parse_p(&p)?,
                m,
                n_ladder,
                replicates,
                grid_resolution: grid_resolution.unwrap_or_else(|| default_grid_resolution(m)),
                seed: SeedSpec::new(common.seed, 0),
            };
            let rows = hausdorff_experiment(&config)?;
            let mut csv = String::from("n,median_distance\n");
            for row in &rows {
                csv.push_str(&format!("{},{}\n", row.n, row.median_distance));
            }
            let gates = hausdorff_gates(&config, &rows);
            let all_pass = gates.iter().all(|g| g.pass);
            let payload = json!({"rows": rows, "gates": gates});
            let manifest = RunManifest::new(
                "simulate hausdorff",
                json!({
                    "mode": mode, "p": p, "m": m, "n_ladder": config.n_ladder,
                    "replicates": replicates, "grid_resolution": config.grid_resolution,
                }),
                common.seed,
                start.elapsed().as_secs_f64(),
                csv.as_bytes(),
            );
            emit(common.format, &payload, &csv, manifest);
            Ok(if all_pass { 0 } else { 2 })
        }
        SimulateCommand::Covariance { q, u, v, n, replicates, centering, common } => {
            let start = std::time::Instant::now();
            let u = parse_vector(&u)?;
            let v = parse_vector(&v)?;
            let check = covariance_experiment(
                q,
                &u,
                &v,
                n,
                replicates,
                SeedSpec::new(common.seed, 0),
                parse_centering(&centering)?,
            )?;
            let csv = format!(
                "empirical,analytic,standard_error,within_four_se\n{},{},{},{}\n",
                check.empirical, check.analytic, check.standard_error, check.within_four_se
            );
            let pass = check.within_four_se;
            let payload = serde_json::to_value(&check)?;
            let manifest = RunManifest::new(
                "simulate covariance",
                json!({"q": q, "u": u, "v": v, "n": n, "replicates": replicates, "centering": centering}),
                common.seed,
                start.elapsed().as_secs_f64(),
                csv.as_bytes(),
            );
            emit(common.format, &payload, &csv, manifest);
            Ok(if pass { 0 } else { 2 })
        }
    }
}

fn samples_to_csv(samples: &[f64]) -> String {
    let mut out = String::with_capacity(samples.len() * 20 + 8);
    out.push_str("sample\n");
    for s in samples {
        out.push_str(&format!("{s}\n"));
    }
    out
}

fn report_csv(report: &Value) -> String {
    let mut csv = String::from("metric,value\n");
    for key in ["sample_mean", "sample_variance", "sample_skewness", "ks_statistic", "ks_p_value"] {
        let v = &report[key];
        if !v.is_null() {
            csv.push_str(&format!("{key},{v}\n"));
        }
    }
    if let Some(quantiles) = report["quantiles"].as_array() {
        for q in quantiles {
            let pair = q.as_array().expect("quantile pair");
            csv.push_str(&format!("quantile_{},{}\n", pair[0], pair[1]));
        }
    }
    csv
}

/// Gates for the Hausdorff ladder: at p = 2 every median must vanish to
/// 1e-8; otherwise medians strictly decrease and every 16x dimension jump
/// shrinks the distance by a factor in [2, 8] (the square-root fluctuation
/// scale, with slack 2).
fn hausdorff_gates(config: &HausdorffConfig, rows: &[lpball::limits::HausdorffRow]) -> Vec<Gate> {
    let mut gates = Vec::new();
    if config.p.is_two() {
        for row in rows {
            gates.push(gate(&format!("control_median_n{}", row.n), row.median_distance, 1e-8));
        }
        return gates;
    }
    for w in rows.windows(2) {
        gates.push(Gate {
            name: format!("decreasing_n{}_to_n{}", w[0].n, w[1].n),
            value: w[1].median_distance,
            threshold: w[0].median_distance,
            pass: w[1].median_distance < w[0].median_distance,
        });
    }
    for a in rows {
        for b in rows {
            if b.n == 16 * a.n {
                let ratio = a.median_distance / b.median_distance;
                gates.push(Gate {
                    name: format!("ratio_n{}_over_n{}", a.n, b.n),
                    value: ratio,
                    threshold: 8.0,
                    pass: (2.0..=8.0).contains(&ratio),
                });
            }
        }
    }
    gates
}

fn cmd_rate(rate: RateCommand) -> Result<i32, CliError> {
    match rate {
        RateCommand::Stiefel { m, sigma, covariance, common } => {
            let start = std::time::Instant::now();
            let measure = match (sigma, covariance) {
                (Some(s), None) => GaussianMeasure::isotropic(m, s * s)?,
                (None, Some(entries)) => {
                    let rows = parse_matrix(&entries)?;
                    let flat: Vec<f64> = rows.into_iter().flatten().collect();
                    GaussianMeasure::new(m, flat)?
                }
                _ => return Err("give exactly one of --sigma or --covariance".into()),
            };
            let value = stiefel_rate_gaussian(&measure)?;
            let feasible = value.is_finite();
            let rate_json: Value = if feasible { json!(value) } else { json!("+inf") };
            let payload = json!({"rate": rate_json, "feasible": feasible, "m": m});
            let csv = format!("rate,feasible\n{},{}\n", if feasible { value.to_string() } else { "+inf".into() }, feasible);
            let manifest = RunManifest::new(
                "rate stiefel",
                json!({"m": m, "sigma": sigma}),
                common.seed,
                start.elapsed().as_secs_f64(),
                csv.as_bytes(),
            );
            emit(common.format, &payload, &csv, manifest);
            Ok(0)
        }
        RateCommand::Mdp { q, m, points, f_values, z2, common } => {
            let start = std::time::Instant::now();
            let points = parse_matrix(&points)?;
            let k = points.len();
            let f_values = match f_values {
                Some(s) => parse_vector(&s)?,
                None => vec![0.0; k],
            };
            let z2 = match z2 {
                Some(s) => parse_matrix(&s)?.into_iter().flatten().collect(),
                None => vec![0.0; m * m],
            };
            let input = MdpRateInput::new(q, points, f_values, z2, m)?;
            let cov = mdp_covariance_matrix(input.q, &input.points, input.m)?;
            let rate = mdp_rate_quadratic(&cov, &input.uhat())?;
            let payload = json!({
                "rate": rate.value,
                "condition_number": rate.condition_number,
                "dimension": cov.dim,
            });
            let csv = format!("rate,condition_number\n{},{}\n", rate.value, rate.condition_number);
            let manifest = RunManifest::new(
                "rate mdp",
                json!({"q": q, "m": m, "k": k}),
                common.seed,
                start.elapsed().as_secs_f64(),
                csv.as_bytes(),
            );
            emit(common.format, &payload, &csv, manifest);
            Ok(0)
        }
    }
}
