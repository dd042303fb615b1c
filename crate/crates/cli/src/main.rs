//! `ffmtr` — batch command-line front end for tensor recovery with the full
//! feature measure. Subcommands degrade tensors (random observation masks,
//! salt-and-pepper noise), complete partially observed tensors, split
//! tensors into low-feature and sparse parts, print measure diagnostics,
//! and score reconstructions.
//!
//! Conventions: tensors travel as FFMT files, configuration as JSON, solver
//! convergence reports as CSV plus a JSON sidecar. Machine-readable output
//! goes to files or standard output only; progress goes to standard error.
//! Every command is a pure function of its input files, flags, and seeds.
//! Exit codes: 0 success, 2 usage/configuration error, 3 data error.

mod config;

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::{BandModeSpec, BetaSpec, CliError, PeakSpec, RunConfig, SolverKind};
use ffmtr_core::ffm::{ffm_logsum, ffm_rank, n_tubal_rank, snn, tnn};
use ffmtr_core::io::{gen_mask, read_tensor, salt_pepper, write_report_csv, write_tensor};
use ffmtr_core::metrics::{ergas, psnr, ssim, BandMode, MetricConfig, PeakMode};
use ffmtr_core::solvers::{ffmtc_solve, ffmtrpca_solve, SolveReport, DEFAULT_EPS_LOG};
use ffmtr_core::ObservationMask;

#[derive(Parser)]
#[command(
    name = "ffmtr",
    version,
    about = "Tensor recovery with the full feature measure over FFMT tensor files"
)]
struct Cli {
    /// Worker threads for solver parallelism (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<NonZeroUsize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degrade a tensor with a random observation mask or salt-and-pepper noise
    Degrade(DegradeArgs),
    /// Complete a partially observed tensor (low-feature completion)
    Complete(CompleteArgs),
    /// Split a tensor into a low-feature part and a sparse part (robust PCA)
    Rpca(RpcaArgs),
    /// Print rank and log-sum diagnostics of a tensor as JSON
    Measure(MeasureArgs),
    /// Score an estimate against a reference (PSNR, SSIM, ERGAS) as JSON
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DegradeMode {
    /// Keep a random fraction of entries; zero out and record the rest
    Mask,
    /// Replace a random fraction of entries with the tensor's min/max value
    Saltpepper,
}

#[derive(Args)]
struct DegradeArgs {
    /// Input tensor (FFMT)
    #[arg(long)]
    input: PathBuf,
    /// Degradation kind
    #[arg(long, value_enum)]
    mode: DegradeMode,
    /// Fraction of entries kept, in (0, 1] (mask mode)
    #[arg(long, value_parser = parse_rate, required_if_eq("mode", "mask"), conflicts_with = "level")]
    rate: Option<f64>,
    /// Fraction of entries replaced, in [0, 1) (saltpepper mode)
    #[arg(long, value_parser = parse_level, required_if_eq("mode", "saltpepper"))]
    level: Option<f64>,
    /// Random seed; identical seeds reproduce identical output bytes
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Degraded tensor output (FFMT)
    #[arg(long)]
    output: PathBuf,
    /// Mask output as a 0/1 tensor (FFMT; mask mode)
    #[arg(long, required_if_eq("mode", "mask"), conflicts_with = "level")]
    mask_output: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    /// Observed tensor with zeros at unknown entries (FFMT)
    #[arg(long)]
    observed: PathBuf,
    /// Observation mask as a 0/1 tensor (FFMT)
    #[arg(long)]
    mask: PathBuf,
    /// Run configuration (JSON, `"solver": "ffmtc"`)
    #[arg(long)]
    config: PathBuf,
    /// Completed tensor output (FFMT)
    #[arg(long)]
    output: PathBuf,
    /// Convergence report output (CSV); a `.meta.json` sidecar is written
    /// next to it
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct RpcaArgs {
    /// Input tensor (FFMT)
    #[arg(long)]
    input: PathBuf,
    /// Run configuration (JSON, `"solver": "ffmtrpca"`)
    #[arg(long)]
    config: PathBuf,
    /// Low-feature part output (FFMT)
    #[arg(long)]
    low: PathBuf,
    /// Sparse part output (FFMT)
    #[arg(long)]
    sparse: PathBuf,
    /// Convergence report output (CSV); a `.meta.json` sidecar is written
    /// next to it
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct MeasureArgs {
    /// Input tensor (FFMT)
    #[arg(long)]
    input: PathBuf,
    /// Mode-pair weights: `uniform`, `size_normalized`, or a JSON object
    /// like `{"(1,1)": 0.5, ...}`
    #[arg(long, default_value = "uniform", value_parser = BetaSpec::parse_arg)]
    beta: BetaSpec,
    /// Log-sum offset (> 0)
    #[arg(long, default_value_t = DEFAULT_EPS_LOG, value_parser = parse_eps)]
    eps: f64,
}

#[derive(Args)]
struct MetricsArgs {
    /// Reference tensor (FFMT)
    #[arg(long)]
    reference: PathBuf,
    /// Estimated tensor (FFMT)
    #[arg(long)]
    estimate: PathBuf,
    /// Optional run configuration whose `metrics` section seeds the settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dynamic-range peak: `max-ref` or a number (e.g. 255); overrides the
    /// configuration file
    #[arg(long, value_parser = PeakSpec::parse_arg)]
    peak: Option<PeakSpec>,
    /// Whole-tensor vs per-band averaging; overrides the configuration file
    #[arg(long, value_enum)]
    band_mode: Option<BandModeSpec>,
    /// 1-based mode bands lie along for ERGAS (default: the last mode)
    #[arg(long)]
    ergas_bands: Option<usize>,
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("rate must lie in (0, 1], got {v}"))
    }
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("level must lie in [0, 1), got {v}"))
    }
}

fn parse_eps(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("eps must be finite and > 0, got {v}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.get())
            .build_global()
        {
            eprintln!("error: configuration error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Degrade(args) => cmd_degrade(args),
        Command::Complete(args) => cmd_complete(args),
        Command::Rpca(args) => cmd_rpca(args),
        Command::Measure(args) => cmd_measure(args),
        Command::Metrics(args) => cmd_metrics(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn cmd_degrade(args: DegradeArgs) -> Result<(), CliError> {
    let input = read_tensor(&args.input)?;
    match args.mode {
        DegradeMode::Mask => {
            let rate = args.rate.expect("required by clap");
            let mask_path = args.mask_output.as_ref().expect("required by clap");
            let mask = gen_mask(input.dims(), rate, args.seed)
                .map_err(|e| CliError::config(e.to_string()))?;
            let observed = input.project_mask(&mask)?;
            write_tensor(&args.output, &observed)?;
            write_tensor(mask_path, &mask.to_tensor())?;
            eprintln!(
                "degrade: kept {} of {} entries (rate {rate}, seed {}); wrote {} and {}",
                mask.known_count(),
                input.len(),
                args.seed,
                args.output.display(),
                mask_path.display()
            );
        }
        DegradeMode::Saltpepper => {
            let level = args.level.expect("required by clap");
            let noisy = salt_pepper(&input, level, args.seed)
                .map_err(|e| CliError::config(e.to_string()))?;
            write_tensor(&args.output, &noisy)?;
            eprintln!(
                "degrade: replaced {} of {} entries (level {level}, seed {}); wrote {}",
                (level * input.len() as f64).round() as usize,
                input.len(),
                args.seed,
                args.output.display()
            );
        }
    }
    Ok(())
}

/// Prints the post-run convergence trace: one line per ten iterations plus a
/// summary, all to standard error.
fn print_progress(label: &str, max_iters: usize, report: &SolveReport) {
    for (i, chg) in report.change_history.iter().enumerate() {
        let it = i + 1;
        if it % 10 == 0 {
            eprintln!("{label}: iteration {it}/{max_iters}, change {chg:.3e}");
        }
    }
    eprintln!(
        "{label}: finished after {} iterations (stopped by {}) in {:.2}s",
        report.iterations, report.terminated_by, report.wall_time_s
    );
}

/// Sidecar path for a report: the report path with its extension replaced
/// by `meta.json` (`report.csv` -> `report.meta.json`).
fn meta_path(report: &Path) -> PathBuf {
    report.with_extension("meta.json")
}

fn write_meta(report_path: &Path, meta: &serde_json::Value) -> Result<(), CliError> {
    let path = meta_path(report_path);
    let mut text = serde_json::to_string_pretty(meta).expect("report JSON is serializable");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn result_json(report: &SolveReport) -> serde_json::Value {
    json!({
        "iterations": report.iterations,
        "terminated_by": report.terminated_by.to_string(),
        "final_change": report.change_history.last(),
        "fidelity_residual": report.fidelity_residual,
        "wall_time_s": report.wall_time_s,
    })
}

fn cmd_complete(args: CompleteArgs) -> Result<(), CliError> {
    let run = RunConfig::load(&args.config)?;
    let observed = read_tensor(&args.observed)?;
    let mask = ObservationMask::from_tensor(&read_tensor(&args.mask)?);
    let cfg = run.to_tc_config(observed.dims())?;
    let (completed, report) = ffmtc_solve(&observed, &mask, &cfg)?;
    print_progress("complete", cfg.max_iters, &report);
    write_tensor(&args.output, &completed)?;
    write_report_csv(&args.report, &report)?;
    let meta = json!({
        "command": "complete",
        "solver": SolverKind::Ffmtc.to_string(),
        "inputs": {
            "observed": args.observed.display().to_string(),
            "mask": args.mask.display().to_string(),
            "dims": observed.dims(),
            "known_entries": mask.known_count(),
        },
        "config": {
            "beta": run.beta.describe(&cfg.weights),
            "mu0": cfg.mu0,
            "rho": cfg.rho,
            "eps_log": cfg.eps_log,
            "tol": cfg.tol,
            "max_iters": cfg.max_iters,
            "seed": run.seed,
        },
        "outputs": {
            "tensor": args.output.display().to_string(),
            "report": args.report.display().to_string(),
        },
        "result": result_json(&report),
    });
    write_meta(&args.report, &meta)
}

fn cmd_rpca(args: RpcaArgs) -> Result<(), CliError> {
    let run = RunConfig::load(&args.config)?;
    let input = read_tensor(&args.input)?;
    let cfg = run.to_rpca_config(input.dims())?;
    let (low, sparse, report) = ffmtrpca_solve(&input, &cfg)?;
    print_progress("rpca", cfg.max_iters, &report);
    write_tensor(&args.low, &low)?;
    write_tensor(&args.sparse, &sparse)?;
    write_report_csv(&args.report, &report)?;
    let meta = json!({
        "command": "rpca",
        "solver": SolverKind::Ffmtrpca.to_string(),
        "inputs": {
            "tensor": args.input.display().to_string(),
            "dims": input.dims(),
        },
        "config": {
            "beta": run.beta.describe(&cfg.weights),
            "mu0": cfg.mu0,
            "rho0": cfg.rho0,
            "growth": cfg.growth,
            "lambda_sparse": cfg.resolved_lambda_sparse(input.dims()),
            "eps_log": cfg.eps_log,
            "tol": cfg.tol,
            "max_iters": cfg.max_iters,
            "seed": run.seed,
        },
        "outputs": {
            "low": args.low.display().to_string(),
            "sparse": args.sparse.display().to_string(),
            "report": args.report.display().to_string(),
        },
        "result": result_json(&report),
    });
    write_meta(&args.report, &meta)
}

/// JSON number with string sentinels for infinities (JSON itself has none).
fn metric_value(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn pair_map<V: Clone + Into<serde_json::Value>>(
    entries: impl Iterator<Item = (ffmtr_core::ModePair, V)>,
) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (pair, v) in entries {
        map.insert(pair.to_string(), v.into());
    }
    serde_json::Value::Object(map)
}

fn cmd_measure(args: MeasureArgs) -> Result<(), CliError> {
    let input = read_tensor(&args.input)?;
    let weights = args.beta.resolve(input.dims())?;
    let order = input.order();
    let ranks = ffm_rank(&input, &weights, None)?;
    let logsums = ffm_logsum(&input, &weights, args.eps)?;
    let snn_value = snn(&input, &vec![1.0; order])?;

    let mut out = serde_json::Map::new();
    out.insert("dims".into(), json!(input.dims()));
    out.insert("eps_log".into(), json!(args.eps));
    out.insert("beta".into(), args.beta.describe(&weights));
    let section = |matrix: bool| {
        pair_map(
            ranks
                .per_pair
                .iter()
                .filter(move |(p, _)| p.is_matrix() == matrix)
                .map(|(&p, &rank)| {
                    let logsum = logsums.per_pair[&p];
                    (p, json!({ "rank": rank, "logsum": logsum }))
                }),
        )
    };
    out.insert("matrix_pairs".into(), section(true));
    if order >= 3 {
        out.insert("tensor_pairs".into(), section(false));
        out.insert(
            "n_tubal_rank".into(),
            pair_map(
                n_tubal_rank(&input, None)?
                    .into_iter()
                    .map(|(p, r)| (p, json!(r))),
            ),
        );
    }
    out.insert("ffm_rank_total".into(), json!(ranks.total));
    out.insert("ffm_logsum_total".into(), json!(logsums.total));
    // Unweighted sum of the nuclear norms of the mode unfoldings.
    out.insert("snn".into(), json!(snn_value));
    if order == 3 {
        out.insert("tnn".into(), json!(tnn(&input)?));
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::Value::Object(out))
            .expect("measure JSON is serializable")
    );
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), CliError> {
    let mut spec = match &args.config {
        Some(path) => RunConfig::load(path)?.metrics.unwrap_or_default(),
        None => Default::default(),
    };
    if args.peak.is_some() {
        spec.peak = args.peak;
    }
    if args.band_mode.is_some() {
        spec.band_mode = args.band_mode;
    }
    let cfg: MetricConfig = spec.to_config()?;

    let reference = read_tensor(&args.reference)?;
    let estimate = read_tensor(&args.estimate)?;
    let bands_along = args.ergas_bands.unwrap_or(reference.order());

    let out = json!({
        "psnr": metric_value(psnr(&reference, &estimate, &cfg)?),
        "ssim": metric_value(ssim(&reference, &estimate, &cfg)?),
        "ergas": metric_value(ergas(&reference, &estimate, bands_along)?),
        "config": {
            "peak": match cfg.peak {
                PeakMode::MaxOfReference => json!("max_ref"),
                PeakMode::Fixed(v) => json!(v),
            },
            "band_mode": match cfg.band_mode {
                BandMode::Global => "global",
                BandMode::PerBandMean => "per_band_mean",
            },
            "ssim_window": cfg.ssim_window,
            "ssim_sigma": cfg.ssim_sigma,
            "ssim_k1": cfg.ssim_k1,
            "ssim_k2": cfg.ssim_k2,
            "ergas_bands": bands_along,
        },
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("metrics JSON is serializable")
    );
    Ok(())
}
