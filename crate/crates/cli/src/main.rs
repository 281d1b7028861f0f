//! `snoopy`: run feasibility studies, inject label noise, extrapolate
//! convergence curves and serve the session API.
//!
//! Exit codes: 0 realistic (or success), 3 unrealistic, 1 usage,
//! 2 data, 4 internal.

mod report;

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Parser, Subcommand};
use serde::Serialize;

use snoopy_core::datamodel::{curves_to_csv_string, parse_curves_csv, write_label_file, CurveSeries};
use snoopy_core::estimator::{fit_loglinear_window, samples_to_target, ExtrapolationFit, SamplesToTarget};
use snoopy_core::noise::{inject_class_noise, inject_uniform_noise, realized_flip_fraction, TransitionMatrix};
use snoopy_core::{load_manifest, read_label_file, run_study, Strategy, StudyData, StudyError, Verdict};

use report::{describe, ReportDocument};

const MACHINE_COST_PER_HOUR: f64 = 0.9;

#[derive(Debug, Parser)]
#[command(
    name = "snoopy",
    version,
    about = "Is the target accuracy realistic for this dataset?"
)]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true, env = "SNOOPY_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a study and print the verdict.
    Run {
        manifest: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        /// Write per-arm curves as CSV.
        #[arg(long)]
        curves_out: Option<PathBuf>,
        /// Override the manifest's target accuracy.
        #[arg(long)]
        target: Option<f64>,
        /// Override the manifest's strategy (SH, SH_TANGENT, UNIFORM, PERFECT).
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<Strategy>,
        /// Include wall time and machine cost in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Inject label noise into a label file.
    #[command(group(ArgGroup::new("model").required(true).args(["rho", "transition"])))]
    Noise {
        labels: PathBuf,
        /// Uniform noise level in [0, 1].
        #[arg(long)]
        rho: Option<f64>,
        /// Class-dependent transition matrix as JSON {"C": n, "t": [[...]]}.
        #[arg(long)]
        transition: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a power law to a convergence curve and project the samples needed.
    Extrapolate {
        curves: PathBuf,
        #[arg(long)]
        target: f64,
        #[arg(long)]
        classes: u32,
        /// Samples seen so far; defaults to the curve's last point.
        #[arg(long)]
        n_current: Option<u64>,
        /// Arm to fit; defaults to the arm with the lowest final estimate.
        #[arg(long)]
        arm: Option<String>,
        #[arg(long, default_value_t = snoopy_core::estimator::DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = snoopy_core::estimator::DEFAULT_TRUST_FACTOR)]
        trust_factor: f64,
        #[arg(long)]
        json: bool,
    },
    /// Check a manifest and the shapes of every referenced file.
    Validate { manifest: PathBuf },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value_t = snoopy_service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "SNOOPY_DATA_DIR", default_value = "snoopy-data")]
        data_dir: PathBuf,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_uppercase()))
        .map_err(|_| format!("unknown strategy {s:?}; use SH, SH_TANGENT, UNIFORM or PERFECT"))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<snoopy_core::DataError> for CliError {
    fn from(e: snoopy_core::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Data(d) => CliError::Data(d.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("thread cap not applied: {e}");
        }
    }
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run {
            manifest,
            json,
            curves_out,
            target,
            strategy,
            timing,
        } => cmd_run(&manifest, json, curves_out.as_deref(), target, strategy, timing),
        Command::Noise {
            labels,
            rho,
            transition,
            seed,
            out,
        } => cmd_noise(&labels, rho, transition.as_deref(), seed, &out),
        Command::Extrapolate {
            curves,
            target,
            classes,
            n_current,
            arm,
            window,
            trust_factor,
            json,
        } => cmd_extrapolate(
            &curves,
            target,
            classes,
            n_current,
            arm.as_deref(),
            window,
            trust_factor,
            json,
        ),
        Command::Validate { manifest } => cmd_validate(&manifest),
        Command::Serve { port, host, data_dir } => {
            snoopy_service::serve_blocking(SocketAddr::new(host, port), data_dir, cli.threads)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            Ok(0)
        }
    }
}

fn cmd_run(
    manifest_path: &Path,
    json: bool,
    curves_out: Option<&Path>,
    target: Option<f64>,
    strategy: Option<Strategy>,
    timing: bool,
) -> Result<u8, CliError> {
    let mut manifest = load_manifest(manifest_path)?;
    if let Some(t) = target {
        manifest.target_accuracy = t;
    }
    if let Some(s) = strategy {
        manifest.strategy = s;
    }
    manifest.validate_values()?;
    let data = StudyData::load(&manifest)?;
    let started = Instant::now();
    let outcome = run_study(&data)?;
    let seconds = started.elapsed().as_secs_f64();
    let timing = timing.then_some((seconds, seconds / 3600.0 * MACHINE_COST_PER_HOUR));
    let report = ReportDocument::new(&outcome, manifest.strategy, timing);

    if let Some(path) = curves_out {
        let series: Vec<CurveSeries> = outcome
            .arms
            .iter()
            .map(|s| CurveSeries {
                arm: s.transformation_id().to_string(),
                points: s.curve().to_vec(),
            })
            .collect();
        std::fs::write(path, curves_to_csv_string(&series))
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    }
    if json {
        println!("{}", to_json(&report)?);
    } else {
        print!("{}", report.render());
    }
    Ok(match report.verdict {
        Verdict::Realistic => 0,
        Verdict::Unrealistic => 3,
    })
}

fn cmd_noise(
    labels: &Path,
    rho: Option<f64>,
    transition: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<u8, CliError> {
    let clean = read_label_file(labels)?;
    let noisy = match (rho, transition) {
        (Some(rho), None) => inject_uniform_noise(&clean, rho, seed).map_err(|e| CliError::Usage(e.to_string()))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
            let t = TransitionMatrix::from_json_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            inject_class_noise(&clean, &t, seed).map_err(|e| CliError::Data(e.to_string()))?
        }
        _ => return Err(CliError::Usage("give exactly one of --rho or --transition".into())),
    };
    write_label_file(out, &noisy)?;
    println!(
        "realized flip fraction {:.6}",
        realized_flip_fraction(clean.labels(), noisy.labels())
    );
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ExtrapolationOutput {
    arm: String,
    n_current: u64,
    fit: ExtrapolationFit,
    #[serde(flatten)]
    samples: SamplesToTarget,
}

#[allow(clippy::too_many_arguments)]
fn cmd_extrapolate(
    path: &Path,
    target: f64,
    classes: u32,
    n_current: Option<u64>,
    arm: Option<&str>,
    window: usize,
    trust_factor: f64,
    json: bool,
) -> Result<u8, CliError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(CliError::Usage(format!("--target {target} is outside (0, 1]")));
    }
    if !(trust_factor > 0.0) {
        return Err(CliError::Usage(format!(
            "--trust-factor {trust_factor} must be positive"
        )));
    }
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let series = parse_curves_csv(&text)?;
    let chosen = match arm {
        Some(id) => series
            .iter()
            .find(|s| s.arm == id)
            .ok_or_else(|| CliError::Data(format!("arm {id:?} not in {}", path.display())))?,
        None => series
            .iter()
            .min_by(|a, b| {
                let last = |s: &CurveSeries| s.points.last().map_or(f64::INFINITY, |p| p.ber_estimate);
                last(a).total_cmp(&last(b)).then_with(|| a.arm.cmp(&b.arm))
            })
            .ok_or_else(|| CliError::Data(format!("{} has no curve points", path.display())))?,
    };
    let n_current = n_current.unwrap_or_else(|| chosen.points.last().map_or(0, |p| p.n_consumed as u64));
    let degenerate = |e: snoopy_core::estimator::EstimatorError| CliError::Data(format!("arm {}: {e}", chosen.arm));
    let fit = fit_loglinear_window(&chosen.points, window).map_err(degenerate)?;
    let samples = samples_to_target(&fit, target, classes, n_current, trust_factor).map_err(degenerate)?;
    if json {
        let out = ExtrapolationOutput {
            arm: chosen.arm.clone(),
            n_current,
            fit,
            samples,
        };
        println!("{}", to_json(&out)?);
    } else {
        println!("arm {} at n = {n_current}", chosen.arm);
        println!("alpha {:.6}", fit.alpha);
        println!("C_fit {:.6}", fit.intercept);
        println!("{}", describe(&samples));
    }
    Ok(0)
}

fn cmd_validate(path: &Path) -> Result<u8, CliError> {
    let manifest = load_manifest(path)?;
    let (n_train, n_test, classes) = manifest.validate_files()?;
    println!(
        "ok: {} transformation(s), {n_train} train, {n_test} test, {classes} classes",
        manifest.transformations.len()
    );
    Ok(0)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))
}
