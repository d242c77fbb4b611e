//! Batch experiment runner behind the `tmsv-phase` binary.
//!
//! Every subcommand writes one CSV table plus a JSON sidecar holding the
//! fully resolved parameters (seed and crate version included). Feeding the
//! sidecar back through `--config` reproduces the table byte for byte.
//!
//! Parameters come from flags, an optional JSON config file and built-in
//! defaults, in that order of precedence. The thread count also falls back
//! to the `TMSV_PHASE_THREADS` environment variable before its default.

mod table;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    run_ensemble, scaling_study, scan_bias, scan_intensity, ClassifyThresholds, EnsembleConfig,
    Estimator, ScanSettings, DEFAULT_ENSEMBLE_SIZE, DEFAULT_SCALING_LENGTHS,
};
use crate::fock_oracle::even_probability_via_fock;
use crate::inference::{LikelihoodTable, PhaseGrid, DEFAULT_GRID_RESOLUTION};
use crate::model::{Phase, TmsvSource};
use crate::simulate::{check_true_phase, parity_trace, MeasurementRecord, RecordConfig};

pub use table::{format_float, Cell, Table, SIGNIFICANT_DIGITS};

pub const THREADS_ENV: &str = "TMSV_PHASE_THREADS";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SCAN_STEP: f64 = 0.02;
pub const DEFAULT_INTENSITIES: [f64; 6] = [1.0, 2.0, 3.0, 5.0, 7.0, 10.0];
pub const ORACLE_INTENSITIES: [f64; 5] = [0.5, 1.0, 3.0, 7.0, 10.0];
/// Largest closed-form vs photon-count discrepancy `oracle-check` accepts.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input detected before any computation; exit status 2.
    #[error("{0}")]
    Validation(String),
    /// Failure while computing or writing results; exit status 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn invalid(msg: impl fmt::Display) -> CliError {
    CliError::Validation(msg.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Parity signal and even-outcome probability over a phase range.
    ParityCurve,
    /// Running parity over one simulated record.
    Trace,
    /// Posterior density for a given even count.
    Posterior,
    /// Estimate statistics for one ensemble of records.
    Ensemble,
    /// Bias over a grid of phases and record lengths.
    BiasScan,
    /// Standard deviation over a grid of phases and record lengths.
    StddevScan,
    /// c/sqrt(M) fit and unbiased/biased verdict at one phase.
    ScalingFit,
    /// Fitted c against the baselines over mean photon numbers.
    IntensityScan,
    /// Photon-count oracle against the closed-form even probability.
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ParityCurve => "parity-curve",
            Command::Trace => "trace",
            Command::Posterior => "posterior",
            Command::Ensemble => "ensemble",
            Command::BiasScan => "bias-scan",
            Command::StddevScan => "stddev-scan",
            Command::ScalingFit => "scaling-fit",
            Command::IntensityScan => "intensity-scan",
            Command::OracleCheck => "oracle-check",
        }
    }

    /// Config keys the command reads, beyond those every command accepts.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::ParityCurve => &["nbar", "theta_min", "theta_max", "steps"],
            Command::Trace => &["theta", "nbar", "M"],
            Command::Posterior => &["nbar", "M", "even_count", "grid"],
            Command::Ensemble => &["theta", "nbar", "M", "N", "grid", "estimator"],
            Command::BiasScan | Command::StddevScan => &[
                "nbar",
                "theta_min",
                "theta_max",
                "theta_step",
                "lengths",
                "N",
                "grid",
                "estimator",
            ],
            Command::ScalingFit => &[
                "theta",
                "nbar",
                "lengths",
                "N",
                "grid",
                "estimator",
                "min_r_squared",
                "ratio_min",
                "ratio_max",
            ],
            Command::IntensityScan => &[
                "theta",
                "nbars",
                "lengths",
                "N",
                "grid",
                "estimator",
                "min_r_squared",
                "ratio_min",
                "ratio_max",
            ],
            Command::OracleCheck => &[
                "nbar",
                "nbars",
                "epsilon",
                "theta_min",
                "theta_max",
                "theta_step",
            ],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Worker thread count: a positive number or `auto` (one per core).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ThreadsRepr", into = "ThreadsRepr")]
pub enum Threads {
    Auto,
    Count(NonZeroUsize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThreadsRepr {
    Count(usize),
    Text(String),
}

impl TryFrom<ThreadsRepr> for Threads {
    type Error = String;

    fn try_from(repr: ThreadsRepr) -> Result<Self, String> {
        match repr {
            ThreadsRepr::Count(n) => NonZeroUsize::new(n)
                .map(Threads::Count)
                .ok_or_else(|| "threads must be positive".to_string()),
            ThreadsRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Threads> for ThreadsRepr {
    fn from(t: Threads) -> Self {
        match t {
            Threads::Auto => ThreadsRepr::Text("auto".into()),
            Threads::Count(n) => ThreadsRepr::Count(n.get()),
        }
    }
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        s.parse::<NonZeroUsize>()
            .map(Threads::Count)
            .map_err(|_| format!("threads must be a positive integer or \"auto\", got {s:?}"))
    }
}

/// Every tunable parameter. All optional here; [`resolve`] fills defaults
/// and checks what each command requires. Also the config-file and sidecar
/// schema; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Subcommand recorded in a sidecar; must match the command line if both are given.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Crate version that wrote a sidecar. Informational.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,

    /// True phase in radians, within [0, pi/2].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Mean photon number of the source.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    /// Record length (parity measurements per record).
    #[arg(long = "M")]
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub record_length: Option<u64>,
    /// Ensemble size (records per ensemble).
    #[arg(long = "N")]
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<u64>,
    /// Master seed.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads, or "auto".
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<Threads>,
    /// CSV output path; the sidecar is written next to it with ".json" appended.
    #[arg(long, short)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_min: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    /// Phase spacing for scans.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_step: Option<f64>,
    /// Number of intervals for parity-curve (steps + 1 rows).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Twin-Fock truncation mass for oracle-check.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Even outcomes in the record for posterior.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub even_count: Option<u64>,
    /// Phase grid resolution.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Point estimator: map or posterior-mean.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
    /// Record lengths for scans and fits, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<u64>>,
    /// Mean photon numbers, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbars: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_r_squared: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_min: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_max: Option<f64>,
}

impl Params {
    /// Field-wise `self.or(fallback)`.
    pub fn or(self, fallback: Params) -> Params {
        Params {
            command: self.command.or(fallback.command),
            version: self.version.or(fallback.version),
            theta: self.theta.or(fallback.theta),
            nbar: self.nbar.or(fallback.nbar),
            record_length: self.record_length.or(fallback.record_length),
            ensemble_size: self.ensemble_size.or(fallback.ensemble_size),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
            output: self.output.or(fallback.output),
            theta_min: self.theta_min.or(fallback.theta_min),
            theta_max: self.theta_max.or(fallback.theta_max),
            theta_step: self.theta_step.or(fallback.theta_step),
            steps: self.steps.or(fallback.steps),
            epsilon: self.epsilon.or(fallback.epsilon),
            even_count: self.even_count.or(fallback.even_count),
            grid: self.grid.or(fallback.grid),
            estimator: self.estimator.or(fallback.estimator),
            lengths: self.lengths.or(fallback.lengths),
            nbars: self.nbars.or(fallback.nbars),
            min_r_squared: self.min_r_squared.or(fallback.min_r_squared),
            ratio_min: self.ratio_min.or(fallback.ratio_min),
            ratio_max: self.ratio_max.or(fallback.ratio_max),
        }
    }

    fn present_keys(&self) -> BTreeSet<String> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
            _ => BTreeSet::new(),
        }
    }
}

/// Command line of the `tmsv-phase` binary.
#[derive(Debug, Parser)]
#[command(
    name = "tmsv-phase",
    version,
    about = "Parity-detection phase estimation experiments"
)]
pub struct Cli {
    /// Experiment to run; may be omitted when the config file names one.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON config file (for example a sidecar from an earlier run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: Params,
}

/// A validated run: every parameter the command needs is present and in range.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    /// Resolved parameters, as echoed to the sidecar.
    pub params: Params,
    pub output_path: PathBuf,
    pub master_seed: u64,
    pub threads: Threads,
}

impl RunSpec {
    pub fn sidecar_path(&self) -> PathBuf {
        sidecar_path(&self.output_path)
    }
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Reads a JSON object of [`Params`]. Syntax and schema errors carry the
/// line and column reported by the parser.
pub fn load_config(path: &Path) -> Result<Params, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("malformed JSON in {}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(invalid(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    }
    serde_json::from_str(&text)
        .map_err(|e| invalid(format!("invalid config {}: {e}", path.display())))
}

fn env_threads() -> Result<Option<Threads>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|e| invalid(format!("{THREADS_ENV}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn require<T>(value: Option<T>, key: &str, command: Command) -> Result<T, CliError> {
    value.ok_or_else(|| invalid(format!("{command} requires --{key}")))
}

fn source(nbar: f64) -> Result<TmsvSource, CliError> {
    TmsvSource::new(nbar).map_err(invalid)
}

fn true_phase(theta: f64) -> Result<Phase, CliError> {
    check_true_phase(Phase::from(theta)).map_err(invalid)
}

/// Merges flags over the config file, fills defaults and validates.
pub fn resolve(
    command: Option<Command>,
    flags: Params,
    file: Option<Params>,
) -> Result<RunSpec, CliError> {
    let file = file.unwrap_or_default();
    let command = match (command, file.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(invalid(format!(
                "command line says {a} but config says {b}"
            )))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(invalid("no subcommand given")),
    };
    let merged = flags.or(file);

    let common = ["command", "version", "seed", "threads", "output"];
    let allowed: BTreeSet<&str> = common.iter().chain(command.keys()).copied().collect();
    let unused: Vec<String> = merged
        .present_keys()
        .into_iter()
        .filter(|k| !allowed.contains(k.as_str()))
        .collect();
    if !unused.is_empty() {
        return Err(invalid(format!(
            "{command} does not take: {}",
            unused.join(", ")
        )));
    }

    let master_seed = merged.seed.unwrap_or(DEFAULT_SEED);
    let threads = match merged.threads {
        Some(t) => t,
        None => env_threads()?.unwrap_or(Threads::Auto),
    };
    let output_path = merged
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{command}.csv")));

    let mut p = Params {
        command: Some(command),
        version: Some(env!("CARGO_PKG_VERSION").to_string()),
        seed: Some(master_seed),
        threads: Some(threads),
        output: Some(output_path.clone()),
        ..Params::default()
    };

    let uses = |k: &str| command.keys().contains(&k);
    if uses("theta") {
        let theta = require(merged.theta, "theta", command)?;
        true_phase(theta)?;
        p.theta = Some(theta);
    }
    if uses("nbar") && command != Command::OracleCheck {
        let nbar = require(merged.nbar, "nbar", command)?;
        source(nbar)?;
        p.nbar = Some(nbar);
    }
    if uses("M") {
        let m = require(merged.record_length, "M", command)?;
        if m == 0 {
            return Err(invalid("--M must be at least 1"));
        }
        p.record_length = Some(m);
    }
    if uses("N") {
        let n = merged.ensemble_size.unwrap_or(DEFAULT_ENSEMBLE_SIZE);
        if n < 2 {
            return Err(invalid("--N must be at least 2"));
        }
        p.ensemble_size = Some(n);
    }
    if uses("grid") {
        let g = merged.grid.unwrap_or(DEFAULT_GRID_RESOLUTION);
        PhaseGrid::new(g).map_err(invalid)?;
        p.grid = Some(g);
    }
    if uses("estimator") {
        p.estimator = Some(merged.estimator.unwrap_or_default());
    }
    if uses("lengths") {
        let lengths = merged
            .lengths
            .clone()
            .unwrap_or_else(|| DEFAULT_SCALING_LENGTHS.to_vec());
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(invalid(
                "--lengths must be a non-empty list of positive integers",
            ));
        }
        p.lengths = Some(lengths);
    }
    if uses("min_r_squared") {
        let d = ClassifyThresholds::default();
        p.min_r_squared = Some(merged.min_r_squared.unwrap_or(d.min_r_squared));
        p.ratio_min = Some(merged.ratio_min.unwrap_or(d.ratio_min));
        p.ratio_max = Some(merged.ratio_max.unwrap_or(d.ratio_max));
    }

    match command {
        Command::ParityCurve => {
            p.theta_min = Some(merged.theta_min.unwrap_or(0.0));
            p.theta_max = Some(merged.theta_max.unwrap_or(std::f64::consts::FRAC_PI_2));
            let steps = merged.steps.unwrap_or(100);
            if steps == 0 {
                return Err(invalid("--steps must be at least 1"));
            }
            p.steps = Some(steps);
            check_range(p.theta_min, p.theta_max)?;
        }
        Command::Posterior => {
            let m = require(merged.even_count, "even-count", command)?;
            MeasurementRecord::new(m, p.record_length.unwrap_or(0)).map_err(invalid)?;
            p.even_count = Some(m);
        }
        Command::BiasScan | Command::StddevScan => {
            p.theta_min = Some(merged.theta_min.unwrap_or(0.0));
            p.theta_max = Some(merged.theta_max.unwrap_or(std::f64::consts::FRAC_PI_2));
            p.theta_step = Some(merged.theta_step.unwrap_or(DEFAULT_SCAN_STEP));
            check_range(p.theta_min, p.theta_max)?;
            for t in phase_range(&p)? {
                true_phase(t)?;
            }
        }
        Command::IntensityScan => {
            let nbars = merged
                .nbars
                .clone()
                .unwrap_or_else(|| DEFAULT_INTENSITIES.to_vec());
            if nbars.is_empty() {
                return Err(invalid("--nbars must not be empty"));
            }
            nbars.iter().try_for_each(|&n| source(n).map(drop))?;
            p.nbars = Some(nbars);
        }
        Command::OracleCheck => {
            let eps = merged.epsilon.unwrap_or(1e-8);
            if !(eps > 0.0 && eps <= 1e-3) {
                return Err(invalid(format!("--epsilon {eps} outside (0, 1e-3]")));
            }
            p.epsilon = Some(eps);
            let nbars = match (merged.nbar, merged.nbars.clone()) {
                (Some(_), Some(_)) => return Err(invalid("give --nbar or --nbars, not both")),
                (Some(n), None) => {
                    p.nbar = Some(n);
                    vec![n]
                }
                (None, list) => {
                    let list = list.unwrap_or_else(|| ORACLE_INTENSITIES.to_vec());
                    p.nbars = Some(list.clone());
                    list
                }
            };
            nbars.iter().try_for_each(|&n| source(n).map(drop))?;
            p.theta_min = Some(merged.theta_min.unwrap_or(0.0));
            p.theta_max = Some(merged.theta_max.unwrap_or(1.5));
            p.theta_step = Some(merged.theta_step.unwrap_or(0.05));
            check_range(p.theta_min, p.theta_max)?;
            phase_range(&p)?;
        }
        Command::Trace | Command::Ensemble | Command::ScalingFit => {}
    }

    Ok(RunSpec {
        command,
        params: p,
        output_path,
        master_seed,
        threads,
    })
}

fn check_range(lo: Option<f64>, hi: Option<f64>) -> Result<(), CliError> {
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo.is_finite() && hi.is_finite() && lo <= hi => Ok(()),
        _ => Err(invalid("--theta-min must not exceed --theta-max")),
    }
}

/// `theta_min, theta_min + step, …` up to `theta_max` (inclusive within 1e-9).
fn phase_range(p: &Params) -> Result<Vec<f64>, CliError> {
    let (lo, hi) = (p.theta_min.unwrap_or(0.0), p.theta_max.unwrap_or(0.0));
    let step = p.theta_step.unwrap_or(DEFAULT_SCAN_STEP);
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid("--theta-step must be positive"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as u64 + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

/// Outcome of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub csv_path: PathBuf,
    pub sidecar_path: PathBuf,
    pub rows: usize,
    /// One-line human summary.
    pub summary: String,
}

/// Executes a validated spec: computes the table, writes the CSV and the
/// sidecar.
pub fn run(spec: &RunSpec) -> Result<RunReport, CliError> {
    let file = File::create(&spec.output_path)
        .map_err(|e| invalid(format!("cannot write {}: {e}", spec.output_path.display())))?;
    let sidecar = spec.sidecar_path();
    let sidecar_file = File::create(&sidecar)
        .map_err(|e| invalid(format!("cannot write {}: {e}", sidecar.display())))?;

    let threads = match spec.threads {
        Threads::Auto => 0,
        Threads::Count(n) => n.get(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker threads: {e}")))?;
    let outcome = pool.install(|| compute(spec));

    // Write what was computed even when a check failed, so it can be inspected.
    let (table, summary, check) = outcome?;
    table
        .write_file(file)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", spec.output_path.display())))?;
    serde_json::to_writer_pretty(sidecar_file, &spec.params)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", sidecar.display())))?;
    check?;
    Ok(RunReport {
        csv_path: spec.output_path.clone(),
        sidecar_path: sidecar,
        rows: table.rows().len(),
        summary,
    })
}

type Computed = (Table, String, Result<(), CliError>);

fn runtime(e: crate::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn settings(spec: &RunSpec, master_seed: u64) -> Result<ScanSettings, CliError> {
    let p = &spec.params;
    Ok(ScanSettings {
        ensemble_size: p.ensemble_size.unwrap_or(DEFAULT_ENSEMBLE_SIZE),
        master_seed,
        grid: PhaseGrid::new(p.grid.unwrap_or(DEFAULT_GRID_RESOLUTION)).map_err(runtime)?,
        estimator: p.estimator.unwrap_or_default(),
    })
}

fn thresholds(p: &Params) -> ClassifyThresholds {
    let d = ClassifyThresholds::default();
    ClassifyThresholds {
        min_r_squared: p.min_r_squared.unwrap_or(d.min_r_squared),
        ratio_min: p.ratio_min.unwrap_or(d.ratio_min),
        ratio_max: p.ratio_max.unwrap_or(d.ratio_max),
    }
}

fn compute(spec: &RunSpec) -> Result<Computed, CliError> {
    let p = &spec.params;
    let seed = spec.master_seed;
    let ok = Ok(());
    match spec.command {
        Command::ParityCurve => {
            let s = source(p.nbar.unwrap_or_default())?;
            let (lo, hi) = (p.theta_min.unwrap_or(0.0), p.theta_max.unwrap_or(0.0));
            let steps = p.steps.unwrap_or(1);
            let mut t = Table::new(&["theta", "nbar", "parity", "p_even"]);
            for k in 0..=steps {
                let theta = lo + (hi - lo) * k as f64 / steps as f64;
                t.push(vec![
                    theta.into(),
                    s.mean_photons().into(),
                    s.parity_expectation(theta).into(),
                    s.even_probability(theta).into(),
                ]);
            }
            let summary = format!("{} phases", steps + 1);
            Ok((t, summary, ok))
        }
        Command::Trace => {
            let s = source(p.nbar.unwrap_or_default())?;
            let cfg = RecordConfig::new(
                p.theta.unwrap_or_default(),
                s,
                p.record_length.unwrap_or(1),
                seed,
            )
            .map_err(runtime)?;
            let trace = parity_trace(&cfg);
            let mut t = Table::new(&["k", "running_parity"]);
            for (k, v) in trace.iter() {
                t.push(vec![k.into(), v.into()]);
            }
            let summary = format!(
                "final parity {} (expected {})",
                format_float(trace.last().unwrap_or(f64::NAN)),
                format_float(s.parity_expectation(cfg.theta_true()))
            );
            Ok((t, summary, ok))
        }
        Command::Posterior => {
            let s = source(p.nbar.unwrap_or_default())?;
            let grid =
                PhaseGrid::new(p.grid.unwrap_or(DEFAULT_GRID_RESOLUTION)).map_err(runtime)?;
            let record = MeasurementRecord::new(
                p.even_count.unwrap_or_default(),
                p.record_length.unwrap_or(1),
            )
            .map_err(runtime)?;
            let post = LikelihoodTable::new(s, grid).posterior(&record);
            let mut t = Table::new(&["phi", "density"]);
            for (phi, d) in post.iter() {
                t.push(vec![phi.into(), d.into()]);
            }
            let (lo, hi) = post.credible_interval(0.68).map_err(runtime)?;
            let summary = format!(
                "MAP {} with 68% interval [{}, {}]",
                format_float(post.map_estimate().value().radians()),
                format_float(lo.radians()),
                format_float(hi.radians())
            );
            Ok((t, summary, ok))
        }
        Command::Ensemble => {
            let s = source(p.nbar.unwrap_or_default())?;
            let theta = p.theta.unwrap_or_default();
            let st = settings(spec, seed)?;
            let cfg = EnsembleConfig::new(
                theta,
                s,
                p.record_length.unwrap_or(1),
                st.ensemble_size,
                seed,
            )
            .map_err(runtime)?
            .with_grid(st.grid)
            .with_estimator(st.estimator);
            let e = run_ensemble(&cfg).map_err(runtime)?;
            let mut t = Table::new(&[
                "theta", "nbar", "M", "N", "mean_phi", "std_phi", "bias", "c_crb", "c_sn", "c_hl",
            ]);
            t.push(vec![
                theta.into(),
                s.mean_photons().into(),
                cfg.record_length.into(),
                cfg.ensemble_size.into(),
                e.mean().into(),
                e.std_dev().into(),
                e.bias().into(),
                s.crb_c(theta).ok().into(),
                s.shot_noise_c().into(),
                s.heisenberg_c().into(),
            ]);
            let summary = format!(
                "mean_phi {} std_phi {} bias {}",
                format_float(e.mean()),
                format_float(e.std_dev()),
                format_float(e.bias())
            );
            Ok((t, summary, ok))
        }
        Command::BiasScan | Command::StddevScan => {
            let s = source(p.nbar.unwrap_or_default())?;
            let thetas: Vec<Phase> = phase_range(p)?.into_iter().map(Phase::from).collect();
            let lengths = p.lengths.clone().unwrap_or_default();
            let rows = scan_bias(&thetas, s, &lengths, &settings(spec, seed)?).map_err(runtime)?;
            let bias_scan = spec.command == Command::BiasScan;
            let mut t = if bias_scan {
                Table::new(&["theta", "nbar", "M", "N", "mean_phi", "bias"])
            } else {
                Table::new(&["theta", "nbar", "M", "N", "std_phi", "c_crb"])
            };
            for r in &rows {
                let mut row: Vec<Cell> = vec![
                    r.theta.radians().into(),
                    r.nbar.into(),
                    r.record_length.into(),
                    r.ensemble_size.into(),
                ];
                if bias_scan {
                    row.extend([r.mean_phi.into(), r.bias.into()]);
                } else {
                    row.extend([r.std_phi.into(), s.crb_c(r.theta).ok().into()]);
                }
                t.push(row);
            }
            let summary = format!("{} ensembles", rows.len());
            Ok((t, summary, ok))
        }
        Command::ScalingFit => {
            let s = source(p.nbar.unwrap_or_default())?;
            let theta = p.theta.unwrap_or_default();
            let lengths = p.lengths.clone().unwrap_or_default();
            let study = scaling_study(theta, s, &lengths, &settings(spec, seed)?, &thresholds(p))
                .map_err(runtime)?;
            let mut t = Table::new(&[
                "theta",
                "nbar",
                "M",
                "N",
                "mean_phi",
                "std_phi",
                "bias",
                "c_tmsv",
                "c_crb",
                "c_sn",
                "c_hl",
                "r_squared",
                "verdict",
            ]);
            for r in &study.rows {
                t.push(vec![
                    r.theta.radians().into(),
                    r.nbar.into(),
                    r.record_length.into(),
                    r.ensemble_size.into(),
                    r.mean_phi.into(),
                    r.std_phi.into(),
                    r.bias.into(),
                    study.fit.c().into(),
                    study.verdict.c_crb.into(),
                    study.c_sn.into(),
                    study.c_hl.into(),
                    study.fit.r_squared().into(),
                    study.verdict.verdict.to_string().into(),
                ]);
            }
            let summary = format!(
                "c_tmsv {} r_squared {} -> {}",
                format_float(study.fit.c()),
                format_float(study.fit.r_squared()),
                study.verdict.verdict
            );
            Ok((t, summary, ok))
        }
        Command::IntensityScan => {
            let theta = p.theta.unwrap_or_default();
            let nbars = p.nbars.clone().unwrap_or_default();
            let lengths = p.lengths.clone().unwrap_or_default();
            let rows = scan_intensity(
                theta,
                &nbars,
                &lengths,
                &settings(spec, seed)?,
                &thresholds(p),
            )
            .map_err(runtime)?;
            let mut t = Table::new(&[
                "theta",
                "nbar",
                "N",
                "c_tmsv",
                "c_crb",
                "c_sn",
                "c_hl",
                "r_squared",
                "verdict",
            ]);
            for r in &rows {
                t.push(vec![
                    r.theta.radians().into(),
                    r.nbar.into(),
                    r.ensemble_size.into(),
                    r.c_tmsv.into(),
                    r.c_crb.into(),
                    r.c_sn.into(),
                    r.c_hl.into(),
                    r.r_squared.into(),
                    r.verdict.to_string().into(),
                ]);
            }
            let summary = format!("{} photon numbers", rows.len());
            Ok((t, summary, ok))
        }
        Command::OracleCheck => {
            let eps = p.epsilon.unwrap_or(1e-8);
            let nbars = match p.nbar {
                Some(n) => vec![n],
                None => p.nbars.clone().unwrap_or_default(),
            };
            let thetas = phase_range(p)?;
            let mut t = Table::new(&["theta", "nbar", "p_even_fock", "p_even_closed", "abs_diff"]);
            let mut worst = 0f64;
            for &nbar in &nbars {
                let s = source(nbar)?;
                for &theta in &thetas {
                    let fock = even_probability_via_fock(&s, theta, eps).map_err(runtime)?;
                    let closed = s.even_probability(theta);
                    let diff = (fock - closed).abs();
                    worst = worst.max(diff);
                    t.push(vec![
                        theta.into(),
                        nbar.into(),
                        fock.into(),
                        closed.into(),
                        diff.into(),
                    ]);
                }
            }
            let summary = format!("max |difference| {}", format_float(worst));
            let check = if worst <= ORACLE_TOLERANCE {
                Ok(())
            } else {
                Err(CliError::Runtime(format!(
                    "oracle mismatch {} exceeds {}",
                    format_float(worst),
                    format_float(ORACLE_TOLERANCE)
                )))
            };
            Ok((t, summary, check))
        }
    }
}

/// Parses, resolves and runs; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = cli
        .config
        .as_deref()
        .map(load_config)
        .transpose()
        .and_then(|file| resolve(cli.command, cli.params, file))
        .and_then(|spec| run(&spec));
    match result {
        Ok(report) => {
            eprintln!(
                "{}: {} rows -> {} ({})",
                report.summary,
                report.rows,
                report.csv_path.display(),
                report.sidecar_path.display()
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("tmsv-phase").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_parse() {
        let cli = parse(&[
            "ensemble", "--theta", "0.1", "--nbar", "3", "--M", "1000", "--N", "10000", "--seed",
            "42",
        ]);
        assert_eq!(cli.command, Some(Command::Ensemble));
        assert_eq!(cli.params.record_length, Some(1000));
        assert_eq!(cli.params.ensemble_size, Some(10_000));
        let cli = parse(&[
            "scaling-fit",
            "--lengths",
            "100,1000,10000",
            "--threads",
            "auto",
        ]);
        assert_eq!(cli.params.lengths, Some(vec![100, 1000, 10_000]));
        assert_eq!(cli.params.threads, Some(Threads::Auto));
    }

    #[test]
    fn empty_config_equals_flags_alone() {
        let flags = parse(&[
            "ensemble",
            "--theta",
            "0.1",
            "--nbar",
            "3",
            "--M",
            "1000",
            "--threads",
            "2",
        ])
        .params;
        let a = resolve(Some(Command::Ensemble), flags.clone(), None).unwrap();
        let b = resolve(Some(Command::Ensemble), flags, Some(Params::default())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flags_override_file() {
        let file: Params =
            serde_json::from_str(r#"{"seed": 1, "theta": 0.2, "nbar": 3, "M": 50}"#).unwrap();
        let flags = Params {
            seed: Some(2),
            ..Params::default()
        };
        let spec = resolve(Some(Command::Ensemble), flags, Some(file)).unwrap();
        assert_eq!(spec.master_seed, 2);
        assert_eq!(spec.params.theta, Some(0.2));
    }

    #[test]
    fn unknown_key_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, "{\n  \"thetaa\": 0.1\n}").unwrap();
        let err = load_config(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("thetaa"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn malformed_json_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, "{\"theta\": 0.1,\n \"nbar\": }").unwrap();
        let msg = load_config(&path).unwrap_err().to_string();
        assert!(msg.contains("line 2 column"), "{msg}");
        fs::write(&path, "[1, 2]").unwrap();
        assert!(load_config(&path).is_err());
    }

    #[test]
    fn missing_and_extra_parameters() {
        let err = resolve(Some(Command::Ensemble), Params::default(), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("--theta"));
        let flags = Params {
            nbar: Some(3.0),
            theta: Some(0.1),
            ..Params::default()
        };
        let err = resolve(Some(Command::ParityCurve), flags, None).unwrap_err();
        assert!(err.to_string().contains("theta"));
        assert!(resolve(None, Params::default(), None).is_err());
    }

    #[test]
    fn range_validation() {
        let bad = |p: Params, c| resolve(Some(c), p, None).unwrap_err().exit_code();
        let base = Params {
            theta: Some(0.1),
            nbar: Some(3.0),
            record_length: Some(100),
            ..Params::default()
        };
        assert_eq!(
            bad(
                Params {
                    nbar: Some(-1.0),
                    ..base.clone()
                },
                Command::Ensemble
            ),
            2
        );
        assert_eq!(
            bad(
                Params {
                    theta: Some(2.0),
                    ..base.clone()
                },
                Command::Ensemble
            ),
            2
        );
        assert_eq!(
            bad(
                Params {
                    record_length: Some(0),
                    ..base.clone()
                },
                Command::Ensemble
            ),
            2
        );
        assert_eq!(
            bad(
                Params {
                    ensemble_size: Some(1),
                    ..base.clone()
                },
                Command::Ensemble
            ),
            2
        );
        let post = Params {
            nbar: Some(3.0),
            record_length: Some(10),
            even_count: Some(11),
            ..Params::default()
        };
        assert_eq!(bad(post, Command::Posterior), 2);
        let oracle = Params {
            epsilon: Some(0.1),
            ..Params::default()
        };
        assert_eq!(bad(oracle, Command::OracleCheck), 2);
    }

    #[test]
    fn command_mismatch_rejected() {
        let file = Params {
            command: Some(Command::Trace),
            ..Params::default()
        };
        assert!(resolve(Some(Command::Ensemble), Params::default(), Some(file)).is_err());
    }

    #[test]
    fn threads_repr() {
        assert_eq!("auto".parse::<Threads>().unwrap(), Threads::Auto);
        assert_eq!(
            "8".parse::<Threads>().unwrap(),
            Threads::Count(NonZeroUsize::new(8).unwrap())
        );
        assert!("0".parse::<Threads>().is_err());
        let t: Threads = serde_json::from_str("4").unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), "4");
        let t: Threads = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), "\"auto\"");
    }

    #[test]
    fn scan_phase_defaults() {
        let spec = resolve(
            Some(Command::BiasScan),
            Params {
                nbar: Some(3.0),
                ..Params::default()
            },
            None,
        )
        .unwrap();
        let thetas = phase_range(&spec.params).unwrap();
        assert_eq!(thetas.len(), 79);
        assert_eq!(thetas[0], 0.0);
        assert!((thetas[78] - 1.56).abs() < 1e-12);
    }

    #[test]
    fn sidecar_location() {
        assert_eq!(
            sidecar_path(Path::new("out/a.csv")),
            PathBuf::from("out/a.csv.json")
        );
    }
}
