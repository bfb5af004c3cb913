//! Command-line front end. Every subcommand returns a [`CliError`] that maps
//! onto the process exit code.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::config::{load_config, to_config_string, ConfigError, ModelParams};
use crate::coupled::{
    beta_threshold, monotonicity_violations, social_trigger_experiment, BetaThreshold,
    CoupledError, SocialTriggerRecord,
};
use crate::emissions::EmissionSeries;
use crate::io::{
    write_json, write_jsonl, write_sensitivity_csv, write_sweep_csv, write_trajectory_csv,
    write_trajectory_jsonl, Format, RunManifest,
};
use crate::metrics::{compute_metrics, DEFAULT_AUC_THRESHOLD, DEFAULT_D_VALUES};
use crate::simulation::{run_pair, simulate, SimulationError, Variant};
use crate::social::{equilibria, psi};
use crate::sweeps::{
    run_sweep, sensitivity_tornado, AxisSpec, Scenario, SweepError, SweepOptions, TornadoMetric,
    SENSITIVITY_KEYS,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Integration { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Reference(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CoupledError> for CliError {
    fn from(e: CoupledError) -> Self {
        match e {
            CoupledError::Simulation(s) => s.into(),
            CoupledError::Tolerance(_) => CliError::Usage(e.to_string()),
            CoupledError::Bracket { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_error(path: Option<&Path>, e: io::Error) -> CliError {
    match path {
        Some(p) => CliError::Input(format!("{}: {e}", p.display())),
        None => CliError::Input(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "socioclimate",
    version,
    about = "Coupled social-climate simulator with tipping elements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one variant and write the trajectory.
    Simulate(SimulateArgs),
    /// Run baseline and modified and write their metrics as JSON.
    Compare(CompareArgs),
    /// Two-parameter grid of baseline/modified pairs.
    Sweep(SweepArgs),
    /// One-at-a-time perturbation of every whitelisted parameter.
    Sensitivity(SensitivityArgs),
    /// Fixed points of the social model and their stability.
    Equilibria(EquilibriaArgs),
    /// Beta scan for climate tipping that triggers social tipping.
    Trigger(TriggerArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Parameter overrides in `key = value` form.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Historical emissions CSV (`year,emission_gtc_per_year`). The bundled
    /// record is used when omitted.
    #[arg(long)]
    pub emissions: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    #[value(name = "high_risk")]
    HighRisk,
    #[value(name = "low_risk")]
    LowRisk,
}

impl PresetArg {
    fn scenario(self) -> Scenario {
        match self {
            PresetArg::HighRisk => Scenario::HighRisk,
            PresetArg::LowRisk => Scenario::LowRisk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Baseline,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TornadoArg {
    #[value(name = "peak_T")]
    PeakT,
    #[value(name = "auc_diff")]
    AucDiff,
}

/// Comma-separated ratio thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DList(pub Vec<f64>);

fn parse_d_list(s: &str) -> Result<DList, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let d: f64 = part
            .trim()
            .parse()
            .map_err(|_| format!("`{part}` is not a number"))?;
        if !(d > 1.0) || !d.is_finite() {
            return Err(format!("ratio thresholds must exceed 1, got {d}"));
        }
        out.push(d);
    }
    Ok(DList(out))
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("threshold must be positive, got {v}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Comma-separated ratio thresholds for time to tipping, each > 1.
    #[arg(long, value_parser = parse_d_list, default_value = "1.1,1.25,1.5")]
    pub d: DList,
    /// AUC-difference classification threshold, K*yr.
    #[arg(long, value_parser = parse_threshold, default_value_t = DEFAULT_AUC_THRESHOLD)]
    pub threshold: f64,
}

impl MetricArgs {
    fn d_values(&self) -> Vec<f64> {
        if self.d.0.is_empty() {
            DEFAULT_D_VALUES.to_vec()
        } else {
            self.d.0.clone()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long, value_enum, default_value = "baseline")]
    pub variant: VariantArg,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Outer axis, `path:lo:hi:n`.
    #[arg(long)]
    pub x: String,
    /// Inner axis, `path:lo:hi:n`.
    #[arg(long)]
    pub y: String,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[command(flatten)]
    pub metrics: MetricArgs,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Record file. The manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Relative perturbation applied in both directions.
    #[arg(long, default_value_t = 0.05)]
    pub fraction: f64,
    /// Change that orders the tornado.
    #[arg(long, value_enum, default_value = "peak_T")]
    pub by: TornadoArg,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Print the perturbed parameter paths and exit.
    #[arg(long)]
    pub list_params: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct EquilibriaArgs {
    /// Social parameters other than beta and delta come from here.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long)]
    pub delta: f64,
    /// Temperature anomaly, K.
    #[arg(long, allow_negative_numbers = true)]
    pub temperature: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TriggerArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "high_risk")]
    pub preset: PresetArg,
    /// Social norm strength.
    #[arg(long, default_value_t = 3.0)]
    pub delta: f64,
    /// Beta scan, `lo:hi:n`.
    #[arg(long, default_value = "0:5:51")]
    pub betas: String,
    /// Bracket width at which the threshold search stops.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
        Command::Equilibria(a) => cmd_equilibria(a),
        Command::Trigger(a) => cmd_trigger(a),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_error(Some(path), e))
}

fn load_params(config: Option<&Path>) -> Result<ModelParams, CliError> {
    let text = match config {
        Some(path) => read_text(path)?,
        None => String::new(),
    };
    load_config(&text).map_err(|e| match (config, &e) {
        (Some(path), ConfigError::Parse { .. } | ConfigError::UnknownKey { .. }) => {
            CliError::Input(format!("{}: {e}", path.display()))
        }
        _ => CliError::Input(e.to_string()),
    })
}

fn load_series(path: Option<&Path>) -> Result<EmissionSeries, CliError> {
    match path {
        Some(p) => EmissionSeries::parse_csv(&read_text(p)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => Ok(EmissionSeries::bundled()),
    }
}

fn load_inputs(
    input: &InputArgs,
    preset: Option<PresetArg>,
) -> Result<(ModelParams, EmissionSeries, Scenario), CliError> {
    let params = load_params(input.config.as_deref())?;
    let series = load_series(input.emissions.as_deref())?;
    let scenario = preset.map_or(Scenario::Custom, PresetArg::scenario);
    Ok((scenario.apply(&params), series, scenario))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(Some(path), e))
}

/// Runs `write` against the file at `out`, or stdout when `out` is `None`.
fn emit<F>(out: Option<&Path>, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_error(Some(path), e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            match write(&mut lock).and_then(|_| lock.flush()) {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| io_error(None, e)),
            }
        }
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let (params, series, _) = load_inputs(&a.input, a.preset)?;
    let variant = match a.variant {
        VariantArg::Baseline => Variant::Baseline,
        VariantArg::Modified => Variant::Modified,
    };
    let traj = simulate(&params, &series, variant)?;
    emit(a.out.as_deref(), |w| match Format::from(a.format) {
        Format::Csv => write_trajectory_csv(&traj, w),
        Format::Jsonl => write_trajectory_jsonl(&traj, w),
    })
}

pub fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let (params, series, _) = load_inputs(&a.input, a.preset)?;
    let (base, modified) = run_pair(&params, &series)?;
    let record = compute_metrics(
        &modified,
        &base,
        &a.metrics.d_values(),
        a.metrics.threshold,
        params.schedule.t_social_on,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    emit(a.out.as_deref(), |w| write_json(&record, w))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let x: AxisSpec = a.x.parse()?;
    let y: AxisSpec = a.y.parse()?;
    let (params, series, scenario) = load_inputs(&a.input, a.preset)?;
    let opts = SweepOptions {
        d_values: a.metrics.d_values(),
        threshold: a.metrics.threshold,
        workers: a.workers,
        scenario,
    };

    let started = Instant::now();
    let records = run_sweep(&params, &series, &x, &y, &opts)?;
    let wall_time_s = started.elapsed().as_secs_f64();

    emit(Some(&a.out), |w| match Format::from(a.format) {
        Format::Csv => write_sweep_csv(&records, &opts.d_values, w),
        Format::Jsonl => write_jsonl(&records, w),
    })?;

    let failed_points = records.iter().filter(|r| r.error.is_some()).count();
    let manifest = RunManifest {
        command: "sweep".into(),
        axes: vec![x, y],
        preset: scenario.as_str().into(),
        params_fingerprint: params.fingerprint(),
        params: to_config_string(&params),
        d_values: opts.d_values.clone(),
        threshold: opts.threshold,
        workers: a.workers,
        points: records.len(),
        failed_points,
        wall_time_s,
        notes: Vec::new(),
    };
    emit(Some(&manifest_path(&a.out)), |w| write_json(&manifest, w))
}

pub fn cmd_sensitivity(a: &SensitivityArgs) -> Result<(), CliError> {
    if a.list_params {
        return emit(a.out.as_deref(), |w| {
            SENSITIVITY_KEYS.iter().try_for_each(|k| writeln!(w, "{k}"))
        });
    }
    let (params, series, scenario) = load_inputs(&a.input, a.preset)?;
    let opts = SweepOptions {
        d_values: a.metrics.d_values(),
        threshold: a.metrics.threshold,
        workers: a.workers,
        scenario,
    };
    let metric = match a.by {
        TornadoArg::PeakT => TornadoMetric::PeakT,
        TornadoArg::AucDiff => TornadoMetric::AucDiff,
    };
    let records = sensitivity_tornado(&params, &series, a.fraction, &opts, metric)?;
    emit(a.out.as_deref(), |w| match Format::from(a.format) {
        Format::Csv => write_sensitivity_csv(&records, w),
        Format::Jsonl => write_jsonl(&records, w),
    })
}

pub fn cmd_equilibria(a: &EquilibriaArgs) -> Result<(), CliError> {
    for (name, v) in [
        ("beta", a.beta),
        ("delta", a.delta),
        ("temperature", a.temperature),
    ] {
        if !v.is_finite() {
            return Err(CliError::Usage(format!("--{name} must be finite")));
        }
    }
    if a.delta < 0.0 {
        return Err(CliError::Usage(format!(
            "--delta must be >= 0, got {}",
            a.delta
        )));
    }
    let params = load_params(a.config.as_deref())?;
    let report = equilibria(psi(a.beta, a.temperature, &params.social), a.delta);
    emit(None, |w| write_json(&report, w))
}

fn parse_scan(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("invalid beta scan `{s}` (expected lo:hi:n)"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if n < 2 || !(lo < hi) {
        return Err(bad());
    }
    Ok((0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct TriggerReport {
    records: Vec<SocialTriggerRecord>,
    monotonicity_violations: Vec<f64>,
    threshold: Option<BetaThreshold>,
}

pub fn cmd_trigger(a: &TriggerArgs) -> Result<(), CliError> {
    let betas = parse_scan(&a.betas)?;
    if !(a.tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {}",
            a.tol
        )));
    }
    let (mut params, series, _) = load_inputs(&a.input, Some(a.preset))?;
    params.social.delta = a.delta;

    let records = social_trigger_experiment(&params, &series, &betas, a.workers);
    let violations = monotonicity_violations(&records);
    let bracket = records
        .windows(2)
        .find(|w| {
            w[0].error.is_none() && w[1].error.is_none() && w[0].tipped_social != w[1].tipped_social
        })
        .map(|w| (w[0].beta, w[1].beta));
    let threshold = match bracket {
        Some((lo, hi)) => Some(beta_threshold(&params, &series, lo, hi, a.tol)?),
        None => None,
    };
    let report = TriggerReport {
        records,
        monotonicity_violations: violations,
        threshold,
    };
    emit(a.out.as_deref(), |w| write_json(&report, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_list_parsing() {
        assert_eq!(parse_d_list("1.1,1.25").unwrap().0, vec![1.1, 1.25]);
        assert!(parse_d_list("1.0").is_err());
        assert!(parse_d_list("0.5,2").is_err());
        assert!(parse_d_list("x").is_err());
    }

    #[test]
    fn scan_parsing() {
        let v = parse_scan("0:5:6").unwrap();
        assert_eq!(v, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(parse_scan("0:5").is_err());
        assert!(parse_scan("5:0:3").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["socioclimate", "compare", "--d", "1.0"]), 1);
        assert_eq!(run(["socioclimate", "bogus"]), 1);
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("/tmp/a.csv")),
            PathBuf::from("/tmp/a.csv.manifest.json")
        );
    }
}
