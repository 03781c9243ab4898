//! Command-line front end: `simulate`, `convert`, `transform`, `fit`, `eval`.
//!
//! Every invocation yields one [`RunReport`] (printed as JSON on stdout by the
//! binary). Usage errors exit with 2, runtime errors with 1.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitting::{evaluate_fit, fit, FitConfig, FitReport, FittedModel};
use crate::model::{ChannelParams, Preset, DEFAULT_FAR_EPSILON};
use crate::radiometry::{voltage_to_power_dbw, voltage_to_power_dbw_exact, DetectorProfile};
use crate::simulator::{synthesize_passby, Emission, ScenarioConfig, ScenarioGeometry};
use crate::trace::{
    load_distance_csv, load_trace_csv, transform_to_distance, PeakAlignment, TransformConfig, Unit,
    DEFAULT_SMOOTH_WINDOW,
};

pub const TOOL_NAME: &str = "vlc-pathloss";

#[derive(Debug, Parser)]
#[command(name = TOOL_NAME, version, about = "Visible-light path-loss modeling for vehicular links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a pass-by trace and its metadata sidecar.
    Simulate(SimulateArgs),
    /// Convert a voltage trace to received power in dBW.
    Convert(ConvertArgs),
    /// Map a power-vs-time trace to power-vs-distance.
    Transform(TransformArgs),
    /// Estimate K_dB and gamma from a distance trace.
    Fit(FitArgs),
    /// Predict power at a distance or score a distance trace.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmitKind {
    Power,
    Voltage,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Parameter set: night, daylight, night-fig4, daylight-fig5.
    #[arg(long, value_parser = parse_preset, conflicts_with_all = ["k_db", "gamma"])]
    pub preset: Option<Preset>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "preset")]
    pub k_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "preset")]
    pub gamma: Option<f64>,
    /// Lambertian order (defaults to 1 with a preset).
    #[arg(long, value_parser = non_negative, required_unless_present = "preset")]
    pub n: Option<f64>,
    /// Lateral offset in meters.
    #[arg(long, value_parser = positive)]
    pub w: f64,
    /// Speed in m/s.
    #[arg(long, value_parser = positive)]
    pub speed: f64,
    /// Duration in seconds.
    #[arg(long, value_parser = positive)]
    pub duration: f64,
    /// Sample rate in Hz.
    #[arg(long, value_parser = positive)]
    pub rate: f64,
    #[arg(long)]
    pub seed: u64,
    /// Gaussian dB noise sigma (preset default when omitted).
    #[arg(long, value_parser = non_negative)]
    pub noise_db: Option<f64>,
    /// Constant ambient power in dBW.
    #[arg(long, allow_hyphen_values = true)]
    pub ambient_dbw: Option<f64>,
    /// Ambient fluctuation sigma in watts.
    #[arg(long, value_parser = non_negative, requires = "ambient_dbw")]
    pub ambient_sigma_w: Option<f64>,
    /// Peak range in meters (analytic peak when omitted).
    #[arg(long, value_parser = non_negative)]
    pub r_peak: Option<f64>,
    #[arg(long, value_enum, default_value = "power")]
    pub emit: EmitKind,
    /// Amplifier gain setting in dB, for voltage output.
    #[arg(long, value_parser = non_negative)]
    pub gain_db: Option<f64>,
    /// Detector profile file (key = value).
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Skip ADC quantization of emitted voltages.
    #[arg(long)]
    pub no_adc: bool,
    #[arg(long)]
    pub output: PathBuf,
    /// Metadata sidecar path (default: <output stem>.meta.json).
    #[arg(long)]
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Amplifier gain setting in dB.
    #[arg(long, value_parser = non_negative)]
    pub gain_db: f64,
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Use the exact linear conversion instead of the rounded dB form.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Speed in m/s.
    #[arg(long, value_parser = positive)]
    pub speed: f64,
    /// Lateral offset in meters.
    #[arg(long, value_parser = non_negative)]
    pub w: f64,
    /// Range at the power peak, in meters.
    #[arg(long, value_parser = non_negative)]
    pub r_peak: f64,
    /// Moving-average window for peak detection, in samples (odd).
    #[arg(long, conflicts_with = "t_peak")]
    pub smooth_window: Option<usize>,
    /// Use this peak time in seconds instead of detecting it.
    #[arg(long, allow_hyphen_values = true)]
    pub t_peak: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Fit report output (JSON).
    #[arg(long)]
    pub output: PathBuf,
    /// Predicted-line output (default: <output stem>.line.csv).
    #[arg(long)]
    pub line: Option<PathBuf>,
    /// Lateral offset in meters (recovered from the file when omitted).
    #[arg(long, value_parser = non_negative, required_if_eq("correction", "true"))]
    pub w: Option<f64>,
    /// Remove the near-field term before fitting and keep near points.
    #[arg(long)]
    pub correction: bool,
    /// Far-regime threshold on w^2/D^2.
    #[arg(long, default_value_t = DEFAULT_FAR_EPSILON)]
    pub epsilon: f64,
    /// Keep points at or beyond this distance in meters instead of the epsilon test.
    #[arg(long, value_parser = non_negative)]
    pub min_distance: Option<f64>,
    /// Assumed Lambertian order for the correction.
    #[arg(long, value_parser = non_negative, default_value_t = 1.0)]
    pub n: f64,
    #[arg(long, default_value_t = 10)]
    pub min_points: usize,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["params", "preset"])))]
#[command(group(ArgGroup::new("target").required(true).args(["at", "trace"])))]
pub struct EvalArgs {
    /// Fit report JSON.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    /// Lambertian order used with a preset.
    #[arg(long, value_parser = positive, default_value_t = 1.0, requires = "preset")]
    pub n: f64,
    /// Distance in meters.
    #[arg(long, value_parser = positive)]
    pub at: Option<f64>,
    /// Distance trace CSV to score.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Lateral offset in meters.
    #[arg(long, value_parser = non_negative)]
    pub w: Option<f64>,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse::<Preset>().map_err(|e| e.to_string())
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("'{s}': {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be > 0, got {v}"))
    }
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be >= 0, got {v}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    fn of(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let hash = Sha256::digest(&bytes);
        Ok(Self {
            path: path.display().to_string(),
            sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub result: Value,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl RunReport {
    fn new(command: Vec<String>) -> Self {
        Self {
            tool: TOOL_NAME.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            result: Value::Null,
            warnings: Vec::new(),
            error: None,
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }
}

pub enum Outcome {
    /// `--help` / `--version` text.
    Help(String),
    Report {
        report: RunReport,
        code: i32,
    },
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let echo: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut report = RunReport::new(echo);
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome::Help(e.render().to_string());
            }
            // DisplayHelpOnMissingArgumentOrSubcommand also lands here
            eprintln!("{}", e.render());
            report.error = Some(format!("usage: {}", e.kind()));
            return Outcome::Report { report, code: 2 };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, &mut report),
        Command::Convert(a) => cmd_convert(&a, &mut report),
        Command::Transform(a) => cmd_transform(&a, &mut report),
        Command::Fit(a) => cmd_fit(&a, &mut report),
        Command::Eval(a) => cmd_eval(&a, &mut report),
    };
    let code = match result {
        Ok(value) => {
            report.result = value;
            0
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            report.error = Some(format!("usage: {msg}"));
            2
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            report.error = Some(e.to_string());
            1
        }
    };
    Outcome::Report { report, code }
}

enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult = std::result::Result<Value, CliError>;

fn load_profile(path: Option<&Path>, gain_db: Option<f64>) -> Result<DetectorProfile> {
    let mut profile = match path {
        Some(p) => DetectorProfile::load(p)?,
        None => DetectorProfile::default(),
    };
    if let Some(g) = gain_db {
        profile.gain_setting_db = g;
    }
    profile.validate()?;
    Ok(profile)
}

/// Builds the scenario described by `simulate` flags.
pub fn scenario_from_args(a: &SimulateArgs) -> std::result::Result<ScenarioConfig, String> {
    let (k_db, gamma, default_noise) = match a.preset {
        Some(p) => {
            let (k, g) = p.values();
            (k, g, p.default_noise_db())
        }
        None => (
            a.k_db.ok_or("--k-db is required without --preset")?,
            a.gamma.ok_or("--gamma is required without --preset")?,
            0.0,
        ),
    };
    let n = a.n.unwrap_or(1.0);
    let params = ChannelParams::with_order(k_db, gamma, n).map_err(|e| e.to_string())?;
    let emission = match a.emit {
        EmitKind::Power => {
            if a.gain_db.is_some() || a.profile.is_some() {
                return Err("--gain-db/--profile apply only with --emit voltage".into());
            }
            Emission::PowerDbw
        }
        EmitKind::Voltage => {
            if a.gain_db.is_none() && a.profile.is_none() {
                return Err("--emit voltage needs --gain-db or --profile".into());
            }
            let profile = load_profile(a.profile.as_deref(), a.gain_db).map_err(|e| e.to_string())?;
            Emission::Voltage { profile }
        }
    };
    Ok(ScenarioConfig {
        params,
        geometry: ScenarioGeometry {
            lateral_offset_m: a.w,
            speed_mps: a.speed,
            peak_range_m: a.r_peak,
            peak_time_s: None,
        },
        duration_s: a.duration,
        sample_rate_hz: a.rate,
        noise_sigma_db: a.noise_db.unwrap_or(default_noise),
        ambient_power_dbw: a.ambient_dbw,
        ambient_sigma_w: a.ambient_sigma_w.unwrap_or(0.0),
        seed: a.seed,
        adc_effects: !a.no_adc,
        emission,
    })
}

/// Default sidecar path: `trace.csv` becomes `trace.meta.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("meta.json")
}

fn cmd_simulate(a: &SimulateArgs, report: &mut RunReport) -> CliResult {
    let config = scenario_from_args(a).map_err(CliError::Usage)?;
    let synthesis = synthesize_passby(&config)?;
    synthesis.trace.save_csv(&a.output)?;
    let meta_path = a.metadata.clone().unwrap_or_else(|| sidecar_path(&a.output));
    std::fs::write(&meta_path, synthesis.metadata.to_json()? + "\n").map_err(Error::from)?;
    report.output(&a.output)?;
    report.output(&meta_path)?;
    if synthesis.metadata.saturated_samples > 0 {
        report.warnings.push(format!(
            "{} samples saturated at the detector output limit",
            synthesis.metadata.saturated_samples
        ));
    }
    Ok(json!({
        "samples": synthesis.trace.len(),
        "unit": synthesis.trace.unit(),
        "metadata": synthesis.metadata,
    }))
}

fn cmd_convert(a: &ConvertArgs, report: &mut RunReport) -> CliResult {
    report.input(&a.input)?;
    let profile = load_profile(a.profile.as_deref(), Some(a.gain_db))?;
    let trace = load_trace_csv(&a.input)?;
    trace.require_unit(Unit::Voltage)?;
    let mut out = csv::Writer::from_path(&a.output).map_err(|e| Error::config(e.to_string()))?;
    let write_err = |e: csv::Error| CliError::Run(Error::config(e.to_string()));
    out.write_record(["time_s", Unit::PowerDbw.column()])
        .map_err(write_err)?;
    let mut dropped = 0usize;
    let mut written = 0usize;
    for (t, v) in trace.samples() {
        if v <= 0.0 {
            dropped += 1;
            continue;
        }
        let p = if a.exact {
            voltage_to_power_dbw_exact(&profile, v)?
        } else {
            voltage_to_power_dbw(&profile, v)?
        };
        out.write_record([t.to_string(), p.to_string()]).map_err(write_err)?;
        written += 1;
    }
    out.flush().map_err(Error::from)?;
    report.output(&a.output)?;
    if dropped > 0 {
        report
            .warnings
            .push(format!("{dropped} non-positive voltage samples dropped"));
    }
    Ok(json!({
        "samples_in": trace.len(),
        "samples_out": written,
        "dropped_nonpositive": dropped,
        "gain_db": profile.gain_setting_db,
        "path": if a.exact { "exact" } else { "rounded_db" },
    }))
}

fn cmd_transform(a: &TransformArgs, report: &mut RunReport) -> CliResult {
    report.input(&a.input)?;
    let trace = load_trace_csv(&a.input)?;
    let alignment = match a.t_peak {
        Some(peak_time_s) => PeakAlignment::Known { peak_time_s },
        None => PeakAlignment::Detect {
            smooth_window: a.smooth_window.unwrap_or(DEFAULT_SMOOTH_WINDOW),
        },
    };
    let config = TransformConfig {
        lateral_offset_m: a.w,
        speed_mps: a.speed,
        peak_range_m: a.r_peak,
        alignment,
    };
    let out = transform_to_distance(&trace, &config)?;
    out.trace.save_csv(&a.output)?;
    report.output(&a.output)?;
    let s = &out.summary;
    if s.n_dropped_behind > 0 {
        report
            .warnings
            .push(format!("{} samples behind the detector dropped", s.n_dropped_behind));
    }
    if s.n_dropped_degenerate > 0 {
        report
            .warnings
            .push(format!("{} degenerate samples dropped", s.n_dropped_degenerate));
    }
    Ok(serde_json::to_value(s).map_err(Error::from)?)
}

fn cmd_fit(a: &FitArgs, report: &mut RunReport) -> CliResult {
    report.input(&a.input)?;
    let trace = load_distance_csv(&a.input, a.w)?;
    let config = FitConfig {
        epsilon: a.epsilon,
        use_correction: a.correction,
        min_points: a.min_points,
        assumed_order_n: a.n,
        min_distance_m: a.min_distance,
    };
    let fit_report = fit(&trace, &config)?;
    std::fs::write(&a.output, fit_report.to_json()? + "\n").map_err(Error::from)?;
    report.output(&a.output)?;

    let line_path = a.line.clone().unwrap_or_else(|| a.output.with_extension("line.csv"));
    write_predicted_line(&line_path, &fit_report, &trace)?;
    report.output(&line_path)?;
    Ok(serde_json::to_value(&fit_report).map_err(Error::from)?)
}

fn write_predicted_line(path: &Path, fit_report: &FitReport, trace: &crate::trace::DistanceTrace) -> Result<()> {
    let model = fit_report.model();
    let w = trace.lateral_offset_m();
    let mut out = csv::Writer::from_path(path).map_err(|e| Error::config(e.to_string()))?;
    let err = |e: csv::Error| Error::config(e.to_string());
    out.write_record(["distance_m", "predicted_dbw"]).map_err(err)?;
    for p in trace.points() {
        if let Ok(pred) = model.predict(w, p.distance_m) {
            out.write_record([p.distance_m.to_string(), pred.to_string()])
                .map_err(err)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs, report: &mut RunReport) -> CliResult {
    let model = match (&a.params, a.preset) {
        (Some(path), _) => {
            report.input(path)?;
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            FitReport::from_json(&text)
                .map_err(|e| Error::config(format!("malformed fit report {}: {e}", path.display())))?
                .model()
        }
        (None, Some(preset)) => {
            let (k, g) = preset.values();
            FittedModel::from_params(&ChannelParams::with_order(k, g, a.n)?, true)
        }
        (None, None) => return Err(CliError::Usage("--params or --preset is required".into())),
    };
    if let Some(d) = a.at {
        let w = a.w.unwrap_or(0.0);
        let predicted = model.predict(w, d)?;
        return Ok(json!({
            "distance_m": d,
            "lateral_offset_m": w,
            "predicted_dbw": predicted,
            "model": model,
        }));
    }
    let path = a
        .trace
        .as_ref()
        .ok_or_else(|| CliError::Usage("--at or --trace is required".into()))?;
    report.input(path)?;
    let trace = load_distance_csv(path, a.w)?;
    let evaluation = evaluate_fit(&model, &trace)?;
    Ok(json!({
        "model": model,
        "summary": evaluation.summary,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_of(args: &[&str]) -> (RunReport, i32) {
        match run(std::iter::once(TOOL_NAME).chain(args.iter().copied())) {
            Outcome::Report { report, code } => (report, code),
            Outcome::Help(_) => panic!("unexpected help"),
        }
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn simulate_without_flags_is_usage_error() {
        let (r, code) = report_of(&["simulate"]);
        assert_eq!(code, 2);
        assert!(r.error.is_some());
    }

    #[test]
    fn preset_conflicts_with_explicit_params() {
        let (_, code) = report_of(&[
            "simulate",
            "--preset",
            "night",
            "--k-db",
            "-30",
            "--w",
            "2",
            "--speed",
            "8.9408",
            "--duration",
            "10",
            "--rate",
            "100",
            "--seed",
            "1",
            "--output",
            "/tmp/never.csv",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn eval_preset_at_ten_metres() {
        let (r, code) = report_of(&["eval", "--preset", "night", "--at", "10"]);
        assert_eq!(code, 0, "{:?}", r.error);
        let p = r.result["predicted_dbw"].as_f64().unwrap();
        assert!((p + 44.9750).abs() < 1e-9);
    }

    #[test]
    fn eval_at_one_metre_is_k_db() {
        let (r, _) = report_of(&["eval", "--preset", "night", "--at", "1"]);
        assert_eq!(r.result["predicted_dbw"].as_f64().unwrap(), -35.2680);
    }

    #[test]
    fn eval_daylight_slope() {
        let (a, _) = report_of(&["eval", "--preset", "daylight", "--at", "10"]);
        let (b, _) = report_of(&["eval", "--preset", "daylight", "--at", "20"]);
        let diff = b.result["predicted_dbw"].as_f64().unwrap() - a.result["predicted_dbw"].as_f64().unwrap();
        // -0.0175 * 10 log10(2)
        assert!((diff + 0.052_680_249_241_196_71).abs() < 1e-12);
    }

    #[test]
    fn negative_speed_is_usage_error() {
        let (_, code) = report_of(&[
            "transform",
            "--input",
            "x.csv",
            "--output",
            "y.csv",
            "--speed",
            "-3",
            "--w",
            "0",
            "--r-peak",
            "1",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/trace.csv")),
            PathBuf::from("out/trace.meta.json")
        );
    }
}
