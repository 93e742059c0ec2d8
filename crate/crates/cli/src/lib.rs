//! `qkdlc` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain or validation error, 3 I/O
//! error. Diagnostics go to stderr; data goes to stdout or the `--output` file.

pub mod config;
pub mod emit;
pub mod range;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qkdlc::channel::{ChannelParams, DEFAULT_MU};
use qkdlc::keyrate::ProtocolSpec;
use qkdlc::linecontrol::reflectometry::{
    detect_new_events, fit_baseline, synthesize_reflectogram, FiberEvent, SynthParams,
};
use qkdlc::linecontrol::{
    estimate_leakage, min_detectable_leakage, required_test_intensity, trace_io, TestPulsePlan,
};
use qkdlc::montecarlo::{validate_against_analytic, Attack, SimConfig};
use qkdlc::optimize::{optimal_intensity, sweep, IntensityMode, ProtocolPair, SweepGrid};
use qkdlc::Protocol;
use serde::Serialize;
use thiserror::Error;

use emit::{Column, Format, Scale};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] qkdlc::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::File {
        path: path.to_path_buf(),
        source,
    }
}

fn core_at(path: &Path) -> impl FnOnce(qkdlc::Error) -> CliError + '_ {
    move |e| match e {
        qkdlc::Error::Io(source) => at(path)(source),
        other => CliError::Core(other),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Core(qkdlc::Error::Io(_)) | CliError::Io(_) | CliError::File { .. } => {
                EXIT_IO
            }
            CliError::Core(_) => EXIT_INVALID,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qkdlc",
    version,
    about = "Key rates and line-control diagnostics for QKD links"
)]
pub struct Cli {
    /// JSON file whose keys mirror long flags; flags given on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one protocol at a fixed intensity
    Rate(RateArgs),
    /// Find the intensity maximizing a protocol's key rate
    Optimize(OptimizeArgs),
    /// Compare a line-controlled protocol with its baseline over a (D, r_E) grid
    Sweep(SweepArgs),
    /// Monte Carlo photon-counting simulation checked against closed forms
    Simulate(SimulateArgs),
    /// Size transmittometry test pulses and estimate the leak fraction
    TransmitTest(TransmitArgs),
    /// Write a synthetic reflectogram
    ReflectSynth(SynthArgs),
    /// Report events present in a trace but absent from a reference trace
    ReflectDetect(DetectArgs),
    /// Render a sweep CSV as an SVG heatmap
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
pub struct LineArgs {
    /// Line length in km
    #[arg(long)]
    pub distance: f64,
    /// Fraction of the signal diverted by a local tap
    #[arg(long, default_value_t = 0.0)]
    pub leak: f64,
    /// Attenuation in km⁻¹; T = 10^(−μ·D)
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
}

impl LineArgs {
    fn channel(&self) -> Result<ChannelParams, CliError> {
        Ok(ChannelParams::new(self.mu, self.distance, self.leak)?)
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RateArgs {
    /// bb84-decoy-upper, bb84-lc, cow, cow-lc, dps or dps-lc
    #[arg(long)]
    pub protocol: Protocol,
    #[command(flatten)]
    pub line: LineArgs,
    /// Mean photon number per signal pulse
    #[arg(long)]
    pub intensity: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct OptimizeArgs {
    /// bb84-decoy-upper, bb84-lc, cow, cow-lc, dps or dps-lc
    #[arg(long)]
    pub protocol: Protocol,
    #[command(flatten)]
    pub line: LineArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// bb84, cow or dps
    #[arg(long)]
    pub pair: ProtocolPair,
    /// Distances in km: value, list a,b,c, start:stop:count or start:stop:logN
    #[arg(long)]
    pub distance: String,
    /// Leak fractions, same syntax as --distance
    #[arg(long)]
    pub leak: String,
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
    /// Pin both intensities instead of optimizing them
    #[arg(long)]
    pub intensity: Option<f64>,
    /// Output file, `-` for stdout
    #[arg(long)]
    pub output: PathBuf,
    /// csv, json or svg
    #[arg(long, default_value = "csv")]
    pub format: Format,
    /// Heatmap column for svg output
    #[arg(long, default_value = "ratio")]
    pub column: Column,
    /// Heatmap color scale for svg output: linear or log
    #[arg(long, default_value = "linear")]
    pub scale: Scale,
    /// Worker threads; output does not depend on it
    #[arg(long, env = "QKDLC_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long)]
    pub protocol: Protocol,
    #[command(flatten)]
    pub line: LineArgs,
    #[arg(long)]
    pub intensity: f64,
    /// none, leak-tap, all-losses or pns
    #[arg(long, default_value = "leak-tap")]
    pub attack: Attack,
    #[arg(long, default_value_t = 1_000_000)]
    pub pulses: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "QKDLC_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TransmitArgs {
    #[command(flatten)]
    pub line: LineArgs,
    /// Smallest leak the test must resolve; sets the test-pulse intensity
    #[arg(
        long,
        conflicts_with = "test_intensity",
        required_unless_present = "test_intensity"
    )]
    pub min_leak: Option<f64>,
    /// Photons per test pulse at the sender
    #[arg(long)]
    pub test_intensity: Option<f64>,
    /// Run the estimator over this many test pulses on the --leak line
    #[arg(long)]
    pub tests: Option<usize>,
    /// Length of the pulse stream the tests are hidden in
    #[arg(long)]
    pub pulses: Option<u64>,
    /// Pre-shared key choosing the test slots
    #[arg(long, default_value_t = 0)]
    pub key: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SynthArgs {
    #[arg(long)]
    pub length: f64,
    #[arg(long, default_value_t = 0.1)]
    pub spacing: f64,
    /// Gaussian noise per sample in dB
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Loss step as POSITION_KM:DB; repeatable
    #[arg(long = "step", value_name = "POS:DB")]
    pub steps: Vec<String>,
    /// Reflective spike as POSITION_KM:DB; repeatable
    #[arg(long = "spike", value_name = "POS:DB")]
    pub spikes: Vec<String>,
    /// Trace CSV; metadata goes next to it with a .json extension
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DetectArgs {
    /// Documented reference trace
    #[arg(long)]
    pub reference: PathBuf,
    /// Fresh trace to check
    #[arg(long)]
    pub current: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct HeatmapArgs {
    /// Sweep CSV
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "ratio")]
    pub column: Column,
    #[arg(long, default_value = "linear")]
    pub scale: Scale,
    #[arg(long)]
    pub title: Option<String>,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config::merge_config_file(args) {
        Ok(a) => a,
        Err(e) => return report(e, stderr),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => report(e, stderr),
    }
}

fn report(e: CliError, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "qkdlc: error: {e}");
    e.exit_code()
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Rate(a) => cmd_rate(a, stdout),
        Command::Optimize(a) => cmd_optimize(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::TransmitTest(a) => cmd_transmit(a, stdout),
        Command::ReflectSynth(a) => cmd_synth(a, stdout),
        Command::ReflectDetect(a) => cmd_detect(a, stdout),
        Command::Heatmap(a) => cmd_heatmap(a, stdout),
    }
}

fn print_json<T: Serialize>(value: &T, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    writeln!(stdout, "{text}")?;
    Ok(())
}

fn default_workers(requested: Option<u32>) -> usize {
    requested
        .map(|w| w as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn open_output<'a>(
    path: &Path,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    if path.as_os_str() == "-" {
        Ok(Box::new(stdout))
    } else {
        Ok(Box::new(BufWriter::new(
            File::create(path).map_err(at(path))?,
        )))
    }
}

#[derive(Serialize)]
struct PointReport {
    protocol: Protocol,
    mu: f64,
    distance_km: f64,
    leak_fraction: f64,
    transmittance: f64,
    intensity: f64,
    rate: f64,
    conclusive_prob: f64,
    eve_info: f64,
}

fn cmd_rate(a: RateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let channel = a.line.channel()?;
    let point = ProtocolSpec::new(a.protocol, a.intensity)?.evaluate(&channel)?;
    print_json(
        &PointReport {
            protocol: a.protocol,
            mu: channel.mu,
            distance_km: channel.distance_km,
            leak_fraction: channel.leak_fraction,
            transmittance: channel.transmittance()?,
            intensity: a.intensity,
            rate: point.rate,
            conclusive_prob: point.conclusive_prob,
            eve_info: point.eve_info,
        },
        stdout,
    )
}

fn cmd_optimize(a: OptimizeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let channel = a.line.channel()?;
    let t = channel.transmittance()?;
    let opt = optimal_intensity(a.protocol, t, channel.leak_fraction)?;
    print_json(
        &PointReport {
            protocol: a.protocol,
            mu: channel.mu,
            distance_km: channel.distance_km,
            leak_fraction: channel.leak_fraction,
            transmittance: t,
            intensity: opt.intensity,
            rate: opt.point.rate,
            conclusive_prob: opt.point.conclusive_prob,
            eve_info: opt.point.eve_info,
        },
        stdout,
    )
}

#[derive(Serialize)]
struct SweepEcho<'a> {
    pair: ProtocolPair,
    mu: f64,
    distances_km: &'a [f64],
    leak_fractions: &'a [f64],
    intensity: Option<f64>,
}

fn cmd_sweep(a: SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let distances = range::parse_values(&a.distance)?;
    let leaks = range::parse_values(&a.leak)?;
    let mode = match a.intensity {
        Some(x) => IntensityMode::Fixed(x),
        None => IntensityMode::Optimized,
    };
    let grid = SweepGrid {
        distances,
        leaks,
        mu: a.mu,
        pair: a.pair,
        mode,
    };
    let records = sweep(&grid, default_workers(a.workers))?;

    let mut out = open_output(&a.output, stdout)?;
    match a.format {
        Format::Csv => emit::emit_csv(&records, &mut out)?,
        Format::Json => {
            let echo = SweepEcho {
                pair: a.pair,
                mu: a.mu,
                distances_km: &grid.distances,
                leak_fractions: &grid.leaks,
                intensity: a.intensity,
            };
            emit::emit_json(&records, &echo, &mut out)?
        }
        Format::Svg => {
            let title = format!("{} {} vs baseline", a.pair.name(), a.column.name());
            emit::emit_svg(&records, a.column, a.scale, &title, &mut out)?
        }
    };
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = SimConfig {
        protocol: ProtocolSpec::new(a.protocol, a.intensity)?,
        channel: a.line.channel()?,
        attack: a.attack,
        n_pulses: a.pulses,
        seed: a.seed,
    };
    let report = validate_against_analytic(&config, default_workers(a.workers))?;

    #[derive(Serialize)]
    struct Out<'a> {
        config: &'a SimConfig,
        #[serde(flatten)]
        report: &'a qkdlc::montecarlo::ValidationReport,
    }
    print_json(
        &Out {
            config: &config,
            report: &report,
        },
        stdout,
    )
}

fn cmd_transmit(a: TransmitArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let channel = a.line.channel()?;
    let (test_intensity, min_leak) = match (a.min_leak, a.test_intensity) {
        (Some(r), _) => (
            required_test_intensity(r, channel.distance_km, channel.mu)?,
            r,
        ),
        (None, Some(n)) => (
            n,
            min_detectable_leakage(n, channel.distance_km, channel.mu)?,
        ),
        (None, None) => {
            return Err(CliError::Usage(
                "give --min-leak or --test-intensity".into(),
            ))
        }
    };
    let estimate = match a.tests {
        Some(n_tests) => {
            let n_pulses = a.pulses.unwrap_or(n_tests as u64);
            let plan = if n_pulses == n_tests as u64 {
                TestPulsePlan::every_slot(test_intensity, n_pulses)
            } else {
                TestPulsePlan::from_shared_key(test_intensity, n_pulses, n_tests, a.key)?
            };
            Some(estimate_leakage(&plan, &channel, a.seed)?)
        }
        None => None,
    };

    #[derive(Serialize)]
    struct Out {
        distance_km: f64,
        mu: f64,
        transmittance: f64,
        test_intensity: f64,
        min_detectable_leak: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        leak_fraction: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        estimate: Option<qkdlc::linecontrol::LeakEstimate>,
    }
    print_json(
        &Out {
            distance_km: channel.distance_km,
            mu: channel.mu,
            transmittance: channel.transmittance()?,
            test_intensity,
            min_detectable_leak: min_leak,
            leak_fraction: estimate.map(|_| channel.leak_fraction),
            estimate,
        },
        stdout,
    )
}

fn parse_event(text: &str, make: fn(f64, f64) -> FiberEvent) -> Result<FiberEvent, CliError> {
    let bad = || CliError::Usage(format!("event `{text}` is not POSITION_KM:DB"));
    let (pos, db) = text.split_once(':').ok_or_else(bad)?;
    let pos: f64 = pos.trim().parse().map_err(|_| bad())?;
    let db: f64 = db.trim().parse().map_err(|_| bad())?;
    Ok(make(pos, db))
}

fn cmd_synth(a: SynthArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut events = Vec::new();
    for s in &a.steps {
        events.push(parse_event(s, FiberEvent::step)?);
    }
    for s in &a.spikes {
        events.push(parse_event(s, FiberEvent::spike)?);
    }
    let params = SynthParams {
        length_km: a.length,
        mu: a.mu,
        spacing_km: a.spacing,
        noise_sigma_db: a.sigma,
        seed: a.seed,
    };
    let trace = synthesize_reflectogram(&params, &events)?;
    trace_io::write_trace(&a.output, &trace).map_err(core_at(&a.output))?;

    #[derive(Serialize)]
    struct Out {
        samples: usize,
        length_km: f64,
        trace: PathBuf,
        metadata: PathBuf,
        events: Vec<FiberEvent>,
    }
    print_json(
        &Out {
            samples: trace.len(),
            length_km: trace.length_km(),
            metadata: trace_io::sidecar_path(&a.output),
            trace: a.output,
            events,
        },
        stdout,
    )
}

/// Half-width around detected events left out of the slope fit.
const FIT_EXCLUSION_KM: f64 = 0.5;

fn cmd_detect(a: DetectArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let reference = trace_io::read_trace(&a.reference).map_err(core_at(&a.reference))?;
    let current = trace_io::read_trace(&a.current).map_err(core_at(&a.current))?;
    let detection = detect_new_events(&current, &reference, a.threshold)?;
    let known: Vec<f64> = detection.events.iter().map(|e| e.position_km).collect();
    let fit = fit_baseline(&current, &known, FIT_EXCLUSION_KM).ok();

    #[derive(Serialize)]
    struct Out {
        alarm: bool,
        events: Vec<FiberEvent>,
        baseline_fit: Option<qkdlc::linecontrol::BaselineFit>,
    }
    print_json(
        &Out {
            alarm: detection.alarm,
            events: detection.events,
            baseline_fit: fit,
        },
        stdout,
    )
}

fn cmd_heatmap(a: HeatmapArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.input).map_err(at(&a.input))?;
    let records = emit::read_csv(&text)?;
    let title = a.title.unwrap_or_else(|| a.column.name().to_string());
    let mut out = open_output(&a.output, stdout)?;
    emit::emit_svg(&records, a.column, a.scale, &title, &mut out)?;
    Ok(())
}
