//! Command-line front end: synthesis, simulation, Magnus diagnostics,
//! scans, grids, slope fits, and waveform checks.
//!
//! Data goes to stdout, diagnostics to stderr. Exit codes: 0 on success,
//! 2 on usage errors, 1 on computation errors. Human-readable numbers are
//! printed at 12 significant digits; `--json` output keeps full precision so
//! it re-serializes byte-identically.

use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::bench;
use crate::error_model::{apply_sequence, ErrorModel, ModelKind, ModelKind2};
use crate::expansion;
use crate::sequences::{self, Sequence};
use crate::shaped;
use crate::su2::{fidelity, infidelity};
use crate::Result;

#[derive(Parser)]
#[command(
    name = "pulseseq",
    about = "Compensating composite pulse sequences: synthesis, simulation, verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a named sequence family and emit its JSON description.
    Synth(SynthArgs),
    /// Apply a sequence under an error model; print the final unitary and fidelity.
    Simulate(SimulateArgs),
    /// Interaction-frame Magnus terms of a sequence under a model.
    Terms(TermsArgs),
    /// Error-vector path on su(2) as CSV.
    Path(PathArgs),
    /// One-dimensional infidelity scan as CSV (or JSON).
    Scan(ScanArgs),
    /// Two-dimensional simultaneous-error grid as long-format CSV.
    Grid(GridArgs),
    /// Infidelity slope fit (JSON summary).
    Slope(SlopeArgs),
    /// First-order compensation residuals and propagation of a waveform.
    WaveformCheck(WaveformCheckArgs),
    /// Convert between sequence and waveform file formats.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Amplitude,
    PulseLength,
    Addressing,
    Detuning,
    AmplitudeDetuning,
    PulseLengthDetuning,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model2Arg {
    AmplitudeDetuning,
    PulseLengthDetuning,
}

impl Model2Arg {
    fn kind(self) -> ModelKind2 {
        match self {
            Model2Arg::AmplitudeDetuning => ModelKind2::AmplitudeDetuning,
            Model2Arg::PulseLengthDetuning => ModelKind2::PulseLengthDetuning,
        }
    }
}

/// Where a sequence comes from: a family synthesis or an explicit pulse list.
#[derive(Args, Clone)]
struct SeqSource {
    /// Catalog family name (sk1, sk2, sk2-rhombus, sk3, sk4, b2, n2, p2,
    /// b4, n4, p4, b6, n6, p6, corpse, corpse2, b2corpse, plain).
    #[arg(long)]
    family: Option<String>,
    /// Target rotation angle in radians (degrees with --degrees).
    #[arg(long)]
    theta: Option<f64>,
    /// Phase advance applied to the synthesized sequence.
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Interpret --theta/--phi in degrees.
    #[arg(long)]
    degrees: bool,
    /// Inline plain-text pulse list: "theta@phi theta@phi ...".
    #[arg(long)]
    pulses: Option<String>,
    /// Read a sequence JSON description from stdin.
    #[arg(long)]
    stdin: bool,
    /// Read a sequence JSON description from a file.
    #[arg(long)]
    seq_file: Option<PathBuf>,
}

impl SeqSource {
    fn resolve(&self) -> Result<Sequence> {
        if self.stdin {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            return Ok(serde_json::from_str(&text)?);
        }
        if let Some(path) = &self.seq_file {
            let text = std::fs::read_to_string(path)?;
            return Ok(serde_json::from_str(&text)?);
        }
        if let Some(pulses) = &self.pulses {
            return Sequence::from_plain_text(pulses);
        }
        let family = self.family.as_deref().ok_or_else(|| {
            crate::Error::Parse("provide --family, --pulses, --stdin or --seq-file".into())
        })?;
        let scale = if self.degrees { std::f64::consts::PI / 180.0 } else { 1.0 };
        let theta = self.theta.ok_or_else(|| {
            crate::Error::Parse("synthesis requires --theta".into())
        })? * scale;
        let seq = sequences::synthesize(family, theta)?;
        let phi = self.phi * scale;
        if phi != 0.0 {
            sequences::retarget(&seq, &crate::su2::rotation(theta, phi))
        } else {
            Ok(seq)
        }
    }
}

/// Error-model flags shared by the simulation-style commands.
#[derive(Args, Clone, Copy)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Primary error parameter (amplitude/pulse-length/addressing/Ising).
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Detuning parameter for the detuning-family models.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Addressing model: probe the addressed spin instead of the neighbour.
    #[arg(long)]
    addressed: bool,
}

impl ModelArgs {
    fn build(&self) -> ErrorModel {
        match self.model {
            ModelArg::Amplitude => ErrorModel::Amplitude { eps: self.eps },
            ModelArg::PulseLength => ErrorModel::PulseLength { eps: self.eps },
            ModelArg::Addressing => ErrorModel::Addressing {
                eps: self.eps,
                addressed: self.addressed,
            },
            ModelArg::Detuning => ErrorModel::Detuning {
                delta: if self.delta != 0.0 { self.delta } else { self.eps },
            },
            ModelArg::AmplitudeDetuning => ErrorModel::AmplitudeDetuning {
                eps: self.eps,
                delta: self.delta,
            },
            ModelArg::PulseLengthDetuning => ErrorModel::PulseLengthDetuning {
                eps: self.eps,
                delta: self.delta,
            },
        }
    }

    fn kind(&self) -> Result<ModelKind> {
        Ok(match self.model {
            ModelArg::Amplitude => ModelKind::Amplitude,
            ModelArg::PulseLength => ModelKind::PulseLength,
            ModelArg::Addressing => ModelKind::Addressing,
            ModelArg::Detuning => ModelKind::Detuning,
            _ => {
                return Err(crate::Error::Parse(
                    "scans and slopes take a one-parameter model".into(),
                ))
            }
        })
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Family name (positional): sk1, b2, corpse, ...
    family: String,
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long)]
    degrees: bool,
    /// Emit the one-line plain-text pulse list instead of JSON.
    #[arg(long)]
    plain: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SeqSource,
    #[command(flatten)]
    model: ModelArgs,
    /// Machine-readable JSON output.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TermsArgs {
    #[command(flatten)]
    source: SeqSource,
    #[command(flatten)]
    model: ModelArgs,
    /// Magnus depth (2 or 3).
    #[arg(long, default_value_t = 2)]
    depth: u32,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    source: SeqSource,
    #[command(flatten)]
    model: ModelArgs,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    source: SeqSource,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    json: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    source: SeqSource,
    #[arg(long, value_enum)]
    model: Model2Arg,
    #[arg(long)]
    min: Option<f64>,
    #[arg(long)]
    max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SlopeArgs {
    #[command(flatten)]
    source: SeqSource,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct WaveformCheckArgs {
    /// Sampled waveform CSV ("t,u_x" rows).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Fourier waveform JSON ({"tau": .., "a": [..], "b": [..]}).
    #[arg(long)]
    fourier: Option<PathBuf>,
    /// Built-in CORPSE waveform for this target angle.
    #[arg(long)]
    corpse_theta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    SeqJson,
    SeqPlain,
    WaveCsv,
    WaveJson,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input file ("-" for stdin).
    #[arg(long)]
    input: String,
    #[arg(long, value_enum)]
    from: FileFormat,
    #[arg(long, value_enum)]
    to: FileFormat,
    /// Samples used when rendering Fourier waveforms to CSV.
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Optional defaults file pointed to by `PULSE_CONFIG`.
#[derive(Deserialize, Default)]
struct Config {
    eps_min: Option<f64>,
    eps_max: Option<f64>,
    points: Option<usize>,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_points: Option<usize>,
    steps: Option<usize>,
}

fn load_config() -> Config {
    match std::env::var("PULSE_CONFIG") {
        Ok(path) => match std::fs::read_to_string(&path)
            .map_err(crate::Error::from)
            .and_then(|t| serde_json::from_str(&t).map_err(crate::Error::from))
        {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("warning: ignoring PULSE_CONFIG ({e})");
                Config::default()
            }
        },
        Err(_) => Config::default(),
    }
}

fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000".into();
    }
    format!("{x:.11e}")
}

fn emit(text: String, output: &Option<PathBuf>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn warn_regime(model: &ErrorModel) {
    if !model.in_series_regime() {
        eprintln!("warning: error parameters outside the |eps| < 1 series regime");
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let scale = if a.degrees { std::f64::consts::PI / 180.0 } else { 1.0 };
    let seq = sequences::synthesize(&a.family, a.theta * scale)?;
    let seq = if a.phi != 0.0 {
        sequences::retarget(&seq, &crate::su2::rotation(a.theta * scale, a.phi * scale))?
    } else {
        seq
    };
    if a.plain {
        println!("{}", seq.to_plain_text()?);
    } else {
        println!("{}", serde_json::to_string(&seq)?);
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let seq = a.source.resolve()?;
    let model = a.model.build();
    warn_regime(&model);
    let u = apply_sequence(&seq, &model)?;
    let f = fidelity(&seq.target, &u);
    if a.json {
        let out = serde_json::json!({
            "family": seq.family,
            "model": model,
            "final": u,
            "fidelity": f,
            "infidelity": infidelity(&seq.target, &u),
        });
        println!("{}", serde_json::to_string(&out)?);
    } else {
        let e = u.entries();
        println!("final unitary:");
        for row in e {
            println!(
                "  [{} {}i, {} {}i]",
                sig12(row[0].re),
                sig12(row[0].im),
                sig12(row[1].re),
                sig12(row[1].im)
            );
        }
        println!("fidelity {f:.12}");
    }
    Ok(())
}

fn cmd_terms(a: &TermsArgs) -> Result<()> {
    let seq = a.source.resolve()?;
    let model = a.model.build();
    let t = expansion::interaction_terms_depth(&seq, &model, a.depth.clamp(2, 3))?;
    if a.json {
        println!("{}", serde_json::to_string(&t)?);
    } else {
        println!(
            "omega1 ({}, {}, {})",
            sig12(t.omega1.x),
            sig12(t.omega1.y),
            sig12(t.omega1.z)
        );
        println!(
            "omega2 ({}, {}, {})",
            sig12(t.omega2.x),
            sig12(t.omega2.y),
            sig12(t.omega2.z)
        );
        if let Some(o3) = t.omega3 {
            println!("omega3 ({}, {}, {})", sig12(o3.x), sig12(o3.y), sig12(o3.z));
        }
        println!("truncation_estimate {}", sig12(t.truncation_estimate));
    }
    Ok(())
}

fn cmd_path(a: &PathArgs) -> Result<()> {
    let seq = a.source.resolve()?;
    let p = expansion::path(&seq, &a.model.build())?;
    emit(p.to_csv(), &a.output)
}

fn cmd_scan(a: &ScanArgs, cfg: &Config) -> Result<()> {
    let seq = a.source.resolve()?;
    let kind = a.model.kind()?;
    let grid = bench::log_grid(
        a.eps_min.or(cfg.eps_min).unwrap_or(1e-4),
        a.eps_max.or(cfg.eps_max).unwrap_or(1e-1),
        a.points.or(cfg.points).unwrap_or(25),
    );
    let r = bench::scan(&seq, kind, &grid)?;
    if a.json {
        emit(format!("{}\n", serde_json::to_string(&r)?), &a.output)
    } else {
        emit(r.to_csv(), &a.output)
    }
}

fn cmd_grid(a: &GridArgs, cfg: &Config) -> Result<()> {
    let seq = a.source.resolve()?;
    let lin = bench::linear_grid(
        a.min.or(cfg.grid_min).unwrap_or(-0.3),
        a.max.or(cfg.grid_max).unwrap_or(0.3),
        a.points.or(cfg.grid_points).unwrap_or(41),
    );
    let r = bench::grid2(&seq, a.model.kind(), &lin, &lin)?;
    emit(r.to_csv(), &a.output)
}

fn cmd_slope(a: &SlopeArgs) -> Result<()> {
    let seq = a.source.resolve()?;
    let fit = bench::slope_of(&seq, a.model.kind()?)?;
    println!("{}", serde_json::to_string(&fit)?);
    Ok(())
}

fn load_waveform(a: &WaveformCheckArgs) -> Result<shaped::Waveform> {
    if let Some(path) = &a.csv {
        return shaped::Waveform::from_csv(&std::fs::read_to_string(path)?);
    }
    if let Some(path) = &a.fourier {
        return Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?);
    }
    if let Some(theta) = a.corpse_theta {
        return shaped::corpse_waveform(theta);
    }
    Err(crate::Error::Parse(
        "provide --csv, --fourier or --corpse-theta".into(),
    ))
}

fn cmd_waveform_check(a: &WaveformCheckArgs, cfg: &Config) -> Result<()> {
    let w = load_waveform(a)?;
    let steps = a.steps.or(cfg.steps).unwrap_or(shaped::DEFAULT_STEPS);
    let (c, s) = shaped::first_order_residuals(&w);
    let theta = shaped::accumulated_angle(&w, w.tau())?;
    let u = shaped::propagate(&w, a.delta, steps);
    let f = fidelity(&crate::su2::rotation(theta, 0.0), &u);
    if a.json {
        let out = serde_json::json!({
            "tau": w.tau(),
            "total_angle": theta,
            "residual_cos": c,
            "residual_sin": s,
            "delta": a.delta,
            "steps": steps,
            "fidelity": f,
        });
        println!("{}", serde_json::to_string(&out)?);
    } else {
        println!("tau {}", sig12(w.tau()));
        println!("total_angle {}", sig12(theta));
        println!("residual_cos {}", sig12(c));
        println!("residual_sin {}", sig12(s));
        println!("fidelity at delta {} with {} steps: {f:.12}", a.delta, steps);
    }
    Ok(())
}

fn cmd_convert(a: &ConvertArgs) -> Result<()> {
    let text = if a.input == "-" {
        let mut t = String::new();
        std::io::stdin().read_to_string(&mut t)?;
        t
    } else {
        std::fs::read_to_string(&a.input)?
    };
    let out = match (a.from, a.to) {
        (FileFormat::SeqJson, FileFormat::SeqPlain) => {
            let seq: Sequence = serde_json::from_str(&text)?;
            format!("{}\n", seq.to_plain_text()?)
        }
        (FileFormat::SeqPlain, FileFormat::SeqJson) => {
            let seq = Sequence::from_plain_text(text.trim())?;
            format!("{}\n", serde_json::to_string(&seq)?)
        }
        (FileFormat::WaveCsv, FileFormat::WaveJson) => {
            let w = shaped::Waveform::from_csv(&text)?;
            format!("{}\n", serde_json::to_string(&w)?)
        }
        (FileFormat::WaveJson, FileFormat::WaveCsv) => {
            let w: shaped::Waveform = serde_json::from_str(&text)?;
            let rendered = match w {
                shaped::Waveform::Samples { .. } => w,
                shaped::Waveform::Fourier { .. } => w.render_samples(a.samples)?,
            };
            rendered.to_csv()?
        }
        (FileFormat::SeqJson, FileFormat::SeqJson)
        | (FileFormat::WaveJson, FileFormat::WaveJson) => text,
        (FileFormat::SeqPlain, FileFormat::SeqPlain)
        | (FileFormat::WaveCsv, FileFormat::WaveCsv) => text,
        _ => {
            return Err(crate::Error::Parse(
                "unsupported conversion between sequence and waveform formats".into(),
            ))
        }
    };
    emit(out, &a.output)
}

/// Parse arguments and run. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = load_config();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Terms(a) => cmd_terms(a),
        Command::Path(a) => cmd_path(a),
        Command::Scan(a) => cmd_scan(a, &cfg),
        Command::Grid(a) => cmd_grid(a, &cfg),
        Command::Slope(a) => cmd_slope(a),
        Command::WaveformCheck(a) => cmd_waveform_check(a, &cfg),
        Command::Convert(a) => cmd_convert(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
