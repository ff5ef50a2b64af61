use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use hadamard_nmr::pulsekit::PulseSequence;
use hadamard_nmr::qip2d::{
    assemble_2d, correlation_map, run_conventional, run_hadamard_2d, transform_conventional,
    Acquisition, CorrelationMap, EncodedSet, EncodingMode, GateSpec, DEFAULT_THRESHOLD,
};
use hadamard_nmr::specproc::{pick_peaks_above, write_grid_csv, Spectrum2D};
use hadamard_nmr::spinsys::{presets, SpinSystem, SpinSystemConfig, TransitionTable};
use hadamard_nmr::Error;
use serde::Serialize;

use crate::output::{config_hash, resolve_out, write_json};
use crate::{AmbiguousMap, UsageError};

#[derive(Debug, Subcommand)]
pub enum GateCommand {
    /// Simulate a gate experiment and print its correlation map.
    Run(RunArgs),
    /// Decode a stored Hadamard-encoded set and print its correlation map.
    Decode(DecodeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Conventional,
    Hadamard,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Preset name or spin system file.
    #[arg(long, default_value = "c2f3i")]
    system: String,
    /// Library gate name.
    #[arg(
        long,
        required_unless_present = "gate_file",
        conflicts_with = "gate_file"
    )]
    gate: Option<String>,
    /// Pulse sequence file implementing a custom gate.
    #[arg(long)]
    gate_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Hadamard)]
    method: Method,
    /// Encoding of the Hadamard method: mf or j. Defaults to mf.
    #[arg(long)]
    encoding: Option<String>,
    /// Number of t1 increments of the conventional method.
    #[arg(long, default_value_t = 128)]
    t1: usize,
    /// Peak threshold relative to the 2D maximum.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Override the number of t2 points.
    #[arg(long)]
    points: Option<usize>,
    /// Override the t2 dwell time in seconds.
    #[arg(long)]
    dwell: Option<f64>,
    /// Override the line broadening in Hz.
    #[arg(long)]
    linewidth: Option<f64>,
    /// Output directory [default: <out-root>/gate-<system>-<gate>-<method>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Directory holding manifest.json and the encoded series.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Where to write the spectrum and map [default: the data directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    system: SpinSystemConfig,
    gate: String,
    gate_sequence: Option<String>,
    method: Method,
    encoding: Option<EncodingMode>,
    t1_increments: Option<usize>,
    acquisition: Acquisition,
    threshold: f64,
    #[serde(skip)]
    system_name: &'a str,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig<'a>,
    config_hash: &'a str,
    acquisitions: usize,
    files: Vec<&'static str>,
    map: Option<&'a CorrelationMap>,
}

pub fn run(cmd: GateCommand, out_root: &Path) -> Result<()> {
    match cmd {
        GateCommand::Run(args) => run_gate(args, out_root),
        GateCommand::Decode(args) => decode(args),
    }
}

pub fn load_system(name: &str) -> Result<SpinSystem> {
    if let Some(sys) = presets::by_name(name) {
        return Ok(sys);
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(UsageError(format!(
            "unknown system {name:?}: not a preset ({}) and no such file",
            presets::NAMES.join(", ")
        ))
        .into());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = SpinSystemConfig::parse(&text)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    config
        .build()
        .map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
}

fn usage_if_gate_error(e: Error) -> anyhow::Error {
    match e {
        Error::UnknownGate(_)
        | Error::GateUnsupported { .. }
        | Error::Parse { .. }
        | Error::InvalidLabel(_) => UsageError(e.to_string()).into(),
        other => other.into(),
    }
}

fn run_gate(args: RunArgs, out_root: &Path) -> Result<()> {
    let system = load_system(&args.system)?;
    let table = system.transition_table()?;
    let (gate, gate_sequence) = match (&args.gate, &args.gate_file) {
        (Some(name), _) => (
            GateSpec::library(name, &system).map_err(usage_if_gate_error)?,
            None,
        ),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| UsageError(format!("gate file {}: {e}", path.display())))?;
            let seq = PulseSequence::parse(&text, &system).map_err(usage_if_gate_error)?;
            let name = path
                .file_stem()
                .map_or("custom".into(), |s| s.to_string_lossy().into_owned());
            (GateSpec::from_sequence(&name, seq), Some(text))
        }
        (None, None) => {
            return Err(UsageError("one of --gate or --gate-file is required".into()).into())
        }
    };
    let encoding = match (args.method, &args.encoding) {
        (Method::Conventional, Some(_)) => {
            return Err(UsageError("--encoding only applies to --method hadamard".into()).into())
        }
        (Method::Conventional, None) => None,
        (Method::Hadamard, e) => Some(
            e.as_deref()
                .unwrap_or("mf")
                .parse::<EncodingMode>()
                .map_err(|e| UsageError(e.to_string()))?,
        ),
    };
    if args.method == Method::Conventional && args.t1 < 2 {
        return Err(UsageError("--t1 must be at least 2".into()).into());
    }
    if !(args.threshold > 0.0 && args.threshold < 1.0) {
        return Err(UsageError("--threshold must lie in (0, 1)".into()).into());
    }
    let mut acq = Acquisition::default_for(&table);
    acq.n_points = args.points.unwrap_or(acq.n_points);
    acq.dwell = args.dwell.unwrap_or(acq.dwell);
    acq.linewidth_hz = args.linewidth.unwrap_or(acq.linewidth_hz);

    let config = RunConfig {
        command: "gate run",
        system: SpinSystemConfig::from(&system),
        gate: gate.name(),
        gate_sequence,
        method: args.method,
        encoding,
        t1_increments: (args.method == Method::Conventional).then_some(args.t1),
        acquisition: acq,
        threshold: args.threshold,
        system_name: &args.system,
    };
    let hash = config_hash(&config);
    let default_name = format!(
        "gate-{}-{}-{}",
        sanitize(config.system_name),
        sanitize(&config.gate),
        match args.method {
            Method::Conventional => "conventional",
            Method::Hadamard => "hadamard",
        }
    );
    let out = resolve_out(args.out, out_root, &default_name);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let (spec, acquisitions, mut files) = match encoding {
        Some(mode) => {
            let mut set = run_hadamard_2d(&system, &gate, &acq, mode)?;
            set.config_hash = Some(hash.clone());
            set.save(&out.join("raw"))?;
            let spec = assemble_2d(&set.decode()?, &table, acq.zero_fill)?;
            (spec, set.acquisitions(), vec!["raw/manifest.json"])
        }
        None => {
            let raw = run_conventional(&system, &gate, args.t1, acq.dwell, &acq)?;
            let full = transform_conventional(&raw, &acq)?;
            let raw_dir = out.join("raw");
            fs::create_dir_all(&raw_dir)
                .with_context(|| format!("creating {}", raw_dir.display()))?;
            for (j, row) in raw.signal.iter().enumerate() {
                hadamard_nmr::specproc::TimeSeries::new(acq.dwell, row.clone())?
                    .write_binary(&raw_dir.join(format!("fid_{j:03}.bin")))?;
            }
            let names: Vec<String> = (0..full.f1_axis.len()).map(|i| i.to_string()).collect();
            write_grid_csv(
                &out.join("spectrum2d_full.csv"),
                &names,
                &full.f1_axis,
                &full.f2_axis,
                &full.magnitudes(),
            )?;
            (
                full.rows_at(&table),
                raw.acquisitions,
                vec!["raw/fid_*.bin", "spectrum2d_full.csv"],
            )
        }
    };
    spec.write_csv(&out.join("spectrum2d.csv"))?;
    files.push("spectrum2d.csv");
    let map = finish_map(&spec, &table, args.threshold, &out)?;
    files.push("correlation.json");
    files.push("manifest.json");
    write_json(
        &out.join("manifest.json"),
        &RunManifest {
            tool: "hnmr",
            version: env!("CARGO_PKG_VERSION"),
            config: &config,
            config_hash: &hash,
            acquisitions,
            files,
            map: map.as_ref(),
        },
    )?;
    println!(
        "gate {} on {} [{}]: {} acquisitions",
        config.gate,
        args.system,
        method_name(args.method, encoding),
        acquisitions
    );
    report_map(map, &out)
}

fn decode(args: DecodeArgs) -> Result<()> {
    if !args.data.join("manifest.json").is_file() {
        return Err(UsageError(format!("no encoded data set at {}", args.data.display())).into());
    }
    let set = EncodedSet::load(&args.data)?;
    let table = set.table()?;
    let spec = assemble_2d(&set.decode()?, &table, set.acquisition.zero_fill)?;
    let out = args.out.unwrap_or_else(|| args.data.clone());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    spec.write_csv(&out.join("spectrum2d.csv"))?;
    let map = finish_map(&spec, &table, args.threshold, &out)?;
    println!("gate {} ({} acquisitions)", set.gate, set.acquisitions());
    report_map(map, &out)
}

/// Writes correlation.json on success; on an ambiguous row returns `None`
/// after printing the peak count of every row.
fn finish_map(
    spec: &Spectrum2D,
    table: &TransitionTable,
    threshold: f64,
    out: &Path,
) -> Result<Option<CorrelationMap>> {
    match correlation_map(spec, table, threshold) {
        Ok(map) => {
            write_json(&out.join("correlation.json"), &map)?;
            Ok(Some(map))
        }
        Err(Error::AmbiguousRow { .. }) => {
            let max = spec.max_magnitude();
            for (i, (label, f1)) in spec.f1_labels.iter().enumerate() {
                let row = spec.row_spectrum(i);
                let peaks = pick_peaks_above(&row, &row.magnitudes(), threshold, max)?;
                let at: Vec<String> = peaks.iter().map(|p| format!("{:.3}", p.freq_hz)).collect();
                eprintln!(
                    "row {label} (F1 {f1:.3} Hz): {} peak(s) [{}]",
                    peaks.len(),
                    at.join(", ")
                );
            }
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn report_map(map: Option<CorrelationMap>, out: &Path) -> Result<()> {
    match map {
        Some(map) => {
            print!("{}", map.to_table_string());
            println!("artifacts: {}", out.display());
            Ok(())
        }
        None => Err(AmbiguousMap("correlation map is ambiguous".into()).into()),
    }
}

fn method_name(method: Method, encoding: Option<EncodingMode>) -> &'static str {
    match (method, encoding) {
        (Method::Conventional, _) => "conventional",
        (Method::Hadamard, Some(EncodingMode::JEvolution)) => "hadamard, J-evolution encoding",
        (Method::Hadamard, _) => "hadamard, MF-pi encoding",
    }
}

fn sanitize(s: &str) -> String {
    let name = Path::new(s)
        .file_stem()
        .map_or(s.into(), |f| f.to_string_lossy().into_owned());
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

pub fn print_presets() -> Result<()> {
    for name in presets::NAMES {
        let sys = presets::by_name(name).expect("bundled preset");
        println!(
            "{name}: {} spins, observer spin {}",
            sys.n_spins(),
            sys.observer_index()
        );
        for (label, f) in sys.transition_table()?.entries() {
            println!("  {label}  {f:>9.3} Hz");
        }
    }
    Ok(())
}
