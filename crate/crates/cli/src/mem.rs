use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Subcommand};
use hadamard_nmr::memsearch::{
    encode_message, record_hadamard_dataset, CipherReport, EncodedDataset, SliceAcquisition,
    SliceRegister,
};
use hadamard_nmr::Error;
use serde::Serialize;

use crate::output::{config_hash, resolve_out, write_json};
use crate::UsageError;

#[derive(Debug, Subcommand)]
pub enum MemCommand {
    /// Record the Hadamard phase-encoded data set of the slice register.
    Record(RecordArgs),
    /// Write a sentence into the register by decoding the stored data set.
    Write(WriteArgs),
    /// XOR-search a sentence for a letter.
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    /// Output directory [default: <out-root>/mem-dataset].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    slices: usize,
    #[arg(long, default_value_t = 50.0)]
    spacing: f64,
    /// Slice linewidth in Hz.
    #[arg(long, default_value_t = 2.0)]
    linewidth: f64,
    /// Half width of each slice's integration band in Hz.
    #[arg(long, default_value_t = 10.0)]
    band: f64,
    /// Standard deviation of additive complex Gaussian noise per FID point.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct WriteArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    text: String,
    /// CSV file receiving the written spectrum.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    text: String,
    /// Letter to search for (a-z).
    #[arg(long)]
    letter: char,
    /// JSON report path [default: <data>/report.json].
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct RecordConfig<'a> {
    command: &'static str,
    register: &'a SliceRegister,
    acquisition: &'a SliceAcquisition,
}

#[derive(Serialize)]
struct SearchOutput<'a> {
    config_hash: String,
    dataset_hash: Option<&'a str>,
    #[serde(flatten)]
    report: &'a CipherReport,
}

pub fn run(cmd: MemCommand, out_root: &Path) -> Result<()> {
    match cmd {
        MemCommand::Record(args) => record(args, out_root),
        MemCommand::Write(args) => write(args),
        MemCommand::Search(args) => search(args),
    }
}

fn usage(e: Error) -> anyhow::Error {
    match e {
        Error::UnsupportedChar(_)
        | Error::MessageOverflow { .. }
        | Error::NotPowerOfTwo(_)
        | Error::InvalidArgument(_) => UsageError(e.to_string()).into(),
        other => other.into(),
    }
}

fn record(args: RecordArgs, out_root: &Path) -> Result<()> {
    let register = SliceRegister::uniform(args.slices, args.spacing).map_err(usage)?;
    let acq = SliceAcquisition {
        linewidth_hz: args.linewidth,
        band_half_width_hz: args.band,
        noise_sigma: args.noise,
        seed: args.seed,
        ..SliceAcquisition::default()
    };
    let mut ds = record_hadamard_dataset(&register, &acq).map_err(usage)?;
    ds.manifest.config_hash = Some(config_hash(&RecordConfig {
        command: "mem record",
        register: &register,
        acquisition: &acq,
    }));
    let out = resolve_out(args.out, out_root, "mem-dataset");
    ds.save(&out)?;
    println!(
        "recorded {} Hadamard-encoded spectra ({} slices, {:.1} Hz spacing) to {}",
        ds.spectra.len(),
        register.n_slices,
        register.spacing_hz,
        out.display()
    );
    Ok(())
}

fn load(dir: &Path) -> Result<EncodedDataset> {
    if !dir.join("manifest.json").is_file() {
        return Err(UsageError(format!(
            "no recorded data set at {} (run `hnmr mem record` first)",
            dir.display()
        ))
        .into());
    }
    Ok(EncodedDataset::load(dir)?)
}

fn write(args: WriteArgs) -> Result<()> {
    let ds = load(&args.data)?;
    let msg = encode_message(&args.text, ds.manifest.k).map_err(usage)?;
    let spec = ds.write_message(&msg)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    spec.write_csv(&args.out)?;
    let read = ds.read_bits(&spec, msg.bits.len())?;
    println!(
        "wrote {} bits ({} ciphers) to {}",
        msg.bits.len(),
        msg.n_ciphers(),
        args.out.display()
    );
    println!("{}", msg.bit_string());
    if read != msg.bits {
        anyhow::bail!("read-back of the written spectrum does not reproduce the message bits");
    }
    Ok(())
}

fn search(args: SearchArgs) -> Result<()> {
    let ds = load(&args.data)?;
    let report = ds.search(&args.text, args.letter).map_err(usage)?;
    let path = args.report.unwrap_or_else(|| args.data.join("report.json"));
    let hash = config_hash(&(
        "mem search",
        &args.text,
        args.letter,
        &ds.manifest.config_hash,
    ));
    write_json(
        &path,
        &SearchOutput {
            config_hash: hash,
            dataset_hash: ds.manifest.config_hash.as_deref(),
            report: &report,
        },
    )?;
    let chars: Vec<char> = args.text.chars().collect();
    println!("cipher  char  intensity");
    for (i, v) in report.intensities.iter().enumerate() {
        let flag = if report.matches.contains(&i) {
            "  match"
        } else if report.complements.contains(&i) {
            "  complement"
        } else {
            ""
        };
        println!("{i:>6}  {:>4}  {v:>9.3}{flag}", format!("{:?}", chars[i]));
    }
    println!("matches: {:?}", report.matches);
    println!("complements: {:?}", report.complements);
    println!("report: {}", path.display());
    Ok(())
}
