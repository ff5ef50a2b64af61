//! Two-dimensional gate experiments: the conventional t₁-incremented method
//! and the Hadamard-encoded method, plus 2D assembly and correlation maps.

pub mod gates;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hadamard::{
    decode, hadamard_matrix, schedule_for_row, HadamardMatrix, HadamardSchedule,
};
use crate::liouville::{
    apply_unitary, crush_coherences, evolve, observer_equilibrium, DensityOperator,
};
use crate::pulsekit::{hard_pulse, j_evolution_encoding, mf_pi_pulse, Phase};
use crate::specproc::{
    centered_axis, fft_shifted, pick_peaks_above, spectrum_1d_zero_filled, synthesize_fid,
    Spectrum2D, TimeSeries,
};
use crate::spinsys::{SpinSystem, SpinSystemConfig, TransitionTable, WorkLabel};

pub use gates::{GateKind, GateSpec};

/// Default peak-picking threshold, as a fraction of the 2D maximum.
pub const DEFAULT_THRESHOLD: f64 = 0.3;

/// Direct-dimension (t₂) acquisition parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub n_points: usize,
    pub dwell: f64,
    /// Exponential line broadening in Hz.
    pub linewidth_hz: f64,
    pub zero_fill: usize,
}

impl Acquisition {
    /// 512 points at 1 ms for wide tables, 2048 points at 10 ms when every
    /// line sits within ±45 Hz.
    pub fn default_for(table: &TransitionTable) -> Self {
        let span = table
            .entries()
            .iter()
            .map(|(_, f)| f.abs())
            .fold(0.0, f64::max);
        if span < 45.0 {
            Self {
                n_points: 2048,
                dwell: 10e-3,
                linewidth_hz: 1.0,
                zero_fill: 2,
            }
        } else {
            let dwell = if span < 400.0 {
                1e-3
            } else {
                1.0 / (5.0 * span)
            };
            Self {
                n_points: 512,
                dwell,
                linewidth_hz: 1.0,
                zero_fill: 2,
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_points < 4
            || !(self.dwell > 0.0)
            || !(self.linewidth_hz >= 0.0)
            || self.zero_fill == 0
        {
            return Err(Error::InvalidArgument(format!(
                "bad acquisition parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Raw conventional data: one t₂ FID per t₁ increment.
#[derive(Clone, Debug, PartialEq)]
pub struct RawData2D {
    pub t1_grid: Vec<f64>,
    pub t2_grid: Vec<f64>,
    pub signal: Vec<Vec<Complex64>>,
    /// Number of separate acquisitions the experiment needed.
    pub acquisitions: usize,
}

/// Conventional 2D experiment: (π/2)_y – t₁ – (π/2)_φ – crusher – gate –
/// (π/2)_y – acquire. The second pulse starts at −y, which leaves
/// cos(ω_s t₁) on I_z^O, and advances by −90° per increment (TPPI) so that the
/// real t₁ modulation still discriminates the sign of ω_s.
pub fn run_conventional(
    system: &SpinSystem,
    gate: &GateSpec,
    n_t1: usize,
    dwell_t1: f64,
    acq: &Acquisition,
) -> Result<RawData2D> {
    acq.validate()?;
    if n_t1 < 2 || !(dwell_t1 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad t1 sampling: {n_t1} x {dwell_t1}"
        )));
    }
    let obs = system.observer_index();
    let u_gate = gate.unitary(system)?;
    let excite = hard_pulse(system, obs, FRAC_PI_2, Phase::Y)?;
    let eq = observer_equilibrium(system);
    let after_excite = apply_unitary(&eq, &excite)?;
    let t1_grid: Vec<f64> = (0..n_t1).map(|j| j as f64 * dwell_t1).collect();
    let signal = t1_grid
        .par_iter()
        .enumerate()
        .map(|(j, &t1)| -> Result<Vec<Complex64>> {
            let labeled = evolve(&after_excite, system, t1)?;
            let store_phase = Phase::Radians(-FRAC_PI_2 - j as f64 * FRAC_PI_2);
            let stored = crush_coherences(&apply_unitary(
                &labeled,
                &hard_pulse(system, obs, FRAC_PI_2, store_phase)?,
            )?);
            let computed = apply_unitary(&stored, &u_gate)?;
            let read = apply_unitary(&computed, &excite)?;
            let fid = synthesize_fid(&read, system, acq.n_points, acq.dwell, acq.linewidth_hz)?;
            Ok(fid.points().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawData2D {
        t1_grid,
        t2_grid: (0..acq.n_points).map(|n| n as f64 * acq.dwell).collect(),
        signal,
        acquisitions: n_t1,
    })
}

/// Fully transformed conventional spectrum, F₁ × F₂.
#[derive(Clone, Debug, PartialEq)]
pub struct ConventionalSpectrum {
    pub f1_axis: Vec<f64>,
    pub f2_axis: Vec<f64>,
    pub grid: Vec<Vec<Complex64>>,
}

impl ConventionalSpectrum {
    /// F₂ rows at the F₁ bins nearest each transition frequency.
    pub fn rows_at(&self, table: &TransitionTable) -> Spectrum2D {
        let mut f1_labels = Vec::new();
        let mut rows = Vec::new();
        for &(s, f) in table.entries() {
            let idx = self
                .f1_axis
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
                .map(|(i, _)| i)
                .expect("non-empty axis");
            f1_labels.push((s, f));
            rows.push(self.grid[idx].clone());
        }
        Spectrum2D::new(f1_labels, self.f2_axis.clone(), rows).expect("consistent grid")
    }

    pub fn magnitudes(&self) -> Vec<Vec<f64>> {
        self.grid
            .iter()
            .map(|r| r.iter().map(|z| z.norm()).collect())
            .collect()
    }
}

/// Two-dimensional Fourier transform of TPPI data with exponential
/// apodization in t₁ and zero-filling in both dimensions.
pub fn transform_conventional(raw: &RawData2D, acq: &Acquisition) -> Result<ConventionalSpectrum> {
    let n_t1 = raw.signal.len();
    if n_t1 < 2 || raw.t1_grid.len() != n_t1 {
        return Err(Error::InvalidArgument(
            "conventional data needs at least two t1 increments".into(),
        ));
    }
    let dwell_t1 = raw.t1_grid[1] - raw.t1_grid[0];
    let zf = acq.zero_fill.max(1);
    let n2 = raw.t2_grid.len() * zf;
    let rows: Vec<Vec<Complex64>> = raw
        .signal
        .iter()
        .zip(&raw.t1_grid)
        .map(|(row, &t1)| {
            let w = (-PI * acq.linewidth_hz * t1).exp();
            let mut buf: Vec<Complex64> = row.iter().map(|z| z * w).collect();
            buf.resize(n2, Complex64::default());
            fft_shifted(&mut buf);
            buf
        })
        .collect();
    let m = n_t1 * zf;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    // TPPI: keep the non-negative half and undo the SW/4 offset
    let half = m / 2;
    let offset = 1.0 / (4.0 * dwell_t1);
    let df1 = 1.0 / (m as f64 * dwell_t1);
    let f1_axis: Vec<f64> = (0..half).map(|k| k as f64 * df1 - offset).collect();
    let mut grid = vec![vec![Complex64::default(); n2]; half];
    let mut col = vec![Complex64::default(); m];
    for k2 in 0..n2 {
        col.iter_mut().for_each(|z| *z = Complex64::default());
        for (j, row) in rows.iter().enumerate() {
            col[j] = row[k2];
        }
        fft.process(&mut col);
        for (k1, out) in grid.iter_mut().enumerate() {
            out[k2] = col[k1];
        }
    }
    Ok(ConventionalSpectrum {
        f1_axis,
        f2_axis: centered_axis(n2, acq.dwell),
        grid,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodingMode {
    /// Multi-frequency π pulse on the "−" observer lines.
    MfPulse,
    /// Product operators prepared by J evolution.
    JEvolution,
}

impl std::str::FromStr for EncodingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" | "mf_pulse" | "mf-pulse" | "mfpulse" => Ok(EncodingMode::MfPulse),
            "j" | "j_evolution" | "j-evolution" | "jevolution" => Ok(EncodingMode::JEvolution),
            other => Err(Error::InvalidArgument(format!(
                "unknown encoding {other:?}"
            ))),
        }
    }
}

/// One row of an encoded experiment set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedRow {
    #[serde(flatten)]
    pub schedule: HadamardSchedule,
    pub signs: Vec<i8>,
    /// ±1 applied to the recorded FID before decoding, so that the prepared
    /// state matches the row rather than its negation.
    pub response_sign: f64,
    pub file: String,
}

/// k Hadamard-encoded acquisitions and everything needed to decode them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedSet {
    pub format: String,
    pub system: SpinSystemConfig,
    pub gate: String,
    pub encoding: EncodingMode,
    pub k: usize,
    pub label_order: Vec<WorkLabel>,
    pub transition_frequencies_hz: Vec<f64>,
    pub acquisition: Acquisition,
    pub rows: Vec<EncodedRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip)]
    pub fids: Vec<TimeSeries>,
}

const ENCODED_SET_FORMAT: &str = "hadamard-encoded-set/1";

impl EncodedSet {
    pub fn acquisitions(&self) -> usize {
        self.fids.len()
    }

    pub fn hadamard(&self) -> Result<HadamardMatrix> {
        hadamard_matrix(self.k)
    }

    /// Writes `manifest.json` and one binary series file per row.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (row, fid) in self.rows.iter().zip(&self.fids) {
            fid.write_binary(&dir.join(&row.file))?;
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.clone(),
            source: e,
        })?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut set: EncodedSet = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.clone(),
            source: e,
        })?;
        if set.format != ENCODED_SET_FORMAT {
            return Err(Error::Format {
                path,
                msg: format!("unexpected format {:?}", set.format),
            });
        }
        if set.rows.len() != set.k || set.label_order.len() != set.k {
            return Err(Error::Format {
                path,
                msg: "row count does not match k".into(),
            });
        }
        set.fids = set
            .rows
            .iter()
            .map(|r| TimeSeries::read_binary(&dir.join(&r.file)))
            .collect::<Result<_>>()?;
        Ok(set)
    }

    pub fn table(&self) -> Result<TransitionTable> {
        self.system.build()?.transition_table()
    }

    /// Per-input time series, in label order.
    pub fn decode(&self) -> Result<Vec<(WorkLabel, TimeSeries)>> {
        let h = self.hadamard()?;
        let responses: Vec<Vec<Complex64>> = self
            .fids
            .iter()
            .zip(&self.rows)
            .map(|(fid, row)| fid.points().iter().map(|z| z * row.response_sign).collect())
            .collect();
        let dwell = self.acquisition.dwell;
        self.label_order
            .iter()
            .enumerate()
            .map(|(i, &label)| Ok((label, TimeSeries::new(dwell, decode(&responses, &h, i)?)?)))
            .collect()
    }
}

/// Hadamard 2D experiment: for each row of the k×k matrix, encode the
/// observer equilibrium, apply the gate, read out with (π/2)_y and acquire.
pub fn run_hadamard_2d(
    system: &SpinSystem,
    gate: &GateSpec,
    acq: &Acquisition,
    mode: EncodingMode,
) -> Result<EncodedSet> {
    acq.validate()?;
    let table = system.transition_table()?;
    let k = table.len();
    let h = hadamard_matrix(k)?;
    let label_order = table.labels();
    let obs = system.observer_index();
    let u_gate = gate.unitary(system)?;
    let read = hard_pulse(system, obs, FRAC_PI_2, Phase::Y)?;
    let eq = observer_equilibrium(system);

    let rows: Vec<(EncodedRow, TimeSeries)> = (0..k)
        .into_par_iter()
        .map(|r| -> Result<(EncodedRow, TimeSeries)> {
            let schedule = schedule_for_row(&h, r, &label_order)?;
            let encoder = match mode {
                EncodingMode::MfPulse => mf_pi_pulse(system, &table, &schedule.pulse_targets)?,
                EncodingMode::JEvolution => {
                    j_evolution_encoding(system, &schedule.product_operator_tag)?
                }
            };
            let encoded = apply_unitary(&eq, &encoder)?;
            let response_sign = encoding_sign(system, &encoded, h.row(r), &label_order)
                .ok_or(Error::EncodingMismatch { row: r })?;
            let out = apply_unitary(&apply_unitary(&encoded, &u_gate)?, &read)?;
            let fid = synthesize_fid(&out, system, acq.n_points, acq.dwell, acq.linewidth_hz)?;
            let row = EncodedRow {
                signs: h.row(r).to_vec(),
                schedule,
                response_sign,
                file: format!("series_{r:03}.bin"),
            };
            Ok((row, fid))
        })
        .collect::<Result<_>>()?;
    let (rows, fids) = rows.into_iter().unzip();
    Ok(EncodedSet {
        format: ENCODED_SET_FORMAT.into(),
        system: SpinSystemConfig::from(system),
        gate: gate.name(),
        encoding: mode,
        k,
        label_order,
        transition_frequencies_hz: table.entries().iter().map(|(_, f)| *f).collect(),
        acquisition: *acq,
        rows,
        config_hash: None,
        fids,
    })
}

/// +1 if the encoded populations follow `signs`, −1 if they follow the
/// negated row, `None` otherwise.
fn encoding_sign(
    system: &SpinSystem,
    rho: &DensityOperator,
    signs: &[i8],
    labels: &[WorkLabel],
) -> Option<f64> {
    let pattern: Vec<f64> = labels
        .iter()
        .map(|&s| rho.observer_population_sign(system, s))
        .collect();
    [1.0, -1.0].into_iter().find(|&sign| {
        pattern
            .iter()
            .zip(signs)
            .all(|(p, &s)| (p - sign * f64::from(s)).abs() < 1e-9)
    })
}

/// Places each decoded series, transformed in F₂, at F₁ = ω_s.
pub fn assemble_2d(
    decoded: &[(WorkLabel, TimeSeries)],
    table: &TransitionTable,
    zero_fill: usize,
) -> Result<Spectrum2D> {
    let mut f1_labels = Vec::with_capacity(table.len());
    let mut rows = Vec::with_capacity(table.len());
    let mut f2_axis: Option<Vec<f64>> = None;
    for &(s, f) in table.entries() {
        let (_, series) = decoded
            .iter()
            .find(|(l, _)| *l == s)
            .ok_or_else(|| Error::MissingLabel(s.to_string()))?;
        let spec = spectrum_1d_zero_filled(series, zero_fill);
        match &f2_axis {
            None => f2_axis = Some(spec.freq_axis().to_vec()),
            Some(axis) if axis.len() != spec.len() => return Err(Error::AxisMismatch),
            Some(_) => {}
        }
        f1_labels.push((s, f));
        rows.push(spec.intensities().to_vec());
    }
    Spectrum2D::new(f1_labels, f2_axis.unwrap_or_default(), rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub input: WorkLabel,
    pub output: WorkLabel,
    pub f1_hz: f64,
    pub f2_hz: f64,
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMap {
    pub pairs: Vec<CorrelationPair>,
}

impl CorrelationMap {
    /// Output label for each input, in the spectrum's row order.
    pub fn claimed_permutation(&self) -> Vec<WorkLabel> {
        self.pairs.iter().map(|p| p.output).collect()
    }

    pub fn to_table_string(&self) -> String {
        let mut out = String::from("input -> output   F1 (Hz)    F2 (Hz)   intensity\n");
        for p in &self.pairs {
            out.push_str(&format!(
                "{:>5} -> {:<6} {:>9.3} {:>10.3} {:>11.4}\n",
                p.input.to_string(),
                p.output.to_string(),
                p.f1_hz,
                p.f2_hz,
                p.intensity
            ));
        }
        out
    }
}

/// Peak-picks every F₁ row against `threshold`·(2D maximum) and assigns the
/// single peak to the nearest transition in F₂.
pub fn correlation_map(
    spec: &Spectrum2D,
    table: &TransitionTable,
    threshold: f64,
) -> Result<CorrelationMap> {
    let max = spec.max_magnitude();
    let mut pairs = Vec::with_capacity(spec.rows.len());
    for (i, &(input, f1)) in spec.f1_labels.iter().enumerate() {
        let row = spec.row_spectrum(i);
        let peaks = pick_peaks_above(&row, &row.magnitudes(), threshold, max)?;
        if peaks.len() != 1 {
            return Err(Error::AmbiguousRow {
                row: input.to_string(),
                peaks: peaks.len(),
            });
        }
        let (output, _) = table.nearest(peaks[0].freq_hz);
        pairs.push(CorrelationPair {
            input,
            output,
            f1_hz: f1,
            f2_hz: peaks[0].freq_hz,
            intensity: peaks[0].magnitude / max,
        });
    }
    Ok(CorrelationMap { pairs })
}

/// Hadamard-method correlation map of `gate`, end to end.
pub fn hadamard_correlation(
    system: &SpinSystem,
    gate: &GateSpec,
    acq: &Acquisition,
    mode: EncodingMode,
    threshold: f64,
) -> Result<(EncodedSet, Spectrum2D, CorrelationMap)> {
    let set = run_hadamard_2d(system, gate, acq, mode)?;
    let table = system.transition_table()?;
    let spec = assemble_2d(&set.decode()?, &table, acq.zero_fill)?;
    let map = correlation_map(&spec, &table, threshold)?;
    Ok((set, spec, map))
}

/// Conventional-method correlation map of `gate`, end to end.
pub fn conventional_correlation(
    system: &SpinSystem,
    gate: &GateSpec,
    n_t1: usize,
    acq: &Acquisition,
    threshold: f64,
) -> Result<(RawData2D, ConventionalSpectrum, CorrelationMap)> {
    let table = system.transition_table()?;
    let raw = run_conventional(system, gate, n_t1, acq.dwell, acq)?;
    let full = transform_conventional(&raw, acq)?;
    let map = correlation_map(&full.rows_at(&table), &table, threshold)?;
    Ok((raw, full, map))
}
