//! Spatially encoded 256-bit register: Hadamard phase-encoded acquisitions,
//! message writing by decoding, and the XOR letter search.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hadamard::{fwht, hadamard_matrix, HadamardMatrix};
use crate::pulsekit::Phase;
use crate::specproc::{
    centered_axis, fft_shifted, integrate_band, BandMode, Spectrum1D, SpectrumMeta,
};

pub const BITS_PER_CIPHER: usize = 5;
pub const MATCH_THRESHOLD: f64 = 0.25;
pub const COMPLEMENT_THRESHOLD: f64 = 4.75;

/// Slices along z, each resonating at its own frequency under the gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRegister {
    pub n_slices: usize,
    pub first_hz: f64,
    pub spacing_hz: f64,
    /// Metadata only.
    pub gradient_g_per_cm: f64,
    /// Duration of the shaped excitation pulse; metadata only.
    pub pulse_duration_s: f64,
}

impl Default for SliceRegister {
    /// 256 slices at 50 Hz spacing, centered on zero (±6.4 kHz window).
    fn default() -> Self {
        Self::uniform(256, 50.0).expect("valid default register")
    }
}

impl SliceRegister {
    pub fn uniform(n_slices: usize, spacing_hz: f64) -> Result<Self> {
        if !n_slices.is_power_of_two() || n_slices < 2 {
            return Err(Error::NotPowerOfTwo(n_slices));
        }
        if !(spacing_hz > 0.0 && spacing_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "slice spacing {spacing_hz} Hz"
            )));
        }
        Ok(Self {
            n_slices,
            first_hz: -(n_slices as f64 - 1.0) / 2.0 * spacing_hz,
            spacing_hz,
            gradient_g_per_cm: 25.0,
            pulse_duration_s: 30e-3,
        })
    }

    pub fn frequency(&self, slice: usize) -> f64 {
        self.first_hz + slice as f64 * self.spacing_hz
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_slices).map(|j| self.frequency(j)).collect()
    }
}

/// Lineshape, sampling and noise of the simulated acquisitions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceAcquisition {
    /// Lorentzian full width at half height.
    pub linewidth_hz: f64,
    /// FID length in units of one full period of the slice comb.
    pub periods: usize,
    /// Half width of each slice's integration band.
    pub band_half_width_hz: f64,
    /// Standard deviation of complex Gaussian noise added per FID point.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SliceAcquisition {
    fn default() -> Self {
        Self {
            linewidth_hz: 2.0,
            periods: 64,
            band_half_width_hz: 10.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SliceAcquisition {
    fn validate(&self, register: &SliceRegister) -> Result<()> {
        if !(self.linewidth_hz > 0.0) || self.periods == 0 || !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad slice acquisition {self:?}"
            )));
        }
        if !(self.band_half_width_hz > 0.0 && self.band_half_width_hz < register.spacing_hz / 2.0) {
            return Err(Error::InvalidArgument(format!(
                "band half width {} Hz must lie in (0, {}) Hz",
                self.band_half_width_hz,
                register.spacing_hz / 2.0
            )));
        }
        Ok(())
    }
}

/// Spectrum of Σ_j amplitudes[j]·(slice j line), absorption in the real part.
///
/// The dwell is chosen so the comb is exactly periodic over n_slices points:
/// the FID is the decay envelope times a tiled inverse DFT of the amplitudes.
pub fn synthesize_comb(
    register: &SliceRegister,
    acq: &SliceAcquisition,
    amplitudes: &[f64],
    noise_stream: u64,
) -> Result<Spectrum1D> {
    let k = register.n_slices;
    if amplitudes.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: amplitudes.len(),
        });
    }
    let dwell = 1.0 / (k as f64 * register.spacing_hz);
    let n = k * acq.periods;
    let mut period: Vec<Complex64> = amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    FftPlanner::<f64>::new()
        .plan_fft_inverse(k)
        .process(&mut period);
    let mut fid: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64 * dwell;
            let carrier = Complex64::from_polar(
                (-std::f64::consts::PI * acq.linewidth_hz * t).exp(),
                2.0 * std::f64::consts::PI * register.first_hz * t,
            );
            carrier * period[i % k]
        })
        .collect();
    if acq.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(acq.seed);
        rng.set_stream(noise_stream);
        let normal =
            Normal::new(0.0, acq.noise_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for z in &mut fid {
            *z += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    // halving the first point removes the baseline offset of the real part
    fid[0] *= 0.5;
    fft_shifted(&mut fid);
    let mut spec = Spectrum1D::new(centered_axis(n, dwell), fid)?;
    spec.meta = SpectrumMeta {
        apodization_hz: 0.0,
        zero_fill: 1,
        source: "slice-comb".into(),
    };
    Ok(spec)
}

/// Signed band integral of one isolated unit slice line.
pub fn unit_calibration(register: &SliceRegister, acq: &SliceAcquisition) -> Result<f64> {
    let mid = register.n_slices / 2;
    let mut amps = vec![0.0; register.n_slices];
    amps[mid] = 1.0;
    let clean = SliceAcquisition {
        noise_sigma: 0.0,
        ..*acq
    };
    let spec = synthesize_comb(register, &clean, &amps, 0)?;
    let f = register.frequency(mid);
    integrate_band(
        &spec,
        f - acq.band_half_width_hz,
        f + acq.band_half_width_hz,
        BandMode::Signed,
    )
}

/// y for +1 entries, −y for −1 entries of row `row`.
pub fn phase_schedule(h: &HadamardMatrix, row: usize) -> Result<Vec<Phase>> {
    if row >= h.k() {
        return Err(Error::IndexOutOfRange {
            index: row,
            len: h.k(),
        });
    }
    Ok(h.row(row)
        .iter()
        .map(|&s| if s > 0 { Phase::Y } else { Phase::MinusY })
        .collect())
}

/// One acquisition after the phase-encoded multi-slice excitation.
pub fn acquire_encoded(
    register: &SliceRegister,
    acq: &SliceAcquisition,
    schedule: &[Phase],
    noise_stream: u64,
) -> Result<Spectrum1D> {
    let amps = schedule
        .iter()
        .map(|p| match p {
            Phase::Y => Ok(1.0),
            Phase::MinusY => Ok(-1.0),
            other => Err(Error::InvalidArgument(format!(
                "slice phase must be y or -y, got {other}"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    synthesize_comb(register, acq, &amps, noise_stream)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub k: usize,
    pub register: SliceRegister,
    pub acquisition: SliceAcquisition,
    /// Signed band integral of one unit slice; divides every integral.
    pub calibration: f64,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

const DATASET_FORMAT: &str = "hadamard-slice-dataset/1";

/// k Hadamard phase-encoded spectra of the full register.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDataset {
    pub manifest: DatasetManifest,
    pub spectra: Vec<Spectrum1D>,
}

pub fn record_hadamard_dataset(
    register: &SliceRegister,
    acq: &SliceAcquisition,
) -> Result<EncodedDataset> {
    acq.validate(register)?;
    let k = register.n_slices;
    let h = hadamard_matrix(k)?;
    let calibration = unit_calibration(register, acq)?;
    let spectra = (0..k)
        .into_par_iter()
        .map(|r| {
            let mut s = acquire_encoded(register, acq, &phase_schedule(&h, r)?, r as u64)?;
            s.calibration = calibration;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedDataset {
        manifest: DatasetManifest {
            format: DATASET_FORMAT.into(),
            k,
            register: register.clone(),
            acquisition: *acq,
            calibration,
            files: (0..k).map(|r| format!("spectrum_{r:03}.bin")).collect(),
            config_hash: None,
        },
        spectra,
    })
}

impl EncodedDataset {
    pub fn register(&self) -> &SliceRegister {
        &self.manifest.register
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.manifest
            .files
            .par_iter()
            .zip(&self.spectra)
            .try_for_each(|(f, s)| s.write_binary(&dir.join(f)))?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| Error::Json {
            path: path.clone(),
            source: e,
        })?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.clone(),
            source: e,
        })?;
        if manifest.format != DATASET_FORMAT
            || manifest.files.len() != manifest.k
            || manifest.k != manifest.register.n_slices
        {
            return Err(Error::Format {
                path,
                msg: "inconsistent slice dataset manifest".into(),
            });
        }
        let spectra = manifest
            .files
            .par_iter()
            .map(|f| Spectrum1D::read_binary(&dir.join(f)))
            .collect::<Result<Vec<_>>>()?;
        if spectra.windows(2).any(|w| !w[0].same_axis(&w[1])) {
            return Err(Error::AxisMismatch);
        }
        Ok(Self { manifest, spectra })
    }

    /// Decoded combination with unit intensity on every slice whose bit is
    /// set and nothing elsewhere.
    pub fn write_message(&self, msg: &BinaryMessage) -> Result<Spectrum1D> {
        let k = self.manifest.k;
        if msg.bits.len() > k {
            return Err(Error::MessageOverflow {
                needed: msg.bits.len(),
                available: k,
            });
        }
        let mut weights: Vec<f64> = msg.bits.iter().map(|&b| f64::from(b)).collect();
        weights.resize(k, 0.0);
        fwht(&mut weights);
        let mut out = vec![Complex64::default(); self.spectra[0].len()];
        for (w, spec) in weights.iter().zip(&self.spectra) {
            let w = w / k as f64;
            if w == 0.0 {
                continue;
            }
            for (o, z) in out.iter_mut().zip(spec.intensities()) {
                *o += z * w;
            }
        }
        let mut spec = Spectrum1D::new(self.spectra[0].freq_axis().to_vec(), out)?;
        spec.calibration = self.manifest.calibration;
        spec.meta.source = format!("message:{}", msg.text);
        Ok(spec)
    }

    /// Signed band intensity of every slice, in single-bit units.
    pub fn slice_intensities(&self, spec: &Spectrum1D) -> Result<Vec<f64>> {
        slice_integrals(
            self.register(),
            self.manifest.acquisition.band_half_width_hz,
            spec,
            BandMode::Signed,
        )
    }

    /// Bits recovered by thresholding each slice at 0.5.
    pub fn read_bits(&self, spec: &Spectrum1D, n_bits: usize) -> Result<Vec<u8>> {
        Ok(self
            .slice_intensities(spec)?
            .iter()
            .take(n_bits)
            .map(|&v| u8::from(v > 0.5))
            .collect())
    }

    /// Writes `text` and the repeated-`letter` ancilla, then runs the XOR search.
    pub fn search(&self, text: &str, letter: char) -> Result<CipherReport> {
        let msg = encode_message(text, self.manifest.k)?;
        let ancilla = ancilla_pattern(letter, msg.n_ciphers(), self.manifest.k)?;
        let mut report = xor_search(
            self.register(),
            self.manifest.acquisition.band_half_width_hz,
            &self.write_message(&msg)?,
            &self.write_message(&ancilla)?,
            msg.n_ciphers(),
        )?;
        report.text = Some(text.to_string());
        report.letter = Some(letter);
        Ok(report)
    }
}

fn slice_integrals(
    register: &SliceRegister,
    half_width: f64,
    spec: &Spectrum1D,
    mode: BandMode,
) -> Result<Vec<f64>> {
    register
        .frequencies()
        .iter()
        .map(|&f| integrate_band(spec, f - half_width, f + half_width, mode))
        .collect()
}

/// 5-bit letter code: a = 00001 … z = 11010, space = 00000.
pub fn letter_code(c: char) -> Result<u8> {
    match c {
        ' ' => Ok(0),
        'a'..='z' => Ok(c as u8 - b'a' + 1),
        other => Err(Error::UnsupportedChar(other)),
    }
}

pub fn code_bits(code: u8) -> [u8; BITS_PER_CIPHER] {
    std::array::from_fn(|i| (code >> (BITS_PER_CIPHER - 1 - i)) & 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMessage {
    pub text: String,
    /// Most significant bit of each cipher first.
    pub bits: Vec<u8>,
}

impl BinaryMessage {
    pub fn n_ciphers(&self) -> usize {
        self.bits.len() / BITS_PER_CIPHER
    }

    pub fn ciphers(&self) -> Vec<[u8; BITS_PER_CIPHER]> {
        self.bits
            .chunks_exact(BITS_PER_CIPHER)
            .map(|c| c.try_into().expect("chunk of five"))
            .collect()
    }

    pub fn bit_string(&self) -> String {
        self.bits
            .iter()
            .map(|b| if *b == 1 { '1' } else { '0' })
            .collect()
    }
}

pub fn encode_message(text: &str, n_slices: usize) -> Result<BinaryMessage> {
    let mut bits = Vec::with_capacity(text.len() * BITS_PER_CIPHER);
    for c in text.chars() {
        bits.extend(code_bits(letter_code(c)?));
    }
    if bits.len() > n_slices {
        return Err(Error::MessageOverflow {
            needed: bits.len(),
            available: n_slices,
        });
    }
    Ok(BinaryMessage {
        text: text.to_string(),
        bits,
    })
}

/// `letter` repeated `n_ciphers` times. Space is rejected: its all-zero code
/// makes the ancilla empty and the search meaningless.
pub fn ancilla_pattern(letter: char, n_ciphers: usize, n_slices: usize) -> Result<BinaryMessage> {
    if letter == ' ' {
        return Err(Error::UnsupportedChar(' '));
    }
    letter_code(letter)?;
    encode_message(&letter.to_string().repeat(n_ciphers), n_slices)
}

/// Bit-level Hamming distance between two letter codes.
pub fn hamming(a: char, b: char) -> Result<u32> {
    Ok((letter_code(a)? ^ letter_code(b)?).count_ones())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CipherReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub letter: Option<char>,
    /// Integrated |sentence − ancilla| per cipher, in single-bit units.
    pub intensities: Vec<f64>,
    /// Cipher positions (0-based) at or below the match threshold.
    pub matches: Vec<usize>,
    /// Positions at or above the complement threshold.
    pub complements: Vec<usize>,
}

pub fn xor_search(
    register: &SliceRegister,
    band_half_width_hz: f64,
    sentence: &Spectrum1D,
    ancilla: &Spectrum1D,
    n_ciphers: usize,
) -> Result<CipherReport> {
    if n_ciphers * BITS_PER_CIPHER > register.n_slices {
        return Err(Error::MessageOverflow {
            needed: n_ciphers * BITS_PER_CIPHER,
            available: register.n_slices,
        });
    }
    let diff = sentence.difference(ancilla)?;
    let per_slice = slice_integrals(register, band_half_width_hz, &diff, BandMode::Absolute)?;
    let intensities: Vec<f64> = per_slice
        .chunks_exact(BITS_PER_CIPHER)
        .take(n_ciphers)
        .map(|c| c.iter().sum())
        .collect();
    let matches = intensities
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= MATCH_THRESHOLD)
        .map(|(i, _)| i)
        .collect();
    let complements = intensities
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= COMPLEMENT_THRESHOLD)
        .map(|(i, _)| i)
        .collect();
    Ok(CipherReport {
        text: None,
        letter: None,
        intensities,
        matches,
        complements,
    })
}
