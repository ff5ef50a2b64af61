//! Time-domain signal synthesis, Fourier processing, peak picking and band
//! integration.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::{observer_op, DensityOperator, PolKind};
use crate::spinsys::{SpinSystem, WorkLabel};

/// Uniformly sampled complex signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    dwell: f64,
    points: Vec<Complex64>,
}

impl TimeSeries {
    pub fn new(dwell: f64, points: Vec<Complex64>) -> Result<Self> {
        if !(dwell > 0.0) || !dwell.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "dwell {dwell} must be positive"
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty time series".into()));
        }
        Ok(Self { dwell, points })
    }

    pub fn dwell(&self) -> f64 {
        self.dwell
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.points.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Multiplies by exp(−π·linewidth·t).
    pub fn apodize(&mut self, linewidth_hz: f64) {
        for (n, z) in self.points.iter_mut().enumerate() {
            *z *= (-PI * linewidth_hz * n as f64 * self.dwell).exp();
        }
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BinWriter::create(path, *b"HNTS")?;
        w.u64(self.points.len() as u64)?;
        w.f64(self.dwell)?;
        w.complex(&self.points)?;
        w.finish()
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BinReader::open(path, *b"HNTS")?;
        let n = r.len()?;
        let dwell = r.f64()?;
        let points = r.complex(n)?;
        Self::new(dwell, points).map_err(|e| r.format_err(e.to_string()))
    }
}

/// Processing history attached to a spectrum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub apodization_hz: f64,
    pub zero_fill: usize,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum1D {
    freq_axis: Vec<f64>,
    intensities: Vec<Complex64>,
    /// Integral of one unit line; band integrals are reported in these units.
    pub calibration: f64,
    pub meta: SpectrumMeta,
}

impl Spectrum1D {
    pub fn new(freq_axis: Vec<f64>, intensities: Vec<Complex64>) -> Result<Self> {
        if freq_axis.len() != intensities.len() {
            return Err(Error::LengthMismatch {
                expected: freq_axis.len(),
                got: intensities.len(),
            });
        }
        if freq_axis.is_empty() || freq_axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "frequency axis must be non-empty and strictly increasing".into(),
            ));
        }
        Ok(Self {
            freq_axis,
            intensities,
            calibration: 1.0,
            meta: SpectrumMeta::default(),
        })
    }

    pub fn freq_axis(&self) -> &[f64] {
        &self.freq_axis
    }

    pub fn intensities(&self) -> &[Complex64] {
        &self.intensities
    }

    pub fn intensities_mut(&mut self) -> &mut [Complex64] {
        &mut self.intensities
    }

    pub fn len(&self) -> usize {
        self.freq_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_axis.is_empty()
    }

    pub fn bin_width(&self) -> f64 {
        if self.len() < 2 {
            return f64::INFINITY;
        }
        self.freq_axis[1] - self.freq_axis[0]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.intensities.iter().map(|z| z.norm()).collect()
    }

    /// Index of the bin nearest `freq_hz`.
    pub fn nearest_bin(&self, freq_hz: f64) -> usize {
        match self.freq_axis.binary_search_by(|f| f.total_cmp(&freq_hz)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.len() => self.len() - 1,
            Err(i) => {
                if (self.freq_axis[i] - freq_hz).abs() < (freq_hz - self.freq_axis[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }

    pub fn same_axis(&self, other: &Spectrum1D) -> bool {
        self.len() == other.len()
            && self
                .freq_axis
                .iter()
                .zip(&other.freq_axis)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))
    }

    /// `self − other` on a shared axis, keeping this spectrum's calibration.
    pub fn difference(&self, other: &Spectrum1D) -> Result<Spectrum1D> {
        if !self.same_axis(other) {
            return Err(Error::AxisMismatch);
        }
        let mut out = self.clone();
        for (a, b) in out.intensities.iter_mut().zip(&other.intensities) {
            *a -= b;
        }
        out.meta.source = format!("{} - {}", self.meta.source, other.meta.source);
        Ok(out)
    }

    /// Two-column `hz,intensity` CSV of the real part.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "hz,intensity").map_err(io)?;
        for (f, z) in self.freq_axis.iter().zip(&self.intensities) {
            writeln!(w, "{f},{}", z.re / self.calibration).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Compact binary cache. The axis must be uniform.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let step = self.bin_width();
        let start = self.freq_axis[0];
        let uniform = self
            .freq_axis
            .iter()
            .enumerate()
            .all(|(i, f)| (start + i as f64 * step - f).abs() <= 1e-9 * f.abs().max(1.0));
        if !uniform {
            return Err(Error::InvalidArgument(
                "binary cache needs a uniform axis".into(),
            ));
        }
        let mut w = BinWriter::create(path, *b"HNSP")?;
        w.u64(self.len() as u64)?;
        w.f64(start)?;
        w.f64(if self.len() > 1 { step } else { 0.0 })?;
        w.f64(self.calibration)?;
        w.f64(self.meta.apodization_hz)?;
        w.u64(self.meta.zero_fill as u64)?;
        w.bytes(self.meta.source.as_bytes())?;
        w.complex(&self.intensities)?;
        w.finish()
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BinReader::open(path, *b"HNSP")?;
        let n = r.len()?;
        let start = r.f64()?;
        let step = r.f64()?;
        let calibration = r.f64()?;
        let apodization_hz = r.f64()?;
        let zero_fill = r.u64()? as usize;
        let source = String::from_utf8(r.bytes()?)
            .map_err(|_| r.format_err("source is not UTF-8".into()))?;
        let intensities = r.complex(n)?;
        let axis = (0..n).map(|i| start + i as f64 * step).collect();
        let mut s = Self::new(axis, intensities).map_err(|e| r.format_err(e.to_string()))?;
        s.calibration = calibration;
        s.meta = SpectrumMeta {
            apodization_hz,
            zero_fill,
            source,
        };
        Ok(s)
    }
}

/// Observer signal s(t) = Tr(ρ(t)·(I_x^O + iI_y^O))·exp(−π·linewidth·t).
pub fn synthesize_fid(
    rho: &DensityOperator,
    system: &SpinSystem,
    n_points: usize,
    dwell: f64,
    linewidth_hz: f64,
) -> Result<TimeSeries> {
    if !(linewidth_hz >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "linewidth {linewidth_hz} must be >= 0"
        )));
    }
    if rho.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: rho.dim(),
        });
    }
    // Under the diagonal Hamiltonian each element ρ_ab picks up
    // exp(−i2π(E_a − E_b)t); only elements paired with the detection
    // operator contribute to the trace.
    let detect = observer_op(system, PolKind::Iplus);
    let energies = system.energies_hz();
    let d = system.dim();
    let mut terms = Vec::new();
    for a in 0..d {
        for b in 0..d {
            let coef = rho.operator().get(a, b) * detect.get(b, a);
            if coef.norm() > 0.0 {
                terms.push((coef, energies[a] - energies[b]));
            }
        }
    }
    let points = (0..n_points)
        .map(|n| {
            let t = n as f64 * dwell;
            let decay = (-PI * linewidth_hz * t).exp();
            terms
                .iter()
                .map(|&(c, f)| c * Complex64::from_polar(decay, -2.0 * PI * f * t))
                .sum()
        })
        .collect();
    TimeSeries::new(dwell, points)
}

/// Centered (fftshift) discrete Fourier transform; axis spans ±1/(2·dwell).
pub fn spectrum_1d(fid: &TimeSeries) -> Spectrum1D {
    spectrum_1d_zero_filled(fid, 1)
}

/// As [`spectrum_1d`] after zero-filling to `factor`·n points.
pub fn spectrum_1d_zero_filled(fid: &TimeSeries, factor: usize) -> Spectrum1D {
    let factor = factor.max(1);
    let mut buf = fid.points.clone();
    buf.resize(fid.len() * factor, Complex64::default());
    let n = buf.len();
    fft_shifted(&mut buf);
    let axis = centered_axis(n, fid.dwell);
    let mut s = Spectrum1D::new(axis, buf).expect("uniform axis");
    s.meta.zero_fill = factor;
    s
}

/// Forward FFT followed by fftshift, in place.
pub(crate) fn fft_shifted(buf: &mut [Complex64]) {
    let n = buf.len();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(buf);
    buf.rotate_right(n / 2);
}

pub(crate) fn centered_axis(n: usize, dwell: f64) -> Vec<f64> {
    let df = 1.0 / (n as f64 * dwell);
    (0..n).map(|k| (k as f64 - (n / 2) as f64) * df).collect()
}

/// Σ|x|² / (Σ|X|²/n): unity for an unnormalized DFT.
pub fn parseval_ratio(fid: &TimeSeries, spectrum: &Spectrum1D) -> f64 {
    let freq_energy: f64 = spectrum
        .intensities
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        / spectrum.len() as f64;
    fid.energy() / freq_energy
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub freq_hz: f64,
    pub magnitude: f64,
}

/// Local maxima of |X| above `threshold`·max, refined by three-point
/// parabolic interpolation.
pub fn pick_peaks(spec: &Spectrum1D, threshold: f64) -> Result<Vec<Peak>> {
    let mags = spec.magnitudes();
    let max = mags.iter().copied().fold(0.0, f64::max);
    pick_peaks_above(spec, &mags, threshold, max)
}

/// Peak picking against an externally supplied reference maximum.
pub fn pick_peaks_above(
    spec: &Spectrum1D,
    mags: &[f64],
    threshold: f64,
    reference_max: f64,
) -> Result<Vec<Peak>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    if reference_max <= 0.0 || mags.len() < 3 {
        return Ok(Vec::new());
    }
    let floor = threshold * reference_max;
    let df = spec.bin_width();
    let mut peaks = Vec::new();
    for i in 1..mags.len() - 1 {
        let (a, b, c) = (mags[i - 1], mags[i], mags[i + 1]);
        if b > a && b >= c && b >= floor {
            let denom = a - 2.0 * b + c;
            let p = if denom != 0.0 {
                0.5 * (a - c) / denom
            } else {
                0.0
            };
            peaks.push(Peak {
                freq_hz: spec.freq_axis[i] + p * df,
                magnitude: b - 0.25 * (a - c) * p,
            });
        }
    }
    Ok(peaks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandMode {
    Signed,
    Absolute,
}

/// Sum of real intensities (or their moduli) over bins in `[lo, hi]`, in
/// units of the spectrum's calibration.
pub fn integrate_band(spec: &Spectrum1D, lo: f64, hi: f64, mode: BandMode) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::EmptyBand { lo, hi });
    }
    let start = spec.freq_axis.partition_point(|&f| f < lo);
    let end = spec.freq_axis.partition_point(|&f| f <= hi);
    if start >= end {
        return Err(Error::EmptyBand { lo, hi });
    }
    let sum: f64 = spec.intensities[start..end]
        .iter()
        .map(|z| match mode {
            BandMode::Signed => z.re,
            BandMode::Absolute => z.re.abs(),
        })
        .sum();
    Ok(sum / spec.calibration)
}

/// Per-input F₂ spectra placed at their F₁ transition frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum2D {
    pub f1_labels: Vec<(WorkLabel, f64)>,
    pub f2_axis: Vec<f64>,
    pub rows: Vec<Vec<Complex64>>,
}

impl Spectrum2D {
    pub fn new(
        f1_labels: Vec<(WorkLabel, f64)>,
        f2_axis: Vec<f64>,
        rows: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if f1_labels.len() != rows.len() {
            return Err(Error::LengthMismatch {
                expected: f1_labels.len(),
                got: rows.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != f2_axis.len()) {
            return Err(Error::LengthMismatch {
                expected: f2_axis.len(),
                got: bad.len(),
            });
        }
        Ok(Self {
            f1_labels,
            f2_axis,
            rows,
        })
    }

    pub fn max_magnitude(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn row_spectrum(&self, row: usize) -> Spectrum1D {
        Spectrum1D::new(self.f2_axis.clone(), self.rows[row].clone()).expect("validated axis")
    }

    pub fn bin_width(&self) -> f64 {
        self.f2_axis[1] - self.f2_axis[0]
    }

    /// Row-labeled magnitude grid: `label,f1_hz,<f2 axis...>`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let row_names: Vec<String> = self.f1_labels.iter().map(|(l, _)| l.to_string()).collect();
        let f1: Vec<f64> = self.f1_labels.iter().map(|(_, f)| *f).collect();
        let mags: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|z| z.norm()).collect())
            .collect();
        write_grid_csv(path, &row_names, &f1, &self.f2_axis, &mags)
    }
}

pub fn write_grid_csv(
    path: &Path,
    row_names: &[String],
    f1: &[f64],
    f2: &[f64],
    values: &[Vec<f64>],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "label,f1_hz").map_err(io)?;
    for f in f2 {
        write!(w, ",{f}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for ((name, f), row) in row_names.iter().zip(f1).zip(values) {
        write!(w, "{name},{f}").map_err(io)?;
        for v in row {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

const BIN_VERSION: u32 = 1;

struct BinWriter<'a> {
    path: &'a Path,
    w: BufWriter<File>,
}

impl<'a> BinWriter<'a> {
    fn create(path: &'a Path, magic: [u8; 4]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut this = Self {
            path,
            w: BufWriter::new(file),
        };
        this.raw(&magic)?;
        this.raw(&BIN_VERSION.to_le_bytes())?;
        Ok(this)
    }

    fn raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.w.write_all(bytes).map_err(|e| Error::io(self.path, e))
    }

    fn u64(&mut self, v: u64) -> Result<()> {
        self.raw(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> Result<()> {
        self.raw(&v.to_le_bytes())
    }

    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.u64(b.len() as u64)?;
        self.raw(b)
    }

    fn complex(&mut self, data: &[Complex64]) -> Result<()> {
        for z in data {
            self.f64(z.re)?;
            self.f64(z.im)?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(self.path, e))
    }
}

struct BinReader<'a> {
    path: &'a Path,
    r: BufReader<File>,
}

impl<'a> BinReader<'a> {
    fn open(path: &'a Path, magic: [u8; 4]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut this = Self {
            path,
            r: BufReader::new(file),
        };
        let mut head = [0u8; 4];
        this.raw(&mut head)?;
        if head != magic {
            return Err(this.format_err(format!("bad magic {head:?}")));
        }
        let mut v = [0u8; 4];
        this.raw(&mut v)?;
        if u32::from_le_bytes(v) != BIN_VERSION {
            return Err(this.format_err(format!("unsupported version {}", u32::from_le_bytes(v))));
        }
        Ok(this)
    }

    fn format_err(&self, msg: String) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            msg,
        }
    }

    fn raw(&mut self, buf: &mut [u8]) -> Result<()> {
        self.r.read_exact(buf).map_err(|e| Error::io(self.path, e))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.raw(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > (1 << 28) {
            return Err(self.format_err(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.len()?;
        let mut b = vec![0u8; n];
        self.raw(&mut b)?;
        Ok(b)
    }

    fn complex(&mut self, n: usize) -> Result<Vec<Complex64>> {
        (0..n)
            .map(|_| Ok(Complex64::new(self.f64()?, self.f64()?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{
        apply_unitary, evolve, expectation, observer_equilibrium, work_projector,
    };
    use crate::pulsekit::{hard_pulse, Phase};
    use crate::spinsys::presets;
    use std::f64::consts::FRAC_PI_2;

    fn tone(freq: f64, amp: f64, n: usize, dwell: f64, lw: f64) -> TimeSeries {
        let pts = (0..n)
            .map(|i| {
                let t = i as f64 * dwell;
                Complex64::from_polar(amp * (-PI * lw * t).exp(), 2.0 * PI * freq * t)
            })
            .collect();
        TimeSeries::new(dwell, pts).unwrap()
    }

    #[test]
    fn single_coherence_gives_single_decaying_tone() {
        let sys = presets::c2f3i();
        let s: WorkLabel = "00".parse().unwrap();
        let rho = DensityOperator::new(&observer_op(&sys, PolKind::Ix) * &work_projector(&sys, s))
            .unwrap();
        let fid = synthesize_fid(&rho, &sys, 64, 1e-3, 1.0).unwrap();
        // Tr(I_x·I⁺) on one work state is 1/2
        let expected = tone(-30.35, 0.5, 64, 1e-3, 1.0);
        for (a, b) in fid.points().iter().zip(expected.points()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fid_agrees_with_explicit_evolution() {
        let sys = presets::tfba();
        let rho = apply_unitary(
            &observer_equilibrium(&sys),
            &hard_pulse(&sys, 0, FRAC_PI_2, Phase::Y).unwrap(),
        )
        .unwrap();
        let fid = synthesize_fid(&rho, &sys, 40, 0.01, 0.0).unwrap();
        let detect = observer_op(&sys, PolKind::Iplus);
        for n in [0, 7, 39] {
            let direct =
                expectation(&evolve(&rho, &sys, n as f64 * 0.01).unwrap(), &detect).unwrap();
            assert!((direct - fid.points()[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_state_is_silent() {
        let sys = presets::c2f3i();
        let fid = synthesize_fid(&observer_equilibrium(&sys), &sys, 32, 1e-3, 1.0).unwrap();
        assert!(fid.points().iter().all(|z| z.norm() == 0.0));
        assert!(spectrum_1d(&fid)
            .intensities()
            .iter()
            .all(|z| z.norm() == 0.0));
        assert!(pick_peaks(&spectrum_1d(&fid), 0.3).unwrap().is_empty());
    }

    #[test]
    fn equilibrium_spectrum_has_four_lines_at_table_frequencies() {
        let sys = presets::c2f3i();
        let table = sys.transition_table().unwrap();
        let rho = apply_unitary(
            &observer_equilibrium(&sys),
            &hard_pulse(&sys, 0, FRAC_PI_2, Phase::Y).unwrap(),
        )
        .unwrap();
        let fid = synthesize_fid(&rho, &sys, 512, 1e-3, 1.0).unwrap();
        let spec = spectrum_1d_zero_filled(&fid, 2);
        let peaks = pick_peaks(&spec, 0.3).unwrap();
        assert_eq!(peaks.len(), 4, "{peaks:?}");
        for p in &peaks {
            let (_, f) = table.nearest(p.freq_hz);
            assert!((p.freq_hz - f).abs() <= 0.5 * spec.bin_width(), "{p:?}");
        }
        let heights: Vec<f64> = peaks.iter().map(|p| p.magnitude).collect();
        let max = heights.iter().copied().fold(0.0, f64::max);
        assert!(
            heights.iter().all(|h| (h / max - 1.0).abs() < 0.02),
            "{heights:?}"
        );
    }

    #[test]
    fn tone_is_located_within_half_a_bin() {
        let fid = tone(30.35, 1.0, 512, 1e-3, 1.0);
        let spec = spectrum_1d(&fid);
        let peaks = pick_peaks(&spec, 0.3).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].freq_hz - 30.35).abs() <= 0.5 * spec.bin_width());
        let nearest = spec.freq_axis()[spec.nearest_bin(30.35)];
        assert!((nearest - 30.35).abs() <= 0.5 * spec.bin_width());
    }

    #[test]
    fn two_equal_tones_integrate_equally() {
        let a = tone(-98.45, 1.0, 1024, 1e-3, 2.0);
        let b = tone(98.45, 1.0, 1024, 1e-3, 2.0);
        let sum: Vec<Complex64> = a
            .points()
            .iter()
            .zip(b.points())
            .map(|(x, y)| x + y)
            .collect();
        let spec = spectrum_1d(&TimeSeries::new(1e-3, sum).unwrap());
        let left = integrate_band(&spec, -130.0, -70.0, BandMode::Absolute).unwrap();
        let right = integrate_band(&spec, 70.0, 130.0, BandMode::Absolute).unwrap();
        assert!((left / right - 1.0).abs() < 0.01);
    }

    #[test]
    fn parseval_and_linearity() {
        let x = tone(12.5, 0.7, 256, 0.01, 0.0);
        let y = tone(-8.0, 1.3, 256, 0.01, 0.0);
        let sx = spectrum_1d(&x);
        assert!((parseval_ratio(&x, &sx) - 1.0).abs() < 1e-9);
        let combo: Vec<Complex64> = x
            .points()
            .iter()
            .zip(y.points())
            .map(|(p, q)| p * 2.0 - q * 0.5)
            .collect();
        let s_combo = spectrum_1d(&TimeSeries::new(0.01, combo).unwrap());
        let sy = spectrum_1d(&y);
        for i in 0..256 {
            let lin = sx.intensities()[i] * 2.0 - sy.intensities()[i] * 0.5;
            assert!((lin - s_combo.intensities()[i]).norm() < 1e-12);
        }
        let zf = spectrum_1d_zero_filled(&x, 2);
        assert!((parseval_ratio(&x, &zf) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn axis_spans_the_nyquist_window() {
        let s = spectrum_1d(&tone(0.0, 1.0, 512, 1e-3, 0.0));
        assert_eq!(s.freq_axis()[0], -500.0);
        assert!((s.freq_axis()[511] - (500.0 - 1000.0 / 512.0)).abs() < 1e-9);
    }

    #[test]
    fn band_integration_edges() {
        let mut s = spectrum_1d(&tone(0.0, 1.0, 64, 1e-3, 0.0));
        s.calibration = 2.0;
        assert!(matches!(
            integrate_band(&s, 10.0, 10.0, BandMode::Signed),
            Err(Error::EmptyBand { .. })
        ));
        assert!(matches!(
            integrate_band(&s, 1.0, 2.0, BandMode::Signed),
            Err(Error::EmptyBand { .. })
        ));
        // a pure DC tone lands entirely in the zero bin: 64 / calibration
        assert!((integrate_band(&s, -1.0, 1.0, BandMode::Signed).unwrap() - 32.0).abs() < 1e-9);
        assert!(integrate_band(&s, 100.0, 200.0, BandMode::Absolute).unwrap() < 1e-9);
    }

    #[test]
    fn binary_caches_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let fid = tone(3.0, 1.0, 100, 0.01, 1.0);
        let p = dir.path().join("fid.bin");
        fid.write_binary(&p).unwrap();
        assert_eq!(TimeSeries::read_binary(&p).unwrap(), fid);

        let mut spec = spectrum_1d_zero_filled(&fid, 2);
        spec.calibration = 3.5;
        spec.meta.source = "tone".into();
        let q = dir.path().join("spec.bin");
        spec.write_binary(&q).unwrap();
        let back = Spectrum1D::read_binary(&q).unwrap();
        assert!(back.same_axis(&spec));
        assert_eq!(back.intensities(), spec.intensities());
        assert_eq!(back.meta, spec.meta);
        assert_eq!(back.calibration, 3.5);
        assert!(matches!(
            Spectrum1D::read_binary(&p),
            Err(Error::Format { .. })
        ));

        let csv = dir.path().join("spec.csv");
        spec.write_csv(&csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), spec.len() + 1);
        assert!(text.starts_with("hz,intensity\n"));
    }
}
