//! Weakly coupled spin-1/2 systems and the observer transition table.
//!
//! Basis states are ordered with spin 0 as the most significant bit, and bit 0
//! of a spin corresponds to m = +1/2. The observer's transition for a work
//! state `s` is the energy gap between `|0,s⟩` and `|1,s⟩`, so
//! `ω_s = ν_O + Σ_i J_{O,i} m_i(s)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::Operator;

/// Two observer lines closer than this are treated as unresolved.
pub const DEGENERACY_TOL_HZ: f64 = 1e-9;

const SYMMETRY_TOL_HZ: f64 = 1e-12;

/// Basis state of the N work qubits. Qubit 1 is the most significant
/// character of the printed label, so `value` runs in binary counting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WorkLabel {
    value: usize,
    n_work: usize,
}

impl WorkLabel {
    pub fn new(value: usize, n_work: usize) -> Result<Self> {
        if n_work >= usize::BITS as usize || value >> n_work != 0 {
            return Err(Error::InvalidLabel(format!("{value} for {n_work} qubits")));
        }
        Ok(Self { value, n_work })
    }

    /// All `2^n_work` labels in binary counting order.
    pub fn all(n_work: usize) -> Vec<WorkLabel> {
        (0..1usize << n_work)
            .map(|value| WorkLabel { value, n_work })
            .collect()
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn n_work(self) -> usize {
        self.n_work
    }

    /// Bit of work qubit `qubit` (1-based).
    pub fn bit(self, qubit: usize) -> usize {
        debug_assert!(qubit >= 1 && qubit <= self.n_work);
        (self.value >> (self.n_work - qubit)) & 1
    }

    /// m quantum number of work qubit `qubit`: +1/2 for bit 0, -1/2 for bit 1.
    pub fn m(self, qubit: usize) -> f64 {
        0.5 - self.bit(qubit) as f64
    }

    pub fn with_flipped(self, qubit: usize) -> WorkLabel {
        WorkLabel {
            value: self.value ^ (1 << (self.n_work - qubit)),
            n_work: self.n_work,
        }
    }
}

impl fmt::Display for WorkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 1..=self.n_work {
            write!(f, "{}", self.bit(q))?;
        }
        Ok(())
    }
}

impl FromStr for WorkLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s
            .trim()
            .trim_start_matches('|')
            .trim_end_matches('⟩')
            .trim_end_matches('>');
        if s.is_empty() || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::InvalidLabel(s.to_string()));
        }
        let value = usize::from_str_radix(s, 2).map_err(|_| Error::InvalidLabel(s.to_string()))?;
        WorkLabel::new(value, s.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    shifts_hz: Vec<f64>,
    couplings_hz: Vec<Vec<f64>>,
    observer_index: usize,
}

impl SpinSystem {
    pub fn new(
        shifts_hz: Vec<f64>,
        couplings_hz: Vec<Vec<f64>>,
        observer_index: usize,
    ) -> Result<Self> {
        let n = shifts_hz.len();
        if n == 0 {
            return Err(Error::InvalidSystem("no spins".into()));
        }
        if n > 12 {
            return Err(Error::InvalidSystem(format!(
                "{n} spins exceeds the dense simulator limit of 12"
            )));
        }
        if couplings_hz.len() != n || couplings_hz.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSystem(format!(
                "coupling matrix must be {n}x{n}"
            )));
        }
        for (i, row) in couplings_hz.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "self-coupling J[{i}][{i}] = {}",
                    row[i]
                )));
            }
            for j in (i + 1)..n {
                if (row[j] - couplings_hz[j][i]).abs() > SYMMETRY_TOL_HZ {
                    return Err(Error::InvalidSystem(format!(
                        "asymmetric coupling J[{i}][{j}] = {} vs J[{j}][{i}] = {}",
                        row[j], couplings_hz[j][i]
                    )));
                }
            }
        }
        if !shifts_hz
            .iter()
            .chain(couplings_hz.iter().flatten())
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidSystem("non-finite parameter".into()));
        }
        if observer_index >= n {
            return Err(Error::SpinOutOfRange {
                index: observer_index,
                n_spins: n,
            });
        }
        Ok(Self {
            shifts_hz,
            couplings_hz,
            observer_index,
        })
    }

    /// Builds a system from an upper-triangle list of `(i, j, J)` couplings.
    pub fn from_pairs(
        shifts_hz: Vec<f64>,
        pairs: &[(usize, usize, f64)],
        observer_index: usize,
    ) -> Result<Self> {
        let n = shifts_hz.len();
        let mut couplings = vec![vec![0.0; n]; n];
        for &(i, j, jhz) in pairs {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidSystem(format!(
                    "bad coupling pair ({i}, {j})"
                )));
            }
            couplings[i][j] = jhz;
            couplings[j][i] = jhz;
        }
        Self::new(shifts_hz, couplings, observer_index)
    }

    pub fn n_spins(&self) -> usize {
        self.shifts_hz.len()
    }

    pub fn n_work(&self) -> usize {
        self.n_spins() - 1
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn observer_index(&self) -> usize {
        self.observer_index
    }

    pub fn shifts_hz(&self) -> &[f64] {
        &self.shifts_hz
    }

    pub fn couplings_hz(&self) -> &[Vec<f64>] {
        &self.couplings_hz
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings_hz[i][j]
    }

    /// Spin index of work qubit `qubit` (1-based): the non-observer spins in
    /// ascending index order.
    pub fn work_spin(&self, qubit: usize) -> usize {
        assert!(
            qubit >= 1 && qubit <= self.n_work(),
            "work qubit {qubit} out of range"
        );
        if qubit - 1 < self.observer_index {
            qubit - 1
        } else {
            qubit
        }
    }

    /// Coupling between the observer and work qubit `qubit`.
    pub fn observer_coupling(&self, qubit: usize) -> f64 {
        self.couplings_hz[self.observer_index][self.work_spin(qubit)]
    }

    pub fn check_spin(&self, spin: usize) -> Result<()> {
        if spin < self.n_spins() {
            Ok(())
        } else {
            Err(Error::SpinOutOfRange {
                index: spin,
                n_spins: self.n_spins(),
            })
        }
    }

    /// Bit of `spin` in basis state `index`.
    pub fn spin_bit(&self, index: usize, spin: usize) -> usize {
        (index >> (self.n_spins() - 1 - spin)) & 1
    }

    /// Basis index of `|observer_bit, work⟩`.
    pub fn basis_index(&self, observer_bit: usize, work: WorkLabel) -> usize {
        let mut index = observer_bit << (self.n_spins() - 1 - self.observer_index);
        for q in 1..=self.n_work() {
            index |= work.bit(q) << (self.n_spins() - 1 - self.work_spin(q));
        }
        index
    }

    /// Splits a basis index into observer bit and work label.
    pub fn split_index(&self, index: usize) -> (usize, WorkLabel) {
        let observer_bit = self.spin_bit(index, self.observer_index);
        let n = self.n_work();
        let value = (1..=n).fold(0, |acc, q| {
            (acc << 1) | self.spin_bit(index, self.work_spin(q))
        });
        (observer_bit, WorkLabel { value, n_work: n })
    }

    /// Parses a full basis label such as `"0110"` (one character per spin).
    pub fn parse_basis_label(&self, label: &str) -> Result<usize> {
        let s = label
            .trim()
            .trim_start_matches('|')
            .trim_end_matches('⟩')
            .trim_end_matches('>');
        if s.len() != self.n_spins() || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::InvalidLabel(label.to_string()));
        }
        Ok(usize::from_str_radix(s, 2).expect("validated binary"))
    }

    pub fn format_basis_label(&self, index: usize) -> String {
        (0..self.n_spins())
            .map(|k| {
                if self.spin_bit(index, k) == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    /// Diagonal of H/(2π) in Hz: Σ ν_i m_i + Σ_{i<j} J_ij m_i m_j.
    pub fn energies_hz(&self) -> Vec<f64> {
        let n = self.n_spins();
        (0..self.dim())
            .map(|index| {
                let m: Vec<f64> = (0..n)
                    .map(|k| 0.5 - self.spin_bit(index, k) as f64)
                    .collect();
                let mut e: f64 = (0..n).map(|k| self.shifts_hz[k] * m[k]).sum();
                for i in 0..n {
                    for j in (i + 1)..n {
                        e += self.couplings_hz[i][j] * m[i] * m[j];
                    }
                }
                e
            })
            .collect()
    }

    /// Weak-coupling Hamiltonian H/(2π) in Hz, diagonal in the Zeeman basis.
    pub fn hamiltonian(&self) -> Operator {
        Operator::diagonal(&self.energies_hz())
    }

    pub fn transition_table(&self) -> Result<TransitionTable> {
        let n = self.n_work();
        let nu_o = self.shifts_hz[self.observer_index];
        let entries: Vec<(WorkLabel, f64)> = WorkLabel::all(n)
            .into_iter()
            .map(|s| {
                let freq = nu_o
                    + (1..=n)
                        .map(|q| self.observer_coupling(q) * s.m(q))
                        .sum::<f64>();
                (s, freq)
            })
            .collect();
        for (i, (a, fa)) in entries.iter().enumerate() {
            for (b, fb) in &entries[i + 1..] {
                if (fa - fb).abs() <= DEGENERACY_TOL_HZ {
                    return Err(Error::DegenerateTransitions {
                        a: a.to_string(),
                        b: b.to_string(),
                        freq_hz: *fa,
                    });
                }
            }
        }
        Ok(TransitionTable { entries })
    }
}

/// Spin system configuration as read from disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSystemConfig {
    pub shifts_hz: Vec<f64>,
    /// Row-major n×n coupling matrix.
    pub couplings_hz: Vec<f64>,
    #[serde(default)]
    pub observer_index: usize,
}

impl SpinSystemConfig {
    pub fn build(&self) -> Result<SpinSystem> {
        let n = self.shifts_hz.len();
        if self.couplings_hz.len() != n * n {
            return Err(Error::InvalidSystem(format!(
                "couplings_hz has {} values, expected {}",
                self.couplings_hz.len(),
                n * n
            )));
        }
        let rows = self.couplings_hz.chunks(n).map(<[f64]>::to_vec).collect();
        SpinSystem::new(self.shifts_hz.clone(), rows, self.observer_index)
    }

    /// Accepts either a JSON object or `key = value` lines with comma or
    /// whitespace separated numbers. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(|e| Error::Parse {
                line: e.line(),
                msg: e.to_string(),
            });
        }
        let mut shifts = None;
        let mut couplings = None;
        let mut observer = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got {line:?}")))?;
            let numbers = || -> Result<Vec<f64>> {
                value
                    .split(|c: char| c == ',' || c.is_whitespace() || c == '[' || c == ']')
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| parse_err(format!("{t:?}: {e}")))
                    })
                    .collect()
            };
            match key.trim() {
                "shifts_hz" => shifts = Some(numbers()?),
                "couplings_hz" => couplings = Some(numbers()?),
                "observer_index" => {
                    observer = value
                        .trim()
                        .parse()
                        .map_err(|e| parse_err(format!("observer_index: {e}")))?
                }
                other => return Err(parse_err(format!("unknown key {other:?}"))),
            }
        }
        Ok(Self {
            shifts_hz: shifts.ok_or_else(|| Error::InvalidSystem("missing shifts_hz".into()))?,
            couplings_hz: couplings
                .ok_or_else(|| Error::InvalidSystem("missing couplings_hz".into()))?,
            observer_index: observer,
        })
    }
}

impl From<&SpinSystem> for SpinSystemConfig {
    fn from(sys: &SpinSystem) -> Self {
        Self {
            shifts_hz: sys.shifts_hz.clone(),
            couplings_hz: sys.couplings_hz.iter().flatten().copied().collect(),
            observer_index: sys.observer_index,
        }
    }
}

pub mod presets {
    //! Bundled parameter sets.
    use super::SpinSystem;

    pub const NAMES: [&str; 2] = ["c2f3i", "tfba"];

    /// Three fluorines of C₂F₃I: observer plus two work qubits.
    pub fn c2f3i() -> SpinSystem {
        SpinSystem::from_pairs(
            vec![0.0, 11807.0, -17114.0],
            &[(0, 1, 68.1), (0, 2, -128.8), (1, 2, 48.9)],
            0,
        )
        .expect("valid preset")
    }

    /// Four fluorines of 2-amino-3,4,5,6-tetrafluorobenzoic acid: observer
    /// plus three work qubits.
    pub fn tfba() -> SpinSystem {
        SpinSystem::from_pairs(
            vec![0.0, 13564.2, 6845.8, -5261.2],
            &[
                (0, 1, 10.5),
                (0, 2, 20.5),
                (0, 3, 6.0),
                (1, 2, 9.5),
                (1, 3, 22.7),
                (2, 3, 21.9),
            ],
            0,
        )
        .expect("valid preset")
    }

    pub fn by_name(name: &str) -> Option<SpinSystem> {
        match name.to_ascii_lowercase().as_str() {
            "c2f3i" => Some(c2f3i()),
            "tfba" => Some(tfba()),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    entries: Vec<(WorkLabel, f64)>,
}

impl TransitionTable {
    /// Entries in binary counting order of the work label.
    pub fn entries(&self) -> &[(WorkLabel, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_work(&self) -> usize {
        self.entries[0].0.n_work()
    }

    pub fn labels(&self) -> Vec<WorkLabel> {
        self.entries.iter().map(|(l, _)| *l).collect()
    }

    pub fn frequency(&self, label: WorkLabel) -> Result<f64> {
        self.entries
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, f)| *f)
            .ok_or_else(|| Error::InvalidLabel(label.to_string()))
    }

    pub fn sorted_by_frequency(&self) -> Vec<(WorkLabel, f64)> {
        let mut v = self.entries.clone();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }

    /// Label whose line is closest to `freq_hz`.
    pub fn nearest(&self, freq_hz: f64) -> (WorkLabel, f64) {
        *self
            .entries
            .iter()
            .min_by(|a, b| (a.1 - freq_hz).abs().total_cmp(&(b.1 - freq_hz).abs()))
            .expect("non-empty table")
    }

    /// Smallest distance between two lines.
    pub fn min_separation_hz(&self) -> f64 {
        let sorted = self.sorted_by_frequency();
        sorted
            .windows(2)
            .map(|w| w[1].1 - w[0].1)
            .fold(f64::INFINITY, f64::min)
    }
}
