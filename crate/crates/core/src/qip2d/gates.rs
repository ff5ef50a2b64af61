//! Gate library: pulse recipes for the two- and three-qubit gates and their
//! classical action on work basis states.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::Operator;
use crate::pulsekit::{Phase, PulseSequence, PulseSpec, SequenceStep};
use crate::spinsys::{SpinSystem, WorkLabel};

/// Phase cycle quoted for the computation π pulses. Ideal pulses make it
/// irrelevant, so it is carried as metadata only.
pub const COMPENSATION_PHASES: [Phase; 4] = [Phase::X, Phase::MinusX, Phase::MinusY, Phase::MinusY];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Nop,
    /// NOT on the listed work qubits (1-based).
    Not(Vec<usize>),
    Swap,
    /// NOT on qubit 1 controlled by qubit 2.
    Cnot1,
    /// NOT on qubit 3 controlled by qubits 1 and 2.
    Toffoli,
    Custom(String),
}

impl GateKind {
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name
            .trim()
            .to_ascii_lowercase()
            .replace(['(', ')', ',', ' ', '_'], "");
        match lower.as_str() {
            "nop" | "identity" => Ok(GateKind::Nop),
            "swap" => Ok(GateKind::Swap),
            "cnot1" => Ok(GateKind::Cnot1),
            "toffoli" | "ccnot" => Ok(GateKind::Toffoli),
            s if s.starts_with("not") && s.len() > 3 => {
                let mut qubits: Vec<usize> = s[3..]
                    .chars()
                    .map(|c| c.to_digit(10).filter(|&d| d > 0).map(|d| d as usize))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::UnknownGate(name.to_string()))?;
                qubits.sort_unstable();
                qubits.dedup();
                Ok(GateKind::Not(qubits))
            }
            _ => Err(Error::UnknownGate(name.to_string())),
        }
    }

    /// Names accepted by [`GateKind::parse`].
    pub const LIBRARY: [&'static str; 8] = [
        "nop", "not1", "not2", "not3", "not12", "swap", "cnot1", "toffoli",
    ];
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::Nop => f.write_str("NOP"),
            GateKind::Not(q) => {
                let list: Vec<String> = q.iter().map(usize::to_string).collect();
                write!(f, "NOT({})", list.join(","))
            }
            GateKind::Swap => f.write_str("SWAP"),
            GateKind::Cnot1 => f.write_str("CNOT(1)"),
            GateKind::Toffoli => f.write_str("TOFFOLI"),
            GateKind::Custom(name) => f.write_str(name),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Realization {
    Matrix(Operator),
    Pulses(PulseSequence),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub realization: Realization,
    pub phase_scheme: Option<Vec<Phase>>,
}

impl GateSpec {
    /// Library gate realized by its pulse recipe on `system`.
    pub fn library(name: &str, system: &SpinSystem) -> Result<Self> {
        let kind = GateKind::parse(name)?;
        let n = system.n_work();
        let unsupported = || Error::GateUnsupported {
            gate: kind.to_string(),
            n_work: n,
        };
        let pi_x =
            |a: usize, b: usize| SequenceStep::Pulse(PulseSpec::transition(a, b, PI, Phase::X));
        // pair of transitions that flip qubit `target` from work state `from`,
        // one for each observer state
        let flip_pair = |from: &str, target: usize| -> Result<[SequenceStep; 2]> {
            let s: WorkLabel = from.parse()?;
            let t = s.with_flipped(target);
            Ok([
                pi_x(system.basis_index(1, s), system.basis_index(1, t)),
                pi_x(system.basis_index(0, s), system.basis_index(0, t)),
            ])
        };
        let (steps, phase_scheme) = match &kind {
            GateKind::Nop => (Vec::new(), None),
            GateKind::Not(qubits) => {
                if qubits.is_empty() || qubits.iter().any(|&q| q > n) {
                    return Err(unsupported());
                }
                let steps = qubits
                    .iter()
                    .map(|&q| {
                        SequenceStep::Pulse(PulseSpec::spin(system.work_spin(q), PI, Phase::X))
                    })
                    .collect();
                (steps, None)
            }
            GateKind::Swap => {
                if n != 2 {
                    return Err(unsupported());
                }
                // |110⟩-|111⟩, |010⟩-|011⟩, |101⟩-|111⟩, |001⟩-|011⟩, |110⟩-|111⟩, |010⟩-|011⟩
                let mut steps = Vec::new();
                steps.extend(flip_pair("10", 2)?);
                steps.extend(flip_pair("01", 1)?);
                steps.extend(flip_pair("10", 2)?);
                (steps, Some(COMPENSATION_PHASES.to_vec()))
            }
            GateKind::Cnot1 => {
                if n != 2 {
                    return Err(unsupported());
                }
                // |001⟩-|011⟩ and |101⟩-|111⟩
                let [a, b] = flip_pair("01", 1)?;
                (vec![b, a], Some(COMPENSATION_PHASES.to_vec()))
            }
            GateKind::Toffoli => {
                if n != 3 {
                    return Err(unsupported());
                }
                // |0110⟩-|0111⟩ and |1110⟩-|1111⟩
                let [a, b] = flip_pair("110", 3)?;
                (vec![b, a], None)
            }
            GateKind::Custom(_) => unreachable!("parse never yields a custom gate"),
        };
        Ok(Self {
            kind,
            realization: Realization::Pulses(PulseSequence::new(steps)),
            phase_scheme,
        })
    }

    pub fn from_sequence(name: &str, sequence: PulseSequence) -> Self {
        Self {
            kind: GateKind::Custom(name.to_string()),
            realization: Realization::Pulses(sequence),
            phase_scheme: None,
        }
    }

    pub fn from_matrix(name: &str, matrix: Operator) -> Self {
        Self {
            kind: GateKind::Custom(name.to_string()),
            realization: Realization::Matrix(matrix),
            phase_scheme: None,
        }
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    pub fn unitary(&self, system: &SpinSystem) -> Result<Operator> {
        let u = match &self.realization {
            Realization::Matrix(m) => m.clone(),
            Realization::Pulses(seq) => seq.propagator(system)?,
        };
        if u.dim() != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                got: u.dim(),
            });
        }
        let deviation = u.unitarity_error();
        if deviation > crate::liouville::UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    /// Output work state for each input, in binary counting order, read from
    /// the unitary's action on basis states. Phases are ignored.
    pub fn classical_permutation(&self, system: &SpinSystem) -> Result<Vec<WorkLabel>> {
        classical_permutation(&self.unitary(system)?, system)
    }
}

pub fn classical_permutation(u: &Operator, system: &SpinSystem) -> Result<Vec<WorkLabel>> {
    let labels = WorkLabel::all(system.n_work());
    let mut out = Vec::with_capacity(labels.len());
    for &s in &labels {
        let mut image = None;
        for observer_bit in 0..2 {
            let col = system.basis_index(observer_bit, s);
            let row = (0..system.dim())
                .find(|&r| (u.get(r, col).norm() - 1.0).abs() < 1e-9)
                .ok_or_else(|| Error::NotPermutation(s.to_string()))?;
            let (ob, t) = system.split_index(row);
            if ob != observer_bit || image.is_some_and(|prev| prev != t) {
                return Err(Error::NotPermutation(s.to_string()));
            }
            image = Some(t);
        }
        out.push(image.expect("two observer states checked"));
    }
    let mut seen = out.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != out.len() {
        return Err(Error::NotPermutation("non-injective map".into()));
    }
    Ok(out)
}

/// Permutation matrix of a classical work-state map, acting as identity on
/// the observer.
pub fn permutation_matrix(system: &SpinSystem, map: impl Fn(WorkLabel) -> WorkLabel) -> Operator {
    let d = system.dim();
    let mut m = nalgebra::DMatrix::zeros(d, d);
    for s in WorkLabel::all(system.n_work()) {
        for ob in 0..2 {
            m[(system.basis_index(ob, map(s)), system.basis_index(ob, s))] =
                num_complex::Complex64::new(1.0, 0.0);
        }
    }
    Operator::from_matrix(m).expect("power-of-two square")
}

/// Truth table of a library gate computed directly on bit strings.
pub fn textbook_map(kind: &GateKind, s: WorkLabel) -> WorkLabel {
    match kind {
        GateKind::Nop | GateKind::Custom(_) => s,
        GateKind::Not(qubits) => qubits.iter().fold(s, |acc, &q| acc.with_flipped(q)),
        GateKind::Swap => {
            if s.bit(1) != s.bit(2) {
                s.with_flipped(1).with_flipped(2)
            } else {
                s
            }
        }
        GateKind::Cnot1 => {
            if s.bit(2) == 1 {
                s.with_flipped(1)
            } else {
                s
            }
        }
        GateKind::Toffoli => {
            if s.bit(1) == 1 && s.bit(2) == 1 {
                s.with_flipped(3)
            } else {
                s
            }
        }
    }
}
