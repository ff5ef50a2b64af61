//! Ideal propagators: hard spin-selective pulses, transition-selective
//! pulses, multi-frequency π pulses and J-evolution encoding sequences.
//!
//! Pulses are instantaneous rotations exp(−iθ(cosφ·I_x + sinφ·I_y)) confined
//! to a spin or to a pair of connected levels.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::{free_propagator, tensor, Operator};
use crate::spinsys::{SpinSystem, TransitionTable, WorkLabel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Phase {
    X,
    MinusX,
    Y,
    MinusY,
    Radians(f64),
}

impl Phase {
    pub fn radians(self) -> f64 {
        match self {
            Phase::X => 0.0,
            Phase::Y => FRAC_PI_2,
            Phase::MinusX => PI,
            Phase::MinusY => -FRAC_PI_2,
            Phase::Radians(r) => r,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::X => f.write_str("x"),
            Phase::MinusX => f.write_str("-x"),
            Phase::Y => f.write_str("y"),
            Phase::MinusY => f.write_str("-y"),
            Phase::Radians(r) => write!(f, "{}", r.to_degrees()),
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    /// Named phases or a number of degrees.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "x" | "+x" => Phase::X,
            "-x" => Phase::MinusX,
            "y" | "+y" => Phase::Y,
            "-y" => Phase::MinusY,
            other => Phase::Radians(
                other
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad phase {other:?}")))?
                    .to_radians(),
            ),
        })
    }
}

/// What a pulse acts on. Transition endpoints are full basis indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PulseTarget {
    Spin(usize),
    Transition(usize, usize),
    Transitions(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub target: PulseTarget,
    pub angle: f64,
    pub phase: Phase,
}

impl PulseSpec {
    pub fn spin(spin: usize, angle: f64, phase: Phase) -> Self {
        Self {
            target: PulseTarget::Spin(spin),
            angle,
            phase,
        }
    }

    pub fn transition(a: usize, b: usize, angle: f64, phase: Phase) -> Self {
        Self {
            target: PulseTarget::Transition(a, b),
            angle,
            phase,
        }
    }

    pub fn propagator(&self, system: &SpinSystem) -> Result<Operator> {
        match &self.target {
            PulseTarget::Spin(spin) => hard_pulse(system, *spin, self.angle, self.phase),
            PulseTarget::Transition(a, b) => {
                transition_pulse(system, (*a, *b), self.angle, self.phase)
            }
            PulseTarget::Transitions(pairs) => {
                let mut u = Operator::identity(system.dim());
                for &(a, b) in pairs {
                    u = &transition_pulse(system, (a, b), self.angle, self.phase)? * &u;
                }
                Ok(u)
            }
        }
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if angle > 0.0 && angle <= 2.0 * PI + 1e-12 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "pulse angle {angle} outside (0, 2π]"
        )))
    }
}

/// 2×2 rotation exp(−iθ(cosφ·I_x + sinφ·I_y)).
fn rotation(angle: f64, phase: f64) -> [[Complex64; 2]; 2] {
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = (angle / 2.0).sin();
    let off = |sign: f64| Complex64::new(0.0, -s) * Complex64::from_polar(1.0, sign * phase);
    [[c, off(-1.0)], [off(1.0), c]]
}

pub fn hard_pulse(system: &SpinSystem, spin: usize, angle: f64, phase: Phase) -> Result<Operator> {
    system.check_spin(spin)?;
    check_angle(angle)?;
    let r = rotation(angle, phase.radians());
    let single = Operator::from_matrix_unchecked(DMatrix::from_row_slice(
        2,
        2,
        &[r[0][0], r[0][1], r[1][0], r[1][1]],
    ));
    Ok(tensor((0..system.n_spins()).map(|k| {
        if k == spin {
            single.clone()
        } else {
            Operator::identity(2)
        }
    })))
}

/// Rotation confined to the levels `a` and `b`, which must differ in
/// exactly one spin.
pub fn transition_pulse(
    system: &SpinSystem,
    transition: (usize, usize),
    angle: f64,
    phase: Phase,
) -> Result<Operator> {
    let (a, b) = transition;
    let d = system.dim();
    if a >= d || b >= d {
        return Err(Error::IndexOutOfRange {
            index: a.max(b),
            len: d,
        });
    }
    if (a ^ b).count_ones() != 1 {
        return Err(Error::ForbiddenTransition {
            a: system.format_basis_label(a),
            b: system.format_basis_label(b),
        });
    }
    check_angle(angle)?;
    // the level with the flipped spin in state 0 plays the role of |0⟩
    let (lo, hi) = if a & (a ^ b) == 0 { (a, b) } else { (b, a) };
    let r = rotation(angle, phase.radians());
    let mut m = DMatrix::<Complex64>::identity(d, d);
    m[(lo, lo)] = r[0][0];
    m[(lo, hi)] = r[0][1];
    m[(hi, lo)] = r[1][0];
    m[(hi, hi)] = r[1][1];
    Ok(Operator::from_matrix_unchecked(m))
}

/// Transition pulse between levels given as text labels, e.g. `("001", "011")`.
pub fn transition_pulse_labels(
    system: &SpinSystem,
    a: &str,
    b: &str,
    angle: f64,
    phase: Phase,
) -> Result<Operator> {
    let ia = system.parse_basis_label(a)?;
    let ib = system.parse_basis_label(b)?;
    transition_pulse(system, (ia, ib), angle, phase)
}

/// Observer transition `|0,s⟩ ↔ |1,s⟩` as a pair of basis indices.
pub fn observer_transition(system: &SpinSystem, s: WorkLabel) -> (usize, usize) {
    (system.basis_index(0, s), system.basis_index(1, s))
}

/// Multi-frequency π pulse inverting the observer lines of `targets`.
pub fn mf_pi_pulse(
    system: &SpinSystem,
    table: &TransitionTable,
    targets: &[WorkLabel],
) -> Result<Operator> {
    let mut u = Operator::identity(system.dim());
    for &s in targets {
        if s.n_work() != system.n_work() || table.frequency(s).is_err() {
            return Err(Error::InvalidLabel(s.to_string()));
        }
        u = &transition_pulse(system, observer_transition(system, s), PI, Phase::X)? * &u;
    }
    Ok(u)
}

/// Readout phase closing a J-evolution encoding with `n` coupling periods.
/// One, two and three periods use x, y and −x; the cycle continues with −y.
pub fn j_encoding_final_phase(n: usize) -> Phase {
    match n % 4 {
        1 => Phase::X,
        2 => Phase::Y,
        3 => Phase::MinusX,
        _ => Phase::MinusY,
    }
}

/// Prepares ±I_z^O·Π_{i∈subset} 2I_z^i from the observer equilibrium:
/// (π/2)_y on the observer, a refocused 1/(2|J_{O,i}|) period per qubit with
/// simultaneous π pulses on the observer and qubit i at its midpoint, and a
/// closing (π/2) observer pulse. `subset` holds 1-based work qubits.
pub fn j_evolution_encoding(system: &SpinSystem, subset: &[usize]) -> Result<Operator> {
    let mut qubits = subset.to_vec();
    qubits.sort_unstable();
    qubits.dedup();
    if qubits.is_empty() {
        return Ok(Operator::identity(system.dim()));
    }
    for &q in &qubits {
        if q == 0 || q > system.n_work() {
            return Err(Error::IndexOutOfRange {
                index: q,
                len: system.n_work(),
            });
        }
        if system.observer_coupling(q) == 0.0 {
            return Err(Error::ZeroCoupling(q));
        }
    }
    let obs = system.observer_index();
    let mut u = hard_pulse(system, obs, FRAC_PI_2, Phase::Y)?;
    for &q in &qubits {
        let half = 0.25 / system.observer_coupling(q).abs();
        let free = free_propagator(system, half);
        let refocus = &hard_pulse(system, obs, PI, Phase::X)?
            * &hard_pulse(system, system.work_spin(q), PI, Phase::X)?;
        u = &free * &(&refocus * &(&free * &u));
    }
    Ok(&hard_pulse(system, obs, FRAC_PI_2, j_encoding_final_phase(qubits.len()))? * &u)
}

/// One record of a declarative pulse program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SequenceStep {
    Pulse(PulseSpec),
    /// Free evolution in seconds.
    Delay(f64),
}

/// Ordered pulses and delays, compiled to a single propagator.
///
/// Text form, one record per line (`#` comments):
///
/// ```text
/// pulse spin=1 angle=180 phase=x
/// pulse transition=0110-0111 angle=180 phase=-y
/// pulse transitions=001-011,101-111 angle=180
/// delay 0.0238
/// ```
///
/// Angles and numeric phases are in degrees; the phase defaults to x.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub steps: Vec<SequenceStep>,
}

impl PulseSequence {
    pub fn new(steps: Vec<SequenceStep>) -> Self {
        Self { steps }
    }

    pub fn parse(text: &str, system: &SpinSystem) -> Result<Self> {
        let mut steps = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let mut words = line.split_whitespace();
            match words.next() {
                Some("delay") => {
                    let t: f64 = words
                        .next()
                        .ok_or_else(|| err("delay needs a duration".into()))?
                        .parse()
                        .map_err(|e| err(format!("delay: {e}")))?;
                    if !(t >= 0.0) {
                        return Err(err(format!("negative delay {t}")));
                    }
                    steps.push(SequenceStep::Delay(t));
                }
                Some("pulse") => {
                    let mut target = None;
                    let mut angle = None;
                    let mut phase = Phase::X;
                    for word in words {
                        let (key, value) = word
                            .split_once('=')
                            .ok_or_else(|| err(format!("expected key=value, got {word:?}")))?;
                        match key {
                            "spin" => {
                                let spin: usize =
                                    value.parse().map_err(|e| err(format!("spin: {e}")))?;
                                system.check_spin(spin).map_err(|e| err(e.to_string()))?;
                                target = Some(PulseTarget::Spin(spin));
                            }
                            "transition" => {
                                let (a, b) =
                                    parse_pair(system, value).map_err(|e| err(e.to_string()))?;
                                target = Some(PulseTarget::Transition(a, b));
                            }
                            "transitions" => {
                                let pairs = value
                                    .split(',')
                                    .map(|p| parse_pair(system, p))
                                    .collect::<Result<Vec<_>>>()
                                    .map_err(|e| err(e.to_string()))?;
                                target = Some(PulseTarget::Transitions(pairs));
                            }
                            "angle" => {
                                angle = Some(
                                    value
                                        .parse::<f64>()
                                        .map_err(|e| err(format!("angle: {e}")))?
                                        .to_radians(),
                                )
                            }
                            "phase" => {
                                phase = value.parse().map_err(|e: Error| err(e.to_string()))?
                            }
                            other => return Err(err(format!("unknown pulse field {other:?}"))),
                        }
                    }
                    let spec = PulseSpec {
                        target: target.ok_or_else(|| err("pulse needs a target".into()))?,
                        angle: angle.ok_or_else(|| err("pulse needs an angle".into()))?,
                        phase,
                    };
                    // surface bad angles or forbidden lines at parse time
                    spec.propagator(system).map_err(|e| err(e.to_string()))?;
                    steps.push(SequenceStep::Pulse(spec));
                }
                Some(other) => return Err(err(format!("unknown record {other:?}"))),
                None => unreachable!(),
            }
        }
        Ok(Self { steps })
    }

    pub fn propagator(&self, system: &SpinSystem) -> Result<Operator> {
        let mut u = Operator::identity(system.dim());
        for step in &self.steps {
            let next = match step {
                SequenceStep::Pulse(p) => p.propagator(system)?,
                SequenceStep::Delay(t) => free_propagator(system, *t),
            };
            u = &next * &u;
        }
        Ok(u)
    }
}

fn parse_pair(system: &SpinSystem, text: &str) -> Result<(usize, usize)> {
    let (a, b) = text
        .split_once('-')
        .ok_or_else(|| Error::InvalidLabel(text.to_string()))?;
    Ok((system.parse_basis_label(a)?, system.parse_basis_label(b)?))
}
