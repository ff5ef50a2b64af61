//! Dense operator algebra for deviation density matrices and product
//! operators.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spinsys::{SpinSystem, WorkLabel};

/// Tolerance used when an operator must be unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance used when a density operator must be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: DMatrix<Complex64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if !m.nrows().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(m.nrows()));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        debug_assert!(m.is_square());
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        Self {
            m: DMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    Complex64::new(values[i], 0.0)
                } else {
                    ZERO
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            m: self.m.map(|z| z * factor),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.m[(i, j)].norm() <= tol))
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖U†U − 1‖_max.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.m.adjoint() * &self.m;
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// ‖A − A†‖_max.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Equality up to a global phase factor.
    pub fn eq_up_to_phase(&self, other: &Operator, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let Some((idx, pivot)) = other
            .m
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        else {
            return true;
        };
        if pivot.norm() <= tol {
            return self.max_abs() <= tol;
        }
        let phase = self.m.as_slice()[idx] / pivot;
        if (phase.norm() - 1.0).abs() > tol {
            return false;
        }
        self.m
            .iter()
            .zip(other.m.iter())
            .all(|(a, b)| (a - b * phase).norm() <= tol)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            m: &self.m * &rhs.m,
        }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            m: &self.m - &rhs.m,
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { m: -&self.m }
    }
}

/// Single-spin operator kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolKind {
    /// |0⟩⟨0|
    I0,
    /// |1⟩⟨1|
    I1,
    Iz,
    Ix,
    Iy,
    /// Raising operator Ix + iIy = |0⟩⟨1|.
    Iplus,
}

pub fn polarization_op(kind: PolKind) -> Operator {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let entries = match kind {
        PolKind::I0 => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        PolKind::I1 => [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        PolKind::Iz => [c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)],
        PolKind::Ix => [c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)],
        PolKind::Iy => [c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)],
        PolKind::Iplus => [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
    };
    Operator::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &entries))
}

/// Ordered tensor product over spins 0..n, identity on unspecified spins.
pub fn product_operator(system: &SpinSystem, factors: &[(usize, PolKind)]) -> Result<Operator> {
    let n = system.n_spins();
    let mut slots: Vec<Option<PolKind>> = vec![None; n];
    for &(spin, kind) in factors {
        system.check_spin(spin)?;
        if slots[spin].replace(kind).is_some() {
            return Err(Error::DuplicateFactor(spin));
        }
    }
    Ok(tensor(slots.into_iter().map(|k| match k {
        Some(kind) => polarization_op(kind),
        None => Operator::identity(2),
    })))
}

pub(crate) fn tensor(ops: impl IntoIterator<Item = Operator>) -> Operator {
    ops.into_iter()
        .reduce(|acc, op| acc.kron(&op))
        .unwrap_or_else(|| Operator::identity(1))
}

/// Π_i I_{s_i}^i over the work qubits: the projector onto work state `s`.
pub fn work_projector(system: &SpinSystem, s: WorkLabel) -> Operator {
    let factors: Vec<(usize, PolKind)> = (1..=system.n_work())
        .map(|q| {
            (
                system.work_spin(q),
                if s.bit(q) == 0 {
                    PolKind::I0
                } else {
                    PolKind::I1
                },
            )
        })
        .collect();
    product_operator(system, &factors).expect("work spins are distinct")
}

/// Observer operator of `kind` tensored with identity on the work qubits.
pub fn observer_op(system: &SpinSystem, kind: PolKind) -> Operator {
    product_operator(system, &[(system.observer_index(), kind)]).expect("observer index is valid")
}

/// Deviation density operator: Hermitian, usually traceless.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let err = op.hermiticity_error();
        if err > HERMITIAN_TOL * op.max_abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "density operator not Hermitian (error {err:e})"
            )));
        }
        Ok(Self { op })
    }

    pub(crate) fn from_op_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> Complex64 {
        self.op.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.op.hermiticity_error()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            op: self.op.scale(factor),
        }
    }

    /// Diagonal entry of observer state `|0,s⟩`, which carries the sign of
    /// the `I_z^O` term of work state `s`.
    pub fn observer_population_sign(&self, system: &SpinSystem, s: WorkLabel) -> f64 {
        let up = self
            .op
            .get(system.basis_index(0, s), system.basis_index(0, s))
            .re;
        let down = self
            .op
            .get(system.basis_index(1, s), system.basis_index(1, s))
            .re;
        up - down
    }
}

/// σ_eq^O = I_z^O Σ_s Π_i I_{s_i}^i = I_z^O ⊗ 1.
pub fn observer_equilibrium(system: &SpinSystem) -> DensityOperator {
    let mut sum = Operator::zeros(system.dim());
    for s in WorkLabel::all(system.n_work()) {
        sum = &sum + &work_projector(system, s);
    }
    DensityOperator::from_op_unchecked(&observer_op(system, PolKind::Iz) * &sum)
}

/// ρ → UρU†.
pub fn apply_unitary(rho: &DensityOperator, u: &Operator) -> Result<DensityOperator> {
    if rho.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: u.dim(),
        });
    }
    let deviation = u.unitarity_error();
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(conjugate(rho, u))
}

pub(crate) fn conjugate(rho: &DensityOperator, u: &Operator) -> DensityOperator {
    let m = &u.m * &rho.op.m * u.m.adjoint();
    DensityOperator::from_op_unchecked(Operator { m })
}

/// Free evolution under the weak-coupling Hamiltonian for `t` seconds:
/// ρ_ab → ρ_ab·exp(−i2π(E_a − E_b)t).
pub fn evolve(rho: &DensityOperator, system: &SpinSystem, t: f64) -> Result<DensityOperator> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "evolution time {t} must be >= 0"
        )));
    }
    if rho.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: rho.dim(),
        });
    }
    Ok(evolve_with_energies(rho, &system.energies_hz(), t))
}

pub(crate) fn evolve_with_energies(
    rho: &DensityOperator,
    energies_hz: &[f64],
    t: f64,
) -> DensityOperator {
    let d = rho.dim();
    let mut m = rho.op.m.clone();
    for a in 0..d {
        for b in 0..d {
            if a != b {
                m[(a, b)] *=
                    Complex64::from_polar(1.0, -2.0 * PI * (energies_hz[a] - energies_hz[b]) * t);
            }
        }
    }
    DensityOperator::from_op_unchecked(Operator { m })
}

/// Propagator exp(−i2πHt) of free evolution.
pub fn free_propagator(system: &SpinSystem, t: f64) -> Operator {
    let e = system.energies_hz();
    let d = e.len();
    Operator {
        m: DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, -2.0 * PI * e[i] * t)
            } else {
                ZERO
            }
        }),
    }
}

/// Tr(ρ·obs).
pub fn expectation(rho: &DensityOperator, obs: &Operator) -> Result<Complex64> {
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: obs.dim(),
        });
    }
    let d = rho.dim();
    let mut acc = ZERO;
    for a in 0..d {
        for b in 0..d {
            acc += rho.op.m[(a, b)] * obs.m[(b, a)];
        }
    }
    Ok(acc)
}

/// Ideal field-gradient crusher: removes every coherence with nonzero total
/// coherence order, keeping populations and zero-quantum terms.
pub fn crush_coherences(rho: &DensityOperator) -> DensityOperator {
    let d = rho.dim();
    let mut m = rho.op.m.clone();
    for a in 0..d {
        for b in 0..d {
            if a.count_ones() != b.count_ones() {
                m[(a, b)] = ZERO;
            }
        }
    }
    DensityOperator::from_op_unchecked(Operator { m })
}
