//! Sylvester Hadamard matrices, encoding schedules and transpose decoding.

use std::ops::{AddAssign, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinsys::WorkLabel;

/// Sylvester-type Hadamard matrix, `H[r][c] = (−1)^popcount(r & c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HadamardMatrix {
    k: usize,
    entries: Vec<i8>,
}

pub fn hadamard_matrix(k: usize) -> Result<HadamardMatrix> {
    if !k.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(k));
    }
    let entries = (0..k * k)
        .map(|i| {
            if ((i / k) & (i % k)).count_ones().is_multiple_of(2) {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok(HadamardMatrix { k, entries })
}

impl HadamardMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.k + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.entries[row * self.k..(row + 1) * self.k]
    }

    /// H·Hᵀ in exact integer arithmetic.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        (0..self.k)
            .map(|i| {
                (0..self.k)
                    .map(|j| {
                        self.row(i)
                            .iter()
                            .zip(self.row(j))
                            .map(|(&a, &b)| i64::from(a) * i64::from(b))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn is_orthogonal(&self) -> bool {
        let k = self.k as i64;
        self.gram().iter().enumerate().all(|(i, row)| {
            row.iter()
                .enumerate()
                .all(|(j, &v)| v == if i == j { k } else { 0 })
        })
    }

    /// responses[j] = Σ_i H[j][i]·inputs[i].
    pub fn encode<T>(&self, inputs: &[Vec<T>]) -> Result<Vec<Vec<T>>>
    where
        T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    {
        check_series(inputs, self.k)?;
        Ok((0..self.k)
            .map(|j| combine(inputs, |i| f64::from(self.entry(j, i))))
            .collect())
    }
}

fn check_series<T>(series: &[Vec<T>], k: usize) -> Result<usize> {
    if series.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: series.len(),
        });
    }
    let len = series.first().map_or(0, Vec::len);
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            got: bad.len(),
        });
    }
    Ok(len)
}

fn combine<T>(series: &[Vec<T>], weight: impl Fn(usize) -> f64) -> Vec<T>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    let len = series.first().map_or(0, Vec::len);
    let mut out = vec![T::default(); len];
    for (j, s) in series.iter().enumerate() {
        let w = weight(j);
        if w == 0.0 {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(s) {
            *o += v * w;
        }
    }
    out
}

/// (1/k)·Σ_j Hᵀ[input][j]·responses[j]: the response of a single input
/// state recovered from k encoded experiments.
pub fn decode<T>(responses: &[Vec<T>], h: &HadamardMatrix, input_index: usize) -> Result<Vec<T>>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    check_series(responses, h.k())?;
    if input_index >= h.k() {
        return Err(Error::IndexOutOfRange {
            index: input_index,
            len: h.k(),
        });
    }
    let norm = 1.0 / h.k() as f64;
    Ok(combine(responses, |j| {
        f64::from(h.entry(j, input_index)) * norm
    }))
}

/// Decodes every input index.
pub fn decode_all<T>(responses: &[Vec<T>], h: &HadamardMatrix) -> Result<Vec<Vec<T>>>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T> + Send + Sync,
{
    (0..h.k()).map(|i| decode(responses, h, i)).collect()
}

/// In-place unnormalized fast Walsh–Hadamard transform (Sylvester order).
pub fn fwht<T>(data: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let n = data.len();
    assert!(n.is_power_of_two(), "fwht length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(h * 2) {
            for j in i..i + h {
                let (a, b) = (data[j], data[j + h]);
                data[j] = a + b;
                data[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// One encoded experiment: which observer lines get a π pulse and which
/// product operator realizes the same signing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HadamardSchedule {
    pub row_index: usize,
    /// Labels whose column entry is −1.
    pub pulse_targets: Vec<WorkLabel>,
    /// Work qubits (1-based) whose I_z factors reproduce the row.
    pub product_operator_tag: Vec<usize>,
}

/// Sign of I_z^O·Π_{i∈tag} 2I_z^i on the observer line of `s`.
pub fn product_operator_sign(tag: &[usize], s: WorkLabel) -> i8 {
    if tag.iter().map(|&q| s.bit(q)).sum::<usize>() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn schedule_for_row(
    h: &HadamardMatrix,
    row: usize,
    label_order: &[WorkLabel],
) -> Result<HadamardSchedule> {
    if row >= h.k() {
        return Err(Error::IndexOutOfRange {
            index: row,
            len: h.k(),
        });
    }
    if label_order.len() != h.k() {
        return Err(Error::LengthMismatch {
            expected: h.k(),
            got: label_order.len(),
        });
    }
    let signs = h.row(row);
    let pulse_targets = label_order
        .iter()
        .zip(signs)
        .filter(|(_, &sign)| sign < 0)
        .map(|(l, _)| *l)
        .collect();
    let n = label_order[0].n_work();
    let product_operator_tag = (0usize..1 << n)
        .map(|mask| {
            (1..=n)
                .filter(|q| (mask >> (n - q)) & 1 == 1)
                .collect::<Vec<_>>()
        })
        .find(|tag| {
            label_order
                .iter()
                .zip(signs)
                .all(|(&s, &sign)| product_operator_sign(tag, s) == sign)
        })
        .ok_or(Error::EncodingMismatch { row })?;
    Ok(HadamardSchedule {
        row_index: row,
        pulse_targets,
        product_operator_tag,
    })
}
