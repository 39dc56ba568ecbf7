//! Dense complex linear algebra at desk scale.
//!
//! Vectors are coefficient lists with respect to a fixed orthonormal basis,
//! matrices are row-major. Everything here is small (dimension ≤ 64), so
//! the routines favour clarity over blocking or SIMD.

mod svd;

use std::ops::{Deref, Index};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use svd::{fractional_power_operator, svd, svd_with, SchmidtSystem, SvdOptions};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Coefficient vector of an element of a separable Hilbert space.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    /// Builds a vector, rejecting NaN or infinite entries.
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(ComplexVector(entries))
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<C64>) -> Self {
        ComplexVector(entries)
    }

    pub fn zeros(len: usize) -> Self {
        ComplexVector(vec![ZERO; len])
    }

    /// The `index`-th standard basis vector of length `len`.
    pub fn unit(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::IndexOutOfRange {
                context: "unit vector",
                index,
                size: len,
            });
        }
        let mut v = vec![ZERO; len];
        v[index] = ONE;
        Ok(ComplexVector(v))
    }

    pub fn from_real(values: &[f64]) -> Self {
        ComplexVector(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        ComplexVector(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len("vector difference", self.len(), other.len())?;
        Ok(ComplexVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len("vector sum", self.len(), other.len())?;
        Ok(ComplexVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// Largest entry-wise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Deref for ComplexVector {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl From<ComplexVector> for Vec<C64> {
    fn from(v: ComplexVector) -> Self {
        v.0
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::dimension(context, expected, found));
    }
    Ok(())
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ a_i · conj(b_i)`, without length checks.
pub(crate) fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// `Σ a_i · b_i` (bilinear, no conjugation).
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner product `⟨a, b⟩ = Σ a_i · conj(b_i)`, linear in the first slot.
pub fn inner(a: &ComplexVector, b: &ComplexVector) -> Result<C64> {
    check_len("inner product", a.len(), b.len())?;
    Ok(dot_conj(a, b))
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        check_len("matrix entries", rows * cols, data.len())?;
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[ComplexVector]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        for c in columns {
            check_len("matrix column", rows, c.len())?;
        }
        Ok(Self::from_fn(rows, cols, |r, c| columns[c][r]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: C64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> ComplexVector {
        ComplexVector((0..self.rows).map(|r| self.get(r, c)).collect())
    }

    /// Swaps two rows in place.
    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        check_len("matrix product", self.cols, rhs.rows)?;
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs.get(k, c);
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        check_len("matrix-vector product", self.cols, v.len())?;
        Ok(ComplexVector((0..self.rows).map(|r| dot(self.row(r), v)).collect()))
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "matrix sum", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "matrix difference", |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, ctx: &'static str, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        check_len(ctx, self.rows, rhs.rows)?;
        check_len(ctx, self.cols, rhs.cols)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, factor: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest entry-wise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        Ok(self.sub(rhs)?.max_abs())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

/// Orthogonal projection onto the span of the listed coordinate vectors.
pub fn projector(indices: &[usize], dim: usize) -> Result<ComplexMatrix> {
    let mut e = ComplexMatrix::zeros(dim, dim);
    for &i in indices {
        if i >= dim {
            return Err(Error::IndexOutOfRange {
                context: "projector",
                index: i,
                size: dim,
            });
        }
        e.set(i, i, ONE);
    }
    Ok(e)
}

// Serialized as nested arrays of `[re, im]` pairs.

impl Serialize for ComplexVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.0.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        ComplexVector::new(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|r| self.row(r).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != ncols) {
            return Err(serde::de::Error::custom(format!(
                "row {r} has {} entries, expected {ncols}",
                row.len()
            )));
        }
        let data = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::new(nrows, ncols, data).map_err(serde::de::Error::custom)
    }
}
