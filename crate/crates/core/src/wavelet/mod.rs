//! Lemarié-Meyer wavelet basis of `L₂(ℝ)`: the bell, the mother wavelet
//! with its derivatives, the `n ↔ (j, k)` enumeration and the amplitude
//! bound tables.

mod bell;
mod enumeration;
mod mother;
mod table;

use std::sync::OnceLock;

use rayon::prelude::*;

pub use bell::{bell_eval, smooth_step, BellFunction, SUPPORT_HI, SUPPORT_LO, SUPPORT_MID};
pub use enumeration::{
    a_bound, choose_h_subsequence, complement_indices, d_bound, h_chain, spiral_pairs, DyadicPair, WaveletEnumeration,
};
pub use mother::{MotherWavelet, DEFAULT_PANELS, NODES_PER_PANEL};
pub use table::{MotherTable, TABLE_HALF_WIDTH};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// How pointwise basis values are produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EvalMode {
    /// Quadrature of the frequency integral at every point.
    #[default]
    Direct,
    /// Cubic Hermite interpolation from [`MotherTable`], falling back to
    /// quadrature outside the tabulated window.
    Tabulated,
}

/// Mother wavelet plus enumeration: everything needed to evaluate
/// `[u_n]^{(i)}(s)` for enumerated `n`.
#[derive(Debug)]
pub struct WaveletSystem {
    mother: MotherWavelet,
    enumeration: WaveletEnumeration,
    table: OnceLock<MotherTable>,
}

impl WaveletSystem {
    /// Derivatives up to `i_max`, all pairs with `max(|j|, |k|) ≤ radius`.
    pub fn new(i_max: usize, radius: usize) -> Result<Self> {
        Self::from_mother(MotherWavelet::new(i_max), radius)
    }

    pub fn from_mother(mother: MotherWavelet, radius: usize) -> Result<Self> {
        if radius > 30 {
            // 2^{j²} overflows f64 beyond j = 31
            return Err(Error::Config(format!("enumeration radius {radius} exceeds 30")));
        }
        let enumeration = WaveletEnumeration::with_radius(radius, &mother)?;
        Ok(WaveletSystem {
            mother,
            enumeration,
            table: OnceLock::new(),
        })
    }

    pub fn mother(&self) -> &MotherWavelet {
        &self.mother
    }

    pub fn enumeration(&self) -> &WaveletEnumeration {
        &self.enumeration
    }

    pub fn i_max(&self) -> usize {
        self.mother.i_max()
    }

    pub fn table(&self) -> &MotherTable {
        self.table.get_or_init(|| MotherTable::build(&self.mother))
    }

    /// `[u_n]^{(i)}(s) = 2^{j/2} 2^{ji} u^{(i)}(2^j s − k)`.
    pub fn basis_eval(&self, n: usize, s: f64, i: usize) -> Result<C64> {
        self.check(n, i)?;
        Ok(C64::new(0.0, self.basis_im(n, s, i, EvalMode::Direct)))
    }

    fn check(&self, n: usize, i: usize) -> Result<()> {
        self.enumeration.pair(n)?;
        if i > self.i_max() {
            return Err(Error::Config(format!(
                "derivative order {i} exceeds configured i_max {}",
                self.i_max()
            )));
        }
        Ok(())
    }

    /// Imaginary part of `[u_n]^{(i)}(s)`; basis functions are purely
    /// imaginary. Orders up to `i_max + 1` are accepted in direct mode.
    pub(crate) fn basis_im(&self, n: usize, s: f64, i: usize, mode: EvalMode) -> f64 {
        let p = self.enumeration.pairs()[n];
        let scale = 2f64.powi(p.j);
        let x = scale * s - p.k as f64;
        let factor = scale.sqrt() * scale.powi(i as i32);
        let value = match mode {
            EvalMode::Tabulated if i <= self.i_max() && self.table().covers(x) => self.table().eval_im(x, i),
            _ => self.mother.eval_im(x, i),
        };
        factor * value
    }

    /// `Im [u_n]^{(i)}(s)` for `i < out.len()` in one direct pass.
    pub(crate) fn basis_orders_im(&self, n: usize, s: f64, out: &mut [f64]) {
        let p = self.enumeration.pairs()[n];
        let scale = 2f64.powi(p.j);
        self.mother.eval_orders_im(scale * s - p.k as f64, out);
        let mut factor = scale.sqrt();
        for v in out.iter_mut() {
            *v *= factor;
            factor *= scale;
        }
    }

    /// Values `[u_n]^{(i)}(s)` for every `s` in `points` (outer) and `n` in
    /// `indices` (inner), stored as imaginary parts.
    pub fn sample(&self, indices: &[usize], points: &[f64], i: usize, mode: EvalMode) -> Result<BasisSamples> {
        for &n in indices {
            self.check(n, i)?;
        }
        Ok(self.sample_unchecked(indices, points, i, mode))
    }

    pub(crate) fn sample_unchecked(&self, indices: &[usize], points: &[f64], i: usize, mode: EvalMode) -> BasisSamples {
        if mode == EvalMode::Tabulated {
            self.table();
        }
        let width = indices.len();
        let values: Vec<f64> = points
            .par_iter()
            .flat_map_iter(|&s| indices.iter().map(move |&n| self.basis_im(n, s, i, mode)))
            .collect();
        BasisSamples { width, values }
    }

    /// Certified sup bound `D_n · A_i`.
    pub fn sup_bound(&self, n: usize, i: usize) -> f64 {
        self.enumeration.sup_bound(n, i)
    }
}

/// Row-major table of imaginary basis values, one row per sample point.
#[derive(Clone, Debug)]
pub struct BasisSamples {
    width: usize,
    values: Vec<f64>,
}

impl BasisSamples {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Imaginary parts of the basis values at the `p`-th point.
    pub fn row(&self, p: usize) -> &[f64] {
        &self.values[p * self.width..(p + 1) * self.width]
    }

    /// `Σ_r c_r [u_r](s_p)` for a coefficient vector `c`.
    pub fn combine(&self, p: usize, coefficients: &[C64]) -> C64 {
        let sum: C64 = self.row(p).iter().zip(coefficients).map(|(&v, c)| c * v).sum();
        sum * C64::new(0.0, 1.0)
    }
}
