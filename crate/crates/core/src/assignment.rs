//! Splitting the null sequence into `{x_k}` and `{v_k}`, choosing the
//! wavelet targets and realizing the unitary correspondence as a
//! permutation of coefficient positions.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, C64};
use crate::splitting::{d_functional, z_functional, OperatorEnvironment, SplitSystem};
use crate::wavelet::{complement_indices, h_chain, WaveletSystem};

/// `Σ_{k≥1} (1/√2)^k`.
pub const GEOMETRIC_H_SUM: f64 = SQRT_2 + 1.0;

/// Greedy slot filling: the candidate at position `p` takes slot `k`
/// (1-based count of accepted candidates so far plus one) when
/// `d_p ≤ 2^{-k} / (1 + g_bound(k))`. Returns accepted and rejected
/// positions.
pub fn select_x(d_values: &[f64], mut g_bound: impl FnMut(usize) -> f64) -> (Vec<usize>, Vec<usize>) {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for (p, &d) in d_values.iter().enumerate() {
        let k = accepted.len() + 1;
        let threshold = 0.5f64.powi(k as i32) / (1.0 + g_bound(k));
        if d <= threshold {
            accepted.push(p);
        } else {
            rejected.push(p);
        }
    }
    (accepted, rejected)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XvSplit {
    pub x_indices: Vec<usize>,
    pub v_indices: Vec<usize>,
    /// `d(e_k)` for every null index, in null-sequence order.
    pub d_values: Vec<f64>,
}

/// `max_{i ≤ min(k, i_max)} G_{k,i}` with `G_{k,i} = D_{g_k} A_i`.
fn g_slot_bound(wavelets: &WaveletSystem, g: &[usize], i_max: usize, k: usize) -> f64 {
    match g.get(k - 1) {
        Some(&n) => (0..=k.min(i_max)).map(|i| wavelets.sup_bound(n, i)).fold(0.0, f64::max),
        None => f64::INFINITY,
    }
}

/// Splits the null sequence by the threshold `d(x_k) ≤ 2^{-k}/(1 + max G)`.
/// At least `min_x` indices must land in `x`.
pub fn split_x_v(
    env: &OperatorEnvironment,
    split: &SplitSystem,
    wavelets: &WaveletSystem,
    i_max: usize,
    min_x: usize,
) -> Result<XvSplit> {
    if i_max > wavelets.i_max() {
        return Err(Error::Config(format!(
            "i_max {i_max} exceeds the wavelet system's {}",
            wavelets.i_max()
        )));
    }
    let dim = env.dim();
    let d_values = env
        .null_indices()
        .iter()
        .map(|&i| d_functional(split, &ComplexVector::unit(dim, i)?))
        .collect::<Result<Vec<f64>>>()?;
    let g = complement_indices(wavelets.enumeration(), &h_chain(wavelets.enumeration()));
    let (acc, rej) = select_x(&d_values, |k| g_slot_bound(wavelets, &g, i_max, k));
    if acc.len() < min_x {
        return Err(Error::Assignment(format!(
            "only {} null indices pass the x threshold but {min_x} g slots were requested; \
             supply a longer null sequence or smaller couplings",
            acc.len()
        )));
    }
    let pick = |ps: &[usize]| ps.iter().map(|&p| env.null_indices()[p]).collect();
    Ok(XvSplit {
        x_indices: pick(&acc),
        v_indices: pick(&rej),
        d_values,
    })
}

/// Where each coefficient position of `ℂᴺ` is sent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assignment {
    pub x_indices: Vec<usize>,
    pub v_indices: Vec<usize>,
    /// `g_k` for each `x_k`.
    pub g_for_x: Vec<usize>,
    /// `n(k)`: the h wavelet for each complement vector, in user order.
    pub h_for_complement: Vec<usize>,
    /// `m(k)`: the h wavelet for each `v_k`.
    pub h_for_v: Vec<usize>,
    /// Enumeration index of the image of each basis position.
    pub wavelet_of_position: Vec<usize>,
    /// Sorted enumeration indices of all images; the coordinate basis on
    /// the wavelet side.
    pub wavelets: Vec<usize>,
    /// 0/1 matrix with `U[coordinate(wavelet_of_position[p]), p] = 1`.
    pub unitary: ComplexMatrix,
}

impl Assignment {
    pub fn dim(&self) -> usize {
        self.wavelet_of_position.len()
    }

    /// Coordinate of enumeration index `n` in [`Assignment::wavelets`].
    pub fn coordinate_of(&self, n: usize) -> Option<usize> {
        self.wavelets.binary_search(&n).ok()
    }

    /// Coordinate that basis position `p` is sent to.
    pub fn target_of(&self, p: usize) -> usize {
        self.coordinate_of(self.wavelet_of_position[p])
            .expect("image is a used wavelet")
    }

    /// Basis position mapped onto wavelet `n`, i.e. `y = U^{-1} u_n`.
    pub fn preimage_of(&self, n: usize) -> Option<usize> {
        self.wavelet_of_position.iter().position(|&w| w == n)
    }

    /// `Uf` in wavelet coordinates, following the assignment map.
    pub fn forward(&self, f: &ComplexVector) -> Result<ComplexVector> {
        if f.len() != self.dim() {
            return Err(Error::dimension("assignment map", self.dim(), f.len()));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (p, z) in f.iter().enumerate() {
            out[self.target_of(p)] = *z;
        }
        ComplexVector::new(out)
    }

    /// `U M U^{-1}` in wavelet coordinates.
    pub fn conjugate(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.rows() != self.dim() || m.cols() != self.dim() {
            return Err(Error::dimension("assignment conjugation", self.dim(), m.rows()));
        }
        let target: Vec<usize> = (0..self.dim()).map(|p| self.target_of(p)).collect();
        let mut out = ComplexMatrix::zeros(self.dim(), self.dim());
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                out.set(target[r], target[c], m.get(r, c));
            }
        }
        Ok(out)
    }

    /// Entries of `unitary` that disagree with the assignment map.
    pub fn map_mismatches(&self) -> usize {
        let n = self.dim();
        let mut bad = 0;
        for p in 0..n {
            let t = self.target_of(p);
            for r in 0..n {
                let want = if r == t { 1.0 } else { 0.0 };
                if self.unitary.get(r, p) != C64::new(want, 0.0) {
                    bad += 1;
                }
            }
        }
        bad
    }
}

/// Builds the assignment `x_k ↦ g_k`, `v_k ↦ h_{m(k)}`, `e_k^⊥ ↦ h_{n(k)}`.
///
/// The complement takes the leading (fastest decaying) h indices in user
/// order; the `v` indices take the next ones.
pub fn assign(env: &OperatorEnvironment, xv: &XvSplit, wavelets: &WaveletSystem) -> Result<Assignment> {
    let enumeration = wavelets.enumeration();
    let chain = h_chain(enumeration);
    let c = env.complement_indices().len();
    let needed = c + xv.v_indices.len();
    if chain.len() < needed {
        return Err(Error::Range(format!(
            "enumeration supplies {} h indices, {needed} needed",
            chain.len()
        )));
    }
    let g = complement_indices(enumeration, &chain);
    if g.len() < xv.x_indices.len() {
        return Err(Error::Range(format!(
            "enumeration supplies {} g indices, {} needed",
            g.len(),
            xv.x_indices.len()
        )));
    }
    let h_for_complement = chain[..c].to_vec();
    let h_for_v = chain[c..needed].to_vec();
    let g_for_x = g[..xv.x_indices.len()].to_vec();

    let dim = env.dim();
    let mut wavelet_of_position = vec![usize::MAX; dim];
    let pairs = xv
        .x_indices
        .iter()
        .zip(&g_for_x)
        .chain(xv.v_indices.iter().zip(&h_for_v))
        .chain(env.complement_indices().iter().zip(&h_for_complement));
    for (&p, &n) in pairs {
        wavelet_of_position[p] = n;
    }
    if let Some(p) = wavelet_of_position.iter().position(|&w| w == usize::MAX) {
        return Err(Error::Assignment(format!("basis position {p} received no wavelet")));
    }
    let mut wavelets_used = wavelet_of_position.clone();
    wavelets_used.sort_unstable();
    let mut unitary = ComplexMatrix::zeros(dim, dim);
    for (p, n) in wavelet_of_position.iter().enumerate() {
        let r = wavelets_used.binary_search(n).expect("present");
        unitary.set(r, p, C64::new(1.0, 0.0));
    }
    Ok(Assignment {
        x_indices: xv.x_indices.clone(),
        v_indices: xv.v_indices.clone(),
        g_for_x,
        h_for_complement,
        h_for_v,
        wavelet_of_position,
        wavelets: wavelets_used,
        unitary,
    })
}

/// Certified sums for one derivative order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderSums {
    pub order: usize,
    /// `Σ H_{k,i}` over every h index in use.
    pub h_sum: f64,
    pub h_bound: f64,
    /// `Σ z(v_k) H_{m(k),i}`.
    pub v_sum: f64,
    pub v_bound: f64,
    /// `Σ z(e_k^⊥) H_{n(k),i}`.
    pub complement_sum: f64,
    pub complement_bound: f64,
    /// `Σ d(x_k)(G_{k,i} + 1)`.
    pub x_sum: f64,
    pub x_bound: f64,
}

impl OrderSums {
    pub fn within_bounds(&self) -> bool {
        self.h_sum <= self.h_bound
            && self.v_sum <= self.v_bound
            && self.complement_sum <= self.complement_bound
            && self.x_sum <= self.x_bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub orders: Vec<OrderSums>,
    pub violation: bool,
}

/// Sums built from the certified bounds `H = D·A`, `G = D·A`, each
/// compared against the geometric bound that the construction guarantees.
pub fn summability_report(
    assignment: &Assignment,
    env: &OperatorEnvironment,
    xv: &XvSplit,
    wavelets: &WaveletSystem,
    i_max: usize,
) -> Result<SummabilityReport> {
    let dim = env.dim();
    let z_of = |p: usize| -> Result<f64> { z_functional(env, &ComplexVector::unit(dim, p)?) };
    let z_v = assignment
        .v_indices
        .iter()
        .map(|&p| z_of(p))
        .collect::<Result<Vec<_>>>()?;
    let z_c = env
        .complement_indices()
        .iter()
        .map(|&p| z_of(p))
        .collect::<Result<Vec<_>>>()?;
    let d_x: Vec<f64> = assignment
        .x_indices
        .iter()
        .map(|p| {
            let pos = env
                .null_indices()
                .iter()
                .position(|q| q == p)
                .expect("x is a null index");
            xv.d_values[pos]
        })
        .collect();
    let c = assignment.h_for_complement.len();
    let max_of = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mut orders = Vec::with_capacity(i_max + 1);
    for i in 0..=i_max {
        let a = wavelets.enumeration().a(i);
        let h = |n: usize| wavelets.sup_bound(n, i);
        let h_sum: f64 = assignment
            .h_for_complement
            .iter()
            .chain(&assignment.h_for_v)
            .map(|&n| h(n))
            .sum();
        let v_sum: f64 = z_v.iter().zip(&assignment.h_for_v).map(|(z, &n)| z * h(n)).sum();
        let complement_sum: f64 = z_c
            .iter()
            .zip(&assignment.h_for_complement)
            .map(|(z, &n)| z * h(n))
            .sum();
        // v takes the chain from position c + 1 on: Σ_{k>c} (1/√2)^k
        let v_tail = GEOMETRIC_H_SUM * 0.5f64.sqrt().powi(c as i32);
        let first = i.max(1);
        let mut x_sum = 0.0;
        let mut x_head = 0.0;
        for (k, (&d, &n)) in d_x.iter().zip(&assignment.g_for_x).enumerate() {
            let term = d * (h(n) + 1.0);
            x_sum += term;
            if k + 1 < first {
                x_head += term;
            }
        }
        orders.push(OrderSums {
            order: i,
            h_sum,
            h_bound: a * GEOMETRIC_H_SUM,
            v_sum,
            v_bound: max_of(&z_v) * a * v_tail,
            complement_sum,
            complement_bound: max_of(&z_c) * a * GEOMETRIC_H_SUM,
            x_sum,
            x_bound: x_head + 0.5f64.powi(first as i32 - 1),
        });
    }
    let violation = orders.iter().any(|o| !o.within_bounds());
    Ok(SummabilityReport { orders, violation })
}
