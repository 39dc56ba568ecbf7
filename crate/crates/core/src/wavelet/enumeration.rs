use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::MotherWavelet;
use crate::error::{Error, Result};

/// Dilation/translation pair `(j, k)` of `u_{jk}(s) = 2^{j/2} u(2^j s − k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicPair {
    pub j: i32,
    pub k: i32,
}

/// A finite prefix of the spiral ordering `n ↦ (j_n, k_n)` together with
/// the amplitude bounds `D_n` and the derivative bounds `A_i`.
///
/// Index `0` is `(0, 0)`; the ordering then walks square rings of growing
/// radius, axis points first, clockwise from `(0, 1)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveletEnumeration {
    pairs: Vec<DyadicPair>,
    d_table: Vec<f64>,
    a_table: Vec<f64>,
    #[serde(skip)]
    lookup: HashMap<DyadicPair, usize>,
}

impl WaveletEnumeration {
    /// First `count` spiral entries, with `A_i` taken from the mother
    /// wavelet's sup-norm table.
    pub fn new(count: usize, mother: &MotherWavelet) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("enumeration needs at least one entry".into()));
        }
        let pairs = spiral_pairs(count);
        let d_table = pairs.iter().map(|p| d_bound(p.j)).collect();
        let a_table = mother
            .sup_norm_table()
            .iter()
            .enumerate()
            .map(|(i, &sup)| a_bound(i, sup))
            .collect();
        let lookup = pairs.iter().enumerate().map(|(n, p)| (*p, n)).collect();
        Ok(WaveletEnumeration {
            pairs,
            d_table,
            a_table,
            lookup,
        })
    }

    /// All pairs with `max(|j|, |k|) ≤ radius`.
    pub fn with_radius(radius: usize, mother: &MotherWavelet) -> Result<Self> {
        Self::new((2 * radius + 1).pow(2), mother)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, n: usize) -> Result<DyadicPair> {
        self.pairs.get(n).copied().ok_or(Error::IndexOutOfRange {
            context: "wavelet enumeration",
            index: n,
            size: self.pairs.len(),
        })
    }

    pub fn pairs(&self) -> &[DyadicPair] {
        &self.pairs
    }

    pub fn index_of(&self, pair: DyadicPair) -> Option<usize> {
        if self.lookup.is_empty() {
            return self.pairs.iter().position(|p| *p == pair);
        }
        self.lookup.get(&pair).copied()
    }

    pub fn d(&self, n: usize) -> f64 {
        self.d_table[n]
    }

    pub fn d_table(&self) -> &[f64] {
        &self.d_table
    }

    /// `A_i` for `i = 0..=i_max + 1`.
    pub fn a(&self, i: usize) -> f64 {
        self.a_table[i]
    }

    pub fn a_table(&self) -> &[f64] {
        &self.a_table
    }

    /// Certified sup-norm bound `D_n · A_i` for `[u_n]^{(i)}`.
    pub fn sup_bound(&self, n: usize, i: usize) -> f64 {
        self.d_table[n] * self.a_table[i]
    }
}

/// The longest prefix-stable chain in enumeration order with `j` strictly
/// decreasing and the `k`-th entry satisfying `j ≤ -k`, so that the
/// selected `D` values are bounded by `(1/√2)^k`.
pub fn h_chain(enumeration: &WaveletEnumeration) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last = i32::MAX;
    for (n, p) in enumeration.pairs().iter().enumerate() {
        let need = -(out.len() as i32 + 1);
        if p.j <= need && p.j < last {
            out.push(n);
            last = p.j;
        }
    }
    out
}

/// The first `count` entries of [`h_chain`].
pub fn choose_h_subsequence(enumeration: &WaveletEnumeration, count: usize) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::Range("h subsequence needs a positive count".into()));
    }
    let mut chain = h_chain(enumeration);
    if chain.len() < count {
        return Err(Error::Range(format!(
            "enumeration of {} entries supplies only {} h indices, {count} requested",
            enumeration.len(),
            chain.len()
        )));
    }
    chain.truncate(count);
    Ok(chain)
}

/// Enumeration indices outside `h`, in enumeration order.
pub fn complement_indices(enumeration: &WaveletEnumeration, h: &[usize]) -> Vec<usize> {
    let mut taken = vec![false; enumeration.len()];
    for &n in h {
        if n < taken.len() {
            taken[n] = true;
        }
    }
    (0..enumeration.len()).filter(|&n| !taken[n]).collect()
}

/// `D = 2^{j²}` for `j > 0`, `(1/√2)^{|j|}` for `j ≤ 0`.
pub fn d_bound(j: i32) -> f64 {
    if j > 0 {
        2f64.powi(j * j)
    } else {
        let m = j.unsigned_abs() as i32;
        // exact power of two for even |j|
        let even = 2f64.powi(-(m / 2));
        if m % 2 == 0 {
            even
        } else {
            even * FRAC_1_SQRT_2
        }
    }
}

/// `A_i = 2^{(i + 1/2)²} · ‖u^{(i)}‖_∞`.
pub fn a_bound(i: usize, sup_norm: f64) -> f64 {
    let e = i as f64 + 0.5;
    2f64.powf(e * e) * sup_norm
}

/// The first `count` pairs of the spiral ordering.
pub fn spiral_pairs(count: usize) -> Vec<DyadicPair> {
    let mut out = Vec::with_capacity(count);
    let mut radius: i32 = 0;
    while out.len() < count {
        let mut ring = ring(radius);
        ring.truncate(count - out.len());
        out.extend(ring);
        radius += 1;
    }
    out
}

fn ring(radius: i32) -> Vec<DyadicPair> {
    if radius == 0 {
        return vec![DyadicPair { j: 0, k: 0 }];
    }
    let mut pts = Vec::with_capacity(8 * radius as usize);
    for j in -radius..=radius {
        for k in -radius..=radius {
            if j.abs().max(k.abs()) == radius {
                pts.push(DyadicPair { j, k });
            }
        }
    }
    pts.sort_by(|a, b| {
        let la = a.j.abs() + a.k.abs();
        let lb = b.j.abs() + b.k.abs();
        la.cmp(&lb).then_with(|| {
            clockwise_angle(a)
                .partial_cmp(&clockwise_angle(b))
                .unwrap_or(Ordering::Equal)
        })
    });
    pts
}

/// Angle measured clockwise from the `(j, k) = (0, 1)` direction, in `[0, 2π)`.
fn clockwise_angle(p: &DyadicPair) -> f64 {
    let a = (p.j as f64).atan2(p.k as f64);
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}
