//! Coefficient tables of the four kernel series and their pointwise
//! evaluation.
//!
//! Every series is stored as a list of bilinear terms
//! `w · [a](s) · conj([b](t))`, where `a` and `b` are coefficient vectors
//! over the assignment's wavelet coordinates. Then
//!
//! * `K  = P + F̃` is the kernel of `T  = U S U⁻¹`,
//! * `K* = P̃ + F` is the kernel of `T*`.

use rayon::prelude::*;
use serde::Serialize;

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, C64};
use crate::splitting::{z_functional, OperatorEnvironment, SplitSystem};
use crate::wavelet::{BasisSamples, EvalMode, WaveletSystem};

const I: C64 = C64::new(0.0, 1.0);

/// `weight · [left](s) · conj([right](t))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BilinearTerm {
    pub weight: f64,
    pub left: ComplexVector,
    pub right: ComplexVector,
}

/// Which kernel orientation to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// `K = P + F̃`.
    Kernel,
    /// `K* = P̃ + F`.
    Adjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Series {
    P,
    PTilde,
    F,
    FTilde,
}

impl Orientation {
    pub fn series(self) -> [Series; 2] {
        match self {
            Orientation::Kernel => [Series::P, Series::FTilde],
            Orientation::Adjoint => [Series::PTilde, Series::F],
        }
    }
}

/// Images `U S* e_k^⊥` (`T*h_{n(k)}`) and `U S e_k^⊥` (`Th_{n(k)}`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferTables {
    pub adjoint_images: Vec<ComplexVector>,
    pub forward_images: Vec<ComplexVector>,
}

pub fn compute_transfer_vectors(assignment: &Assignment, env: &OperatorEnvironment) -> Result<TransferTables> {
    let s = env.matrix();
    let s_adj = s.adjoint();
    let mut adjoint_images = Vec::new();
    let mut forward_images = Vec::new();
    for &k in env.complement_indices() {
        let e = ComplexVector::unit(env.dim(), k)?;
        adjoint_images.push(assignment.forward(&s_adj.apply(&e)?)?);
        forward_images.push(assignment.forward(&s.apply(&e)?)?);
    }
    Ok(TransferTables {
        adjoint_images,
        forward_images,
    })
}

/// Bilinear terms for `F` (from `J`) and `F̃` (from `J̃`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuclearTables {
    /// `s^{1/2} · [U B* q](s) · conj([U B p](t))`.
    pub forward: Vec<BilinearTerm>,
    /// Same with the Schmidt data of `J̃`.
    pub adjoint: Vec<BilinearTerm>,
}

pub fn compute_f_vectors(assignment: &Assignment, split: &SplitSystem) -> Result<NuclearTables> {
    let build =
        |sys: &crate::linalg::SchmidtSystem, root: &crate::linalg::ComplexMatrix| -> Result<Vec<BilinearTerm>> {
            let root_adj = root.adjoint();
            sys.positive_terms()
                .map(|(s, q, p)| {
                    Ok(BilinearTerm {
                        weight: s.sqrt(),
                        left: assignment.forward(&root_adj.apply(q)?)?,
                        right: assignment.forward(&root.apply(p)?)?,
                    })
                })
                .collect()
        };
    Ok(NuclearTables {
        forward: build(&split.forward_schmidt, &split.forward_root)?,
        adjoint: build(&split.adjoint_schmidt, &split.adjoint_root)?,
    })
}

/// Dominating constants per derivative order `0..=i_max + 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    /// `C_i ≥ sup_k ‖[Th_{n(k)}]^{(i)}‖_∞`.
    pub forward: Vec<f64>,
    /// `C*_i ≥ sup_k ‖[T*h_{n(k)}]^{(i)}‖_∞`.
    pub adjoint: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelModel {
    i_max: usize,
    /// Enumeration indices of the coordinate basis.
    wavelets: Vec<usize>,
    /// `D_n` of each coordinate wavelet.
    amplitude: Vec<f64>,
    /// `A_i` for `i = 0..=i_max + 1`.
    derivative_bounds: Vec<f64>,
    p_terms: Vec<BilinearTerm>,
    p_tilde_terms: Vec<BilinearTerm>,
    f_terms: Vec<BilinearTerm>,
    f_tilde_terms: Vec<BilinearTerm>,
    /// `z(e_k^⊥)` per complement vector.
    complement_z: Vec<f64>,
    bounds: BoundConstants,
    cap: Option<usize>,
}

impl KernelModel {
    pub fn build(
        env: &OperatorEnvironment,
        split: &SplitSystem,
        assignment: &Assignment,
        wavelets: &WaveletSystem,
    ) -> Result<Self> {
        let transfer = compute_transfer_vectors(assignment, env)?;
        let nuclear = compute_f_vectors(assignment, split)?;
        let dim = assignment.dim();
        let h_terms = |images: &[ComplexVector]| -> Result<Vec<BilinearTerm>> {
            assignment
                .h_for_complement
                .iter()
                .zip(images)
                .map(|(&n, img)| {
                    let pos = assignment.coordinate_of(n).expect("h index is used");
                    Ok(BilinearTerm {
                        weight: 1.0,
                        left: ComplexVector::unit(dim, pos)?,
                        right: img.clone(),
                    })
                })
                .collect()
        };
        let complement_z = env
            .complement_indices()
            .iter()
            .map(|&k| z_functional(env, &ComplexVector::unit(env.dim(), k)?))
            .collect::<Result<Vec<_>>>()?;
        let enumeration = wavelets.enumeration();
        let mut model = KernelModel {
            i_max: wavelets.i_max(),
            amplitude: assignment.wavelets.iter().map(|&n| enumeration.d(n)).collect(),
            derivative_bounds: enumeration.a_table().to_vec(),
            wavelets: assignment.wavelets.clone(),
            p_terms: h_terms(&transfer.adjoint_images)?,
            p_tilde_terms: h_terms(&transfer.forward_images)?,
            f_terms: nuclear.forward,
            f_tilde_terms: nuclear.adjoint,
            complement_z,
            bounds: BoundConstants {
                forward: Vec::new(),
                adjoint: Vec::new(),
            },
            cap: None,
        };
        let orders = model.derivative_bounds.len();
        model.bounds = BoundConstants {
            forward: (0..orders).map(|i| model.max_sup(&model.p_tilde_terms, i)).collect(),
            adjoint: (0..orders).map(|i| model.max_sup(&model.p_terms, i)).collect(),
        };
        Ok(model)
    }

    fn max_sup(&self, terms: &[BilinearTerm], i: usize) -> f64 {
        terms.iter().map(|t| self.sup_bound(&t.right, i)).fold(0.0, f64::max)
    }

    /// Keeps only the first `cap` terms of each series.
    pub fn with_cap(mut self, cap: Option<usize>) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn i_max(&self) -> usize {
        self.i_max
    }

    pub fn wavelets(&self) -> &[usize] {
        &self.wavelets
    }

    pub fn dim(&self) -> usize {
        self.wavelets.len()
    }

    pub fn bounds(&self) -> &BoundConstants {
        &self.bounds
    }

    pub fn complement_z(&self) -> &[f64] {
        &self.complement_z
    }

    /// All terms of a series, ignoring the cap.
    pub fn terms(&self, series: Series) -> &[BilinearTerm] {
        match series {
            Series::P => &self.p_terms,
            Series::PTilde => &self.p_tilde_terms,
            Series::F => &self.f_terms,
            Series::FTilde => &self.f_tilde_terms,
        }
    }

    pub fn terms_mut(&mut self, series: Series) -> &mut Vec<BilinearTerm> {
        match series {
            Series::P => &mut self.p_terms,
            Series::PTilde => &mut self.p_tilde_terms,
            Series::F => &mut self.f_terms,
            Series::FTilde => &mut self.f_tilde_terms,
        }
    }

    /// Terms that enter evaluation under the current cap.
    pub fn active_terms(&self, series: Series) -> &[BilinearTerm] {
        let all = self.terms(series);
        &all[..self.cap.map_or(all.len(), |c| c.min(all.len()))]
    }

    /// Terms removed by the cap.
    pub fn dropped_terms(&self, series: Series) -> &[BilinearTerm] {
        let all = self.terms(series);
        &all[self.active_terms(series).len()..]
    }

    /// `Σ_r |c_r| D_r A_i`, a sup bound for the `i`-th derivative of the
    /// function with coefficients `c`.
    pub fn sup_bound(&self, c: &ComplexVector, i: usize) -> f64 {
        let a = self.derivative_bounds[i];
        c.iter().zip(&self.amplitude).map(|(z, d)| z.norm() * d * a).sum()
    }

    fn check_order(&self, i: usize) -> Result<()> {
        if i > self.i_max {
            return Err(Error::Config(format!(
                "derivative order {i} exceeds configured i_max {}",
                self.i_max
            )));
        }
        Ok(())
    }

    /// Basis values at `points`, one row per point.
    pub fn sample(&self, wavelets: &WaveletSystem, points: &[f64], i: usize, mode: EvalMode) -> Result<BasisSamples> {
        self.check_order(i)?;
        Ok(wavelets.sample_unchecked(&self.wavelets, points, i, mode))
    }

    /// `∂^{i+j}/∂s^i∂t^j` of `K` or `K*` at `(s, t)`.
    pub fn eval(
        &self,
        wavelets: &WaveletSystem,
        orientation: Orientation,
        s: f64,
        t: f64,
        i: usize,
        j: usize,
    ) -> Result<C64> {
        let left = self.sample(wavelets, &[s], i, EvalMode::Direct)?;
        let right = self.sample(wavelets, &[t], j, EvalMode::Direct)?;
        let mut total = C64::new(0.0, 0.0);
        for series in orientation.series() {
            total += series_value(self.active_terms(series), left.row(0), right.row(0));
        }
        Ok(total)
    }

    /// One series on its own, for decomposition checks.
    pub fn eval_series(
        &self,
        wavelets: &WaveletSystem,
        series: Series,
        s: f64,
        t: f64,
        i: usize,
        j: usize,
    ) -> Result<C64> {
        let left = self.sample(wavelets, &[s], i, EvalMode::Direct)?;
        let right = self.sample(wavelets, &[t], j, EvalMode::Direct)?;
        Ok(series_value(self.active_terms(series), left.row(0), right.row(0)))
    }

    /// Coefficients of `d^i/ds^i conj(K(s, ·))` (or the `K*` analogue).
    pub fn carleman_function(
        &self,
        wavelets: &WaveletSystem,
        orientation: Orientation,
        s: f64,
        i: usize,
    ) -> Result<ComplexVector> {
        let left = self.sample(wavelets, &[s], i, EvalMode::Direct)?;
        Ok(self.carleman_from_row(orientation, left.row(0)))
    }

    pub(crate) fn carleman_from_row(&self, orientation: Orientation, row: &[f64]) -> ComplexVector {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for series in orientation.series() {
            for term in self.active_terms(series) {
                // conj(w · i·Σ a_r φ_r) = −i · w · conj(Σ a_r φ_r)
                let a = combine(row, &term.left);
                let coeff = -I * term.weight * a.conj();
                for (o, b) in out.iter_mut().zip(term.right.iter()) {
                    *o += coeff * b;
                }
            }
        }
        ComplexVector::from_vec_unchecked(out)
    }

    /// The kernel on the tensor grid `s_points × t_points`, row-major in `s`.
    #[allow(clippy::too_many_arguments)]
    pub fn grid(
        &self,
        wavelets: &WaveletSystem,
        orientation: Orientation,
        s_points: &[f64],
        t_points: &[f64],
        i: usize,
        j: usize,
        mode: EvalMode,
    ) -> Result<Vec<C64>> {
        let left = self.sample(wavelets, s_points, i, mode)?;
        let right = self.sample(wavelets, t_points, j, mode)?;
        Ok(self.grid_from_samples(orientation, &left, &right))
    }

    /// Kernel value from basis rows at `s` and `t`.
    pub(crate) fn value_from_rows(&self, orientation: Orientation, left: &[f64], right: &[f64]) -> C64 {
        orientation
            .series()
            .iter()
            .map(|&s| series_value(self.active_terms(s), left, right))
            .sum()
    }

    /// `Σ w · sup‖[a]^{(i)}‖ · sup‖[b]^{(j)}‖` over the active terms.
    pub fn certified_sup(&self, orientation: Orientation, i: usize, j: usize) -> f64 {
        orientation
            .series()
            .iter()
            .flat_map(|&s| self.active_terms(s))
            .map(|t| t.weight * self.sup_bound(&t.left, i) * self.sup_bound(&t.right, j))
            .sum()
    }

    pub(crate) fn grid_from_samples(
        &self,
        orientation: Orientation,
        left: &BasisSamples,
        right: &BasisSamples,
    ) -> Vec<C64> {
        let terms: Vec<&BilinearTerm> = orientation
            .series()
            .iter()
            .flat_map(|&s| self.active_terms(s))
            .collect();
        let lhs: Vec<Vec<C64>> = (0..left.len())
            .map(|p| terms.iter().map(|t| t.weight * combine(left.row(p), &t.left)).collect())
            .collect();
        let rhs: Vec<Vec<C64>> = (0..right.len())
            .map(|p| terms.iter().map(|t| combine(right.row(p), &t.right).conj()).collect())
            .collect();
        lhs.par_iter()
            .flat_map_iter(|l| {
                rhs.iter()
                    .map(move |r| l.iter().zip(r).map(|(a, b)| a * b).sum::<C64>())
            })
            .collect()
    }

    /// Certified bound on the sup-norm of `∂^{i+j}` of the terms dropped by
    /// the cap.
    pub fn truncation_bound(&self, orientation: Orientation, i: usize, j: usize) -> Result<f64> {
        self.check_order(i)?;
        self.check_order(j)?;
        let [p_series, f_series] = orientation.series();
        let constant = match orientation {
            Orientation::Kernel => self.bounds.adjoint[j],
            Orientation::Adjoint => self.bounds.forward[j],
        };
        let p_tail: f64 = self
            .dropped_terms(p_series)
            .iter()
            .map(|t| self.sup_bound(&t.left, i) * constant)
            .sum();
        let f_tail: f64 = self
            .dropped_terms(f_series)
            .iter()
            .map(|t| t.weight * self.sup_bound(&t.left, i) * self.sup_bound(&t.right, j))
            .sum();
        Ok(p_tail + f_tail)
    }
}

/// `i · Σ c_r φ_r` without the factor `i`.
fn combine(row: &[f64], c: &[C64]) -> C64 {
    row.iter().zip(c).map(|(&v, z)| z * v).sum()
}

fn series_value(terms: &[BilinearTerm], left: &[f64], right: &[f64]) -> C64 {
    // [a](s) conj([b](t)) = (iA)(conj(iB)) = A conj(B)
    terms
        .iter()
        .map(|t| t.weight * combine(left, &t.left) * combine(right, &t.right).conj())
        .sum()
}
