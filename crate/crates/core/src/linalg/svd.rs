//! Schmidt decomposition by one-sided (Hestenes) Jacobi rotations.

use serde::{Deserialize, Serialize};

use super::{dot_conj, norm, ComplexMatrix, ComplexVector, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Singular values below `RANK_THRESHOLD · s_1` are reported as exactly zero.
pub const RANK_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct SvdOptions {
    /// Convergence target for the relative off-diagonal mass of `M*M`.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            tolerance: 1e-14,
            max_sweeps: 60,
        }
    }
}

/// `M = Σ s_n ⟨·, p_n⟩ q_n` with non-increasing `s_n ≥ 0`.
///
/// Left vectors `q_n` and right vectors `p_n` are each orthonormal. Every
/// pair is rotated so that the largest-modulus entry of `q_n` is real and
/// positive; the same phase is applied to `p_n`, which leaves each rank-one
/// term unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSystem {
    pub singular_values: Vec<f64>,
    pub left_vectors: Vec<ComplexVector>,
    pub right_vectors: Vec<ComplexVector>,
}

impl SchmidtSystem {
    /// Number of strictly positive singular values.
    pub fn rank(&self) -> usize {
        self.singular_values.iter().take_while(|&&s| s > 0.0).count()
    }

    /// Indices of the positive terms, in non-increasing order of weight.
    pub fn positive_terms(&self) -> impl Iterator<Item = (f64, &ComplexVector, &ComplexVector)> {
        self.singular_values
            .iter()
            .zip(&self.left_vectors)
            .zip(&self.right_vectors)
            .filter(|((s, _), _)| **s > 0.0)
            .map(|((s, q), p)| (*s, q, p))
    }

    pub fn output_dim(&self) -> usize {
        self.left_vectors.first().map_or(0, |v| v.len())
    }

    pub fn input_dim(&self) -> usize {
        self.right_vectors.first().map_or(0, |v| v.len())
    }

    /// `Σ s_n ⟨·, p_n⟩ q_n` as a matrix.
    pub fn reconstruct(&self) -> ComplexMatrix {
        fractional_power_unchecked(self, 1.0)
    }

    /// `Σ s_n^{1/2}`, the quantity that controls the bilinear kernel series.
    pub fn half_power_sum(&self) -> f64 {
        self.singular_values.iter().map(|s| s.sqrt()).sum()
    }
}

/// Returns `Σ s_n^{exponent} ⟨·, p_n⟩ q_n`.
pub fn fractional_power_operator(sys: &SchmidtSystem, exponent: f64) -> Result<ComplexMatrix> {
    if !exponent.is_finite() || exponent <= 0.0 {
        return Err(Error::Config(format!(
            "fractional power exponent must be positive, got {exponent}"
        )));
    }
    Ok(fractional_power_unchecked(sys, exponent))
}

fn fractional_power_unchecked(sys: &SchmidtSystem, exponent: f64) -> ComplexMatrix {
    let rows = sys.output_dim();
    let cols = sys.input_dim();
    let mut out = ComplexMatrix::zeros(rows.max(1), cols.max(1));
    for (s, q, p) in sys.positive_terms() {
        let w = s.powf(exponent);
        for r in 0..rows {
            let qr = q[r] * w;
            for c in 0..cols {
                let v = out.get(r, c) + qr * p[c].conj();
                out.set(r, c, v);
            }
        }
    }
    out
}

pub fn svd(m: &ComplexMatrix) -> Result<SchmidtSystem> {
    svd_with(m, SvdOptions::default())
}

pub fn svd_with(m: &ComplexMatrix, opts: SvdOptions) -> Result<SchmidtSystem> {
    if m.rows() < m.cols() {
        let sys = svd_tall(&m.adjoint(), opts)?;
        // M* = Σ s ⟨·,p⟩ q  ⇒  M = Σ s ⟨·,q⟩ p
        let mut swapped = SchmidtSystem {
            singular_values: sys.singular_values,
            left_vectors: sys.right_vectors,
            right_vectors: sys.left_vectors,
        };
        normalize_phases(&mut swapped);
        return Ok(swapped);
    }
    svd_tall(m, opts)
}

/// One-sided Jacobi for `rows ≥ cols`.
fn svd_tall(m: &ComplexMatrix, opts: SvdOptions) -> Result<SchmidtSystem> {
    let rows = m.rows();
    let n = m.cols();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|c| m.column(c).into_inner()).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|c| {
            let mut e = vec![ZERO; n];
            e[c] = ONE;
            e
        })
        .collect();

    let scale = m.frobenius_norm().powi(2);
    let mut converged = scale == 0.0;
    for _ in 0..opts.max_sweeps {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norm(&cols[p]).powi(2);
                let beta = norm(&cols[q]).powi(2);
                // γ = a_p^H a_q
                let gamma = dot_conj(&cols[q], &cols[p]);
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let back = phase.conj();
                rotate(&mut cols, p, q, c, s, back);
                rotate(&mut v, p, q, c, s, back);
            }
        }
        let off = off_diagonal_mass(&cols);
        if !rotated || off <= opts.tolerance * scale {
            converged = true;
        }
    }
    if !converged {
        let off = off_diagonal_mass(&cols);
        if off > opts.tolerance * scale {
            return Err(Error::Numerical {
                message: format!("Jacobi SVD did not converge in {} sweeps", opts.max_sweeps),
                residual: off / scale,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigmas: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]).then(a.cmp(&b)));
    let s1 = order.first().map_or(0.0, |&i| sigmas[i]);

    let mut singular_values = Vec::with_capacity(n);
    let mut left: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut pending_zero = Vec::new();
    for &i in &order {
        let s = sigmas[i];
        if s > 0.0 && s >= RANK_THRESHOLD * s1 {
            singular_values.push(s);
            left.push(cols[i].iter().map(|z| z / s).collect());
        } else {
            singular_values.push(0.0);
            pending_zero.push(left.len());
            left.push(Vec::new());
        }
        right.push(v[i].clone());
    }
    complete_orthonormal(&mut left, &pending_zero, rows);

    let mut sys = SchmidtSystem {
        singular_values,
        left_vectors: left.into_iter().map(ComplexVector::from_vec_unchecked).collect(),
        right_vectors: right.into_iter().map(ComplexVector::from_vec_unchecked).collect(),
    };
    normalize_phases(&mut sys);
    Ok(sys)
}

// [a_p a_q] ← [c a_p − s ω a_q,  s a_p + c ω a_q] with ω = e^{−iφ}
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, omega: C64) {
    let (head, tail) = cols.split_at_mut(q);
    let ap = &mut head[p];
    let aq = &mut tail[0];
    for (x, y) in ap.iter_mut().zip(aq.iter_mut()) {
        let yq = *y * omega;
        let xp = *x;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

fn off_diagonal_mass(cols: &[Vec<C64>]) -> f64 {
    let mut total = 0.0;
    for p in 0..cols.len() {
        for q in (p + 1)..cols.len() {
            total += dot_conj(&cols[q], &cols[p]).norm_sqr();
        }
    }
    total.sqrt()
}

/// Fills the listed slots with unit vectors orthogonal to every other slot.
fn complete_orthonormal(vectors: &mut [Vec<C64>], slots: &[usize], dim: usize) {
    let mut candidate = 0;
    for &slot in slots {
        loop {
            if candidate >= dim {
                // cannot happen for rows ≥ cols, kept as a guard
                vectors[slot] = vec![ZERO; dim];
                break;
            }
            let mut w = vec![ZERO; dim];
            w[candidate] = ONE;
            candidate += 1;
            for _ in 0..2 {
                for (i, other) in vectors.iter().enumerate() {
                    if i == slot || other.is_empty() {
                        continue;
                    }
                    let proj = dot_conj(&w, other);
                    for (wk, ok) in w.iter_mut().zip(other) {
                        *wk -= proj * ok;
                    }
                }
            }
            let nw = norm(&w);
            if nw > 1e-8 {
                vectors[slot] = w.iter().map(|z| z / nw).collect();
                break;
            }
        }
    }
}

fn normalize_phases(sys: &mut SchmidtSystem) {
    for (q, p) in sys.left_vectors.iter_mut().zip(sys.right_vectors.iter_mut()) {
        let mut best = 0;
        let mut best_mag = -1.0;
        for (i, z) in q.iter().enumerate() {
            let mag = z.norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag <= 0.0 {
            continue;
        }
        let phase = (q[best] / best_mag).conj();
        *q = q.scale(phase);
        *p = p.scale(phase);
        // force the pivot to be exactly real
        let mut entries = std::mem::take(q).into_inner();
        entries[best] = C64::new(entries[best].norm(), 0.0);
        *q = ComplexVector::from_vec_unchecked(entries);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inner;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn assert_orthonormal(vs: &[ComplexVector]) {
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = inner(a, b).unwrap();
                assert!((got - C64::new(want, 0.0)).norm() < 1e-10, "{i},{j}: {got}");
            }
        }
    }

    #[test]
    fn diagonal_matrix() {
        let m = ComplexMatrix::from_fn(2, 2, |r, c| if r == c { C64::new(2.0 - r as f64, 0.0) } else { ZERO });
        let sys = svd(&m).unwrap();
        assert_eq!(sys.singular_values, vec![2.0, 1.0]);
    }

    #[test]
    fn nilpotent_shift() {
        let m = ComplexMatrix::new(2, 2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        let sys = svd(&m).unwrap();
        assert_eq!(sys.singular_values, vec![1.0, 0.0]);
        assert_eq!(sys.rank(), 1);
        assert_orthonormal(&sys.left_vectors);
        assert_orthonormal(&sys.right_vectors);
        assert!(sys.reconstruct().max_abs_diff(&m).unwrap() < 1e-15);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let sys = svd(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(sys.rank(), 0);
        assert_orthonormal(&sys.left_vectors);
        assert_eq!(sys.reconstruct(), ComplexMatrix::zeros(3, 3));
    }

    /// Eigenvalues of a 3x3 Hermitian matrix from its characteristic
    /// polynomial, solved with the trigonometric form of Cardano.
    fn hermitian_eigs_3x3(h: &ComplexMatrix) -> [f64; 3] {
        let a = |r, c| h.get(r, c);
        let tr = (a(0, 0) + a(1, 1) + a(2, 2)).re;
        let minors = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)
            + a(1, 1) * a(2, 2)
            - a(1, 2) * a(2, 1))
        .re;
        let det = (a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)))
        .re;
        // λ³ − tr λ² + minors λ − det = 0, shift λ = x + tr/3
        let p = minors - tr * tr / 3.0;
        let q = -2.0 * tr.powi(3) / 27.0 + tr * minors / 3.0 - det;
        let m = 2.0 * (-p / 3.0).sqrt();
        let theta = ((3.0 * q / (p * m)).clamp(-1.0, 1.0)).acos() / 3.0;
        let mut roots = [0.0; 3];
        for (k, r) in roots.iter_mut().enumerate() {
            *r = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + tr / 3.0;
        }
        roots.sort_by(|x, y| y.total_cmp(x));
        roots
    }

    #[test]
    fn random_3x3_matches_characteristic_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let m = random_matrix(&mut rng, 3, 3);
            let gram = m.adjoint().matmul(&m).unwrap();
            let eig = hermitian_eigs_3x3(&gram);
            let sys = svd(&m).unwrap();
            for (s, l) in sys.singular_values.iter().zip(eig) {
                assert!((s - l.max(0.0).sqrt()).abs() < 1e-10, "{s} vs {l}");
            }
        }
    }

    #[test]
    fn wide_matrix_goes_through_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 2, 4);
        let sys = svd(&m).unwrap();
        assert_eq!(sys.singular_values.len(), 2);
        assert!(sys.reconstruct().max_abs_diff(&m).unwrap() < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 6, 6);
        let opts = SvdOptions {
            tolerance: 1e-30,
            max_sweeps: 1,
        };
        match svd_with(&m, opts) {
            Err(Error::Numerical { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }

    #[test]
    fn phase_convention_pivot_is_real_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 4, 4);
        let sys = svd(&m).unwrap();
        for q in &sys.left_vectors {
            let pivot = q.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert_eq!(pivot.im, 0.0);
            assert!(pivot.re > 0.0);
        }
    }

    #[test]
    fn fractional_power_examples() {
        let sys = SchmidtSystem {
            singular_values: vec![16.0],
            left_vectors: vec![ComplexVector::unit(1, 0).unwrap()],
            right_vectors: vec![ComplexVector::unit(1, 0).unwrap()],
        };
        let b = fractional_power_operator(&sys, 0.25).unwrap();
        assert_eq!(b.get(0, 0), C64::new(2.0, 0.0));

        let zero = svd(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(
            fractional_power_operator(&zero, 0.7).unwrap(),
            ComplexMatrix::zeros(3, 3)
        );
        assert!(fractional_power_operator(&sys, 0.0).is_err());
    }

    #[test]
    fn schwarz_chain_on_random_rank_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_matrix(&mut rng, 5, 2);
        let b = random_matrix(&mut rng, 2, 5);
        let j = a.matmul(&b).unwrap();
        let sys = svd(&j).unwrap();
        assert_eq!(sys.rank(), 2);
        let bq = fractional_power_operator(&sys, 0.25).unwrap();
        for _ in 0..100 {
            let f = random_matrix(&mut rng, 5, 1).column(0);
            let f = f.scale(C64::new(1.0 / f.norm(), 0.0));
            let lhs = bq.apply(&f).unwrap().norm();
            let rhs = j.apply(&f).unwrap().norm().powf(0.25);
            assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
        }
    }

    proptest! {
        #[test]
        fn reconstruction_and_orthonormality(seed in 0u64..500, rows in 1usize..7, cols in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, rows, cols);
            let sys = svd(&m).unwrap();
            prop_assert!(sys.reconstruct().max_abs_diff(&m).unwrap() <= 1e-10);
            prop_assert!(sys.singular_values.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(sys.singular_values.iter().all(|&s| s >= 0.0));
            assert_orthonormal(&sys.left_vectors);
            assert_orthonormal(&sys.right_vectors);
            let exact = fractional_power_operator(&sys, 1.0).unwrap();
            prop_assert!(exact.max_abs_diff(&m).unwrap() <= 1e-10);
        }
    }
}
