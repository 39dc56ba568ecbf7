//! Input operator, null-sequence bookkeeping and the splitting
//! `S = (1 − E)S + ES` into a complement part and two nuclear parts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fractional_power_operator, projector, svd, ComplexMatrix, ComplexVector, SchmidtSystem, C64};

/// The operator `S` in a labeled orthonormal basis of `ℂᴺ`, split into the
/// null sequence `{e_k}` and the complement `{e_k^⊥}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnvironment")]
pub struct OperatorEnvironment {
    dim: usize,
    matrix: ComplexMatrix,
    null_indices: Vec<usize>,
    complement_indices: Vec<usize>,
}

#[derive(Deserialize)]
struct RawEnvironment {
    dim: usize,
    matrix: ComplexMatrix,
    null_indices: Vec<usize>,
    complement_indices: Vec<usize>,
}

impl TryFrom<RawEnvironment> for OperatorEnvironment {
    type Error = Error;

    fn try_from(raw: RawEnvironment) -> Result<Self> {
        if raw.matrix.rows() != raw.dim {
            return Err(Error::Field {
                field: "matrix",
                message: format!("expected {} rows, found {}", raw.dim, raw.matrix.rows()),
            });
        }
        OperatorEnvironment::new(raw.matrix, raw.null_indices, raw.complement_indices)
    }
}

impl OperatorEnvironment {
    pub fn new(matrix: ComplexMatrix, null_indices: Vec<usize>, complement_indices: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Field {
                field: "matrix",
                message: format!("operator must be square, got {}x{}", matrix.rows(), matrix.cols()),
            });
        }
        let dim = matrix.rows();
        let mut seen = vec![false; dim];
        for (field, list) in [
            ("null_indices", &null_indices),
            ("complement_indices", &complement_indices),
        ] {
            for &i in list {
                if i >= dim {
                    return Err(Error::Field {
                        field,
                        message: format!("index {i} outside 0..{dim}"),
                    });
                }
                if seen[i] {
                    return Err(Error::Field {
                        field,
                        message: format!("index {i} listed twice"),
                    });
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Field {
                field: "complement_indices",
                message: format!("index {missing} belongs to neither the null sequence nor the complement"),
            });
        }
        if complement_indices.is_empty() {
            return Err(Error::Field {
                field: "complement_indices",
                message: "the complement must contain at least one basis vector".into(),
            });
        }
        Ok(OperatorEnvironment {
            dim,
            matrix,
            null_indices,
            complement_indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn null_indices(&self) -> &[usize] {
        &self.null_indices
    }

    pub fn complement_indices(&self) -> &[usize] {
        &self.complement_indices
    }

    /// Embeds `S` into a larger ambient space; the new basis vectors join
    /// the complement and are annihilated by `S` and `S*`.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::Config(format!(
                "cannot pad a {}-dimensional operator down to {dim}",
                self.dim
            )));
        }
        let matrix = ComplexMatrix::from_fn(dim, dim, |r, c| {
            if r < self.dim && c < self.dim {
                self.matrix.get(r, c)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut complement = self.complement_indices.clone();
        complement.extend(self.dim..dim);
        OperatorEnvironment::new(matrix, self.null_indices.clone(), complement)
    }

    /// `‖Se_i‖` and `‖S*e_i‖` for basis position `i`.
    pub fn column_norms(&self, i: usize) -> (f64, f64) {
        let forward = self.matrix.column(i).norm();
        let adjoint = self.matrix.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (forward, adjoint)
    }
}

/// Norm profile of the null sequence under `S` and `S*`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub forward_norms: Vec<f64>,
    pub adjoint_norms: Vec<f64>,
    pub tolerance: f64,
    pub member: bool,
}

/// Reports `‖Se_k‖, ‖S*e_k‖` over the null sequence; membership means both
/// are below `tol` at the final index.
pub fn check_c00(env: &OperatorEnvironment, tol: f64) -> MembershipReport {
    let (forward_norms, adjoint_norms): (Vec<f64>, Vec<f64>) =
        env.null_indices.iter().map(|&i| env.column_norms(i)).unzip();
    let member = match (forward_norms.last(), adjoint_norms.last()) {
        (Some(&f), Some(&a)) => f <= tol && a <= tol,
        _ => false,
    };
    MembershipReport {
        forward_norms,
        adjoint_norms,
        tolerance: tol,
        member,
    }
}

/// `‖Se‖^{1/4} + ‖S*e‖^{1/4}` for each null index, in order.
pub fn null_contributions(env: &OperatorEnvironment) -> Vec<f64> {
    env.null_indices
        .iter()
        .map(|&i| {
            let (f, a) = env.column_norms(i);
            f.powf(0.25) + a.powf(0.25)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Normalization {
    pub environment: OperatorEnvironment,
    /// Positions (into the input null sequence) that were kept.
    pub kept: Vec<usize>,
    pub sum: f64,
}

/// Selects a subsequence of the null sequence with
/// `Σ (‖Se_k‖^{1/4} + ‖S*e_k‖^{1/4}) ≤ 1`.
///
/// The longest admissible tail is kept first; earlier indices are then
/// added in order of increasing contribution (ties by position) while the
/// sum stays within 1. Dropped indices move to the complement.
pub fn normalize_null_sequence(env: &OperatorEnvironment) -> Result<Normalization> {
    let contrib = null_contributions(env);
    let mut start = contrib.len();
    let mut sum = 0.0;
    while start > 0 && sum + contrib[start - 1] <= 1.0 {
        start -= 1;
        sum += contrib[start];
    }
    let mut keep = vec![false; contrib.len()];
    keep[start..].iter_mut().for_each(|k| *k = true);
    let mut head: Vec<usize> = (0..start).collect();
    head.sort_by(|&a, &b| contrib[a].total_cmp(&contrib[b]).then(a.cmp(&b)));
    for pos in head {
        if sum + contrib[pos] <= 1.0 {
            sum += contrib[pos];
            keep[pos] = true;
        }
    }
    let kept: Vec<usize> = (0..contrib.len()).filter(|&p| keep[p]).collect();
    if kept.is_empty() {
        return Err(Error::Infeasible(format!(
            "no null index has ‖Se‖^(1/4) + ‖S*e‖^(1/4) ≤ 1 (smallest contribution {:.6})",
            contrib.iter().copied().fold(f64::INFINITY, f64::min)
        )));
    }
    let null: Vec<usize> = kept.iter().map(|&p| env.null_indices[p]).collect();
    let mut complement = env.complement_indices.clone();
    complement.extend((0..contrib.len()).filter(|&p| !keep[p]).map(|p| env.null_indices[p]));
    Ok(Normalization {
        environment: OperatorEnvironment::new(env.matrix.clone(), null, complement)?,
        kept,
        sum,
    })
}

/// The pieces of `S` after splitting along the null sequence.
#[derive(Clone, Debug, Serialize)]
pub struct SplitSystem {
    pub projection: ComplexMatrix,
    /// `J = SE`.
    pub forward: ComplexMatrix,
    /// `J̃ = S*E`.
    pub adjoint: ComplexMatrix,
    /// `B = Σ s^{1/4} ⟨·, p⟩ q` from the Schmidt system of `J`.
    pub forward_root: ComplexMatrix,
    pub adjoint_root: ComplexMatrix,
    /// `Q = (1 − E)S`.
    pub complement: ComplexMatrix,
    /// `Q̃ = (1 − E)S*`.
    pub complement_adjoint: ComplexMatrix,
    pub forward_schmidt: SchmidtSystem,
    pub adjoint_schmidt: SchmidtSystem,
}

pub fn build_split(env: &OperatorEnvironment) -> Result<SplitSystem> {
    let n = env.dim();
    let s = env.matrix();
    let s_adj = s.adjoint();
    let e = projector(env.null_indices(), n)?;
    let co = ComplexMatrix::identity(n).sub(&e)?;
    let forward = s.matmul(&e)?;
    let adjoint = s_adj.matmul(&e)?;
    let forward_schmidt = svd(&forward)?;
    let adjoint_schmidt = svd(&adjoint)?;
    Ok(SplitSystem {
        forward_root: fractional_power_operator(&forward_schmidt, 0.25)?,
        adjoint_root: fractional_power_operator(&adjoint_schmidt, 0.25)?,
        complement: co.matmul(s)?,
        complement_adjoint: co.matmul(&s_adj)?,
        projection: e,
        forward,
        adjoint,
        forward_schmidt,
        adjoint_schmidt,
    })
}

impl SplitSystem {
    /// `Σ_k ⟨f, S*e_k^⊥⟩ e_k^⊥`, the complement part as a series.
    pub fn complement_series(env: &OperatorEnvironment, f: &ComplexVector) -> Result<ComplexVector> {
        check_dim(env.dim(), f)?;
        let s = env.matrix();
        let mut out = vec![C64::new(0.0, 0.0); env.dim()];
        for &k in env.complement_indices() {
            // ⟨f, S*e_k⟩ = Σ_c f_c · S_{k c}
            out[k] = s.row(k).iter().zip(f.iter()).map(|(a, b)| a * b).sum();
        }
        ComplexVector::new(out)
    }

    /// `Σ s^{1/2}` for `J` and `J̃`.
    pub fn nuclear_sums(&self) -> (f64, f64) {
        (
            self.forward_schmidt.half_power_sum(),
            self.adjoint_schmidt.half_power_sum(),
        )
    }
}

fn check_dim(dim: usize, f: &ComplexVector) -> Result<()> {
    if f.len() != dim {
        return Err(Error::Dimension {
            context: "functional argument",
            expected: dim,
            found: f.len(),
        });
    }
    Ok(())
}

/// `z(f) = ‖Sf‖ + ‖S*f‖`.
pub fn z_functional(env: &OperatorEnvironment, f: &ComplexVector) -> Result<f64> {
    check_dim(env.dim(), f)?;
    let s = env.matrix();
    Ok(s.apply(f)?.norm() + s.adjoint().apply(f)?.norm())
}

/// `d(h) = ‖Jh‖^{1/4} + ‖J*h‖^{1/4} + ‖J̃h‖^{1/4} + ‖J̃*h‖^{1/4}`.
pub fn d_functional(split: &SplitSystem, h: &ComplexVector) -> Result<f64> {
    check_dim(split.forward.rows(), h)?;
    let mut total = 0.0;
    for m in [&split.forward, &split.adjoint] {
        total += m.apply(h)?.norm().powf(0.25);
        total += m.adjoint().apply(h)?.norm().powf(0.25);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_vector(rng: &mut impl Rng, n: usize) -> ComplexVector {
        ComplexVector::new(
            (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    /// Rank-2 operator on dim 8 living on the last three coordinates.
    fn rank_two(rng: &mut impl Rng) -> OperatorEnvironment {
        let vecs: Vec<ComplexVector> = (0..4)
            .map(|_| {
                let mut v = random_vector(rng, 8).into_inner();
                v[..5].iter_mut().for_each(|z| *z = c(0.0));
                ComplexVector::new(v).unwrap()
            })
            .collect();
        let m = ComplexMatrix::from_fn(8, 8, |r, col| {
            vecs[0][r] * vecs[1][col].conj() + vecs[2][r] * vecs[3][col].conj()
        });
        OperatorEnvironment::new(m, (0..5).collect(), vec![5, 6, 7]).unwrap()
    }

    fn random_env(rng: &mut impl Rng) -> OperatorEnvironment {
        let m = ComplexMatrix::from_fn(6, 6, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        OperatorEnvironment::new(m, vec![0, 2, 3], vec![1, 4, 5]).unwrap()
    }

    #[test]
    fn environment_validation() {
        let z = ComplexMatrix::zeros(3, 3);
        assert!(OperatorEnvironment::new(z.clone(), vec![0], vec![1, 2]).is_ok());
        assert!(OperatorEnvironment::new(z.clone(), vec![0, 1], vec![1, 2]).is_err());
        assert!(OperatorEnvironment::new(z.clone(), vec![0], vec![1]).is_err());
        assert!(OperatorEnvironment::new(z.clone(), vec![0, 1, 2], vec![]).is_err());
        assert!(OperatorEnvironment::new(z, vec![0, 5], vec![1, 2]).is_err());
    }

    #[test]
    fn padding_extends_complement_with_zero_block() {
        let m = ComplexMatrix::from_fn(2, 2, |r, col| c((r + col) as f64));
        let env = OperatorEnvironment::new(m, vec![0], vec![1]).unwrap();
        let big = env.padded(4).unwrap();
        assert_eq!(big.complement_indices(), &[1, 2, 3]);
        assert_eq!(big.matrix().get(1, 1), c(2.0));
        assert_eq!(big.column_norms(3), (0.0, 0.0));
    }

    #[test]
    fn zero_operator_is_member() {
        let env = OperatorEnvironment::new(ComplexMatrix::zeros(4, 4), vec![0, 1, 2], vec![3]).unwrap();
        let r = check_c00(&env, 1e-12);
        assert!(r.member);
        assert!(r.forward_norms.iter().chain(&r.adjoint_norms).all(|&x| x == 0.0));
    }

    #[test]
    fn diagonal_operator_skipping_its_support_is_member() {
        let m = ComplexMatrix::from_fn(4, 4, |r, col| if r == 0 && col == 0 { c(1.0) } else { c(0.0) });
        let env = OperatorEnvironment::new(m, vec![1, 2, 3], vec![0]).unwrap();
        let r = check_c00(&env, 1e-12);
        assert!(r.member);
        assert!(r.forward_norms.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rank_two_off_support_is_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = rank_two(&mut rng);
        let r = check_c00(&env, 1e-12);
        assert!(r.member);
        for (k, &i) in env.null_indices().iter().enumerate() {
            let e = ComplexVector::unit(8, i).unwrap();
            assert_eq!(r.forward_norms[k], env.matrix().apply(&e).unwrap().norm());
            assert_eq!(r.adjoint_norms[k], env.matrix().adjoint().apply(&e).unwrap().norm());
        }
    }

    #[test]
    fn normalization_keeps_everything_when_annihilated() {
        let env = OperatorEnvironment::new(ComplexMatrix::zeros(5, 5), vec![0, 1, 2, 3], vec![4]).unwrap();
        let n = normalize_null_sequence(&env).unwrap();
        assert_eq!(n.environment.null_indices(), &[0, 1, 2, 3]);
        assert_eq!(n.sum, 0.0);
    }

    /// Null vector `e_k` (position k-1) with `‖Se_k‖ = ‖S*e_k‖ = 4^{-k}`.
    fn geometric_env(count: usize) -> OperatorEnvironment {
        let dim = count + 1;
        let anchor = count;
        let m = ComplexMatrix::from_fn(dim, dim, |r, col| {
            if r == anchor && col < count {
                c(0.25f64.powi(col as i32 + 1))
            } else if col == anchor && r < count {
                c(0.25f64.powi(r as i32 + 1))
            } else {
                c(0.0)
            }
        });
        OperatorEnvironment::new(m, (0..count).collect(), vec![anchor]).unwrap()
    }

    #[test]
    fn normalization_keeps_geometric_tail_from_six() {
        let env = geometric_env(40);
        let n = normalize_null_sequence(&env).unwrap();
        assert_eq!(n.environment.null_indices(), &(5..40).collect::<Vec<_>>()[..]);
        // 2·2^{-3}/(1 − 2^{-1/2}) minus the part beyond k = 40
        let tail = 0.25 / (1.0 - 0.5f64.sqrt()) * (1.0 - 0.5f64.sqrt().powi(35));
        assert!((n.sum - tail).abs() < 1e-12, "{} vs {tail}", n.sum);
        assert!(n.sum <= 1.0);
        assert!(n.environment.complement_indices().contains(&4));
    }

    #[test]
    fn normalization_boundary_contribution_of_one() {
        let m = ComplexMatrix::from_fn(2, 2, |r, col| if r == 1 && col == 0 { c(1.0) } else { c(0.0) });
        let env = OperatorEnvironment::new(m, vec![0], vec![1]).unwrap();
        let n = normalize_null_sequence(&env).unwrap();
        assert_eq!(n.environment.null_indices(), &[0]);
        assert_eq!(n.sum, 1.0);
    }

    #[test]
    fn normalization_infeasible_when_every_contribution_exceeds_one() {
        let m = ComplexMatrix::from_fn(2, 2, |_, _| c(2.0));
        let env = OperatorEnvironment::new(m, vec![0], vec![1]).unwrap();
        assert!(matches!(normalize_null_sequence(&env), Err(Error::Infeasible(_))));
    }

    #[test]
    fn split_of_zero_operator_is_zero() {
        let env = OperatorEnvironment::new(ComplexMatrix::zeros(3, 3), vec![0, 1], vec![2]).unwrap();
        let s = build_split(&env).unwrap();
        for m in [
            &s.forward,
            &s.adjoint,
            &s.forward_root,
            &s.adjoint_root,
            &s.complement,
            &s.complement_adjoint,
        ] {
            assert_eq!(m.max_abs(), 0.0);
        }
    }

    #[test]
    fn full_projection_leaves_no_complement_part() {
        // the complement index carries no weight, so E acts as the identity on S's support
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = ComplexMatrix::from_fn(4, 4, |r, col| {
            if r < 3 && col < 3 {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                c(0.0)
            }
        });
        let env = OperatorEnvironment::new(m.clone(), vec![0, 1, 2], vec![3]).unwrap();
        let s = build_split(&env).unwrap();
        assert_eq!(s.complement.max_abs(), 0.0);
        assert_eq!(s.complement_adjoint.max_abs(), 0.0);
        assert!(s.forward.max_abs_diff(&m).unwrap() <= 1e-15);
    }

    #[test]
    fn split_identities_on_random_environment() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let env = random_env(&mut rng);
        let s = build_split(&env).unwrap();
        let e = &s.projection;
        let sm = env.matrix();
        assert!(s.forward.max_abs_diff(&sm.matmul(e).unwrap()).unwrap() <= 1e-12);
        assert!(s.adjoint.max_abs_diff(&sm.adjoint().matmul(e).unwrap()).unwrap() <= 1e-12);
        // Q + ES = S with ES = (S*E)*
        let rebuilt = s.complement.add(&s.adjoint.adjoint()).unwrap();
        assert!(rebuilt.max_abs_diff(sm).unwrap() <= 1e-10);
        let rebuilt_adj = s.complement_adjoint.add(&s.forward.adjoint()).unwrap();
        assert!(rebuilt_adj.max_abs_diff(&sm.adjoint()).unwrap() <= 1e-10);
        for &k in env.null_indices() {
            let ek = ComplexVector::unit(6, k).unwrap();
            let (f, a) = env.column_norms(k);
            assert!((s.forward.apply(&ek).unwrap().norm() - f).abs() <= 1e-12);
            assert!((s.adjoint.apply(&ek).unwrap().norm() - a).abs() <= 1e-12);
        }
        for _ in 0..10 {
            let f = random_vector(&mut rng, 6);
            let direct = s.complement.apply(&f).unwrap();
            let series = SplitSystem::complement_series(&env, &f).unwrap();
            assert!(direct.sub(&series).unwrap().max_abs() <= 1e-10);
            // ES*f = J*f from the Schmidt data of J
            let es_adj = e.matmul(&sm.adjoint()).unwrap().apply(&f).unwrap();
            let j_adj = s.forward_schmidt.reconstruct().adjoint().apply(&f).unwrap();
            assert!(es_adj.sub(&j_adj).unwrap().max_abs() <= 1e-10);
        }
        let (a, b) = s.nuclear_sums();
        assert!(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0);
    }

    #[test]
    fn z_examples() {
        let env = OperatorEnvironment::new(
            ComplexMatrix::from_fn(2, 2, |r, col| if r == 0 && col == 0 { c(1.0) } else { c(0.0) }),
            vec![1],
            vec![0],
        )
        .unwrap();
        assert_eq!(z_functional(&env, &ComplexVector::unit(2, 0).unwrap()).unwrap(), 2.0);
        assert_eq!(z_functional(&env, &ComplexVector::unit(2, 1).unwrap()).unwrap(), 0.0);
        assert!(z_functional(&env, &ComplexVector::zeros(3)).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let env = random_env(&mut rng);
        let f = random_vector(&mut rng, 6);
        let sm = env.matrix();
        let mut fwd = 0.0;
        let mut adj = 0.0;
        for r in 0..6 {
            let mut a = c(0.0);
            let mut b = c(0.0);
            for col in 0..6 {
                a += sm.get(r, col) * f[col];
                b += sm.get(col, r).conj() * f[col];
            }
            fwd += a.norm_sqr();
            adj += b.norm_sqr();
        }
        let want = fwd.sqrt() + adj.sqrt();
        assert!((z_functional(&env, &f).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn d_examples() {
        let env = OperatorEnvironment::new(
            ComplexMatrix::from_fn(2, 2, |r, col| if r == 0 && col == 0 { c(16.0) } else { c(0.0) }),
            vec![0],
            vec![1],
        )
        .unwrap();
        let s = build_split(&env).unwrap();
        assert!((d_functional(&s, &ComplexVector::unit(2, 0).unwrap()).unwrap() - 8.0).abs() < 1e-14);
        assert_eq!(d_functional(&s, &ComplexVector::unit(2, 1).unwrap()).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let env = random_env(&mut rng);
        let s = build_split(&env).unwrap();
        let h = random_vector(&mut rng, 6);
        let mut want = 0.0;
        for m in [&s.forward, &s.adjoint] {
            let ma = m.adjoint();
            for op in [m, &ma] {
                let v: Vec<C64> = (0..6)
                    .map(|r| (0..6).map(|col| op.get(r, col) * h[col]).sum())
                    .collect();
                want += v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().powf(0.25);
            }
        }
        assert!((d_functional(&s, &h).unwrap() - want).abs() < 1e-13);
    }
}
