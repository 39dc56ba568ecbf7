//! Small operators used by tests, benches and the bundled CLI fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{ComplexMatrix, C64};
use crate::splitting::OperatorEnvironment;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `S = 0` on `ℂ⁴` with null sequence `[0, 1]`.
pub fn zero_operator() -> OperatorEnvironment {
    OperatorEnvironment::new(ComplexMatrix::zeros(4, 4), vec![0, 1], vec![2, 3]).expect("valid fixture")
}

/// `S = σ ⟨·, w⟩ w` with `w` a unit vector on the complement of `[0, 1]`
/// in `ℂ⁴`.
pub fn rank_one(sigma: f64) -> OperatorEnvironment {
    let w = [ZERO, ZERO, C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
    let m = ComplexMatrix::from_fn(4, 4, |r, c| w[r] * w[c].conj() * sigma);
    OperatorEnvironment::new(m, vec![0, 1], vec![2, 3]).expect("valid fixture")
}

/// `‖Se_k‖ = ‖S*e_k‖ = 4^{-k}` for `k = 1..=count`, realized through a
/// single anchor vector (the last basis vector, the only complement index).
pub fn geometric(count: usize) -> OperatorEnvironment {
    let dim = count + 1;
    let anchor = count;
    let m = ComplexMatrix::from_fn(dim, dim, |r, c| {
        if r == anchor && c < count {
            C64::new(0.25f64.powi(c as i32 + 1), 0.0)
        } else if c == anchor && r < count {
            C64::new(0.25f64.powi(r as i32 + 1), 0.0)
        } else {
            ZERO
        }
    });
    OperatorEnvironment::new(m, (0..count).collect(), vec![anchor]).expect("valid fixture")
}

/// Random operator of rank at most `rank` on `ℂ⁸`: a sum of `rank`
/// outer products of random vectors on the complement `[6, 7]`. Each
/// outer product couples to one null index with strength `coupling`, so
/// `S` does not preserve the splitting.
pub fn desk_operator(seed: u64, rank: usize, coupling: f64) -> OperatorEnvironment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 8;
    let mut random = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut m = ComplexMatrix::zeros(dim, dim);
    for r in 0..rank {
        let mut left = vec![ZERO; dim];
        let mut right = vec![ZERO; dim];
        for v in [&mut left, &mut right] {
            v[6] = random();
            v[7] = random();
        }
        // alternate the coupled side so both S and S* see the null sequence
        if r % 2 == 0 {
            left[r % 6] = C64::new(coupling, 0.0);
        } else {
            right[r % 6] = C64::new(coupling, 0.0);
        }
        for (a, l) in left.iter().enumerate() {
            for (b, r) in right.iter().enumerate() {
                m.set(a, b, m.get(a, b) + l * r.conj());
            }
        }
    }
    OperatorEnvironment::new(m, (0..6).collect(), vec![6, 7]).expect("valid fixture")
}

/// [`desk_operator`] with rank 2 and coupling `1e-4`.
pub fn desk_rank_two(seed: u64) -> OperatorEnvironment {
    desk_operator(seed, 2, 1e-4)
}
