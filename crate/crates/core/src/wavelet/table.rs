//! Dense cubic Hermite cache of the mother wavelet derivatives.

use rayon::prelude::*;

use super::MotherWavelet;

/// Interpolated arguments span `[-TABLE_HALF_WIDTH, TABLE_HALF_WIDTH]`.
pub const TABLE_HALF_WIDTH: f64 = 128.0;
/// Per-value interpolation error target before rounding.
const ERROR_BUDGET: f64 = 2.5e-9;

/// `Im u^{(i)}` and `Im u^{(i+1)}` sampled on a uniform grid, so each order
/// `i ≤ i_max` is a cubic Hermite interpolant with exact nodal slopes.
#[derive(Debug)]
pub struct MotherTable {
    lo: f64,
    step: f64,
    /// `values[i][m] = Im u^{(i)}(lo + m·step)` for `i = 0..=i_max + 1`.
    values: Vec<Vec<f64>>,
}

impl MotherTable {
    pub fn build(mother: &MotherWavelet) -> Self {
        // Hermite remainder: |e| ≤ step⁴/384 · ‖f⁽⁴⁾‖, with f = u^{(i_max)}
        let fourth = mother.frequency_moment(mother.i_max() + 4).max(1.0);
        let step = (384.0 * ERROR_BUDGET / fourth).powf(0.25).min(1.0 / 64.0);
        let cells = (2.0 * TABLE_HALF_WIDTH / step).ceil() as usize;
        let step = 2.0 * TABLE_HALF_WIDTH / cells as f64;
        let lo = -TABLE_HALF_WIDTH;
        let orders = mother.internal_order() + 1;
        let rows: Vec<Vec<f64>> = (0..=cells)
            .into_par_iter()
            .map(|m| {
                let mut buf = vec![0.0; orders];
                mother.eval_orders_im(lo + m as f64 * step, &mut buf);
                buf
            })
            .collect();
        let values = (0..orders).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
        MotherTable { lo, step, values }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn covers(&self, x: f64) -> bool {
        x.abs() <= TABLE_HALF_WIDTH
    }

    /// Highest order that can be interpolated.
    pub fn max_order(&self) -> usize {
        self.values.len() - 2
    }

    /// Interpolated `Im u^{(i)}(x)`; `x` must lie inside the table.
    pub fn eval_im(&self, x: f64, i: usize) -> f64 {
        debug_assert!(self.covers(x) && i <= self.max_order());
        let pos = (x - self.lo) / self.step;
        let last = self.values[i].len() - 2;
        let m = (pos.floor().max(0.0) as usize).min(last);
        let t = pos - m as f64;
        let f = &self.values[i];
        let d = &self.values[i + 1];
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * f[m] + h01 * f[m + 1] + self.step * (h10 * d[m] + h11 * d[m + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interpolation_matches_direct_quadrature() {
        let mother = MotherWavelet::new(3);
        let table = MotherTable::build(&mother);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..400 {
            let x: f64 = rng.gen_range(-TABLE_HALF_WIDTH..TABLE_HALF_WIDTH);
            for i in 0..=3 {
                let err = (table.eval_im(x, i) - mother.eval_im(x, i)).abs();
                worst = worst.max(err);
            }
        }
        assert!(worst <= 1e-8, "{worst:e}");
    }

    #[test]
    fn grid_nodes_are_exact() {
        let mother = MotherWavelet::new(1);
        let table = MotherTable::build(&mother);
        let x = -TABLE_HALF_WIDTH + 1000.0 * table.step();
        assert!((table.eval_im(x, 1) - mother.eval_im(x, 1)).abs() < 1e-12);
    }
}
