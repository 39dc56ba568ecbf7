//! The Lemarié-Meyer mother wavelet and its derivatives.
//!
//! With `a = s + 1/2`,
//!
//! ```text
//! u^{(i)}(s) = (1/2π) ∫ (iξ)^i e^{iξa} sgn ξ b(|ξ|) dξ
//!            = (i^i / π) ∫_{2π/3}^{8π/3} ξ^i b(ξ) · { i·sin(ξa)  (i even)
//!                                                    {   cos(ξa)  (i odd)
//! ```
//!
//! so every derivative is purely imaginary. The one-sided integral is done
//! with a composite Gauss-Legendre rule over the bell support.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::bell::{bell_eval, BellFunction, SUPPORT_HI, SUPPORT_LO};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::quadrature::GaussLegendre;

pub const DEFAULT_PANELS: usize = 32;
pub const NODES_PER_PANEL: usize = 16;
/// Arguments `|s + 1/2|` per extra multiple of the base panel count.
const OSCILLATION_SPAN: f64 = 128.0;
const CACHED_MULTIPLIERS: usize = 64;
/// Half-width of the window searched for derivative sup-norms.
pub const SUP_SEARCH_HALF_WIDTH: f64 = 32.0;

#[derive(Debug)]
struct FrequencyRule {
    xi: Vec<f64>,
    /// Quadrature weight times bell value.
    weight: Vec<f64>,
}

impl FrequencyRule {
    fn new(gl: &GaussLegendre, panels: usize) -> Self {
        let rule = gl.composite(SUPPORT_LO, SUPPORT_HI, panels);
        let weight = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * bell_eval(x))
            .collect();
        FrequencyRule { xi: rule.nodes, weight }
    }
}

/// Evaluator for `u` and its derivatives up to a configured order.
#[derive(Debug)]
pub struct MotherWavelet {
    bell: BellFunction,
    i_max: usize,
    base_panels: usize,
    gl: GaussLegendre,
    rules: Vec<OnceLock<FrequencyRule>>,
    sup_norm_table: Vec<f64>,
}

impl MotherWavelet {
    /// Mother wavelet with derivatives up to `i_max` and the default rule
    /// (32 panels × 16 nodes).
    pub fn new(i_max: usize) -> Self {
        Self::with_panels(i_max, DEFAULT_PANELS)
    }

    pub fn with_panels(i_max: usize, base_panels: usize) -> Self {
        let mut mother = MotherWavelet {
            bell: BellFunction,
            i_max,
            base_panels: base_panels.max(1),
            gl: GaussLegendre::new(NODES_PER_PANEL),
            rules: (0..CACHED_MULTIPLIERS).map(|_| OnceLock::new()).collect(),
            sup_norm_table: Vec::new(),
        };
        mother.sup_norm_table = mother.compute_sup_norms();
        mother
    }

    pub fn bell(&self) -> &BellFunction {
        &self.bell
    }

    pub fn i_max(&self) -> usize {
        self.i_max
    }

    /// Highest derivative order evaluated internally (one above `i_max`, so
    /// that order-`i_max` quantities have Lipschitz data).
    pub fn internal_order(&self) -> usize {
        self.i_max + 1
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.base_panels * NODES_PER_PANEL
    }

    /// `‖u^{(i)}‖_∞` for `i = 0..=i_max + 1`.
    pub fn sup_norm_table(&self) -> &[f64] {
        &self.sup_norm_table
    }

    pub fn sup_norm(&self, i: usize) -> f64 {
        self.sup_norm_table[i]
    }

    /// `u^{(i)}(s)`.
    pub fn eval(&self, s: f64, i: usize) -> Result<C64> {
        self.check_order(i)?;
        Ok(C64::new(0.0, self.eval_im(s, i)))
    }

    /// Same as [`eval`](Self::eval) but with an explicit panel count, used
    /// to self-validate the default rule.
    pub fn eval_with_panels(&self, s: f64, i: usize, panels: usize) -> Result<C64> {
        self.check_order(i)?;
        let rule = FrequencyRule::new(&self.gl, panels);
        let mut out = vec![0.0; i + 1];
        accumulate(&rule, s + 0.5, &mut out);
        Ok(C64::new(0.0, out[i]))
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

    /// Imaginary part of `u^{(i)}(s)`; `i` may go up to `internal_order`.
    pub(crate) fn eval_im(&self, s: f64, i: usize) -> f64 {
        let mut out = vec![0.0; i + 1];
        self.eval_orders_im(s, &mut out);
        out[i]
    }

    /// Fills `out[i]` with `Im u^{(i)}(s)` for every `i < out.len()`,
    /// sharing one pass of trigonometric evaluations.
    pub(crate) fn eval_orders_im(&self, s: f64, out: &mut [f64]) {
        let a = s + 0.5;
        let mult = ((a.abs() / OSCILLATION_SPAN).ceil() as usize).max(1);
        if mult <= CACHED_MULTIPLIERS {
            let rule = self.rules[mult - 1].get_or_init(|| FrequencyRule::new(&self.gl, self.base_panels * mult));
            accumulate(rule, a, out);
        } else {
            let rule = FrequencyRule::new(&self.gl, self.base_panels * mult);
            accumulate(&rule, a, out);
        }
    }

    /// `(1/π) ∫ ξ^m b(ξ) dξ`, a global upper bound on `‖u^{(m)}‖_∞`.
    pub fn frequency_moment(&self, m: usize) -> f64 {
        let rule = self.gl.composite(SUPPORT_LO, SUPPORT_HI, 4 * self.base_panels);
        rule.integrate(|x| x.powi(m as i32) * bell_eval(x)) / PI
    }

    /// `‖u‖²_{L2}` by Parseval: `(1/π) ∫ b(ξ)² dξ`.
    pub fn l2_norm_sqr(&self) -> f64 {
        let rule = self.gl.composite(SUPPORT_LO, SUPPORT_HI, 4 * self.base_panels);
        rule.integrate(|x| bell_eval(x).powi(2)) / PI
    }

    /// Grid search over `[-32, 32]` at spacing 1/64, refined by golden
    /// section around the leading local maxima.
    fn compute_sup_norms(&self) -> Vec<f64> {
        let orders = self.internal_order() + 1;
        let steps = (2.0 * SUP_SEARCH_HALF_WIDTH * 64.0) as usize;
        let h = 2.0 * SUP_SEARCH_HALF_WIDTH / steps as f64;
        let grid: Vec<f64> = (0..=steps).map(|k| -SUP_SEARCH_HALF_WIDTH + k as f64 * h).collect();
        let mut values = vec![vec![0.0; grid.len()]; orders];
        let mut buf = vec![0.0; orders];
        for (g, &s) in grid.iter().enumerate() {
            self.eval_orders_im(s, &mut buf);
            for i in 0..orders {
                values[i][g] = buf[i].abs();
            }
        }
        (0..orders)
            .map(|i| {
                let vals = &values[i];
                let mut peaks: Vec<usize> = (1..vals.len() - 1)
                    .filter(|&g| vals[g] >= vals[g - 1] && vals[g] >= vals[g + 1])
                    .collect();
                peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
                peaks.truncate(6);
                let mut best = vals.iter().copied().fold(0.0, f64::max);
                for g in peaks {
                    let refined = golden_max(|s| self.eval_im(s, i).abs(), grid[g] - h, grid[g] + h);
                    best = best.max(refined);
                }
                best
            })
            .collect()
    }
}

fn accumulate(rule: &FrequencyRule, a: f64, out: &mut [f64]) {
    let orders = out.len();
    let mut sums = [0.0f64; 16];
    assert!(orders <= sums.len(), "derivative order too large");
    for (&xi, &w) in rule.xi.iter().zip(&rule.weight) {
        let (sn, cs) = (xi * a).sin_cos();
        let mut pw = w;
        for (i, acc) in sums.iter_mut().enumerate().take(orders) {
            *acc += pw * if i % 2 == 0 { sn } else { cs };
            pw *= xi;
        }
    }
    for (i, o) in out.iter_mut().enumerate() {
        let sign = if i % 4 < 2 { 1.0 } else { -1.0 };
        *o = sign * sums[i] / PI;
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..40 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}
