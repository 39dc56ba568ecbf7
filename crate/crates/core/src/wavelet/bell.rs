//! The Meyer bell: a smooth frequency window on `[2π/3, 8π/3]`.

use std::f64::consts::{FRAC_PI_2, PI};

pub const SUPPORT_LO: f64 = 2.0 * PI / 3.0;
pub const SUPPORT_MID: f64 = 4.0 * PI / 3.0;
pub const SUPPORT_HI: f64 = 8.0 * PI / 3.0;

fn flat(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// C^∞ transition from 0 (at `x ≤ 0`) to 1 (at `x ≥ 1`), built from
/// `exp(-1/x)`. Satisfies `smooth_step(x) + smooth_step(1 - x) = 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = flat(x);
        a / (a + flat(1.0 - x))
    }
}

/// Standard Meyer bell `b(ξ)` for `ξ ≥ 0`; zero outside `(2π/3, 8π/3)`.
pub fn bell_eval(xi: f64) -> f64 {
    if xi <= SUPPORT_LO || xi >= SUPPORT_HI {
        0.0
    } else if xi <= SUPPORT_MID {
        (FRAC_PI_2 * smooth_step(3.0 * xi / (2.0 * PI) - 1.0)).sin()
    } else {
        (FRAC_PI_2 * smooth_step(3.0 * xi / (4.0 * PI) - 1.0)).cos()
    }
}

/// Marker type for the bell used by [`MotherWavelet`](super::MotherWavelet).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BellFunction;

impl BellFunction {
    pub fn eval(&self, xi: f64) -> f64 {
        bell_eval(xi)
    }

    pub fn support(&self) -> (f64, f64) {
        (SUPPORT_LO, SUPPORT_HI)
    }
}
