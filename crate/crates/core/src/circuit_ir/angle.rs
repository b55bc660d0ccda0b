//! Rotation-angle canonicalization.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

/// Two angles closer than this (radians) are the same angle.
pub const ANGLE_TOL: f64 = 1e-9;

/// Reduces `theta` into `[0, 2π)`; values within tolerance of 2π map to 0.
pub fn canonicalize(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if TAU - t <= ANGLE_TOL {
        0.0
    } else {
        t
    }
}

/// `Some(k)` when `theta` is within tolerance of `k·π/2`.
pub fn clifford_quarter_turns(theta: f64) -> Option<u8> {
    let t = canonicalize(theta);
    let k = (t / FRAC_PI_2).round();
    if (t - k * FRAC_PI_2).abs() <= ANGLE_TOL {
        Some((k as u8) % 4)
    } else {
        None
    }
}

pub fn is_clifford_angle(theta: f64) -> bool {
    clifford_quarter_turns(theta).is_some()
}

/// Angle of the fixup rotation required after a failed `rz(theta)` injection.
pub fn fixup_angle(theta: f64) -> f64 {
    canonicalize(2.0 * theta)
}

/// Hashable identity of a canonical angle, quantized at [`ANGLE_TOL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AngleKey(i64);

impl AngleKey {
    pub fn of(theta: f64) -> Self {
        let q = (canonicalize(theta) / ANGLE_TOL).round() as i64;
        let full = (TAU / ANGLE_TOL).round() as i64;
        AngleKey(if q >= full { 0 } else { q })
    }
}
