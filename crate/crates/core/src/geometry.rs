//! Small vector helpers shared by every module.
//!
//! Directions are carried around as spherical take-off angles `(phi, theta)`:
//! `phi` is the zenith angle from the positive z-axis in `[0, pi]` and
//! `theta` the azimuth of the xy-projection from the positive x-axis in
//! `[0, 2pi)`.

use std::f64::consts::{PI, TAU};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Unit direction for the given zenith/azimuth pair.
#[inline]
pub fn direction(phi: f64, theta: f64) -> Vec3 {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    Vec3::new(sp * ct, sp * st, cp)
}

/// Zenith/azimuth of a (not necessarily unit) direction vector.
pub fn angles_of(d: &Vec3) -> (f64, f64) {
    let n = d.norm();
    let phi = (d.z / n).clamp(-1.0, 1.0).acos();
    let theta = wrap_angle(d.y.atan2(d.x));
    (phi, theta)
}

/// Wraps an angle into `[0, 2pi)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Brings `(phi, theta)` back into the canonical ranges after integration
/// may have pushed `phi` slightly past a pole.
#[inline]
pub fn normalize_angles(phi: f64, theta: f64) -> (f64, f64) {
    let mut phi = phi.rem_euclid(TAU);
    let mut theta = theta;
    if phi > PI {
        phi = TAU - phi;
        theta += PI;
    }
    (phi, wrap_angle(theta))
}

/// Smallest absolute difference between two azimuths.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
