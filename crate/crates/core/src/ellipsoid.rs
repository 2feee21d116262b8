//! Closed-form reflection points for a constant speed of sound.
//!
//! With constant speed every broken ray of travel time `t` has its reflection
//! point on the ellipsoid of revolution whose foci are the transmitter `L`
//! and the receiver `S` and whose major axis is `t v`. The take-off angles at
//! the transmitter pick one point on that surface.
//!
//! The canonical frame puts `L` at `(-c, 0, 0)` and `S` at `(c, 0, 0)`. Its
//! x-axis is `unit(S - L)`, its z-axis is world z with the x-component
//! removed (world y when x is within 1e-12 of vertical), and `y = z × x`.
//! When `L = S` the world axes are used, centred at `L`.

use nalgebra::{Matrix3, Rotation3};

use crate::error::EllipsoidError;
use crate::geometry::{angles_of, direction, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidFrame {
    pub l: Vec3,
    pub s: Vec3,
    /// Semi-major axis.
    pub a: f64,
    /// Half the focal distance.
    pub c: f64,
    /// Maps world directions into the canonical frame.
    pub rotation: Rotation3<f64>,
}

/// Canonical-frame rotation for a transmitter/receiver pair.
pub fn canonical_rotation(l: &Vec3, s: &Vec3) -> Rotation3<f64> {
    let d = s - l;
    if d.norm() == 0.0 {
        return Rotation3::identity();
    }
    let x = d.normalize();
    let up = if x.z.abs() > 1.0 - 1e-12 {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let z = (up - x * x.dot(&up)).normalize();
    let y = z.cross(&x);
    // rows are the canonical axes expressed in world coordinates
    Rotation3::from_matrix_unchecked(Matrix3::from_rows(&[
        x.transpose(),
        y.transpose(),
        z.transpose(),
    ]))
}

/// Builds the ellipsoid for travel time `t` at speed `v` between `l` and `s`.
pub fn solve_travel_time(
    t: f64,
    v: f64,
    l: &Vec3,
    s: &Vec3,
) -> Result<EllipsoidFrame, EllipsoidError> {
    let path = t * v;
    let focal = (s - l).norm();
    if !(path > focal) {
        return Err(EllipsoidError::Degenerate { path, focal });
    }
    Ok(EllipsoidFrame {
        l: *l,
        s: *s,
        a: path / 2.0,
        c: focal / 2.0,
        rotation: canonical_rotation(l, s),
    })
}

impl EllipsoidFrame {
    pub fn center(&self) -> Vec3 {
        (self.l + self.s) / 2.0
    }

    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        self.center() + self.rotation.inverse() * p
    }

    pub fn to_canonical(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p - self.center())
    }

    /// Canonical-frame take-off angles of a world direction.
    pub fn canonical_angles(&self, phi: f64, theta: f64) -> (f64, f64) {
        angles_of(&(self.rotation * direction(phi, theta)))
    }

    /// Reflection point in canonical coordinates.
    pub fn canonical_point(&self, phi: f64, theta: f64) -> Vec3 {
        let (a, c) = (self.a, self.c);
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = theta.sin_cos();
        let x = (a * sp * ct - c) / (1.0 - (c / a) * sp * ct);
        let r = a + (c / a) * x;
        Vec3::new(x, r * sp * st, r * cp)
    }
}

/// Reflection point for canonical-frame take-off angles, in world coordinates.
pub fn reflection_point_3d(frame: &EllipsoidFrame, phi: f64, theta: f64) -> Vec3 {
    frame.to_world(&frame.canonical_point(phi, theta))
}

/// Reflection point for take-off angles measured in world axes.
pub fn reflection_point_world(frame: &EllipsoidFrame, phi: f64, theta: f64) -> Vec3 {
    let (p, t) = frame.canonical_angles(phi, theta);
    reflection_point_3d(frame, p, t)
}

/// Planar version: a point of the ellipse with semi-axis `a`, half focal
/// distance `c`, seen from the focus `(-c, 0)` at angle `theta`.
pub fn reflection_point_2d(a: f64, c: f64, theta: f64) -> (f64, f64) {
    let (st, ct) = theta.sin_cos();
    let x = (a * ct - c) / (1.0 - (c / a) * ct);
    let r = a + (c / a) * x;
    (x, r * st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn frame(a: f64, c: f64) -> EllipsoidFrame {
        solve_travel_time(
            2.0 * a,
            1.0,
            &Vec3::new(-c, 0.0, 0.0),
            &Vec3::new(c, 0.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn solve_examples() {
        let f = solve_travel_time(2.0, 1.0, &Vec3::zeros(), &Vec3::zeros()).unwrap();
        assert_eq!((f.a, f.c), (1.0, 0.0));
        let f = solve_travel_time(
            2.0,
            1.0,
            &Vec3::new(-0.5, 0.0, 0.0),
            &Vec3::new(0.5, 0.0, 0.0),
        )
        .unwrap();
        assert_eq!((f.a, f.c), (1.0, 0.5));
        let err = solve_travel_time(
            1.0,
            1.0,
            &Vec3::new(-1.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
        );
        assert!(matches!(err, Err(EllipsoidError::Degenerate { .. })));
    }

    #[test]
    fn point_examples() {
        let p = reflection_point_3d(&frame(1.0, 0.0), FRAC_PI_2, FRAC_PI_4);
        assert_abs_diff_eq!(
            p,
            Vec3::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0),
            epsilon = 1e-15
        );
        let f = frame(2.0, 1.0);
        let p = reflection_point_3d(&f, FRAC_PI_2, 0.0);
        assert_abs_diff_eq!(p, Vec3::new(2.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!((p - f.l).norm(), 3.0, epsilon = 1e-15);
        let p = reflection_point_3d(&frame(1.0, 0.0), 0.0, 1.234);
        assert_abs_diff_eq!(p, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn planar_examples() {
        assert_eq!(reflection_point_2d(1.0, 0.0, 0.0), (1.0, 0.0));
        assert_eq!(reflection_point_2d(2.0, 1.0, 0.0), (2.0, 0.0));
        let (x, y) = reflection_point_2d(2.0, 1.0, PI);
        assert_abs_diff_eq!(x, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(((x + 1.0).powi(2) + y * y).sqrt(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn frame_is_right_handed_and_maps_foci() {
        let l = Vec3::new(0.3, -1.0, 2.0);
        let s = Vec3::new(-0.7, 0.5, 1.0);
        let f = solve_travel_time(5.0, 1.0, &l, &s).unwrap();
        assert_abs_diff_eq!(
            f.to_canonical(&l),
            Vec3::new(-f.c, 0.0, 0.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            f.to_canonical(&s),
            Vec3::new(f.c, 0.0, 0.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(f.rotation.matrix().determinant(), 1.0, epsilon = 1e-12);
        // vertical focal axis uses the fallback
        let f = solve_travel_time(5.0, 1.0, &Vec3::zeros(), &Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(f.rotation.matrix().determinant(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            f.to_canonical(&Vec3::new(0.0, 0.0, 1.0)),
            Vec3::new(0.5, 0.0, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn sphere_case_is_equidistant() {
        let l = Vec3::new(1.0, 2.0, 3.0);
        let f = solve_travel_time(3.0, 2.0, &l, &l).unwrap();
        for &(phi, theta) in &[(0.1, 0.2), (1.0, 4.0), (2.5, 5.9)] {
            let p = reflection_point_world(&f, phi, theta);
            assert_eq!((p - l).norm(), (p - f.s).norm());
            assert_abs_diff_eq!((p - l).norm(), 3.0, epsilon = 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn focal_sum_and_radius_identity(
            a in 0.1f64..100.0,
            ratio in 0.0f64..0.999,
            phi in 0.0f64..PI,
            theta in 0.0f64..(2.0 * PI),
        ) {
            let c = a * ratio;
            let f = frame(a, c);
            let q = f.canonical_point(phi, theta);
            let p = f.to_world(&q);
            let sum = (p - f.l).norm() + (p - f.s).norm();
            prop_assert!((sum - 2.0 * a).abs() <= 1e-9 * a);
            prop_assert!(((p - f.l).norm() - (a + c / a * q.x)).abs() <= 1e-9 * a);
        }

        #[test]
        fn world_angles_are_reproduced(
            l in prop::array::uniform3(-5.0f64..5.0),
            s in prop::array::uniform3(-5.0f64..5.0),
            extra in 0.1f64..10.0,
            phi in 0.05f64..(PI - 0.05),
            theta in 0.0f64..(2.0 * PI),
        ) {
            let l = Vec3::from(l);
            let s = Vec3::from(s);
            let t = (s - l).norm() + extra;
            let f = solve_travel_time(t, 1.0, &l, &s).unwrap();
            let p = reflection_point_world(&f, phi, theta);
            let (p2, t2) = angles_of(&(p - l));
            prop_assert!((p2 - phi).abs() < 1e-9);
            prop_assert!(crate::geometry::angle_distance(t2, theta) < 1e-9);
            let sum = (p - l).norm() + (p - s).norm();
            prop_assert!((sum - t).abs() <= 1e-9 * t);
        }
    }
}
