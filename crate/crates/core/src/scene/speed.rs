use super::Domain;
use crate::error::SceneError;
use crate::geometry::Vec3;

/// Speed of sound as a function of position.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeedField {
    Constant(f64),
    /// `c(x, y, z) = alpha x + beta y + gamma z + delta`
    Affine {
        gradient: Vec3,
        offset: f64,
    },
    Grid(SpeedGrid),
}

/// Node values on a regular lattice, trilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedGrid {
    pub origin: Vec3,
    pub spacing: Vec3,
    pub dims: [usize; 3],
    /// x fastest, then y, then z.
    pub values: Vec<f64>,
    /// Central-difference step used for the gradient.
    pub grad_step: f64,
}

impl SpeedGrid {
    pub fn new(
        origin: Vec3,
        spacing: Vec3,
        dims: [usize; 3],
        values: Vec<f64>,
    ) -> Result<Self, SceneError> {
        if dims.iter().any(|&n| n < 2) {
            return Err(SceneError::Validation(
                "speed grid needs at least 2 nodes per axis".into(),
            ));
        }
        if spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(SceneError::Validation(
                "speed grid spacing must be positive".into(),
            ));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(SceneError::Validation(format!(
                "speed grid has {} values, expected {}",
                values.len(),
                dims[0] * dims[1] * dims[2]
            )));
        }
        Ok(SpeedGrid {
            origin,
            spacing,
            dims,
            values,
            grad_step: 1e-5,
        })
    }

    fn node(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    fn upper_corner(&self) -> Vec3 {
        self.origin
            + Vec3::new(
                self.spacing.x * (self.dims[0] - 1) as f64,
                self.spacing.y * (self.dims[1] - 1) as f64,
                self.spacing.z * (self.dims[2] - 1) as f64,
            )
    }

    fn interpolate(&self, p: &Vec3) -> f64 {
        let mut idx = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let u =
                ((p[a] - self.origin[a]) / self.spacing[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (u.floor() as usize).min(self.dims[a] - 2);
            idx[a] = i;
            frac[a] = u - i as f64;
        }
        let [i, j, k] = idx;
        let [fx, fy, fz] = frac;
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let c00 = lerp(self.node(i, j, k), self.node(i + 1, j, k), fx);
        let c10 = lerp(self.node(i, j + 1, k), self.node(i + 1, j + 1, k), fx);
        let c01 = lerp(self.node(i, j, k + 1), self.node(i + 1, j, k + 1), fx);
        let c11 = lerp(
            self.node(i, j + 1, k + 1),
            self.node(i + 1, j + 1, k + 1),
            fx,
        );
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }
}

impl SpeedField {
    pub fn affine(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        SpeedField::Affine {
            gradient: Vec3::new(alpha, beta, gamma),
            offset: delta,
        }
    }

    /// Unchecked evaluation; callers on hot paths are responsible for keeping
    /// `p` inside the domain.
    #[inline]
    pub fn speed(&self, p: &Vec3) -> f64 {
        match self {
            SpeedField::Constant(c) => *c,
            SpeedField::Affine { gradient, offset } => gradient.dot(p) + offset,
            SpeedField::Grid(g) => g.interpolate(p),
        }
    }

    #[inline]
    pub fn gradient(&self, p: &Vec3) -> Vec3 {
        match self {
            SpeedField::Constant(_) => Vec3::zeros(),
            SpeedField::Affine { gradient, .. } => *gradient,
            SpeedField::Grid(g) => {
                let h = g.grad_step;
                let mut out = Vec3::zeros();
                for a in 0..3 {
                    let mut e = Vec3::zeros();
                    e[a] = h;
                    out[a] = (g.interpolate(&(p + e)) - g.interpolate(&(p - e))) / (2.0 * h);
                }
                out
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SpeedField::Constant(_))
    }

    /// Lower and upper bounds of the speed over the domain.
    pub fn bounds(&self, domain: &Domain) -> (f64, f64) {
        match self {
            SpeedField::Constant(c) => (*c, *c),
            SpeedField::Affine { gradient, offset } => domain.affine_range(gradient, *offset),
            SpeedField::Grid(g) => g
                .values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
        }
    }

    /// Checks positivity over the domain and, for grids, that the lattice
    /// covers the domain. Also fixes the grid's finite-difference step.
    pub fn validate(&mut self, domain: &Domain) -> Result<(), SceneError> {
        match self {
            SpeedField::Constant(c) => {
                if !(*c > 0.0) || !c.is_finite() {
                    return Err(SceneError::Validation(format!(
                        "speed must be positive in the domain, constant is {c}"
                    )));
                }
            }
            SpeedField::Affine { gradient, offset } => {
                let (lo, _) = domain.affine_range(gradient, *offset);
                if !(lo > 0.0) {
                    return Err(SceneError::Validation(format!(
                        "speed must be positive in the domain, affine field reaches {lo}"
                    )));
                }
            }
            SpeedField::Grid(g) => {
                if let Some(v) = g.values.iter().find(|v| !(**v > 0.0)) {
                    return Err(SceneError::Validation(format!(
                        "speed must be positive in the domain, grid node has {v}"
                    )));
                }
                let (lo, hi) = domain.bounding_box();
                let top = g.upper_corner();
                if (0..3).any(|a| g.origin[a] > lo[a] || top[a] < hi[a]) {
                    return Err(SceneError::Validation(
                        "speed grid does not cover the domain bounding box".into(),
                    ));
                }
                g.grad_step = 1e-5 * domain.diameter();
            }
        }
        Ok(())
    }
}

fn check_inside(domain: &Domain, p: &Vec3) -> Result<(), SceneError> {
    if domain.contains(p) {
        Ok(())
    } else {
        Err(SceneError::OutsideDomain {
            x: p.x,
            y: p.y,
            z: p.z,
        })
    }
}

/// Speed at a point of the domain.
pub fn speed_at(field: &SpeedField, domain: &Domain, p: &Vec3) -> Result<f64, SceneError> {
    check_inside(domain, p)?;
    Ok(field.speed(p))
}

/// Gradient of the speed at a point of the domain.
pub fn grad_speed_at(field: &SpeedField, domain: &Domain, p: &Vec3) -> Result<Vec3, SceneError> {
    check_inside(domain, p)?;
    Ok(field.gradient(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball() -> Domain {
        Domain::ball(Vec3::zeros(), 10.0).unwrap()
    }

    #[test]
    fn constant_field() {
        let f = SpeedField::Constant(1.0);
        let p = Vec3::new(3.0, -2.0, 1.0);
        assert_eq!(speed_at(&f, &ball(), &p).unwrap(), 1.0);
        assert_eq!(grad_speed_at(&f, &ball(), &p).unwrap(), Vec3::zeros());
    }

    #[test]
    fn diagonal_affine_field() {
        let f = SpeedField::affine(1.0, 1.0, 0.0, 1.0);
        let d = ball();
        assert_eq!(speed_at(&f, &d, &Vec3::zeros()).unwrap(), 1.0);
        assert_eq!(
            grad_speed_at(&f, &d, &Vec3::zeros()).unwrap(),
            Vec3::new(1.0, 1.0, 0.0)
        );
        assert_abs_diff_eq!(
            speed_at(&f, &d, &Vec3::new(1.55, 1.55, 0.0)).unwrap(),
            4.10,
            epsilon = 1e-12
        );
        assert_eq!(
            grad_speed_at(&f, &d, &Vec3::new(1.55, 1.55, 0.0)).unwrap(),
            Vec3::new(1.0, 1.0, 0.0)
        );
    }

    #[test]
    fn outside_point_is_an_error() {
        let f = SpeedField::Constant(1.0);
        assert!(matches!(
            speed_at(&f, &ball(), &Vec3::new(11.0, 0.0, 0.0)),
            Err(SceneError::OutsideDomain { .. })
        ));
        assert!(grad_speed_at(&f, &ball(), &Vec3::new(0.0, 0.0, -10.5)).is_err());
    }

    #[test]
    fn positivity_checked_on_domain_extremes() {
        let d = ball();
        assert!(SpeedField::affine(1.0, 1.0, 0.0, 1.0).validate(&d).is_err());
        assert!(SpeedField::affine(0.05, 0.05, 0.0, 1.0)
            .validate(&d)
            .is_ok());
        assert!(SpeedField::Constant(0.0).validate(&d).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = Domain::ball(Vec3::zeros(), 1.0).unwrap();
        let fields = [
            SpeedField::Constant(1.3),
            SpeedField::affine(0.3, -0.2, 0.1, 1.0),
        ];
        for f in &fields {
            for _ in 0..100 {
                let p = loop {
                    let q = Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    if d.depth(&q) > 1e-3 {
                        break q;
                    }
                };
                let h = 1e-5;
                let g = f.gradient(&p);
                for a in 0..3 {
                    let mut e = Vec3::zeros();
                    e[a] = h;
                    let fd = (f.speed(&(p + e)) - f.speed(&(p - e))) / (2.0 * h);
                    assert!((g[a] - fd).abs() <= 1e-6 * g[a].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn grid_reproduces_affine_field() {
        // trilinear interpolation is exact for affine data
        let n = 5;
        let origin = Vec3::new(-1.0, -1.0, -1.0);
        let spacing = Vec3::repeat(0.5);
        let mut values = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let p = origin + Vec3::new(i as f64, j as f64, k as f64) * 0.5;
                    values.push(0.3 * p.x - 0.2 * p.y + 0.1 * p.z + 2.0);
                }
            }
        }
        let mut f = SpeedField::Grid(SpeedGrid::new(origin, spacing, [n, n, n], values).unwrap());
        let d = Domain::ball(Vec3::zeros(), 1.0).unwrap();
        f.validate(&d).unwrap();
        let p = Vec3::new(0.13, -0.41, 0.27);
        assert_abs_diff_eq!(
            f.speed(&p),
            0.3 * p.x - 0.2 * p.y + 0.1 * p.z + 2.0,
            epsilon = 1e-12
        );
        let g = f.gradient(&p);
        assert_abs_diff_eq!(g, Vec3::new(0.3, -0.2, 0.1), epsilon = 1e-8);
    }

    #[test]
    fn grid_must_cover_domain() {
        let g = SpeedGrid::new(Vec3::zeros(), Vec3::repeat(1.0), [2, 2, 2], vec![1.0; 8]).unwrap();
        let d = Domain::ball(Vec3::zeros(), 1.0).unwrap();
        assert!(SpeedField::Grid(g).validate(&d).is_err());
    }
}
