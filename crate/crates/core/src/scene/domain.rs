use crate::error::SceneError;
use crate::geometry::Vec3;

/// Bounded convex region containing the medium, transducers and obstacles.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Ball { center: Vec3, radius: f64 },
    Box { min: Vec3, max: Vec3 },
}

impl Domain {
    pub fn ball(center: Vec3, radius: f64) -> Result<Self, SceneError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(SceneError::Validation(format!(
                "domain radius must be positive, got {radius}"
            )));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn cuboid(min: Vec3, max: Vec3) -> Result<Self, SceneError> {
        if (0..3).any(|i| !(min[i] < max[i])) {
            return Err(SceneError::Validation(
                "domain box min must be below max componentwise".into(),
            ));
        }
        Ok(Domain::Box { min, max })
    }

    /// Signed depth of `p`: positive inside, zero on the boundary, negative
    /// outside. For balls this is the exact distance to the sphere; for boxes
    /// inside points get the exact distance and outside points a lower bound.
    #[inline]
    pub fn depth(&self, p: &Vec3) -> f64 {
        match self {
            Domain::Ball { center, radius } => radius - (p - center).norm(),
            Domain::Box { min, max } => {
                let mut d = f64::INFINITY;
                for i in 0..3 {
                    d = d.min(p[i] - min[i]).min(max[i] - p[i]);
                }
                d
            }
        }
    }

    /// Closed membership test.
    #[inline]
    pub fn contains(&self, p: &Vec3) -> bool {
        self.depth(p) >= 0.0
    }

    pub fn distance_to_boundary(&self, p: &Vec3) -> f64 {
        match self {
            Domain::Ball { .. } => self.depth(p).abs(),
            Domain::Box { min, max } => {
                let d = self.depth(p);
                if d >= 0.0 {
                    d
                } else {
                    let mut q = *p;
                    for i in 0..3 {
                        q[i] = q[i].clamp(min[i], max[i]);
                    }
                    (p - q).norm()
                }
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Box { min, max } => (max - min).norm(),
        }
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        match self {
            Domain::Ball { center, radius } => {
                let r = Vec3::repeat(*radius);
                (center - r, center + r)
            }
            Domain::Box { min, max } => (*min, *max),
        }
    }

    /// Whether a ball lies strictly inside.
    pub fn contains_ball_strictly(&self, c: &Vec3, r: f64) -> bool {
        self.depth(c) > r
    }

    /// Points of the domain where an affine function `g . p + d` attains its
    /// extremes: returns `(min, max)`.
    pub fn affine_range(&self, g: &Vec3, d: f64) -> (f64, f64) {
        match self {
            Domain::Ball { center, radius } => {
                let mid = g.dot(center) + d;
                let spread = g.norm() * radius;
                (mid - spread, mid + spread)
            }
            Domain::Box { min, max } => {
                let (mut lo, mut hi) = (d, d);
                for i in 0..3 {
                    let (a, b) = (g[i] * min[i], g[i] * max[i]);
                    lo += a.min(b);
                    hi += a.max(b);
                }
                (lo, hi)
            }
        }
    }
}
