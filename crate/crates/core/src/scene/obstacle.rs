use nalgebra::Rotation3;

use super::Domain;
use crate::error::SceneError;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    Reflecting,
    Absorbing,
}

/// One supporting plane `normal . p <= offset` of a convex polyhedron.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub normal: Vec3,
    pub offset: f64,
    pub surface: SurfaceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolyhedron {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<Face>,
}

impl ConvexPolyhedron {
    /// Builds the half-space description from a vertex list. Every vertex must
    /// be an extreme point of the hull and the hull must have volume.
    pub fn from_vertices(vertices: Vec<Vec3>, surface: SurfaceKind) -> Result<Self, SceneError> {
        if vertices.len() < 4 {
            return Err(SceneError::Validation(
                "polyhedron needs at least 4 vertices".into(),
            ));
        }
        let scale = vertices
            .iter()
            .flat_map(|a| vertices.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        let tol = 1e-9 * scale.max(1e-300);
        let faces = hull_planes(&vertices, tol);
        if faces.len() < 4 {
            return Err(SceneError::Validation(
                "polyhedron is degenerate (no volume)".into(),
            ));
        }
        // extreme-point check: each vertex lies on at least three hull planes
        // and is not a convex combination of the others
        for (i, v) in vertices.iter().enumerate() {
            let others: Vec<Vec3> = vertices
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, w)| *w)
                .collect();
            let sub = hull_planes(&others, tol);
            let inside_rest = sub.len() >= 4 && sub.iter().all(|(n, d)| n.dot(v) <= d + tol);
            if inside_rest {
                return Err(SceneError::Validation(format!(
                    "polyhedron is not convex: vertex {i} is not an extreme point"
                )));
            }
        }
        Ok(ConvexPolyhedron {
            vertices,
            faces: faces
                .into_iter()
                .map(|(normal, offset)| Face {
                    normal,
                    offset,
                    surface,
                })
                .collect(),
        })
    }

    fn transformed(&self, placement: &Placement) -> ConvexPolyhedron {
        let faces = self
            .faces
            .iter()
            .map(|f| {
                let n = placement.rotation * f.normal;
                Face {
                    normal: n,
                    offset: f.offset + n.dot(&placement.translation),
                    surface: f.surface,
                }
            })
            .collect();
        ConvexPolyhedron {
            vertices: self.vertices.iter().map(|v| placement.apply(v)).collect(),
            faces,
        }
    }
}

/// Brute-force hull planes: every vertex triple whose plane supports the set.
fn hull_planes(vertices: &[Vec3], tol: f64) -> Vec<(Vec3, f64)> {
    let n = vertices.len();
    let mut planes: Vec<(Vec3, f64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let nrm = (vertices[j] - vertices[i]).cross(&(vertices[k] - vertices[i]));
                let len = nrm.norm();
                if len <= tol * tol.max(1.0) {
                    continue;
                }
                let mut nrm = nrm / len;
                let mut d = nrm.dot(&vertices[i]);
                let (mut above, mut below) = (false, false);
                for v in vertices {
                    let s = nrm.dot(v) - d;
                    above |= s > tol;
                    below |= s < -tol;
                }
                if above && below {
                    continue;
                }
                if above {
                    nrm = -nrm;
                    d = -d;
                }
                if !planes
                    .iter()
                    .any(|(m, e)| (m - nrm).norm() < 1e-9 && (e - d).abs() <= tol)
                {
                    planes.push((nrm, d));
                }
            }
        }
    }
    planes
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Polyhedron(ConvexPolyhedron),
}

/// Rigid placement of an obstacle during one sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub translation: Vec3,
    pub rotation: Rotation3<f64>,
}

impl Placement {
    pub fn translation(t: Vec3) -> Self {
        Placement {
            translation: t,
            rotation: Rotation3::identity(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

/// A convex obstacle with a piecewise-constant trajectory over the sampling
/// intervals. A single-entry trajectory means the obstacle is static.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub shape: Shape,
    pub surface: SurfaceKind,
    pub trajectory: Vec<Placement>,
}

impl Obstacle {
    pub fn placement(&self, interval: usize) -> &Placement {
        let i = interval.min(self.trajectory.len() - 1);
        &self.trajectory[i]
    }

    pub fn placed(&self, interval: usize) -> PlacedObstacle {
        let pl = self.placement(interval);
        let shape = match &self.shape {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: pl.apply(center),
                radius: *radius,
            },
            Shape::Polyhedron(poly) => Shape::Polyhedron(poly.transformed(pl)),
        };
        PlacedObstacle {
            shape,
            surface: self.surface,
        }
    }
}

/// First contact of a segment with an obstacle surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    /// Unit outward normal at the contact.
    pub normal: Vec3,
    /// Fraction of the segment at which the contact occurs, in `[0, 1]`.
    pub fraction: f64,
    pub surface: SurfaceKind,
}

/// An obstacle in world coordinates for one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedObstacle {
    pub shape: Shape,
    pub surface: SurfaceKind,
}

impl PlacedObstacle {
    /// Negative inside, positive outside. Exact for spheres; for polyhedra the
    /// largest face-plane distance, which has the right sign and zero set.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        match &self.shape {
            Shape::Sphere { center, radius } => (p - center).norm() - radius,
            Shape::Polyhedron(poly) => poly
                .faces
                .iter()
                .map(|f| f.normal.dot(p) - f.offset)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Outward normal and surface kind at (or near) a surface point.
    pub fn surface_at(&self, p: &Vec3) -> (Vec3, SurfaceKind) {
        match &self.shape {
            Shape::Sphere { center, .. } => ((p - center).normalize(), self.surface),
            Shape::Polyhedron(poly) => {
                let f = poly
                    .faces
                    .iter()
                    .max_by(|a, b| {
                        (a.normal.dot(p) - a.offset).total_cmp(&(b.normal.dot(p) - b.offset))
                    })
                    .expect("polyhedron has faces");
                (f.normal, f.surface)
            }
        }
    }

    /// Earliest entering intersection of the segment `p0 -> p1`. Tangential
    /// contact counts as a hit. Segments starting inside report no hit.
    pub fn intersect_segment(&self, p0: &Vec3, p1: &Vec3) -> Option<Hit> {
        let d = p1 - p0;
        match &self.shape {
            Shape::Sphere { center, radius } => {
                let m = p0 - center;
                let a = d.norm_squared();
                if a == 0.0 {
                    return None;
                }
                let b = m.dot(&d);
                let c = m.norm_squared() - radius * radius;
                if c < 0.0 {
                    return None;
                }
                let mut disc = b * b - a * c;
                // tolerate round-off at exact tangency
                if disc < 0.0 && disc > -1e-12 * (b * b).max(a * radius * radius) {
                    disc = 0.0;
                }
                if disc < 0.0 {
                    return None;
                }
                let u = (-b - disc.sqrt()) / a;
                if !(0.0..=1.0).contains(&u) {
                    return None;
                }
                let point = p0 + d * u;
                Some(Hit {
                    point,
                    normal: (point - center).normalize(),
                    fraction: u,
                    surface: self.surface,
                })
            }
            Shape::Polyhedron(poly) => {
                let (mut enter, mut exit) = (0.0f64, 1.0f64);
                let mut enter_face: Option<&Face> = None;
                for f in &poly.faces {
                    let denom = f.normal.dot(&d);
                    let dist = f.offset - f.normal.dot(p0);
                    if denom == 0.0 {
                        if dist < 0.0 {
                            return None;
                        }
                        continue;
                    }
                    let u = dist / denom;
                    if denom < 0.0 {
                        if u > enter || enter_face.is_none() && u >= enter {
                            enter = u;
                            enter_face = Some(f);
                        }
                    } else if u < exit {
                        exit = u;
                    }
                    if enter > exit {
                        return None;
                    }
                }
                let f = enter_face?;
                if poly
                    .faces
                    .iter()
                    .all(|g| g.normal.dot(p0) - g.offset <= 0.0)
                {
                    return None;
                }
                Some(Hit {
                    point: p0 + d * enter,
                    normal: f.normal,
                    fraction: enter,
                    surface: f.surface,
                })
            }
        }
    }

    /// Whether the closure lies strictly inside the domain.
    pub fn strictly_inside(&self, domain: &Domain) -> bool {
        match &self.shape {
            Shape::Sphere { center, radius } => domain.contains_ball_strictly(center, *radius),
            Shape::Polyhedron(poly) => poly.vertices.iter().all(|v| domain.depth(v) > 0.0),
        }
    }
}

/// Segment/obstacle intersection for one placement.
pub fn intersect_obstacle(p0: &Vec3, p1: &Vec3, obstacle: &PlacedObstacle) -> Option<Hit> {
    obstacle.intersect_segment(p0, p1)
}
