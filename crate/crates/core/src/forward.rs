//! Forward simulation: emits rays from transmitters, reflects them off
//! obstacles and records what reaches the receivers.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rayon::prelude::*;

use crate::error::SceneError;
use crate::geometry::{angles_of, Vec3};
use crate::raytrace::{
    reverse, rk4_step, step_to_boundary, trace, PathExit, RayState, StepOutcome,
};
use crate::scene::{
    Domain, GridConfig, PlacedObstacle, Scene, SpeedField, SurfaceKind, Transducer,
};
use crate::shooting::DataPoint;

/// Set of take-off angles `(phi, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleGrid {
    /// `phi = pi l / n`, `theta = 2 pi m / n` for `0 <= l, m < n`.
    Uniform {
        n: usize,
    },
    /// `n` azimuths in the xy-plane.
    Planar {
        n: usize,
    },
    Explicit(Vec<(f64, f64)>),
    /// Directions uniform on the sphere.
    Random {
        count: usize,
        seed: u64,
    },
}

impl AngleGrid {
    pub fn angles(&self) -> Vec<(f64, f64)> {
        match self {
            AngleGrid::Uniform { n } => {
                let n = *n;
                (0..n)
                    .flat_map(|l| {
                        (0..n).map(move |m| (PI * l as f64 / n as f64, TAU * m as f64 / n as f64))
                    })
                    .collect()
            }
            AngleGrid::Planar { n } => (0..*n)
                .map(|m| (PI / 2.0, TAU * m as f64 / *n as f64))
                .collect(),
            AngleGrid::Explicit(v) => v.clone(),
            AngleGrid::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*count)
                    .map(|_| {
                        let u: f64 = rng.random();
                        let v: f64 = rng.random();
                        ((1.0 - 2.0 * u).clamp(-1.0, 1.0).acos(), TAU * v)
                    })
                    .collect()
            }
        }
    }

    pub fn from_config(cfg: GridConfig) -> Result<Self, SceneError> {
        let grid = match cfg {
            GridConfig::Uniform { n } => AngleGrid::Uniform { n },
            GridConfig::Planar { n } => AngleGrid::Planar { n },
            GridConfig::Explicit { angles } => {
                AngleGrid::Explicit(angles.into_iter().map(|[p, t]| (p, t)).collect())
            }
            GridConfig::Random { count, seed } => AngleGrid::Random { count, seed },
        };
        if grid.is_empty() {
            return Err(SceneError::Validation("emission grid is empty".into()));
        }
        if let AngleGrid::Explicit(v) = &grid {
            if v.iter()
                .any(|&(p, t)| !(0.0..=PI).contains(&p) || !(0.0..TAU).contains(&t))
            {
                return Err(SceneError::Validation(
                    "explicit angles need phi in [0, pi] and theta in [0, 2pi)".into(),
                ));
            }
        }
        Ok(grid)
    }

    pub fn to_config(&self) -> GridConfig {
        match self {
            AngleGrid::Uniform { n } => GridConfig::Uniform { n: *n },
            AngleGrid::Planar { n } => GridConfig::Planar { n: *n },
            AngleGrid::Explicit(v) => GridConfig::Explicit {
                angles: v.iter().map(|&(p, t)| [p, t]).collect(),
            },
            AngleGrid::Random { count, seed } => GridConfig::Random {
                count: *count,
                seed: *seed,
            },
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            AngleGrid::Uniform { n } | AngleGrid::Planar { n } => *n == 0,
            AngleGrid::Explicit(v) => v.is_empty(),
            AngleGrid::Random { count, .. } => *count == 0,
        }
    }
}

/// Mirror `d` about the plane with unit normal `n`.
pub fn specular_reflect(d: &Vec3, n: &Vec3) -> Vec3 {
    (d - n * (2.0 * d.dot(n))).normalize()
}

/// A transmitted ray that was never received.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LostRay {
    pub transmitter: Vec3,
    pub phi: f64,
    pub theta: f64,
    pub xi: u32,
}

/// Contact with an obstacle surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub point: Vec3,
    pub normal: Vec3,
    /// Travel time from the transmitter to the contact.
    pub time: f64,
    pub obstacle: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayOutcome {
    /// Passed within the capture radius of receiver `receiver` (an index
    /// into the scene's transducers); `arrival` is the closest approach.
    Received {
        receiver: usize,
        arrival: Vec3,
        t: f64,
        reflection: Option<Reflection>,
    },
    /// Stopped by an absorbing surface.
    Lost { absorbed_at: Vec3, t: f64 },
    /// Left the domain away from every receiver.
    ExitedUnreceived {
        exit: Vec3,
        t: f64,
        reflection: Option<Reflection>,
    },
    /// Hit a second obstacle after a reflection; outside the single-reflection
    /// model and excluded from the data.
    Excluded { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayEvent {
    /// Index of the transmitter in the scene's transducers.
    pub transmitter: usize,
    pub phi: f64,
    pub theta: f64,
    pub xi: u32,
    pub outcome: RayOutcome,
}

/// Simulator-side truth for one received ray, kept for validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub xi: u32,
    pub reflection: Option<Reflection>,
    /// Closest approach to the receiver.
    pub arrival: Vec3,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalData {
    pub data_points: Vec<DataPoint>,
    pub lost: Vec<LostRay>,
    pub ground_truth: Vec<GroundTruth>,
    /// Every emitted ray in emission order.
    pub events: Vec<RayEvent>,
}

impl IntervalData {
    pub fn excluded(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.outcome, RayOutcome::Excluded { .. }))
            .count()
    }
}

/// Everything needed to march rays through one interval's geometry.
pub struct Tracer<'a> {
    pub field: &'a SpeedField,
    pub domain: &'a Domain,
    pub obstacles: Vec<PlacedObstacle>,
    pub h: f64,
    surface_tol: f64,
    max_time: f64,
}

impl<'a> Tracer<'a> {
    pub fn new(scene: &'a Scene, interval: usize) -> Self {
        let (c_min, c_max) = scene.speed.bounds(&scene.domain);
        let diameter = scene.domain.diameter();
        Tracer {
            field: &scene.speed,
            domain: &scene.domain,
            obstacles: scene.placed_obstacles(interval),
            h: diameter / (c_max * scene.sim_steps as f64),
            surface_tol: 1e-10 * diameter,
            max_time: 20.0 * diameter / c_min,
        }
    }

    /// Earliest obstacle contact on the step from `cur` of length `h`, with
    /// the contact refined along the curved sub-step.
    fn contact(
        &self,
        cur: &RayState,
        next: &Vec3,
        h: f64,
        skip: Option<usize>,
    ) -> Option<(usize, RayState)> {
        let mut best: Option<(usize, f64)> = None;
        for (k, obs) in self.obstacles.iter().enumerate() {
            if Some(k) == skip {
                continue;
            }
            let frac = match obs.intersect_segment(&cur.pos, next) {
                Some(hit) => hit.fraction,
                None if obs.signed_distance(next) <= 0.0 => 1.0,
                None => continue,
            };
            if best.is_none_or(|(_, f)| frac < f) {
                best = Some((k, frac));
            }
        }
        let (k, frac) = best?;
        let obs = &self.obstacles[k];
        let at = |s: f64| match rk4_step(cur, s, self.field, self.domain) {
            StepOutcome::Inside(st) => Some(st),
            StepOutcome::Exited { .. } => None,
        };
        let sdf = |s: f64| {
            at(s)
                .map(|st| obs.signed_distance(&st.pos))
                .unwrap_or(f64::INFINITY)
        };
        let mut hi = if sdf(frac * h) <= self.surface_tol {
            Some(frac * h)
        } else {
            (1..=32)
                .map(|m| h * m as f64 / 32.0)
                .find(|&s| sdf(s) <= self.surface_tol)
        };
        let Some(mut hi_s) = hi.take() else {
            // tangential graze between samples: take the chord contact
            return at(frac * h).map(|st| (k, st));
        };
        let mut lo_s = 0.0;
        for _ in 0..100 {
            if hi_s - lo_s <= 1e-15 * h {
                break;
            }
            let mid = 0.5 * (lo_s + hi_s);
            let d = sdf(mid);
            if d.abs() <= self.surface_tol {
                hi_s = mid;
                break;
            }
            if d > 0.0 {
                lo_s = mid;
            } else {
                hi_s = mid;
            }
        }
        at(hi_s).map(|st| (k, st))
    }

    /// Follows one emitted ray through at most one reflection. `source` is
    /// the emitting transducer, which cannot receive its own ray before a
    /// reflection.
    pub fn run(&self, start: RayState, source: usize, receivers: &Receivers) -> RayOutcome {
        let mut prev = start;
        let mut cur = start;
        let mut reflection: Option<Reflection> = None;
        let mut skip: Option<usize> = None;
        loop {
            if cur.t > self.max_time {
                return RayOutcome::Excluded { t: cur.t };
            }
            let (next, exited) = match rk4_step(&cur, self.h, self.field, self.domain) {
                StepOutcome::Inside(n) => (n, false),
                StepOutcome::Exited { .. } => (
                    step_to_boundary(&cur, self.h, self.field, self.domain),
                    true,
                ),
            };
            let step = next.t - cur.t;
            if let Some((k, at)) = self.contact(&cur, &next.pos, step, skip) {
                let obs = &self.obstacles[k];
                let (normal, surface) = obs.surface_at(&at.pos);
                if surface == SurfaceKind::Absorbing {
                    return RayOutcome::Lost {
                        absorbed_at: at.pos,
                        t: at.t,
                    };
                }
                if reflection.is_some() {
                    return RayOutcome::Excluded { t: at.t };
                }
                if let Some(hit) =
                    receivers.capture(&receivers.interior, &[(&cur, &at)], source, false, false)
                {
                    return hit.into_outcome(reflection);
                }
                reflection = Some(Reflection {
                    point: at.pos,
                    normal,
                    time: at.t,
                    obstacle: k,
                });
                let d = specular_reflect(&at.direction(), &normal);
                let (phi, theta) = angles_of(&d);
                cur = RayState {
                    pos: at.pos,
                    phi,
                    theta,
                    t: at.t,
                };
                prev = cur;
                skip = Some(k);
                continue;
            }
            skip = None;
            let reflected = reflection.is_some();
            if let Some(hit) = receivers.capture(
                &receivers.interior,
                &[(&cur, &next)],
                source,
                reflected,
                exited,
            ) {
                return hit.into_outcome(reflection);
            }
            if exited {
                if let Some(hit) = receivers.capture(
                    &receivers.boundary,
                    &[(&prev, &cur), (&cur, &next)],
                    source,
                    reflected,
                    true,
                ) {
                    return hit.into_outcome(reflection);
                }
                return RayOutcome::ExitedUnreceived {
                    exit: next.pos,
                    t: next.t,
                    reflection,
                };
            }
            prev = cur;
            cur = next;
        }
    }
}

/// Receivers split by where a ray can reach them: boundary receivers are only
/// checked when the ray leaves the domain, interior ones along every step.
#[derive(Debug, Clone, Default)]
pub struct Receivers {
    pub boundary: Vec<(usize, Vec3)>,
    pub interior: Vec<(usize, Vec3)>,
    pub capture_radius: f64,
}

#[derive(Debug, Clone, Copy)]
struct Capture {
    receiver: usize,
    point: Vec3,
    distance: f64,
    t: f64,
}

impl Capture {
    fn into_outcome(self, reflection: Option<Reflection>) -> RayOutcome {
        RayOutcome::Received {
            receiver: self.receiver,
            arrival: self.point,
            t: self.t,
            reflection,
        }
    }
}

impl Receivers {
    pub fn of_scene(scene: &Scene) -> Self {
        let mut out = Receivers {
            capture_radius: scene.capture_radius,
            ..Default::default()
        };
        for (k, t) in scene
            .transducers
            .iter()
            .enumerate()
            .filter(|(_, t)| t.role.receives())
        {
            if scene.domain.distance_to_boundary(&t.position) <= scene.capture_radius {
                out.boundary.push((k, t.position));
            } else {
                out.interior.push((k, t.position));
            }
        }
        out
    }

    /// Closest approach of the given segments to any listed receiver within
    /// the capture radius; the nearest receiver wins. Unless `last` is set, an
    /// approach at the far end of a segment is left for the next step.
    fn capture(
        &self,
        list: &[(usize, Vec3)],
        segments: &[(&RayState, &RayState)],
        source: usize,
        reflected: bool,
        last: bool,
    ) -> Option<Capture> {
        let mut best: Option<Capture> = None;
        for &(idx, q) in list {
            if idx == source && !reflected {
                continue;
            }
            for (a, b) in segments {
                let d = b.pos - a.pos;
                let len2 = d.norm_squared();
                let u = if len2 > 0.0 {
                    ((q - a.pos).dot(&d) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                if u >= 1.0 && !last {
                    continue;
                }
                let point = a.pos + d * u;
                let distance = (point - q).norm();
                if distance <= self.capture_radius && best.is_none_or(|c| distance < c.distance) {
                    best = Some(Capture {
                        receiver: idx,
                        point,
                        distance,
                        t: a.t + u * (b.t - a.t),
                    });
                }
            }
        }
        best
    }
}

/// Emission angles used by a transmitter.
pub fn transmitter_grid<'a>(scene: &'a Scene, tr: &'a Transducer) -> &'a AngleGrid {
    tr.grid.as_ref().unwrap_or(&scene.emission)
}

/// Simulates every transmitter over its emission grid for one interval.
///
/// Frequency labels are assigned in emission order (transmitters in scene
/// order, then grid order), so they are unique within the interval.
pub fn simulate_interval(scene: &Scene, interval: usize) -> IntervalData {
    let tracer = Tracer::new(scene, interval);
    let receivers = Receivers::of_scene(scene);
    let mut jobs = Vec::new();
    for (k, tr) in scene.transducers.iter().enumerate() {
        if tr.role.transmits() {
            for (phi, theta) in transmitter_grid(scene, tr).angles() {
                jobs.push((k, phi, theta));
            }
        }
    }
    let events: Vec<RayEvent> = jobs
        .par_iter()
        .enumerate()
        .map(|(n, &(k, phi, theta))| {
            let start = RayState::new(scene.transducers[k].position, phi, theta);
            RayEvent {
                transmitter: k,
                phi: start.phi,
                theta: start.theta,
                xi: n as u32,
                outcome: tracer.run(start, k, &receivers),
            }
        })
        .collect();

    let mut out = IntervalData::default();
    for ev in &events {
        let l = scene.transducers[ev.transmitter].position;
        match ev.outcome {
            RayOutcome::Received {
                receiver,
                arrival,
                t,
                reflection,
            } => {
                out.data_points.push(DataPoint::new(
                    l,
                    scene.transducers[receiver].position,
                    ev.phi,
                    ev.theta,
                    t,
                    ev.xi,
                ));
                out.ground_truth.push(GroundTruth {
                    xi: ev.xi,
                    reflection,
                    arrival,
                });
            }
            RayOutcome::Lost { .. } => out.lost.push(LostRay {
                transmitter: l,
                phi: ev.phi,
                theta: ev.theta,
                xi: ev.xi,
            }),
            RayOutcome::ExitedUnreceived { .. } | RayOutcome::Excluded { .. } => {}
        }
    }
    out.events = events;
    out
}

/// Data point of a ray reflected at `p`. The transmitter is where the ray
/// traced from `p` along `d_in` meets the boundary, the receiver where the
/// ray along `d_out` does. Also returns the time at which the transmitter
/// ray reaches `p`. `None` if either leg stays inside the domain.
pub fn broken_ray_through(
    p: &Vec3,
    d_in: &Vec3,
    d_out: &Vec3,
    field: &SpeedField,
    domain: &Domain,
    h: f64,
) -> Option<(DataPoint, f64)> {
    let leg = |d: &Vec3| {
        let (phi, theta) = angles_of(d);
        let budget = 1e3 * domain.diameter() / field.bounds(domain).0;
        let path = trace(&RayState::new(*p, phi, theta), budget, h, field, domain);
        matches!(path.exit, PathExit::ExitedAtBoundary { .. }).then(|| *path.last())
    };
    let a = leg(d_in)?;
    let b = leg(d_out)?;
    let l = reverse(&a);
    Some((
        DataPoint::new(a.pos, b.pos, l.phi, l.theta, a.t + b.t, 0),
        a.t,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{load_scene, Obstacle, Placement, Role, SamplingSchedule, Shape};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn point_reflector(surface: SurfaceKind, theta_list: Vec<(f64, f64)>) -> Scene {
        let obstacle = Obstacle {
            shape: Shape::Sphere {
                center: Vec3::zeros(),
                radius: 0.05,
            },
            surface,
            trajectory: vec![Placement::translation(Vec3::new(
                FRAC_1_SQRT_2,
                FRAC_1_SQRT_2,
                0.0,
            ))],
        };
        let tr = Transducer {
            id: "o".into(),
            position: Vec3::zeros(),
            role: Role::Both,
            grid: Some(AngleGrid::Explicit(theta_list)),
        };
        let mut scene = Scene {
            interior_transducers: true,
            ..Scene::new(
                Domain::ball(Vec3::zeros(), 2.0).unwrap(),
                SpeedField::Constant(1.0),
                vec![],
                vec![],
                SamplingSchedule::new(1, 1.0).unwrap(),
            )
            .unwrap()
        };
        scene.obstacles.push(obstacle);
        scene.transducers.push(tr);
        scene.validate().unwrap();
        scene
    }

    #[test]
    fn reflect_examples() {
        assert_abs_diff_eq!(
            specular_reflect(&Vec3::x(), &-Vec3::x()),
            -Vec3::x(),
            epsilon = 1e-15
        );
        let n = Vec3::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0);
        assert_abs_diff_eq!(specular_reflect(&Vec3::x(), &n), Vec3::y(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            specular_reflect(&Vec3::x(), &Vec3::y()),
            Vec3::x(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn grids() {
        let u = AngleGrid::Uniform { n: 4 }.angles();
        assert_eq!(u.len(), 16);
        assert_eq!(u[5], (FRAC_PI_4, FRAC_PI_2));
        let p = AngleGrid::Planar { n: 8 }.angles();
        assert_eq!(p[1], (FRAC_PI_2, FRAC_PI_4));
        let r = AngleGrid::Random { count: 50, seed: 9 };
        assert_eq!(r.angles(), r.angles());
        assert!(r
            .angles()
            .iter()
            .all(|&(a, b)| (0.0..=PI).contains(&a) && (0.0..TAU).contains(&b)));
        assert_ne!(
            r.angles(),
            AngleGrid::Random {
                count: 50,
                seed: 10
            }
            .angles()
        );
        for g in [
            AngleGrid::Uniform { n: 3 },
            AngleGrid::Explicit(vec![(1.0, 2.0)]),
            r,
        ] {
            assert_eq!(AngleGrid::from_config(g.to_config()).unwrap(), g);
        }
        assert!(AngleGrid::from_config(GridConfig::Explicit {
            angles: vec![[4.0, 0.0]]
        })
        .is_err());
        assert!(AngleGrid::from_config(GridConfig::Planar { n: 0 }).is_err());
    }

    #[test]
    fn point_reflector_on_diagonal() {
        let scene = point_reflector(
            SurfaceKind::Reflecting,
            vec![(FRAC_PI_2, FRAC_PI_4), (FRAC_PI_2, 0.0)],
        );
        let out = simulate_interval(&scene, 0);
        assert_eq!(out.data_points.len(), 1);
        let dp = out.data_points[0];
        assert_abs_diff_eq!(dp.t, 1.9, epsilon = 1e-9);
        assert_eq!((dp.phi, dp.theta), (FRAC_PI_2, FRAC_PI_4));
        let gt = out.ground_truth[0].reflection.unwrap();
        assert_abs_diff_eq!(
            gt.point,
            Vec3::new(0.95 * FRAC_1_SQRT_2, 0.95 * FRAC_1_SQRT_2, 0.0),
            epsilon = 1e-9
        );
        assert!(matches!(
            out.events[1].outcome,
            RayOutcome::ExitedUnreceived {
                reflection: None,
                ..
            }
        ));
        assert!(out.lost.is_empty());
    }

    #[test]
    fn absorbing_reflector_loses_the_ray() {
        let scene = point_reflector(SurfaceKind::Absorbing, vec![(FRAC_PI_2, FRAC_PI_4)]);
        let out = simulate_interval(&scene, 0);
        assert!(out.data_points.is_empty());
        assert_eq!(out.lost.len(), 1);
        assert_eq!(out.lost[0].theta, FRAC_PI_4);
    }

    const RING: &str = r#"
[domain]
kind = "ball"
center = [0.0, 0.0, 0.0]
radius = 1.0

[speed]
kind = "affine"
alpha = 0.2
beta = -0.1
gamma = 0.0
delta = 1.0

[schedule]
intervals = 2
tau = 1.0

[emission]
kind = "planar"
n = 720

[options]
capture_radius = 0.01
sim_steps = 400

[[obstacle]]
surface = "reflecting"
geometry = { kind = "sphere", center = [0.0, 0.0, 0.0], radius = 0.2 }
trajectory = [{ translation = [0.1, 0.0, 0.0] }, { translation = [-0.1, 0.2, 0.0] }]
"#;

    fn ring_scene(affine: bool) -> Scene {
        let mut text = RING.to_string();
        if !affine {
            text = text.replace("alpha = 0.2\nbeta = -0.1", "alpha = 0.0\nbeta = 0.0");
        }
        for k in 0..12 {
            let a = TAU * k as f64 / 12.0;
            text.push_str(&format!(
                "\n[[transducer]]\nid = \"t{k}\"\npos = [{}, {}, 0.0]\nrole = \"both\"\n",
                a.cos(),
                a.sin()
            ));
        }
        load_scene(&text).unwrap()
    }

    #[test]
    fn simulated_data_is_consistent() {
        let scene = ring_scene(false);
        let tracer = Tracer::new(&scene, 0);
        let out = simulate_interval(&scene, 0);
        assert!(!out.data_points.is_empty());
        let mut broken = 0;
        for (dp, gt) in out.data_points.iter().zip(&out.ground_truth) {
            assert!(scene.domain.distance_to_boundary(&dp.transmitter) <= scene.boundary_tolerance);
            assert!(scene.domain.distance_to_boundary(&dp.receiver) <= scene.boundary_tolerance);
            // travel time equals the straight legs in a constant field
            let expect = match gt.reflection {
                Some(r) => {
                    broken += 1;
                    let incoming = (r.point - dp.transmitter).normalize();
                    let n = r.normal;
                    let outgoing = (gt.arrival - r.point).normalize();
                    assert_abs_diff_eq!(
                        incoming.dot(&n).abs(),
                        outgoing.dot(&n).abs(),
                        epsilon = 1e-9
                    );
                    assert!(tracer.obstacles[r.obstacle].signed_distance(&r.point).abs() < 1e-9);
                    (r.point - dp.transmitter).norm() + (gt.arrival - r.point).norm()
                }
                None => (gt.arrival - dp.transmitter).norm(),
            };
            assert!(
                (dp.t - expect).abs() <= 1e-9 * expect,
                "{} vs {}",
                dp.t,
                expect
            );
        }
        assert!(broken > 0);
        // the obstacle moves between intervals
        let next = simulate_interval(&scene, 1);
        assert_ne!(out.data_points, next.data_points);
    }

    #[test]
    fn curved_legs_add_up() {
        let scene = ring_scene(true);
        let out = simulate_interval(&scene, 0);
        for (dp, gt) in out.data_points.iter().zip(&out.ground_truth) {
            if let Some(r) = gt.reflection {
                // the transmitter leg alone reaches the reflection point
                let h = scene.domain.diameter() / 4000.0;
                let leg = crate::raytrace::trace(
                    &dp.transmitter_state(),
                    r.time,
                    h,
                    &scene.speed,
                    &scene.domain,
                );
                assert!((leg.last().pos - r.point).norm() < 1e-6);
                assert!(r.time < dp.t);
            }
        }
    }

    #[test]
    fn deterministic_across_threads() {
        let scene = ring_scene(true);
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| simulate_interval(&scene, 0))
        };
        assert_eq!(run(1), run(3));
    }

    proptest! {
        #[test]
        fn reflection_preserves_angle(
            d in prop::array::uniform3(-1.0f64..1.0),
            n in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let d = Vec3::from(d);
            let n = Vec3::from(n);
            prop_assume!(d.norm() > 1e-3 && n.norm() > 1e-3);
            let (d, n) = (d.normalize(), n.normalize());
            let r = specular_reflect(&d, &n);
            prop_assert!((r.norm() - 1.0).abs() < 1e-12);
            prop_assert!((d.dot(&n) + r.dot(&n)).abs() < 1e-12);
        }
    }
}
