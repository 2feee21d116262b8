//! Domain, speed field, obstacles, transducers and the sampling schedule.
//!
//! A [`Scene`] is immutable once loaded and validated, so it can be shared
//! read-only between worker threads.

mod config;
mod domain;
mod obstacle;
mod speed;

pub use config::*;
pub use domain::Domain;
pub use obstacle::{
    intersect_obstacle, ConvexPolyhedron, Face, Hit, Obstacle, PlacedObstacle, Placement, Shape,
    SurfaceKind,
};
pub use speed::{grad_speed_at, speed_at, SpeedField, SpeedGrid};

use nalgebra::Rotation3;

use crate::error::SceneError;
use crate::forward::AngleGrid;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Transmitter,
    Receiver,
    Both,
}

impl Role {
    pub fn transmits(self) -> bool {
        matches!(self, Role::Transmitter | Role::Both)
    }

    pub fn receives(self) -> bool {
        matches!(self, Role::Receiver | Role::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transducer {
    pub id: String,
    pub position: Vec3,
    pub role: Role,
    /// Emission grid override for this transmitter.
    pub grid: Option<AngleGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSchedule {
    pub interval_count: usize,
    pub interval_duration: f64,
}

impl SamplingSchedule {
    pub fn new(interval_count: usize, interval_duration: f64) -> Result<Self, SceneError> {
        if interval_count < 1 {
            return Err(SceneError::Validation(
                "schedule needs at least one interval".into(),
            ));
        }
        if !(interval_duration > 0.0) {
            return Err(SceneError::Validation(
                "interval duration tau must be positive".into(),
            ));
        }
        Ok(SamplingSchedule {
            interval_count,
            interval_duration,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub domain: Domain,
    pub speed: SpeedField,
    pub obstacles: Vec<Obstacle>,
    pub transducers: Vec<Transducer>,
    pub schedule: SamplingSchedule,
    /// Default emission grid for transmitters without their own.
    pub emission: AngleGrid,
    pub boundary_tolerance: f64,
    pub capture_radius: f64,
    /// Steps per domain crossing used by the forward simulator.
    pub sim_steps: usize,
    pub interior_transducers: bool,
}

impl Scene {
    /// Assembles a scene with default options and validates it.
    pub fn new(
        domain: Domain,
        speed: SpeedField,
        obstacles: Vec<Obstacle>,
        transducers: Vec<Transducer>,
        schedule: SamplingSchedule,
    ) -> Result<Self, SceneError> {
        let diameter = domain.diameter();
        let mut scene = Scene {
            domain,
            speed,
            obstacles,
            transducers,
            schedule,
            emission: AngleGrid::Uniform { n: 64 },
            boundary_tolerance: 1e-9 * diameter,
            capture_radius: 0.01 * diameter,
            sim_steps: 1000,
            interior_transducers: false,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&mut self) -> Result<(), SceneError> {
        self.speed.validate(&self.domain)?;
        if !(self.capture_radius > 0.0) {
            return Err(SceneError::Validation(
                "capture radius must be positive".into(),
            ));
        }
        if self.sim_steps < 2 {
            return Err(SceneError::Validation(
                "sim_steps must be at least 2".into(),
            ));
        }
        for (k, obs) in self.obstacles.iter().enumerate() {
            let n = obs.trajectory.len();
            if n != 1 && n != self.schedule.interval_count {
                return Err(SceneError::Validation(format!(
                    "obstacle {k} trajectory has {n} placements, expected 1 or {}",
                    self.schedule.interval_count
                )));
            }
            for i in 0..self.schedule.interval_count {
                if !obs.placed(i).strictly_inside(&self.domain) {
                    return Err(SceneError::Validation(format!(
                        "obstacle outside domain: obstacle {k} in interval {i}"
                    )));
                }
            }
        }
        let mut ids = std::collections::HashSet::new();
        for t in &self.transducers {
            if !ids.insert(t.id.as_str()) {
                return Err(SceneError::Validation(format!(
                    "duplicate transducer id {:?}",
                    t.id
                )));
            }
            if !self.domain.contains(&t.position)
                && self.domain.distance_to_boundary(&t.position) > self.boundary_tolerance
            {
                return Err(SceneError::Validation(format!(
                    "transducer {:?} lies outside the domain",
                    t.id
                )));
            }
            if !self.interior_transducers
                && self.domain.distance_to_boundary(&t.position) > self.boundary_tolerance
            {
                return Err(SceneError::Validation(format!(
                    "transducer {:?} is not on the observation boundary",
                    t.id
                )));
            }
        }
        Ok(())
    }

    pub fn transmitters(&self) -> impl Iterator<Item = &Transducer> {
        self.transducers.iter().filter(|t| t.role.transmits())
    }

    pub fn receivers(&self) -> impl Iterator<Item = &Transducer> {
        self.transducers.iter().filter(|t| t.role.receives())
    }

    pub fn placed_obstacles(&self, interval: usize) -> Vec<PlacedObstacle> {
        self.obstacles.iter().map(|o| o.placed(interval)).collect()
    }

    pub fn to_config(&self) -> SceneConfig {
        let arr = |v: &Vec3| [v.x, v.y, v.z];
        let surface = |s: SurfaceKind| match s {
            SurfaceKind::Reflecting => SurfaceConfig::Reflecting,
            SurfaceKind::Absorbing => SurfaceConfig::Absorbing,
        };
        let domain = match &self.domain {
            Domain::Ball { center, radius } => DomainConfig::Ball {
                center: arr(center),
                radius: *radius,
            },
            Domain::Box { min, max } => DomainConfig::Box {
                min: arr(min),
                max: arr(max),
            },
        };
        let speed = match &self.speed {
            SpeedField::Constant(c) => SpeedConfig::Constant { value: *c },
            SpeedField::Affine { gradient, offset } => SpeedConfig::Affine {
                alpha: gradient.x,
                beta: gradient.y,
                gamma: gradient.z,
                delta: *offset,
            },
            SpeedField::Grid(g) => SpeedConfig::Grid {
                origin: arr(&g.origin),
                spacing: arr(&g.spacing),
                dims: g.dims,
                values: g.values.clone(),
            },
        };
        let obstacle = self
            .obstacles
            .iter()
            .map(|o| ObstacleConfig {
                geometry: match &o.shape {
                    Shape::Sphere { center, radius } => GeometryConfig::Sphere {
                        center: arr(center),
                        radius: *radius,
                    },
                    Shape::Polyhedron(p) => GeometryConfig::Polyhedron {
                        vertices: p.vertices.iter().map(arr).collect(),
                        faces: p
                            .faces
                            .iter()
                            .filter(|f| f.surface != o.surface)
                            .map(|f| FaceSurfaceConfig {
                                normal: arr(&f.normal),
                                surface: surface(f.surface),
                            })
                            .collect(),
                    },
                },
                surface: surface(o.surface),
                trajectory: o
                    .trajectory
                    .iter()
                    .map(|p| {
                        let r = p.rotation.scaled_axis();
                        PlacementConfig {
                            translation: arr(&p.translation),
                            rotation: (r.norm() > 0.0).then(|| arr(&r)),
                        }
                    })
                    .collect(),
            })
            .collect();
        let transducer = self
            .transducers
            .iter()
            .map(|t| TransducerConfig {
                id: t.id.clone(),
                pos: arr(&t.position),
                role: match t.role {
                    Role::Transmitter => RoleConfig::Transmitter,
                    Role::Receiver => RoleConfig::Receiver,
                    Role::Both => RoleConfig::Both,
                },
                grid: t.grid.as_ref().map(AngleGrid::to_config),
            })
            .collect();
        SceneConfig {
            domain,
            speed,
            schedule: ScheduleConfig {
                intervals: self.schedule.interval_count,
                tau: self.schedule.interval_duration,
            },
            emission: Some(self.emission.to_config()),
            options: Some(OptionsConfig {
                boundary_tolerance: Some(self.boundary_tolerance),
                interior_transducers: self.interior_transducers,
                capture_radius: Some(self.capture_radius),
                sim_steps: Some(self.sim_steps),
            }),
            transducer,
            obstacle,
        }
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn surface_kind(s: SurfaceConfig) -> SurfaceKind {
    match s {
        SurfaceConfig::Reflecting => SurfaceKind::Reflecting,
        SurfaceConfig::Absorbing => SurfaceKind::Absorbing,
    }
}

fn obstacle_from_config(cfg: ObstacleConfig) -> Result<Obstacle, SceneError> {
    let surface = surface_kind(cfg.surface);
    let shape = match cfg.geometry {
        GeometryConfig::Sphere { center, radius } => {
            if !(radius > 0.0) {
                return Err(SceneError::Validation(
                    "sphere radius must be positive".into(),
                ));
            }
            Shape::Sphere {
                center: vec3(center),
                radius,
            }
        }
        GeometryConfig::Polyhedron { vertices, faces } => {
            let mut poly =
                ConvexPolyhedron::from_vertices(vertices.into_iter().map(vec3).collect(), surface)?;
            for fc in faces {
                let n = vec3(fc.normal).normalize();
                let face = poly
                    .faces
                    .iter_mut()
                    .find(|f| f.normal.dot(&n) > 1.0 - 1e-6)
                    .ok_or_else(|| {
                        SceneError::Validation(format!(
                            "no polyhedron face with normal {:?}",
                            fc.normal
                        ))
                    })?;
                face.surface = surface_kind(fc.surface);
            }
            Shape::Polyhedron(poly)
        }
    };
    if cfg.trajectory.is_empty() {
        return Err(SceneError::Validation(
            "obstacle trajectory is empty".into(),
        ));
    }
    let trajectory = cfg
        .trajectory
        .into_iter()
        .map(|p| Placement {
            translation: vec3(p.translation),
            rotation: p
                .rotation
                .map(|r| Rotation3::new(vec3(r)))
                .unwrap_or_else(Rotation3::identity),
        })
        .collect();
    Ok(Obstacle {
        shape,
        surface,
        trajectory,
    })
}

/// Builds a validated scene from its configuration structure.
pub fn scene_from_config(cfg: SceneConfig) -> Result<Scene, SceneError> {
    let domain = match cfg.domain {
        DomainConfig::Ball { center, radius } => Domain::ball(vec3(center), radius)?,
        DomainConfig::Box { min, max } => Domain::cuboid(vec3(min), vec3(max))?,
    };
    let speed = match cfg.speed {
        SpeedConfig::Constant { value } => SpeedField::Constant(value),
        SpeedConfig::Affine {
            alpha,
            beta,
            gamma,
            delta,
        } => SpeedField::affine(alpha, beta, gamma, delta),
        SpeedConfig::Grid {
            origin,
            spacing,
            dims,
            values,
        } => SpeedField::Grid(SpeedGrid::new(vec3(origin), vec3(spacing), dims, values)?),
    };
    let schedule = SamplingSchedule::new(cfg.schedule.intervals, cfg.schedule.tau)?;
    let obstacles = cfg
        .obstacle
        .into_iter()
        .map(obstacle_from_config)
        .collect::<Result<Vec<_>, _>>()?;
    let transducers = cfg
        .transducer
        .into_iter()
        .map(|t| {
            Ok(Transducer {
                id: t.id,
                position: vec3(t.pos),
                role: match t.role {
                    RoleConfig::Transmitter => Role::Transmitter,
                    RoleConfig::Receiver => Role::Receiver,
                    RoleConfig::Both => Role::Both,
                },
                grid: t.grid.map(AngleGrid::from_config).transpose()?,
            })
        })
        .collect::<Result<Vec<_>, SceneError>>()?;
    let diameter = domain.diameter();
    let opts = cfg.options.unwrap_or_default();
    let mut scene = Scene {
        domain,
        speed,
        obstacles,
        transducers,
        schedule,
        emission: match cfg.emission {
            Some(g) => AngleGrid::from_config(g)?,
            None => AngleGrid::Uniform { n: 64 },
        },
        boundary_tolerance: opts.boundary_tolerance.unwrap_or(1e-9 * diameter),
        capture_radius: opts.capture_radius.unwrap_or(0.01 * diameter),
        sim_steps: opts.sim_steps.unwrap_or(1000),
        interior_transducers: opts.interior_transducers,
    };
    scene.validate()?;
    Ok(scene)
}

/// Parses and validates a scene description.
pub fn load_scene(text: &str) -> Result<Scene, SceneError> {
    let cfg: SceneConfig = toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
    scene_from_config(cfg)
}

/// Serializes a scene back to the text format accepted by [`load_scene`].
pub fn save_scene(scene: &Scene) -> String {
    toml::to_string(&scene.to_config()).expect("scene config is always serializable")
}

fn positive(name: &str, v: f64) -> Result<(), SceneError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SceneError::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Time for `n` receivers drifting at `v_f` to sweep a boundary of length `l`.
pub fn coverage_time(boundary_length: f64, n: usize, v_f: f64) -> Result<f64, SceneError> {
    positive("boundary length", boundary_length)?;
    positive("flow speed", v_f)?;
    if n == 0 {
        return Err(SceneError::InvalidArgument(
            "receiver count must be positive".into(),
        ));
    }
    Ok(boundary_length / (n as f64 * v_f))
}

/// Minimum number of moving receivers of mass `m` and kinetic energy `e_k`
/// that sweep the boundary within `t_min`.
pub fn required_receivers(
    boundary_length: f64,
    m: f64,
    e_k: f64,
    t_min: f64,
) -> Result<u64, SceneError> {
    positive("boundary length", boundary_length)?;
    positive("receiver mass", m)?;
    positive("kinetic energy", e_k)?;
    positive("t_min", t_min)?;
    let n = boundary_length * m.sqrt() / (t_min * (2.0 * e_k).sqrt());
    // exact integers should not be bumped up by round-off
    let r = n.round();
    let n = if (n - r).abs() <= 1e-9 * n.max(1.0) {
        r
    } else {
        n.ceil()
    };
    Ok(n as u64)
}
