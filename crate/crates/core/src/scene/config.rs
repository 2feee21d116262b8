//! On-disk scene schema. Field names here are the documented file format;
//! unknown keys are rejected.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub domain: DomainConfig,
    pub speed: SpeedConfig,
    pub schedule: ScheduleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transducer: Vec<TransducerConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacle: Vec<ObstacleConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainConfig {
    Ball { center: [f64; 3], radius: f64 },
    Box { min: [f64; 3], max: [f64; 3] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpeedConfig {
    Constant {
        value: f64,
    },
    Affine {
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
    },
    Grid {
        origin: [f64; 3],
        spacing: [f64; 3],
        dims: [usize; 3],
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub intervals: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridConfig {
    /// `phi = pi l / n`, `theta = 2 pi m / n` for `0 <= l, m < n`.
    Uniform {
        n: usize,
    },
    /// `phi = pi / 2`, `theta = 2 pi m / n`.
    Planar {
        n: usize,
    },
    Explicit {
        angles: Vec<[f64; 2]>,
    },
    Random {
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub interior_transducers: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleConfig {
    Transmitter,
    Receiver,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransducerConfig {
    pub id: String,
    pub pos: [f64; 3],
    pub role: RoleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceConfig {
    Reflecting,
    Absorbing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometryConfig {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Polyhedron {
        vertices: Vec<[f64; 3]>,
        /// Per-face overrides, matched to hull faces by outward normal.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        faces: Vec<FaceSurfaceConfig>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSurfaceConfig {
    pub normal: [f64; 3],
    pub surface: SurfaceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementConfig {
    pub translation: [f64; 3],
    /// Rotation vector (axis scaled by angle in radians).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub geometry: GeometryConfig,
    pub surface: SurfaceConfig,
    pub trajectory: Vec<PlacementConfig>,
}
