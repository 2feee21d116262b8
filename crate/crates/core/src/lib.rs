//! Reconstruction of moving obstacles from broken-ray ultrasound data.
//!
//! A transmitter on the boundary of the observed region sends a ray with
//! known take-off angles; a receiver records its arrival. A ray reflected
//! once by an obstacle (a broken ray) constrains the reflection point to a
//! curve fixed by the travel time. In a constant speed field that curve is
//! an ellipsoid ([`ellipsoid`]); in a variable field the point is found by
//! shooting rays from both ends ([`shooting`]). Rays that never arrive mark
//! absorbing obstacles ([`absorb`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod absorb;
pub mod analyzer;
pub mod ellipsoid;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod raytrace;
pub mod scenarios;
pub mod scene;
pub mod shooting;

pub use absorb::{
    paint_lost_and_unbroken, paint_two_phase, Label, PaintRay, RayKind, VoxelGrid, VoxelImage,
};
pub use analyzer::{Analyzer, Event, Matched, Palette, ReceiveEvent, TransmitEvent, Window};
pub use ellipsoid::{solve_travel_time, EllipsoidFrame};
pub use error::{AnalyzerError, EllipsoidError, IoError, SceneError};
pub use forward::{
    simulate_interval, AngleGrid, GroundTruth, IntervalData, LostRay, RayEvent, RayOutcome,
};
pub use geometry::Vec3;
pub use raytrace::{trace, RayPath, RayState};
pub use scene::{
    load_scene, save_scene, Domain, Obstacle, Placement, Role, SamplingSchedule, Scene, Shape,
    SpeedField, SurfaceKind, Transducer,
};
pub use shooting::{
    reconstruct, reconstruct_interval, reconstruct_trajectory, DataPoint, Method,
    ReconstructedPoint, ReconstructionParams, SearchStrategy, Status,
};
