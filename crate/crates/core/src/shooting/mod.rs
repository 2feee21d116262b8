//! Reconstruction of reflection points in a variable speed field.
//!
//! A broken ray is known only by its transmitter, receiver, take-off angles
//! and total travel time `t`. Its reflection point `P` is searched along the
//! transmitter ray: for a candidate `P_i` reached at time `tau_i = i h`, rays
//! leaving the receiver over a grid of angles are traced backwards in time,
//! and the first one that comes within `eps1` of `P_i` after `t - tau_i`
//! (within `eps2`) confirms the candidate.
//!
//! [`reconstruct_point`] runs the nested search directly. Its cost is
//! quadratic in the number of time steps. [`reconstruct_point_indexed`]
//! traces each receiver ray once into a spatial hash and walks the
//! transmitter ray once; it returns exactly the same candidate.

mod brute;
mod indexed;

pub use brute::reconstruct_point;
pub use indexed::reconstruct_point_indexed;

use rayon::prelude::*;

use crate::error::SceneError;
use crate::geometry::Vec3;
use crate::raytrace::{trace, PathExit, RayState};
use crate::scene::{Domain, SpeedField};

/// One measured ray: `B = (x_l, y_l, z_l, x_r, y_r, z_r, phi, theta, t, xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    pub transmitter: Vec3,
    pub receiver: Vec3,
    /// Take-off angles at the transmitter, in world axes.
    pub phi: f64,
    pub theta: f64,
    /// Total travel time.
    pub t: f64,
    /// Frequency label binding the transmit and receive events.
    pub xi: u32,
}

impl DataPoint {
    pub fn new(transmitter: Vec3, receiver: Vec3, phi: f64, theta: f64, t: f64, xi: u32) -> Self {
        DataPoint {
            transmitter,
            receiver,
            phi,
            theta,
            t,
            xi,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(SceneError::InvalidArgument(format!(
                "travel time must be positive, got {}",
                self.t
            )));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.phi)
            || !(0.0..std::f64::consts::TAU).contains(&self.theta)
        {
            return Err(SceneError::InvalidArgument(format!(
                "angles out of range: phi {}, theta {}",
                self.phi, self.theta
            )));
        }
        Ok(())
    }

    /// Start of the transmitter ray.
    pub fn transmitter_state(&self) -> RayState {
        RayState::new(self.transmitter, self.phi, self.theta)
    }
}

/// What the inner loop sweeps at each candidate reflection time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    /// Rays leave the receiver over the angle grid and must meet the
    /// candidate point.
    #[default]
    ReceiverSweep,
    /// Rays leave the candidate point over the angle grid and must reach the
    /// receiver. Only available with [`Method::Brute`].
    ReflectionSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Brute,
    #[default]
    Indexed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionParams {
    /// Number of time steps over the travel time.
    pub n_r: usize,
    /// Angle grid resolution `(A_phi, A_theta)`.
    pub grid: (usize, usize),
    pub eps1: f64,
    /// Time tolerance; `None` means two time steps.
    pub eps2: Option<f64>,
    pub strategy: SearchStrategy,
    pub method: Method,
}

impl ReconstructionParams {
    /// Defaults scaled to the domain: 200 steps, a 180 x 360 grid and
    /// `eps1` of one percent of the diameter.
    pub fn for_domain(domain: &Domain) -> Self {
        ReconstructionParams {
            n_r: 200,
            grid: (180, 360),
            eps1: 0.01 * domain.diameter(),
            eps2: None,
            strategy: SearchStrategy::ReceiverSweep,
            method: Method::Indexed,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.n_r < 2 {
            return Err(SceneError::InvalidArgument("N_r must be at least 2".into()));
        }
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(SceneError::InvalidArgument(
                "angle grid must be non-empty".into(),
            ));
        }
        if !(self.eps1 > 0.0) {
            return Err(SceneError::InvalidArgument("eps1 must be positive".into()));
        }
        if let Some(e) = self.eps2 {
            if !(e > 0.0) {
                return Err(SceneError::InvalidArgument("eps2 must be positive".into()));
            }
        }
        if self.method == Method::Indexed && self.strategy == SearchStrategy::ReflectionSweep {
            return Err(SceneError::InvalidArgument(
                "the reflection sweep is only available with the brute-force method".into(),
            ));
        }
        Ok(())
    }

    /// Time step for a travel time `t`.
    pub fn step(&self, t: f64) -> f64 {
        t / self.n_r as f64
    }

    pub fn eps2_for(&self, t: f64) -> f64 {
        self.eps2.unwrap_or(2.0 * self.step(t))
    }

    /// Search angles in scan order: ascending `phi`, then ascending `theta`.
    /// Zenith angles sit at half steps so the poles are never used.
    pub fn search_angles(&self) -> Vec<(f64, f64)> {
        let (np, nt) = self.grid;
        (0..np)
            .flat_map(|a| {
                let phi = (a as f64 + 0.5) * std::f64::consts::PI / np as f64;
                (0..nt).map(move |b| (phi, std::f64::consts::TAU * b as f64 / nt as f64))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Found,
    FilteredUnbroken,
    NoSolution,
    /// The transmitter ray left the domain early and no reflection point
    /// explains the measurement.
    MeasurementError,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Found => "found",
            Status::FilteredUnbroken => "filtered-unbroken",
            Status::NoSolution => "no-solution",
            Status::MeasurementError => "measurement-error",
        }
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "found" => Status::Found,
            "filtered-unbroken" => Status::FilteredUnbroken,
            "no-solution" => Status::NoSolution,
            "measurement-error" => Status::MeasurementError,
            _ => return Err(format!("unknown status {s:?}")),
        })
    }
}

/// A traced stretch of ray: start state and duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub start: Vec3,
    pub phi: f64,
    pub theta: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedPoint {
    pub position: Option<Vec3>,
    pub source: DataPoint,
    pub interval: usize,
    pub status: Status,
    /// Position gap and time gap of the accepted match.
    pub residuals: Option<(f64, f64)>,
    /// Time at which the transmitter ray reaches the reflection point.
    pub reflection_time: Option<f64>,
    /// The ray that closed the match. For the receiver sweep it starts at
    /// the receiver with the winning receiver-side angles.
    pub return_leg: Option<Leg>,
}

impl ReconstructedPoint {
    pub(crate) fn without_position(source: DataPoint, status: Status) -> Self {
        ReconstructedPoint {
            position: None,
            source,
            interval: 0,
            status,
            residuals: None,
            reflection_time: None,
            return_leg: None,
        }
    }
}

/// A candidate accepted by the search, before being wrapped up.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Match {
    pub i: usize,
    pub angle: usize,
    pub j: usize,
    pub position: Vec3,
    pub gap: f64,
    pub time_gap: f64,
}

pub(crate) fn finish(
    dp: &DataPoint,
    params: &ReconstructionParams,
    m: Option<Match>,
) -> ReconstructedPoint {
    let Some(m) = m else {
        return ReconstructedPoint::without_position(*dp, Status::NoSolution);
    };
    let h = params.step(dp.t);
    let (phi, theta) = params.search_angles()[m.angle];
    let start = match params.strategy {
        SearchStrategy::ReceiverSweep => dp.receiver,
        SearchStrategy::ReflectionSweep => m.position,
    };
    ReconstructedPoint {
        position: Some(m.position),
        source: *dp,
        interval: 0,
        status: Status::Found,
        residuals: Some((m.gap, m.time_gap)),
        reflection_time: Some(m.i as f64 * h),
        return_leg: Some(Leg {
            start,
            phi,
            theta,
            duration: m.j as f64 * h,
        }),
    }
}

/// Outcome of tracing the transmitter ray for the full travel time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Broken,
    Unbroken,
    MeasurementError,
}

/// Traces the transmitter ray for the whole travel time and checks whether
/// it arrives at the receiver.
pub fn filter_unbroken(
    dp: &DataPoint,
    field: &SpeedField,
    domain: &Domain,
    params: &ReconstructionParams,
) -> Classification {
    let path = trace(
        &dp.transmitter_state(),
        dp.t,
        params.step(dp.t),
        field,
        domain,
    );
    let end = path.last().pos;
    let at_receiver = (end - dp.receiver).norm() < params.eps1;
    match path.exit {
        _ if at_receiver => Classification::Unbroken,
        PathExit::ExitedAtBoundary { .. } => Classification::MeasurementError,
        _ => Classification::Broken,
    }
}

/// Filters and reconstructs one data point.
pub fn reconstruct(
    dp: &DataPoint,
    field: &SpeedField,
    domain: &Domain,
    params: &ReconstructionParams,
) -> ReconstructedPoint {
    if dp.validate().is_err() {
        return ReconstructedPoint::without_position(*dp, Status::MeasurementError);
    }
    let class = filter_unbroken(dp, field, domain, params);
    if class == Classification::Unbroken {
        return ReconstructedPoint::without_position(*dp, Status::FilteredUnbroken);
    }
    let mut out = match params.method {
        Method::Brute => reconstruct_point(dp, field, domain, params),
        Method::Indexed => reconstruct_point_indexed(dp, field, domain, params),
    };
    // a straight-through ray that leaves the domain is only an error if no
    // reflection explains it
    if class == Classification::MeasurementError && out.status == Status::NoSolution {
        out.status = Status::MeasurementError;
    }
    out
}

/// Reconstructs a batch in parallel; output order follows input order.
pub fn reconstruct_interval(
    points: &[DataPoint],
    field: &SpeedField,
    domain: &Domain,
    params: &ReconstructionParams,
) -> Vec<ReconstructedPoint> {
    points
        .par_iter()
        .map(|dp| reconstruct(dp, field, domain, params))
        .collect()
}

/// Reconstructs each sampling interval and tags the results with its index.
pub fn reconstruct_trajectory(
    batches: &[Vec<DataPoint>],
    field: &SpeedField,
    domain: &Domain,
    params: &ReconstructionParams,
) -> Vec<Vec<ReconstructedPoint>> {
    batches
        .iter()
        .enumerate()
        .map(|(k, batch)| {
            let mut out = reconstruct_interval(batch, field, domain, params);
            for r in &mut out {
                r.interval = k;
            }
            out
        })
        .collect()
}
