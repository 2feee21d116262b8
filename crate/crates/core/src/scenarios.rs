//! Built-in scenarios: the two monostatic tables, seeded round-trip scenes
//! and random broken rays for comparing search methods.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{IoError, SceneError};
use crate::forward::{broken_ray_through, simulate_interval, AngleGrid};
use crate::geometry::{direction, Vec3};
use crate::io::Format;
use crate::scene::{
    Domain, Obstacle, Placement, Role, SamplingSchedule, Scene, Shape, SpeedField, SurfaceKind,
    Transducer,
};
use crate::shooting::{
    reconstruct, DataPoint, Method, ReconstructedPoint, ReconstructionParams, SearchStrategy,
    Status,
};

/// Reflection points printed in the unit-circle table.
pub const TABLE1_PAPER: [[f64; 3]; 7] = [
    [0.98, 0.00, 0.00],
    [0.98, 0.06, 0.00],
    [0.99, 0.13, 0.00],
    [0.96, 0.18, 0.00],
    [0.97, 0.25, 0.00],
    [0.93, 0.30, 0.00],
    [0.93, 0.37, 0.00],
];

/// Travel times of the diagonal table.
pub const TABLE2_TIMES: [f64; 7] = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];

/// Diagonal coordinate printed for each travel time; `None` where the table
/// prints zeros.
pub const TABLE2_PAPER: [Option<f64>; 7] = [
    Some(1.55),
    None,
    Some(7.89),
    None,
    None,
    Some(68.37),
    Some(138.15),
];

/// One table: the field, domain and parameters it was run with, and a
/// result per row.
#[derive(Debug, Clone)]
pub struct Table {
    pub field: SpeedField,
    pub domain: Domain,
    pub params: ReconstructionParams,
    pub rows: Vec<ReconstructedPoint>,
    /// Whether the travel time is printed as a column.
    pub show_time: bool,
    pub elapsed: Duration,
}

impl Table {
    /// Paper layout (`xl..theta[,T],xp,yp,zp`) plus a status column. Rows
    /// without a solution leave the coordinates empty.
    pub fn write_csv<W: Write>(&self, out: W, f: Format) -> Result<(), IoError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["xl", "yl", "zl", "xr", "yr", "zr", "phi", "theta"];
        if self.show_time {
            header.push("T");
        }
        header.extend(["xp", "yp", "zp", "status"]);
        w.write_record(&header)?;
        for r in &self.rows {
            let s = &r.source;
            let mut row: Vec<String> = [
                s.transmitter.x,
                s.transmitter.y,
                s.transmitter.z,
                s.receiver.x,
                s.receiver.y,
                s.receiver.z,
                s.phi,
                s.theta,
            ]
            .iter()
            .map(|&v| f.num(v))
            .collect();
            if self.show_time {
                row.push(if s.t.fract() == 0.0 {
                    format!("{}", s.t)
                } else {
                    f.num(s.t)
                });
            }
            match r.position {
                Some(p) => row.extend([p.x, p.y, p.z].map(|v| f.num(v))),
                None => row.extend(std::iter::repeat_n(String::new(), 3)),
            }
            row.push(r.status.as_str().into());
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn run_table(
    field: SpeedField,
    domain: Domain,
    params: ReconstructionParams,
    points: Vec<DataPoint>,
    show_time: bool,
) -> Table {
    let start = Instant::now();
    let rows = points
        .iter()
        .map(|dp| reconstruct(dp, &field, &domain, &params))
        .collect();
    Table {
        field,
        domain,
        params,
        rows,
        show_time,
        elapsed: start.elapsed(),
    }
}

/// Transceiver at the origin, unit speed, a point reflector moving along
/// the unit circle: `theta = 2 pi m / 100` for `m = 0..7`, `t = 2`.
pub fn table1() -> Table {
    let domain = Domain::ball(Vec3::zeros(), 2.0).expect("valid ball");
    let params = ReconstructionParams {
        n_r: 200,
        grid: (1, 360),
        eps1: 0.04,
        eps2: None,
        strategy: SearchStrategy::ReceiverSweep,
        method: Method::Indexed,
    };
    let points = (0..7)
        .map(|m| {
            DataPoint::new(
                Vec3::zeros(),
                Vec3::zeros(),
                FRAC_PI_2,
                TAU * m as f64 / 100.0,
                2.0,
                0,
            )
        })
        .collect();
    run_table(SpeedField::Constant(1.0), domain, params, points, false)
}

/// Step regime for the diagonal table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// 2000 steps per travel time; converges to the closed form.
    Fine,
    /// 16 steps per travel time; reproduces the drift of the printed values.
    Coarse,
}

/// Distance along each axis reached on the diagonal after time `t` in
/// `c = x + y + 1`.
pub fn diagonal_solution(t: f64) -> f64 {
    ((SQRT_2 * t).exp() - 1.0) / 2.0
}

/// Transceiver at the origin, `c = x + y + 1`, take-off along the diagonal,
/// travel times 2 through 8.
pub fn table2(regime: Regime) -> Table {
    let domain = Domain::ball(Vec3::new(110.0, 110.0, 0.0), 156.0).expect("valid ball");
    let params = ReconstructionParams {
        n_r: match regime {
            Regime::Fine => 2000,
            Regime::Coarse => 16,
        },
        grid: (1, 360),
        eps1: 0.04,
        eps2: None,
        strategy: SearchStrategy::ReceiverSweep,
        method: Method::Indexed,
    };
    let points = TABLE2_TIMES
        .iter()
        .map(|&t| DataPoint::new(Vec3::zeros(), Vec3::zeros(), FRAC_PI_2, FRAC_PI_4, t, 0))
        .collect();
    run_table(
        SpeedField::affine(1.0, 1.0, 0.0, 1.0),
        domain,
        params,
        points,
        true,
    )
}

/// Seeded scene in the unit ball: one reflecting sphere, ten transceivers on
/// an arc in front of it, a planar emission fan and either a constant or an
/// affine field without vertical gradient.
pub fn roundtrip_scene(seed: u64, affine: bool) -> Result<Scene, SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speed = if affine {
        SpeedField::affine(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            0.0,
            1.0,
        )
    } else {
        SpeedField::Constant(1.0)
    };
    let facing = rng.random_range(0.0..TAU);
    let span = 100f64.to_radians();
    let count = 10;
    let transducers = (0..count)
        .map(|k| {
            let a = facing - span / 2.0 + span * k as f64 / (count - 1) as f64;
            Transducer {
                id: format!("t{k}"),
                position: Vec3::new(a.cos(), a.sin(), 0.0),
                role: Role::Both,
                grid: None,
            }
        })
        .collect();
    // the sphere sits on the far side of the centre, away from the arc
    let radius = rng.random_range(0.15..0.3);
    let offset = rng.random_range(0.1..0.3);
    let lateral = rng.random_range(-0.1..0.1);
    let back = facing + PI;
    let center = Vec3::new(back.cos(), back.sin(), 0.0) * offset
        + Vec3::new(-facing.sin(), facing.cos(), 0.0) * lateral;
    let obstacle = Obstacle {
        shape: Shape::Sphere {
            center: Vec3::zeros(),
            radius,
        },
        surface: SurfaceKind::Reflecting,
        trajectory: vec![Placement::translation(center)],
    };
    let mut scene = Scene::new(
        Domain::ball(Vec3::zeros(), 1.0)?,
        speed,
        vec![obstacle],
        transducers,
        SamplingSchedule::new(1, 1.0)?,
    )?;
    scene.emission = AngleGrid::Planar { n: 720 };
    scene.capture_radius = 0.005;
    scene.validate()?;
    Ok(scene)
}

/// Reconstruction parameters for round-trip scenes: a planar receiver fan
/// and a tight time window.
pub fn roundtrip_params(domain: &Domain) -> ReconstructionParams {
    ReconstructionParams {
        n_r: 200,
        grid: (1, 720),
        eps1: 0.01 * domain.diameter(),
        eps2: None,
        strategy: SearchStrategy::ReceiverSweep,
        method: Method::Indexed,
    }
}

/// Time tolerance used by the round trip: just over half a step, the least
/// that always admits a match.
pub fn roundtrip_eps2(params: &ReconstructionParams, t: f64) -> f64 {
    0.6 * params.step(t)
}

/// Outcome of simulating a scene and reconstructing its data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundTripStats {
    pub scenes: usize,
    /// Received rays that reflected.
    pub broken: usize,
    pub found: usize,
    /// Broken rays found within `2 eps1` of the true reflection point.
    pub within: usize,
    pub unbroken: usize,
    /// Unbroken rays classified as unbroken.
    pub unbroken_filtered: usize,
    pub error_sum: f64,
    pub max_error: f64,
    pub elapsed: Duration,
}

impl RoundTripStats {
    pub fn merge(&mut self, o: &RoundTripStats) {
        self.scenes += o.scenes;
        self.broken += o.broken;
        self.found += o.found;
        self.within += o.within;
        self.unbroken += o.unbroken;
        self.unbroken_filtered += o.unbroken_filtered;
        self.error_sum += o.error_sum;
        self.max_error = self.max_error.max(o.max_error);
        self.elapsed += o.elapsed;
    }

    /// Fraction of broken rays reconstructed within tolerance.
    pub fn found_rate(&self) -> f64 {
        if self.broken == 0 {
            1.0
        } else {
            self.within as f64 / self.broken as f64
        }
    }

    pub fn unbroken_rate(&self) -> f64 {
        if self.unbroken == 0 {
            1.0
        } else {
            self.unbroken_filtered as f64 / self.unbroken as f64
        }
    }

    /// Mean position error over found broken rays.
    pub fn mean_error(&self) -> f64 {
        if self.found == 0 {
            0.0
        } else {
            self.error_sum / self.found as f64
        }
    }
}

/// Simulates every interval of `scene`, reconstructs the received rays and
/// compares them with the simulator's reflection points. With `tight_eps2`
/// the time tolerance is [`roundtrip_eps2`] instead of `params.eps2`.
pub fn roundtrip(scene: &Scene, params: &ReconstructionParams, tight_eps2: bool) -> RoundTripStats {
    let start = Instant::now();
    let mut stats = RoundTripStats {
        scenes: 1,
        ..Default::default()
    };
    for interval in 0..scene.schedule.interval_count {
        let data = simulate_interval(scene, interval);
        let results: Vec<ReconstructedPoint> = data
            .data_points
            .par_iter()
            .map(|dp| {
                let p = if tight_eps2 {
                    ReconstructionParams {
                        eps2: Some(roundtrip_eps2(params, dp.t)),
                        ..*params
                    }
                } else {
                    *params
                };
                reconstruct(dp, &scene.speed, &scene.domain, &p)
            })
            .collect();
        for (r, truth) in results.iter().zip(&data.ground_truth) {
            match truth.reflection {
                Some(refl) => {
                    stats.broken += 1;
                    if let (Status::Found, Some(p)) = (r.status, r.position) {
                        let err = (p - refl.point).norm();
                        stats.found += 1;
                        stats.error_sum += err;
                        stats.max_error = stats.max_error.max(err);
                        if err <= 2.0 * params.eps1 {
                            stats.within += 1;
                        }
                    }
                }
                None => {
                    stats.unbroken += 1;
                    if r.status == Status::FilteredUnbroken {
                        stats.unbroken_filtered += 1;
                    }
                }
            }
        }
    }
    stats.elapsed = start.elapsed();
    stats
}

/// A synthetic broken ray in the unit ball with its true reflection point.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub field: SpeedField,
    pub domain: Domain,
    pub data_point: DataPoint,
    pub reflection: Vec3,
}

/// Draws a broken ray through a random point of the unit ball with a
/// deflection above 90 degrees. Fields alternate between constant and
/// affine. Returns `None` if a leg does not reach the boundary.
pub fn random_case(rng: &mut ChaCha8Rng, affine: bool) -> Option<RandomCase> {
    let domain = Domain::ball(Vec3::zeros(), 1.0).expect("valid ball");
    let field = if affine {
        SpeedField::affine(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            1.0,
        )
    } else {
        SpeedField::Constant(1.0)
    };
    let mut pick = || direction(rng.random_range(0.3..PI - 0.3), rng.random_range(0.0..TAU));
    let dir = pick();
    let (d_in, d_out) = loop {
        let (a, b) = (pick(), pick());
        if a.dot(&b) > 0.1 {
            break (a, b);
        }
    };
    let p = dir * rng.random_range(0.0..0.6);
    let (dp, _) = broken_ray_through(&p, &d_in, &d_out, &field, &domain, 1e-3)?;
    Some(RandomCase {
        field,
        domain,
        data_point: dp,
        reflection: p,
    })
}

/// `count` random cases from one seed.
pub fn random_cases(seed: u64, count: usize) -> Vec<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut k = 0;
    while out.len() < count {
        if let Some(c) = random_case(&mut rng, k % 2 == 1) {
            out.push(c);
        }
        k += 1;
    }
    out
}
