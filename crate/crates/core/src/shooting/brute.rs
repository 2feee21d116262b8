use rayon::prelude::*;

use super::{finish, DataPoint, Match, ReconstructedPoint, ReconstructionParams, SearchStrategy};
use crate::geometry::Vec3;
use crate::raytrace::{rk4_step, RayState, StepOutcome};
use crate::scene::{Domain, SpeedField};

/// Nested search over candidate reflection times and search angles.
///
/// For each `i` in `1..=N_r` the transmitter ray is advanced one step to
/// `P_i`; every search angle is then tried in scan order and the first one
/// satisfying both tolerances wins.
pub fn reconstruct_point(
    dp: &DataPoint,
    field: &SpeedField,
    domain: &Domain,
    params: &ReconstructionParams,
) -> ReconstructedPoint {
    let h = params.step(dp.t);
    let eps2 = params.eps2_for(dp.t);
    let angles = params.search_angles();
    let mut tx = dp.transmitter_state();
    for i in 1..=params.n_r {
        tx = match rk4_step(&tx, h, field, domain) {
            StepOutcome::Inside(s) => s,
            StepOutcome::Exited { .. } => break,
        };
        let tau = i as f64 * h;
        let p = tx.pos;
        let hit = angles
            .par_iter()
            .enumerate()
            .find_map_first(|(k, &(phi, theta))| {
                let (start, target) = match params.strategy {
                    SearchStrategy::ReceiverSweep => (dp.receiver, p),
                    SearchStrategy::ReflectionSweep => (p, dp.receiver),
                };
                let ray = RayState::new(start, phi, theta);
                first_meeting(
                    &ray,
                    &target,
                    tau,
                    dp.t,
                    h,
                    params.eps1,
                    eps2,
                    field,
                    domain,
                )
                .map(|(j, gap, time_gap)| Match {
                    i,
                    angle: k,
                    j,
                    position: p,
                    gap,
                    time_gap,
                })
            });
        if hit.is_some() {
            return finish(dp, params, hit);
        }
    }
    finish(dp, params, None)
}

/// Marches `ray` in steps of `h` and returns the first step `j` at which it
/// is within `eps1` of `target` with `|tau + j h - t| < eps2`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn first_meeting(
    ray: &RayState,
    target: &Vec3,
    tau: f64,
    t: f64,
    h: f64,
    eps1: f64,
    eps2: f64,
    field: &SpeedField,
    domain: &Domain,
) -> Option<(usize, f64, f64)> {
    let mut q = *ray;
    let mut j = 0usize;
    loop {
        let dt = tau + j as f64 * h - t;
        if dt >= eps2 {
            return None;
        }
        if dt > -eps2 {
            let gap = (q.pos - target).norm();
            if gap < eps1 {
                return Some((j, gap, dt.abs()));
            }
        }
        q = match rk4_step(&q, h, field, domain) {
            StepOutcome::Inside(s) => s,
            StepOutcome::Exited { .. } => return None,
        };
        j += 1;
    }
}
