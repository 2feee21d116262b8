use rayon::prelude::*;

use super::{finish, DataPoint, Match, ReconstructedPoint, ReconstructionParams};
use crate::geometry::Vec3;
use crate::raytrace::{rk4_step, RayState, StepOutcome};
use crate::scene::{Domain, SpeedField};

/// A receiver-ray sample filed under its hash key.
#[derive(Debug, Clone, Copy)]
struct Entry {
    key: u64,
    angle: u32,
    j: u32,
    pos: Vec3,
}

/// Cells are a hair wider than the tolerances so that rounding can never
/// push a qualifying neighbour two cells away.
const WIDEN: f64 = 1.0 + 1e-9;

fn hash_key(cell: [i64; 3], bin: i64) -> u64 {
    // FNV-1a over the four coordinates; collisions only cost extra checks
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for v in [cell[0], cell[1], cell[2], bin] {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn cell_of(p: &Vec3, side: f64) -> [i64; 3] {
    [
        (p.x / side).floor() as i64,
        (p.y / side).floor() as i64,
        (p.z / side).floor() as i64,
    ]
}

/// Single-pass search: every receiver ray is traced once into a spatial
/// hash keyed by (cell of side `eps1`, arrival-time bin of width `eps2`),
/// then the transmitter ray is walked once, probing the 27 neighbouring
/// cells and the adjacent time bins at each step.
///
/// Among the matches at the first successful transmitter step the one with
/// the lowest (angle, step) is returned, which is the candidate the nested
/// search accepts.
pub fn reconstruct_point_indexed(
    dp: &DataPoint,
    field: &SpeedField,
    domain: &Domain,
    params: &ReconstructionParams,
) -> ReconstructedPoint {
    let h = params.step(dp.t);
    let t = dp.t;
    let eps1 = params.eps1;
    let eps2 = params.eps2_for(t);
    let side = eps1 * WIDEN;
    let width = eps2 * WIDEN;

    let mut tx_points = Vec::with_capacity(params.n_r);
    let mut tx = dp.transmitter_state();
    for _ in 1..=params.n_r {
        match rk4_step(&tx, h, field, domain) {
            StepOutcome::Inside(s) => {
                tx = s;
                tx_points.push(s.pos);
            }
            StepOutcome::Exited { .. } => break,
        }
    }
    let Some(last_tau) = (!tx_points.is_empty()).then_some(tx_points.len() as f64 * h) else {
        return finish(dp, params, None);
    };
    let first_tau = h;

    let pad = Vec3::repeat(2.0 * eps1);
    let (lo, hi) = tx_points.iter().fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let (lo, hi) = (lo - pad, hi + pad);

    let angles = params.search_angles();
    let mut entries: Vec<Entry> = angles
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, &(phi, theta))| {
            let mut out = Vec::new();
            let mut q = RayState::new(dp.receiver, phi, theta);
            let mut j = 0usize;
            loop {
                let a_t = j as f64 * h;
                if first_tau + a_t - t >= eps2 {
                    break;
                }
                let in_box = (0..3).all(|c| q.pos[c] >= lo[c] && q.pos[c] <= hi[c]);
                if in_box && last_tau + a_t - t > -eps2 {
                    out.push(Entry {
                        key: hash_key(cell_of(&q.pos, side), (a_t / width).floor() as i64),
                        angle: k as u32,
                        j: j as u32,
                        pos: q.pos,
                    });
                }
                q = match rk4_step(&q, h, field, domain) {
                    StepOutcome::Inside(s) => s,
                    StepOutcome::Exited { .. } => break,
                };
                j += 1;
            }
            out
        })
        .collect();
    entries.sort_unstable_by_key(|e| (e.key, e.angle, e.j));

    let lookup = |key: u64| {
        let start = entries.partition_point(|e| e.key < key);
        let end = start + entries[start..].partition_point(|e| e.key == key);
        &entries[start..end]
    };

    for (idx, p) in tx_points.iter().enumerate() {
        let i = idx + 1;
        let tau = i as f64 * h;
        let remaining = t - tau;
        let bin_lo = ((remaining - eps2) / width).floor() as i64 - 1;
        let bin_hi = ((remaining + eps2) / width).floor() as i64 + 1;
        let c = cell_of(p, side);
        let mut best: Option<Match> = None;
        for bin in bin_lo..=bin_hi {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        for e in lookup(hash_key([c[0] + dx, c[1] + dy, c[2] + dz], bin)) {
                            let dt = tau + e.j as f64 * h - t;
                            if dt >= eps2 || dt <= -eps2 {
                                continue;
                            }
                            let gap = (e.pos - p).norm();
                            if gap >= eps1 {
                                continue;
                            }
                            let better = best
                                .is_none_or(|b| (e.angle as usize, e.j as usize) < (b.angle, b.j));
                            if better {
                                best = Some(Match {
                                    i,
                                    angle: e.angle as usize,
                                    j: e.j as usize,
                                    position: *p,
                                    gap,
                                    time_gap: dt.abs(),
                                });
                            }
                        }
                    }
                }
            }
        }
        if best.is_some() {
            return finish(dp, params, best);
        }
    }
    finish(dp, params, None)
}
