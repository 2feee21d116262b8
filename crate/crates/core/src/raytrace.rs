//! Initial-value ray tracing through a smooth speed field.
//!
//! A ray is carried as position plus take-off angles and integrated in time:
//!
//! ```text
//! dx/dt     = c sin(phi) cos(theta)
//! dy/dt     = c sin(phi) sin(theta)
//! dz/dt     = c cos(phi)
//! dphi/dt   = -cos(phi) (c_x cos(theta) + c_y sin(theta)) + c_z sin(phi)
//! dtheta/dt = (c_x sin(theta) - c_y cos(theta)) / sin(phi)
//! ```
//!
//! with classical fourth-order Runge-Kutta steps. Every stage position is
//! checked against the domain so the field is never sampled outside it.

use std::io::Write;

use crate::geometry::{direction, normalize_angles, wrap_angle, Vec3};
use crate::scene::{Domain, SpeedField};

/// Below this `|sin(phi)|` the azimuth rate is taken as zero.
pub const SIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayState {
    pub pos: Vec3,
    pub phi: f64,
    pub theta: f64,
    pub t: f64,
}

impl RayState {
    pub fn new(pos: Vec3, phi: f64, theta: f64) -> Self {
        let (phi, theta) = normalize_angles(phi, theta);
        RayState {
            pos,
            phi,
            theta,
            t: 0.0,
        }
    }

    pub fn direction(&self) -> Vec3 {
        direction(self.phi, self.theta)
    }
}

/// Time derivative of a [`RayState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRate {
    pub velocity: Vec3,
    pub dphi: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathExit {
    /// The caller stopped early with time remaining.
    InDomain,
    /// The ray left the domain; `index` is the last state, which lies on the
    /// boundary.
    ExitedAtBoundary {
        index: usize,
    },
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    /// States at `t = i h`, except that the last one may be a partial step
    /// landing on the boundary or on the budget.
    pub states: Vec<RayState>,
    pub exit: PathExit,
}

impl RayPath {
    pub fn last(&self) -> &RayState {
        self.states
            .last()
            .expect("paths always hold the start state")
    }

    /// Writes `t,x,y,z,phi,theta` rows for plotting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x,y,z,phi,theta")?;
        for s in &self.states {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.t, s.pos.x, s.pos.y, s.pos.z, s.phi, s.theta
            )?;
        }
        Ok(())
    }
}

/// Whether `p` counts as inside for integration purposes. A sliver of slack
/// lets rays start from transducers sitting exactly on the boundary.
#[inline]
pub fn inside(domain: &Domain, p: &Vec3) -> bool {
    domain.depth(p) >= -1e-12 * domain.diameter()
}

#[inline]
fn rate(pos: &Vec3, phi: f64, theta: f64, field: &SpeedField) -> RayRate {
    let c = field.speed(pos);
    let g = field.gradient(pos);
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let dtheta = if sp.abs() < SIN_EPS {
        0.0
    } else {
        (g.x * st - g.y * ct) / sp
    };
    RayRate {
        velocity: Vec3::new(c * sp * ct, c * sp * st, c * cp),
        dphi: -cp * (g.x * ct + g.y * st) + g.z * sp,
        dtheta,
    }
}

pub fn ode_rhs(state: &RayState, field: &SpeedField) -> RayRate {
    rate(&state.pos, state.phi, state.theta, field)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Inside(RayState),
    /// Stage `stage` (1 to 4, or 5 for the combined update) left the domain.
    Exited {
        stage: u8,
    },
}

/// One classical Runge-Kutta step of length `h`.
pub fn rk4_step(state: &RayState, h: f64, field: &SpeedField, domain: &Domain) -> StepOutcome {
    let s = state;
    let k1 = rate(&s.pos, s.phi, s.theta, field);
    let p2 = s.pos + k1.velocity * (h / 2.0);
    if !inside(domain, &p2) {
        return StepOutcome::Exited { stage: 2 };
    }
    let k2 = rate(
        &p2,
        s.phi + k1.dphi * h / 2.0,
        s.theta + k1.dtheta * h / 2.0,
        field,
    );
    let p3 = s.pos + k2.velocity * (h / 2.0);
    if !inside(domain, &p3) {
        return StepOutcome::Exited { stage: 3 };
    }
    let k3 = rate(
        &p3,
        s.phi + k2.dphi * h / 2.0,
        s.theta + k2.dtheta * h / 2.0,
        field,
    );
    let p4 = s.pos + k3.velocity * h;
    if !inside(domain, &p4) {
        return StepOutcome::Exited { stage: 4 };
    }
    let k4 = rate(&p4, s.phi + k3.dphi * h, s.theta + k3.dtheta * h, field);
    let pos =
        s.pos + (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity) * (h / 6.0);
    if !inside(domain, &pos) {
        return StepOutcome::Exited { stage: 5 };
    }
    let phi = s.phi + (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi) * (h / 6.0);
    let theta = s.theta + (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta) * (h / 6.0);
    let (phi, theta) = normalize_angles(phi, theta);
    StepOutcome::Inside(RayState {
        pos,
        phi,
        theta,
        t: s.t + h,
    })
}

/// Longest partial step from `state` that stays inside, found by bisection
/// on the step length. Returns the state at the boundary.
pub fn step_to_boundary(state: &RayState, h: f64, field: &SpeedField, domain: &Domain) -> RayState {
    let (mut lo, mut hi) = (0.0, h);
    let mut best = *state;
    for _ in 0..60 {
        if hi - lo <= 1e-13 * h {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match rk4_step(state, mid, field, domain) {
            StepOutcome::Inside(s) => {
                lo = mid;
                best = s;
            }
            StepOutcome::Exited { .. } => hi = mid,
        }
    }
    best
}

/// Integrates from `start` for at most `budget` time units with step `h`.
/// The final step is shortened to land on the budget, and a step that would
/// leave the domain is shortened to end on the boundary.
pub fn trace(
    start: &RayState,
    budget: f64,
    h: f64,
    field: &SpeedField,
    domain: &Domain,
) -> RayPath {
    trace_until(start, budget, h, field, domain, |_| false)
}

/// Like [`trace`], but stops with [`PathExit::InDomain`] as soon as `stop`
/// returns true for a newly computed state.
pub fn trace_until<F>(
    start: &RayState,
    budget: f64,
    h: f64,
    field: &SpeedField,
    domain: &Domain,
    mut stop: F,
) -> RayPath
where
    F: FnMut(&RayState) -> bool,
{
    assert!(h > 0.0, "step must be positive");
    let t0 = start.t;
    let mut states = Vec::with_capacity(((budget / h).ceil() as usize).min(1 << 20) + 2);
    states.push(*start);
    let mut i = 0usize;
    loop {
        let cur = *states.last().unwrap();
        let elapsed = cur.t - t0;
        let remaining = budget - elapsed;
        if remaining <= 1e-12 * budget.max(h) {
            return RayPath {
                states,
                exit: PathExit::BudgetExhausted,
            };
        }
        let step = h.min(remaining);
        match rk4_step(&cur, step, field, domain) {
            StepOutcome::Inside(mut next) => {
                i += 1;
                // avoid drift from repeated addition
                next.t = if step == h {
                    t0 + i as f64 * h
                } else {
                    t0 + budget
                };
                states.push(next);
                if stop(&next) {
                    return RayPath {
                        states,
                        exit: PathExit::InDomain,
                    };
                }
            }
            StepOutcome::Exited { .. } => {
                let edge = step_to_boundary(&cur, step, field, domain);
                if edge.t > cur.t {
                    states.push(edge);
                }
                let index = states.len() - 1;
                return RayPath {
                    states,
                    exit: PathExit::ExitedAtBoundary { index },
                };
            }
        }
    }
}

/// The same ray travelled backwards from its current position.
pub fn reverse(state: &RayState) -> RayState {
    RayState {
        pos: state.pos,
        phi: std::f64::consts::PI - state.phi,
        theta: wrap_angle(state.theta + std::f64::consts::PI),
        t: 0.0,
    }
}
