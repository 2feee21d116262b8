//! Voxel painting from lost, unbroken and broken rays.
//!
//! Every voxel starts gray. Unbroken rays cross only the medium, so the
//! voxels they visit are painted white. Lost rays end somewhere on an
//! absorbing obstacle; the tracer cannot tell where, so they are followed to
//! the boundary and their voxels painted black unless something whiter
//! already claimed them. Reconstructed reflection points are painted red.
//!
//! The result only depends on the set of visits, never on their order:
//! each voxel keeps the highest label among red > white > black > gray.

use rayon::prelude::*;

use crate::error::SceneError;
use crate::geometry::Vec3;
use crate::raytrace::{inside, rk4_step, step_to_boundary, RayState, StepOutcome};
use crate::scene::{Domain, SpeedField};
use crate::shooting::{
    reconstruct_interval, DataPoint, ReconstructedPoint, ReconstructionParams, Status,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Label {
    Gray = 0,
    Black = 1,
    White = 2,
    Red = 3,
}

impl Label {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => Label::Gray,
            1 => Label::Black,
            2 => Label::White,
            3 => Label::Red,
            _ => return None,
        })
    }
}

/// Regular lattice of voxels over the domain's bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    pub voxel: Vec3,
    pub origin: Vec3,
}

impl VoxelGrid {
    pub fn covering(domain: &Domain, dims: [usize; 3]) -> Result<Self, SceneError> {
        if dims.contains(&0) {
            return Err(SceneError::InvalidArgument(
                "voxel grid dimensions must be positive".into(),
            ));
        }
        let (lo, hi) = domain.bounding_box();
        let size = hi - lo;
        Ok(VoxelGrid {
            dims,
            voxel: Vec3::new(
                size.x / dims[0] as f64,
                size.y / dims[1] as f64,
                size.z / dims[2] as f64,
            ),
            origin: lo,
        })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Voxel containing `p`; points on the far faces belong to the last voxel.
    pub fn locate(&self, p: &Vec3) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let f = (p[a] - self.origin[a]) / self.voxel[a];
            if !(f >= 0.0 && f <= self.dims[a] as f64) {
                return None;
            }
            c[a] = (f as usize).min(self.dims[a] - 1);
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    pub fn center(&self, idx: usize) -> Vec3 {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        self.origin
            + self
                .voxel
                .component_mul(&Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5))
    }

    /// The eight corners of a voxel.
    pub fn corners(&self, idx: usize) -> [Vec3; 8] {
        let c = self.center(idx);
        let half = self.voxel / 2.0;
        std::array::from_fn(|m| {
            let s = Vec3::new(
                if m & 1 == 0 { -1.0 } else { 1.0 },
                if m & 2 == 0 { -1.0 } else { 1.0 },
                if m & 4 == 0 { -1.0 } else { 1.0 },
            );
            c + half.component_mul(&s)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelImage {
    pub grid: VoxelGrid,
    /// x fastest, then y, then z.
    pub labels: Vec<Label>,
}

impl VoxelImage {
    pub fn new(grid: VoxelGrid) -> Self {
        VoxelImage {
            labels: vec![Label::Gray; grid.len()],
            grid,
        }
    }

    pub fn paint(&mut self, voxels: &[usize], label: Label) {
        for &v in voxels {
            let next = self.labels[v].max(label);
            debug_assert!(
                self.labels[v] != Label::Red || next == Label::Red,
                "red voxels are final"
            );
            self.labels[v] = next;
        }
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayKind {
    Lost,
    Unbroken,
}

/// A ray known by its initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaintRay {
    pub start: Vec3,
    pub phi: f64,
    pub theta: f64,
    pub kind: RayKind,
}

/// Marches a ray and records every voxel holding a sample. `budget` of
/// `None` means "until the ray leaves the domain".
struct Painter<'a> {
    field: &'a SpeedField,
    domain: &'a Domain,
    grid: VoxelGrid,
    h: f64,
    max_time: f64,
}

impl<'a> Painter<'a> {
    fn new(field: &'a SpeedField, domain: &'a Domain, grid: VoxelGrid) -> Self {
        let (c_min, c_max) = field.bounds(domain);
        let min_voxel = grid.voxel.x.min(grid.voxel.y).min(grid.voxel.z);
        Painter {
            field,
            domain,
            grid,
            // half a voxel per step at the fastest speed: no voxel is skipped
            h: min_voxel / (2.0 * c_max),
            max_time: 20.0 * domain.diameter() / c_min,
        }
    }

    fn visits(&self, start: &RayState, budget: Option<f64>) -> Vec<usize> {
        let limit = budget.unwrap_or(self.max_time).min(self.max_time);
        let mut out = Vec::new();
        let mut push = |p: &Vec3| {
            if let Some(v) = self.grid.locate(p) {
                if out.last() != Some(&v) {
                    out.push(v);
                }
            }
        };
        let mut cur = *start;
        push(&cur.pos);
        while cur.t < limit {
            let step = self.h.min(limit - cur.t);
            match rk4_step(&cur, step, self.field, self.domain) {
                StepOutcome::Inside(n) => {
                    cur = n;
                    push(&cur.pos);
                }
                StepOutcome::Exited { .. } => {
                    let edge = step_to_boundary(&cur, step, self.field, self.domain);
                    push(&edge.pos);
                    break;
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn check_start(domain: &Domain, p: &Vec3) -> Result<(), SceneError> {
    if inside(domain, p) {
        Ok(())
    } else {
        Err(SceneError::OutsideDomain {
            x: p.x,
            y: p.y,
            z: p.z,
        })
    }
}

fn label_of(kind: RayKind) -> Label {
    match kind {
        RayKind::Lost => Label::Black,
        RayKind::Unbroken => Label::White,
    }
}

/// Paints lost rays black and unbroken rays white over a fresh image.
pub fn paint_lost_and_unbroken(
    rays: &[PaintRay],
    field: &SpeedField,
    domain: &Domain,
    dims: [usize; 3],
) -> Result<VoxelImage, SceneError> {
    for r in rays {
        check_start(domain, &r.start)?;
    }
    let grid = VoxelGrid::covering(domain, dims)?;
    let painter = Painter::new(field, domain, grid);
    let mut image = VoxelImage::new(grid);
    let visits: Vec<(Label, Vec<usize>)> = rays
        .par_iter()
        .map(|r| {
            (
                label_of(r.kind),
                painter.visits(&RayState::new(r.start, r.phi, r.theta), None),
            )
        })
        .collect();
    for (label, v) in &visits {
        image.paint(v, *label);
    }
    Ok(image)
}

/// Reconstructs the broken rays, paints their reflection voxels red, then
/// paints white along both legs of every reconstructed broken ray and along
/// unbroken rays, and black along lost rays. Returns the reconstruction too.
pub fn paint_two_phase(
    broken: &[DataPoint],
    others: &[PaintRay],
    field: &SpeedField,
    domain: &Domain,
    params: &ReconstructionParams,
    dims: [usize; 3],
) -> Result<(VoxelImage, Vec<ReconstructedPoint>), SceneError> {
    params.validate()?;
    for r in others {
        check_start(domain, &r.start)?;
    }
    for dp in broken {
        check_start(domain, &dp.transmitter)?;
    }
    let grid = VoxelGrid::covering(domain, dims)?;
    let painter = Painter::new(field, domain, grid);
    let mut image = VoxelImage::new(grid);

    let recon = reconstruct_interval(broken, field, domain, params);
    let red: Vec<usize> = recon
        .iter()
        .filter_map(|r| r.position.and_then(|p| grid.locate(&p)))
        .collect();
    image.paint(&red, Label::Red);

    let mut jobs: Vec<(Label, RayState, Option<f64>)> = Vec::new();
    for r in &recon {
        match r.status {
            Status::Found => {
                let tau = r
                    .reflection_time
                    .expect("found points carry their reflection time");
                jobs.push((Label::White, r.source.transmitter_state(), Some(tau)));
                if let Some(leg) = r.return_leg {
                    jobs.push((
                        Label::White,
                        RayState::new(leg.start, leg.phi, leg.theta),
                        Some(leg.duration),
                    ));
                }
            }
            Status::FilteredUnbroken => {
                jobs.push((Label::White, r.source.transmitter_state(), None))
            }
            Status::NoSolution | Status::MeasurementError => {}
        }
    }
    for r in others {
        jobs.push((
            label_of(r.kind),
            RayState::new(r.start, r.phi, r.theta),
            None,
        ));
    }
    let visits: Vec<(Label, Vec<usize>)> = jobs
        .par_iter()
        .map(|(label, start, budget)| (*label, painter.visits(start, *budget)))
        .collect();
    for (label, v) in &visits {
        image.paint(v, *label);
    }
    Ok((image, recon))
}
