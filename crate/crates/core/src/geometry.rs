//! Meshes, the slab timeline, the slabwise position of the overlapping
//! domain, and the cut decomposition of the unit interval.
//!
//! On slab `n` the overlapping domain is `G_n = (a_n, b_n)`. The background
//! domain splits into `Ω₁ = Ω₀ \ [a_n, b_n]` (background mesh active) and
//! `Ω₂ = G_n` (overlapping mesh active), separated by the two points of
//! `Γ = {a_n, b_n}`. The overlap domain `Ω_O` is the part of the cut
//! background cells that lies inside `Ω₂`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default relative tolerance for snapping interface points onto background nodes.
pub const DEFAULT_SNAP_TOL: f64 = 1e-10;

/// Relative offset used to resolve one-sided limits at a point.
const SIDE_OFFSET: f64 = 1e-9;

/// Sorted node coordinates of a 1D simplicial mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("nodes", "a mesh needs at least two nodes"));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("nodes", "non-finite coordinate"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("nodes", "coordinates must be strictly increasing"));
        }
        Ok(Self { nodes })
    }

    /// `n_cells` equal cells on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::invalid("n_cells", "must be positive"));
        }
        if !(a < b) {
            return Err(Error::invalid("interval", format!("need a < b, got ({a}, {b})")));
        }
        let h = (b - a) / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| a + i as f64 * h).collect();
        nodes[n_cells] = b;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn cell(&self, c: usize) -> (f64, f64) {
        (self.nodes[c], self.nodes[c + 1])
    }

    pub fn cell_size(&self, c: usize) -> f64 {
        self.nodes[c + 1] - self.nodes[c]
    }

    pub fn h_max(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_size(c)).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_size(c))
            .fold(f64::INFINITY, f64::min)
    }

    /// Ratio of the largest to the smallest cell.
    pub fn quasi_uniformity(&self) -> f64 {
        self.h_max() / self.h_min()
    }

    /// The same mesh shifted by `offset`.
    pub fn translated(&self, offset: f64) -> Mesh1D {
        Mesh1D {
            nodes: self.nodes.iter().map(|x| x + offset).collect(),
        }
    }

    /// The cell containing `x`; points outside the mesh clamp to the end cells.
    pub fn cell_at(&self, x: f64) -> usize {
        let count = self.nodes.partition_point(|&n| n <= x);
        count.saturating_sub(1).min(self.num_cells() - 1)
    }

    /// The cell reached from `x` by moving an infinitesimal step in direction `dir`.
    pub fn cell_from_side(&self, x: f64, dir: f64) -> usize {
        let delta = SIDE_OFFSET * self.h_min();
        self.cell_at(x + dir.signum() * delta)
    }

    /// Index of the node nearest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|&n| n < x);
        if i == 0 {
            0
        } else if i == self.nodes.len() {
            i - 1
        } else if (self.nodes[i] - x) < (x - self.nodes[i - 1]) {
            i
        } else {
            i - 1
        }
    }
}

pub fn build_uniform_mesh(a: f64, b: f64, n_cells: usize) -> Result<Mesh1D> {
    Mesh1D::uniform(a, b, n_cells)
}

/// Partition `0 = t₀ < t₁ < … < t_N = T` of the time axis into slabs `I_n = (t_{n−1}, t_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabTimeline {
    times: Vec<f64>,
}

impl SlabTimeline {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::invalid("times", "need at least one slab"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("times", "timeline must start at t = 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("times", "times must be strictly increasing"));
        }
        Ok(Self { times })
    }

    pub fn uniform(t_final: f64, n_slabs: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::invalid("t_final", "must be positive"));
        }
        if n_slabs == 0 {
            return Err(Error::invalid("n_slabs", "must be positive"));
        }
        let k = t_final / n_slabs as f64;
        let mut times: Vec<f64> = (0..=n_slabs).map(|n| n as f64 * k).collect();
        times[n_slabs] = t_final;
        Self::new(times)
    }

    pub fn num_slabs(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `t_n` for `0 ≤ n ≤ N`.
    pub fn time(&self, n: usize) -> f64 {
        self.times[n]
    }

    /// `(t_{n−1}, t_n)` for `1 ≤ n ≤ N`.
    pub fn slab(&self, n: usize) -> (f64, f64) {
        (self.times[n - 1], self.times[n])
    }

    pub fn step(&self, n: usize) -> f64 {
        self.times[n] - self.times[n - 1]
    }

    pub fn final_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn k_min(&self) -> f64 {
        (1..=self.num_slabs())
            .map(|n| self.step(n))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn k_max(&self) -> f64 {
        (1..=self.num_slabs()).map(|n| self.step(n)).fold(0.0, f64::max)
    }
}

pub fn build_timeline(t_final: f64, n_slabs: usize) -> Result<SlabTimeline> {
    SlabTimeline::uniform(t_final, n_slabs)
}

/// Velocity of the overlapping domain, held constant on each slab.
#[derive(Clone)]
pub enum Velocity {
    Constant(f64),
    /// Velocity on slab `n` is the rule evaluated at `t_n`.
    Slabwise(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Velocity {
    /// `μ|_{I_n} = ½ sin(2π t_n / 3)`.
    pub fn demo_sine() -> Self {
        Velocity::Slabwise(Arc::new(|t: f64| {
            0.5 * (2.0 * std::f64::consts::PI * t / 3.0).sin()
        }))
    }
}

impl fmt::Debug for Velocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Velocity::Constant(mu) => write!(f, "Constant({mu})"),
            Velocity::Slabwise(_) => write!(f, "Slabwise(..)"),
        }
    }
}

/// Rigid motion of the overlapping domain `G = (a, a + length)`.
#[derive(Debug, Clone)]
pub struct InterfaceTrajectory {
    pub start: f64,
    pub length: f64,
    pub velocity: Velocity,
}

impl InterfaceTrajectory {
    pub fn new(start: f64, length: f64, velocity: Velocity) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::invalid("g_length", "must be positive"));
        }
        if !(start > 0.0 && start + length < 1.0) {
            return Err(Error::invalid(
                "g_start",
                format!("initial interval ({start}, {}) must lie inside (0, 1)", start + length),
            ));
        }
        Ok(Self {
            start,
            length,
            velocity,
        })
    }

    /// Position of `G` held on slab `n`, sampled at the slab end `t_n`.
    /// `n = 0` gives the initial position.
    pub fn slab_interface(&self, timeline: &SlabTimeline, n: usize) -> Result<(f64, f64)> {
        if n > timeline.num_slabs() {
            return Err(Error::invalid(
                "slab",
                format!("slab {n} beyond N = {}", timeline.num_slabs()),
            ));
        }
        let a = match &self.velocity {
            Velocity::Constant(mu) => self.start + mu * timeline.time(n),
            Velocity::Slabwise(rule) => {
                let mut a = self.start;
                for m in 1..=n {
                    a += rule(timeline.time(m)) * timeline.step(m);
                }
                a
            }
        };
        let b = a + self.length;
        if !(a > 0.0 && b < 1.0) {
            return Err(Error::InterfaceOutsideDomain { slab: n, a, b });
        }
        Ok((a, b))
    }

    /// Positions for all slabs `1..=N`, accumulated in one pass.
    pub fn all_positions(&self, timeline: &SlabTimeline) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(timeline.num_slabs());
        let mut a = self.start;
        for n in 1..=timeline.num_slabs() {
            a = match &self.velocity {
                Velocity::Constant(mu) => self.start + mu * timeline.time(n),
                Velocity::Slabwise(rule) => a + rule(timeline.time(n)) * timeline.step(n),
            };
            let b = a + self.length;
            if !(a > 0.0 && b < 1.0) {
                return Err(Error::InterfaceOutsideDomain { slab: n, a, b });
            }
            out.push((a, b));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
}

impl Segment {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        !(self.b > self.a)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn intersect(&self, other: &Segment) -> Option<Segment> {
        let s = Segment::new(self.a.max(other.a), self.b.min(other.b));
        (!s.is_empty()).then_some(s)
    }
}

/// Which discrete field is active at a point: the background mesh in a
/// given cell, or the overlapping mesh in a given cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Background(usize),
    Overlap(usize),
}

impl Region {
    /// Subdomain label: 1 for `Ω₁`, 2 for `Ω₂`.
    pub fn subdomain(&self) -> u8 {
        match self {
            Region::Background(_) => 1,
            Region::Overlap(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwnedSegment {
    pub seg: Segment,
    pub cell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapSegment {
    pub seg: Segment,
    pub background_cell: usize,
    pub overlap_cell: usize,
}

/// One point of `Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPoint {
    pub x: f64,
    /// Background cell whose diameter scales the penalty and whose
    /// background field gives the `Ω₁`-side trace.
    pub background_cell: usize,
    pub h: f64,
    /// Outward normal of `Ω₁`: +1 at the left point, −1 at the right point.
    pub normal: f64,
    /// Overlapping cell adjacent to the point on the `Ω₂` side.
    pub overlap_cell: usize,
    pub snapped: bool,
}

/// Cut decomposition of the background domain for one slab.
#[derive(Debug, Clone)]
pub struct CutConfig {
    pub slab: usize,
    background: Arc<Mesh1D>,
    overlap: Option<Mesh1D>,
    /// `G_n` after snapping, `None` in the uncut mode.
    pub interval: Option<(f64, f64)>,
    pub gamma: Vec<GammaPoint>,
    pub omega1: Vec<OwnedSegment>,
    pub omega2: Vec<OwnedSegment>,
    pub overlap_segments: Vec<OverlapSegment>,
    /// Sorted ids of interior background nodes whose hat function does not
    /// see `Ω₁ ∪ Ω_O`.
    pub covered: Vec<usize>,
}

impl CutConfig {
    /// Configuration with no overlapping mesh: plain finite elements on the background mesh.
    pub fn uncut(background: Arc<Mesh1D>, slab: usize) -> Self {
        let omega1 = (0..background.num_cells())
            .map(|c| {
                let (a, b) = background.cell(c);
                OwnedSegment {
                    seg: Segment::new(a, b),
                    cell: c,
                }
            })
            .collect();
        Self {
            slab,
            background,
            overlap: None,
            interval: None,
            gamma: Vec::new(),
            omega1,
            omega2: Vec::new(),
            overlap_segments: Vec::new(),
            covered: Vec::new(),
        }
    }

    pub fn background(&self) -> &Arc<Mesh1D> {
        &self.background
    }

    pub fn overlap_mesh(&self) -> Option<&Mesh1D> {
        self.overlap.as_ref()
    }

    /// True when both configurations describe the same discrete geometry.
    pub fn same_geometry(&self, other: &CutConfig) -> bool {
        Arc::ptr_eq(&self.background, &other.background) || self.background == other.background
    }

    pub fn is_cut(&self) -> bool {
        self.interval.is_some()
    }

    /// Active field at `x`; points of `Γ` resolve to the background side.
    pub fn region_at(&self, x: f64) -> Region {
        match (self.interval, &self.overlap) {
            (Some((a, b)), Some(mesh)) if x > a && x < b => Region::Overlap(mesh.cell_at(x)),
            _ => Region::Background(self.background.cell_at(x)),
        }
    }

    /// Active field just beside `x` in direction `dir` (±1).
    pub fn region_from_side(&self, x: f64, dir: f64) -> Region {
        let delta = SIDE_OFFSET * self.background.h_min();
        let y = x + dir.signum() * delta;
        match (self.interval, &self.overlap) {
            (Some((a, b)), Some(mesh)) if y > a && y < b => {
                Region::Overlap(mesh.cell_from_side(x, dir).min(mesh.num_cells() - 1))
            }
            _ => Region::Background(self.background.cell_from_side(x, dir)),
        }
    }

    pub fn omega1_measure(&self) -> f64 {
        self.omega1.iter().map(|s| s.seg.len()).sum()
    }

    pub fn omega2_measure(&self) -> f64 {
        self.omega2.iter().map(|s| s.seg.len()).sum()
    }

    pub fn overlap_measure(&self) -> f64 {
        self.overlap_segments.iter().map(|s| s.seg.len()).sum()
    }

    /// Every breakpoint of the `Ω₁` and `Ω₂` segment lists, unsorted.
    fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.omega1
            .iter()
            .chain(self.omega2.iter())
            .flat_map(|s| [s.seg.a, s.seg.b])
    }
}

/// Cut the background mesh by `interval = G_n` carrying the overlapping mesh `overlap`.
///
/// Interface points within `tol · h_K` of a background node snap onto it. A
/// snapped point takes the background cell on its `Ω₁` side as owner, so it
/// contributes nothing to `Ω_O`.
pub fn build_cut_config(
    background: Arc<Mesh1D>,
    overlap: Mesh1D,
    interval: (f64, f64),
    slab: usize,
    tol: f64,
) -> Result<CutConfig> {
    let (a, b) = interval;
    if !(tol >= 0.0) {
        return Err(Error::invalid("tol", "must be non-negative"));
    }
    let (lo, hi) = (background.start(), background.end());
    if !(a > lo && a < b && b < hi) {
        return Err(Error::InterfaceOutsideDomain { slab, a, b });
    }
    let slack = |h: f64, x: f64| tol * h + 4.0 * f64::EPSILON * x.abs().max(1.0);
    if (overlap.start() - a).abs() > slack(overlap.cell_size(0), a)
        || (overlap.end() - b).abs() > slack(overlap.cell_size(overlap.num_cells() - 1), b)
    {
        return Err(Error::MeshMismatch {
            mesh_a: overlap.start(),
            mesh_b: overlap.end(),
            a,
            b,
        });
    }

    let last_node = background.num_nodes() - 1;
    let mut gamma = Vec::with_capacity(2);
    for (s, normal) in [(a, 1.0), (b, -1.0)] {
        let cell = background.cell_at(s);
        let j = background.nearest_node(s);
        let h_near = if j == 0 {
            background.cell_size(0)
        } else if j == last_node {
            background.cell_size(last_node - 1)
        } else {
            background.cell_size(j - 1).min(background.cell_size(j))
        };
        let (x, owner, snapped) = if (s - background.nodes()[j]).abs() <= tol * h_near {
            if j == 0 || j == last_node {
                return Err(Error::InterfaceOutsideDomain { slab, a, b });
            }
            // Ω₁ lies to the left of the left point and to the right of the right point.
            let owner = if normal > 0.0 { j - 1 } else { j };
            (background.nodes()[j], owner, true)
        } else {
            (s, cell, false)
        };
        let overlap_cell = if normal > 0.0 {
            0
        } else {
            overlap.num_cells() - 1
        };
        gamma.push(GammaPoint {
            x,
            background_cell: owner,
            h: background.cell_size(owner),
            normal,
            overlap_cell,
            snapped,
        });
    }
    let (a_s, b_s) = (gamma[0].x, gamma[1].x);
    if !(a_s < b_s) {
        return Err(Error::InterfaceOutsideDomain { slab, a, b });
    }

    let left = Segment::new(lo, a_s);
    let right = Segment::new(b_s, hi);
    let inner = Segment::new(a_s, b_s);

    let mut omega1 = Vec::new();
    let c_left = background.cell_from_side(a_s, -1.0);
    for c in 0..=c_left {
        let (x0, x1) = background.cell(c);
        if let Some(seg) = Segment::new(x0, x1).intersect(&left) {
            omega1.push(OwnedSegment { seg, cell: c });
        }
    }
    let c_right = background.cell_from_side(b_s, 1.0);
    for c in c_right..background.num_cells() {
        let (x0, x1) = background.cell(c);
        if let Some(seg) = Segment::new(x0, x1).intersect(&right) {
            omega1.push(OwnedSegment { seg, cell: c });
        }
    }

    let mut omega2 = Vec::with_capacity(overlap.num_cells());
    for e in 0..overlap.num_cells() {
        let (y0, y1) = overlap.cell(e);
        let y0 = if e == 0 { a_s } else { y0 };
        let y1 = if e + 1 == overlap.num_cells() { b_s } else { y1 };
        if let Some(seg) = Segment::new(y0, y1).intersect(&inner) {
            omega2.push(OwnedSegment { seg, cell: e });
        }
    }

    let mut cut_cells: Vec<usize> = gamma.iter().map(|g| g.background_cell).collect();
    cut_cells.dedup();
    let mut overlap_segments = Vec::new();
    for &c in &cut_cells {
        let (x0, x1) = background.cell(c);
        let Some(piece) = Segment::new(x0, x1).intersect(&inner) else {
            continue;
        };
        for o in &omega2 {
            if let Some(seg) = o.seg.intersect(&piece) {
                overlap_segments.push(OverlapSegment {
                    seg,
                    background_cell: c,
                    overlap_cell: o.cell,
                });
            }
        }
    }

    let nodes = background.nodes();
    let first = nodes.partition_point(|&x| x < a_s).max(1);
    let last = nodes.partition_point(|&x| x <= b_s).min(last_node);
    let mut covered = Vec::new();
    for i in first..last {
        let support = Segment::new(nodes[i - 1], nodes[i + 1]);
        let mut seen = 0.0;
        for part in [&left, &right] {
            if let Some(s) = support.intersect(part) {
                seen += s.len();
            }
        }
        for o in &overlap_segments {
            if let Some(s) = support.intersect(&o.seg) {
                seen += s.len();
            }
        }
        if seen <= 0.0 {
            covered.push(i);
        }
    }

    Ok(CutConfig {
        slab,
        background,
        overlap: Some(overlap),
        interval: Some((a_s, b_s)),
        gamma,
        omega1,
        omega2,
        overlap_segments,
        covered,
    })
}

/// A piece of `ω_ij = Ω_{i,n} ∩ Ω_{j,m}` on which both configurations have a
/// single active cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSegment {
    pub seg: Segment,
    pub first: Region,
    pub second: Region,
}

impl PairSegment {
    pub fn label(&self) -> (u8, u8) {
        (self.first.subdomain(), self.second.subdomain())
    }
}

/// Common refinement of two configurations over the same background domain.
pub fn partition_pairwise(first: &CutConfig, second: &CutConfig) -> Vec<PairSegment> {
    let mut points: Vec<f64> = first.breakpoints().chain(second.breakpoints()).collect();
    points.sort_by(|x, y| x.total_cmp(y));
    let scale = first.background.h_min().min(second.background.h_min());
    let merge = 1e-13 * scale;
    points.dedup_by(|x, y| (*x - *y).abs() <= merge);

    points
        .windows(2)
        .map(|w| {
            let seg = Segment::new(w[0], w[1]);
            let mid = seg.mid();
            PairSegment {
                seg,
                first: first.region_at(mid),
                second: second.region_at(mid),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(n0: usize, a: f64, b: f64, n_g: usize) -> CutConfig {
        let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, n0).unwrap());
        let ov = Mesh1D::uniform(a, b, n_g).unwrap();
        build_cut_config(bg, ov, (a, b), 1, DEFAULT_SNAP_TOL).unwrap()
    }

    #[test]
    fn uniform_mesh_examples() {
        let m = build_uniform_mesh(0.0, 1.0, 21).unwrap();
        assert_eq!(m.num_nodes(), 22);
        assert_abs_diff_eq!(m.h_max(), 1.0 / 21.0, epsilon = 1e-15);
        let g = build_uniform_mesh(0.125, 0.375, 6).unwrap();
        assert_eq!(g.num_nodes(), 7);
        assert_abs_diff_eq!(g.h_min(), 0.25 / 6.0, epsilon = 1e-15);
        let one = build_uniform_mesh(0.0, 1.0, 1).unwrap();
        assert_eq!(one.nodes(), &[0.0, 1.0]);
        assert!(build_uniform_mesh(0.0, 1.0, 0).is_err());
        assert!(build_uniform_mesh(1.0, 1.0, 3).is_err());
        assert!(Mesh1D::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn timeline_examples() {
        let t = build_timeline(1.0, 4).unwrap();
        assert_eq!(t.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let t = build_timeline(3.0, 10).unwrap();
        assert_abs_diff_eq!(t.step(4), 0.3, epsilon = 1e-14);
        let t = build_timeline(1.0, 1).unwrap();
        assert_eq!(t.slab(1), (0.0, 1.0));
        assert!(build_timeline(0.0, 3).is_err());
        assert!(build_timeline(-1.0, 3).is_err());
    }

    #[test]
    fn slab_interface_constant_velocity() {
        let tl = build_timeline(1.0, 4).unwrap();
        let traj = InterfaceTrajectory::new(0.125, 0.25, Velocity::Constant(0.6)).unwrap();
        let (a, b) = traj.slab_interface(&tl, 4).unwrap();
        assert_abs_diff_eq!(a, 0.725, epsilon = 1e-14);
        assert_abs_diff_eq!(b, 0.975, epsilon = 1e-14);
        assert!(b < 1.0);

        let still = InterfaceTrajectory::new(0.125, 0.25, Velocity::Constant(0.0)).unwrap();
        for n in 0..=4 {
            assert_eq!(still.slab_interface(&tl, n).unwrap(), (0.125, 0.375));
        }

        let fast = InterfaceTrajectory::new(0.125, 0.25, Velocity::Constant(1.0)).unwrap();
        assert!(matches!(
            fast.slab_interface(&tl, 4),
            Err(Error::InterfaceOutsideDomain { slab: 4, .. })
        ));
    }

    #[test]
    fn slab_interface_demo_rule() {
        // One slab of length 0.75: μ = ½ sin(π/2) = ½, displacement 0.375.
        let tl = build_timeline(3.0, 4).unwrap();
        let traj = InterfaceTrajectory::new(0.125, 0.25, Velocity::demo_sine()).unwrap();
        let (a, b) = traj.slab_interface(&tl, 1).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(b, 0.75, epsilon = 1e-14);

        // Ten slabs on (0, 3]: hand-accumulated displacements 0.15·Σ sin(0.2πm).
        let tl = build_timeline(3.0, 10).unwrap();
        let s1 = (0.2 * std::f64::consts::PI).sin();
        let s2 = (0.4 * std::f64::consts::PI).sin();
        let expected = [
            0.125 + 0.15 * s1,
            0.125 + 0.15 * (s1 + s2),
            0.125 + 0.15 * (s1 + 2.0 * s2),
            0.125 + 0.15 * (2.0 * s1 + 2.0 * s2),
            0.125 + 0.15 * (2.0 * s1 + 2.0 * s2),
        ];
        let all = traj.all_positions(&tl).unwrap();
        for (n, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(traj.slab_interface(&tl, n + 1).unwrap().0, e, epsilon = 1e-14);
            assert_abs_diff_eq!(all[n].0, e, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(all[9].0, 0.125, epsilon = 1e-14);
    }

    #[test]
    fn cut_config_ten_cells() {
        let c = cfg(10, 0.125, 0.375, 6);
        assert_abs_diff_eq!(c.gamma[0].x, 0.125);
        assert_eq!(c.gamma[0].background_cell, 1);
        assert_eq!(c.gamma[0].normal, 1.0);
        assert_abs_diff_eq!(c.gamma[1].x, 0.375);
        assert_eq!(c.gamma[1].background_cell, 3);
        assert_eq!(c.gamma[1].normal, -1.0);
        let pieces: Vec<(f64, f64)> = c.overlap_segments.iter().map(|s| (s.seg.a, s.seg.b)).collect();
        let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
        assert_abs_diff_eq!(total, 0.075 + 0.075, epsilon = 1e-14);
        assert!(pieces.iter().all(|&(a, b)| (a >= 0.125 - 1e-15 && b <= 0.2 + 1e-15)
            || (a >= 0.3 - 1e-15 && b <= 0.375 + 1e-15)));
        // Nodes 0.2 and 0.3 both see a cut cell, so nothing is covered.
        assert!(c.covered.is_empty());
        assert_abs_diff_eq!(c.omega1_measure() + c.omega2_measure(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cut_config_twenty_cells_covers_inner_nodes() {
        let c = cfg(20, 0.125, 0.375, 6);
        assert_eq!(c.gamma[0].background_cell, 2);
        assert_eq!(c.gamma[1].background_cell, 7);
        assert_abs_diff_eq!(c.overlap_measure(), 0.05, epsilon = 1e-14);
        assert_eq!(c.covered, vec![4, 5, 6]);
    }

    #[test]
    fn cut_config_four_cells() {
        let c = cfg(4, 0.125, 0.375, 6);
        assert_eq!(c.gamma[0].background_cell, 0);
        assert_eq!(c.gamma[1].background_cell, 1);
        assert_abs_diff_eq!(c.overlap_measure(), 0.25, epsilon = 1e-14);
        assert!(c.overlap_segments.iter().all(|s| s.seg.b <= 0.25 + 1e-15 || s.seg.a >= 0.25 - 1e-15));
        assert!(c.covered.is_empty());
    }

    #[test]
    fn node_aligned_cut_snaps() {
        let c = cfg(10, 0.2, 0.4, 2);
        assert!(c.gamma.iter().all(|g| g.snapped));
        assert_eq!(c.gamma[0].background_cell, 1);
        assert_eq!(c.gamma[1].background_cell, 4);
        assert_eq!(c.overlap_measure(), 0.0);
        assert_eq!(c.covered, vec![3]);

        let nudged = cfg(10, 0.2 + 1e-13, 0.4 - 1e-13, 2);
        assert!(nudged.gamma.iter().all(|g| g.snapped));
        assert_eq!(nudged.interval, Some((0.2, 0.4)));
    }

    #[test]
    fn cut_config_errors() {
        let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, 10).unwrap());
        let ov = Mesh1D::uniform(0.8, 1.05, 4).unwrap();
        assert!(matches!(
            build_cut_config(bg.clone(), ov, (0.8, 1.05), 3, 0.0),
            Err(Error::InterfaceOutsideDomain { slab: 3, .. })
        ));
        let ov = Mesh1D::uniform(0.2, 0.45, 4).unwrap();
        assert!(matches!(
            build_cut_config(bg, ov, (0.21, 0.45), 1, 0.0),
            Err(Error::MeshMismatch { .. })
        ));
    }

    #[test]
    fn region_lookup_sides() {
        let c = cfg(10, 0.125, 0.375, 6);
        assert_eq!(c.region_at(0.05), Region::Background(0));
        assert_eq!(c.region_at(0.2), Region::Overlap(1));
        assert_eq!(c.region_from_side(0.125, -1.0), Region::Background(1));
        assert_eq!(c.region_from_side(0.125, 1.0), Region::Overlap(0));
        assert_eq!(c.region_from_side(0.375, 1.0), Region::Background(3));
        assert_eq!(c.region_from_side(0.375, -1.0), Region::Overlap(5));
    }

    fn label_lengths(parts: &[PairSegment]) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for p in parts {
            let (i, j) = p.label();
            out[i as usize - 1][j as usize - 1] += p.seg.len();
        }
        out
    }

    #[test]
    fn pairwise_identical_configs() {
        let c = cfg(10, 0.125, 0.375, 6);
        let parts = partition_pairwise(&c, &c);
        let l = label_lengths(&parts);
        assert_eq!(l[0][1], 0.0);
        assert_eq!(l[1][0], 0.0);
        assert_abs_diff_eq!(l[1][1], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn pairwise_shifted_configs() {
        let n = cfg(20, 0.1, 0.35, 5);
        let m = cfg(20, 0.2, 0.45, 5);
        let l = label_lengths(&partition_pairwise(&n, &m));
        assert_abs_diff_eq!(l[1][0], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(l[0][1], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1][1], 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(l[0][0] + l[0][1], n.omega1_measure(), epsilon = 1e-12);
        assert_abs_diff_eq!(l[1][0] + l[1][1], n.omega2_measure(), epsilon = 1e-12);

        let far = cfg(20, 0.6, 0.85, 5);
        let l = label_lengths(&partition_pairwise(&n, &far));
        assert_eq!(l[1][1], 0.0);
    }

    #[test]
    fn pairwise_segments_have_single_owner() {
        let n = cfg(13, 0.11, 0.36, 7);
        let m = cfg(13, 0.23, 0.48, 7);
        for p in partition_pairwise(&n, &m) {
            for (c, r) in [(&n, p.first), (&m, p.second)] {
                let (x0, x1) = match r {
                    Region::Background(k) => c.background().cell(k),
                    Region::Overlap(k) => c.overlap_mesh().unwrap().cell(k),
                };
                assert!(p.seg.a >= x0 - 1e-14 && p.seg.b <= x1 + 1e-14);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn segments_partition_unit_interval(
                n0 in 3usize..60, n_g in 1usize..20, a in 0.02f64..0.6, len in 0.05f64..0.35
            ) {
                prop_assume!(a + len < 0.98);
                let c = cfg(n0, a, a + len, n_g);
                prop_assert!((c.omega1_measure() + c.omega2_measure() - 1.0).abs() < 1e-12);
                let h = c.background().h_max();
                prop_assert!(c.overlap_measure() <= 2.0 * h + 1e-14);
                for o in &c.overlap_segments {
                    let (x0, x1) = c.background().cell(o.background_cell);
                    prop_assert!(o.seg.a >= x0 - 1e-14 && o.seg.b <= x1 + 1e-14);
                    prop_assert!(o.seg.a >= a - 1e-14 && o.seg.b <= a + len + 1e-14);
                }
                let mut segs: Vec<Segment> = c.omega1.iter().chain(c.omega2.iter()).map(|s| s.seg).collect();
                segs.sort_by(|x, y| x.a.total_cmp(&y.a));
                for w in segs.windows(2) {
                    prop_assert!(w[0].b <= w[1].a + 1e-14);
                }
            }

            #[test]
            fn zero_tol_rebuild_is_identical(n0 in 3usize..40, a in 0.03f64..0.5, len in 0.1f64..0.4) {
                prop_assume!(a + len < 0.97);
                let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, n0).unwrap());
                let ov = Mesh1D::uniform(a, a + len, 4).unwrap();
                let x = build_cut_config(bg.clone(), ov.clone(), (a, a + len), 1, DEFAULT_SNAP_TOL).unwrap();
                prop_assume!(x.gamma.iter().all(|g| !g.snapped));
                let y = build_cut_config(bg, ov, (a, a + len), 1, 0.0).unwrap();
                prop_assert_eq!(x.omega1, y.omega1);
                prop_assert_eq!(x.omega2, y.omega2);
                prop_assert_eq!(x.overlap_segments, y.overlap_segments);
                prop_assert_eq!(x.covered, y.covered);
            }

            #[test]
            fn pairwise_measures_add_up(
                n0 in 4usize..50, a in 0.02f64..0.6, b in 0.02f64..0.6, len in 0.05f64..0.35
            ) {
                prop_assume!(a + len < 0.98 && b + len < 0.98);
                let n = cfg(n0, a, a + len, 5);
                let m = cfg(n0, b, b + len, 3);
                let l = label_lengths(&partition_pairwise(&n, &m));
                prop_assert!((l[0][0] + l[0][1] - n.omega1_measure()).abs() < 1e-12);
                prop_assert!((l[1][0] + l[1][1] - n.omega2_measure()).abs() < 1e-12);
                prop_assert!((l[0][0] + l[1][0] - m.omega1_measure()).abs() < 1e-12);
            }
        }
    }
}
