//! Slabwise dG(q)cG(1) systems for `q = 0, 1` and the time march.
//!
//! For `q = 1` the temporal basis is Lagrange at the slab endpoints,
//! `ℓ₀ = (t_n − t)/k` and `ℓ₁ = (t − t_{n−1})/k`, and unknowns are
//! interleaved as `2i + a` so the block system keeps the spatial band.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::{assemble_stiffness_banded, NitscheParams};
use crate::geometry::{build_cut_config, InterfaceTrajectory, Mesh1D, SlabTimeline, DEFAULT_SNAP_TOL};
use crate::linalg::{norm_inf, BandedLu, BandedMatrix};
use crate::quadrature::{make_rule, RuleKind};
use crate::space::{cross_mass_apply, BrokenSpace};

pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Relative residual bound enforced after every slab solve.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Initial data, source and (optionally) the exact solution.
#[derive(Clone)]
pub struct HeatProblem {
    pub initial: SpaceFn,
    pub source: Option<SpaceTimeFn>,
    pub exact: Option<SpaceTimeFn>,
}

impl std::fmt::Debug for HeatProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatProblem")
            .field("source", &self.source.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl HeatProblem {
    pub fn zero() -> Self {
        Self {
            initial: Arc::new(|_| 0.0),
            source: None,
            exact: Some(Arc::new(|_, _| 0.0)),
        }
    }

    /// `f ≡ 0` with the given initial data.
    pub fn free(initial: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            initial: Arc::new(initial),
            source: None,
            exact: None,
        }
    }

    /// `u = sin²(πx) e^{−t/2}`; then `u_t − u_xx = −½ sin²(πx) e^{−t/2} − 2π² cos(2πx) e^{−t/2}`.
    pub fn manufactured() -> Self {
        use std::f64::consts::PI;
        let u = |x: f64, t: f64| (PI * x).sin().powi(2) * (-0.5 * t).exp();
        let f = |x: f64, t: f64| {
            let e = (-0.5 * t).exp();
            -0.5 * (PI * x).sin().powi(2) * e - 2.0 * PI * PI * (2.0 * PI * x).cos() * e
        };
        Self {
            initial: Arc::new(move |x| u(x, 0.0)),
            source: Some(Arc::new(f)),
            exact: Some(Arc::new(u)),
        }
    }

    fn load(&self, space: &BrokenSpace, t: f64) -> Vec<f64> {
        match &self.source {
            Some(f) => space.load_vector(|x| f(x, t), &make_rule(RuleKind::Gauss3)),
            None => vec![0.0; space.dim()],
        }
    }
}

/// Meshes, timeline, interface motion and method parameters of one run.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub background: Arc<Mesh1D>,
    /// Shape of the overlapping mesh; it is rigidly placed on `G_n` each slab.
    pub overlap: Mesh1D,
    pub timeline: SlabTimeline,
    pub trajectory: InterfaceTrajectory,
    pub params: NitscheParams,
    pub q: usize,
    pub snap_tol: f64,
}

impl Discretization {
    /// Uniform meshes with `h₀ ≈ h0` on `(0, 1)` and `h_G ≈ hg` on `G`.
    pub fn uniform(
        h0: f64,
        hg: f64,
        timeline: SlabTimeline,
        trajectory: InterfaceTrajectory,
        params: NitscheParams,
        q: usize,
    ) -> Result<Self> {
        if !(h0 > 0.0 && h0 <= 1.0) {
            return Err(Error::invalid("h0", "must lie in (0, 1]"));
        }
        if !(hg > 0.0) {
            return Err(Error::invalid("hg", "must be positive"));
        }
        let n0 = (1.0 / h0).round().max(1.0) as usize;
        let ng = (trajectory.length / hg).round().max(1.0) as usize;
        let background = Arc::new(Mesh1D::uniform(0.0, 1.0, n0)?);
        let overlap = Mesh1D::uniform(trajectory.start, trajectory.start + trajectory.length, ng)?;
        Self::new(background, overlap, timeline, trajectory, params, q)
    }

    pub fn new(
        background: Arc<Mesh1D>,
        overlap: Mesh1D,
        timeline: SlabTimeline,
        trajectory: InterfaceTrajectory,
        params: NitscheParams,
        q: usize,
    ) -> Result<Self> {
        if q > 1 {
            return Err(Error::invalid("q", "only dG(0) and dG(1) are supported"));
        }
        if background.start() != 0.0 || background.end() != 1.0 {
            return Err(Error::invalid("background", "must span [0, 1]"));
        }
        Ok(Self {
            background,
            overlap,
            timeline,
            trajectory,
            params,
            q,
            snap_tol: DEFAULT_SNAP_TOL,
        })
    }

    pub fn h0(&self) -> f64 {
        self.background.h_max()
    }

    pub fn hg(&self) -> f64 {
        self.overlap.h_max()
    }

    /// Overlapping mesh placed on `(a, b)` with exact end nodes.
    fn place_overlap(&self, a: f64, b: f64) -> Result<Mesh1D> {
        let (x0, x1) = (self.overlap.start(), self.overlap.end());
        let last = self.overlap.num_nodes() - 1;
        let nodes = self
            .overlap
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| match i {
                0 => a,
                i if i == last => b,
                _ => a + (x - x0) / (x1 - x0) * (b - a),
            })
            .collect();
        Mesh1D::new(nodes)
    }

    /// Broken space of slab `n`.
    pub fn slab_space(&self, n: usize) -> Result<BrokenSpace> {
        let (a, b) = self.trajectory.slab_interface(&self.timeline, n)?;
        let mesh = self.place_overlap(a, b)?;
        let cfg = build_cut_config(self.background.clone(), mesh, (a, b), n, self.snap_tol)?;
        Ok(BrokenSpace::new(cfg))
    }
}

/// Data entering slab `n` from the past.
#[derive(Clone, Copy)]
pub enum Previous<'a> {
    Initial(&'a (dyn Fn(f64) -> f64 + Send + Sync)),
    Slab { space: &'a BrokenSpace, end: &'a [f64] },
}

/// Assembled system of one slab.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub slab: usize,
    pub q: usize,
    pub k: f64,
    pub space: BrokenSpace,
    pub stiffness: BandedMatrix,
    pub mass: BandedMatrix,
    /// `M_{n,n−1} U_{n−1}⁻`, or `(u₀, φᵢ)` on the first slab.
    pub coupling: Vec<f64>,
    /// Block matrix; for `q = 1` row and column `2i + a` belong to dof `i`
    /// and temporal node `a`.
    pub matrix: BandedMatrix,
    pub rhs: Vec<f64>,
}

impl SlabSystem {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Splits a block solution into its `q + 1` temporal node vectors.
    pub fn split(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match self.q {
            0 => vec![x.to_vec()],
            _ => (0..2).map(|a| x.iter().skip(a).step_by(2).copied().collect()).collect(),
        }
    }

    /// `‖B x − rhs‖_∞ / max(‖rhs‖_∞, ‖B‖_max ‖x‖_∞)`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let r: Vec<f64> = self.matrix.mul_vec(x).iter().zip(&self.rhs).map(|(a, b)| a - b).collect();
        let scale = norm_inf(&self.rhs).max(self.matrix.max_abs() * norm_inf(x));
        if scale == 0.0 {
            norm_inf(&r)
        } else {
            norm_inf(&r) / scale
        }
    }
}

fn block_matrix(q: usize, k: f64, mass: &BandedMatrix, stiffness: &BandedMatrix) -> BandedMatrix {
    let n = mass.dim();
    let (kl, ku) = mass.bandwidths();
    let (al, au) = stiffness.bandwidths();
    let (kl, ku) = (kl.max(al), ku.max(au));
    if q == 0 {
        let mut b = BandedMatrix::zeros(n, kl, ku);
        b.add_scaled(1.0, mass);
        b.add_scaled(k, stiffness);
        return b;
    }
    let mut b = BandedMatrix::zeros(2 * n, 2 * kl + 1, 2 * ku + 1);
    // Rows: test ℓ₀, ℓ₁; columns: trial ℓ₀, ℓ₁.
    let m_coef = [[0.5, 0.5], [-0.5, 0.5]];
    let a_coef = [[k / 3.0, k / 6.0], [k / 6.0, k / 3.0]];
    for (coef, mat) in [(&m_coef, mass), (&a_coef, stiffness)] {
        for (i, j, v) in mat.triplets() {
            if v == 0.0 {
                continue;
            }
            for a in 0..2 {
                for c in 0..2 {
                    b.add(2 * i + a, 2 * j + c, coef[a][c] * v);
                }
            }
        }
    }
    b
}

fn block_rhs(q: usize, k: f64, t0: f64, t1: f64, space: &BrokenSpace, coupling: &[f64], problem: &HeatProblem) -> Vec<f64> {
    let n = space.dim();
    if q == 0 {
        let mut rhs = coupling.to_vec();
        if problem.source.is_some() {
            let load = problem.load(space, 0.5 * (t0 + t1));
            rhs.iter_mut().zip(&load).for_each(|(r, l)| *r += k * l);
        }
        return rhs;
    }
    let mut rhs = vec![0.0; 2 * n];
    for i in 0..n {
        rhs[2 * i] = coupling[i];
    }
    if problem.source.is_some() {
        // Lobatto: weights k/6, 4k/6, k/6; ℓ₀ = 1, ½, 0 and ℓ₁ = 0, ½, 1 at the nodes.
        let l0 = problem.load(space, t0);
        let lm = problem.load(space, 0.5 * (t0 + t1));
        let l1 = problem.load(space, t1);
        for i in 0..n {
            rhs[2 * i] += k / 6.0 * l0[i] + k / 3.0 * lm[i];
            rhs[2 * i + 1] += k / 3.0 * lm[i] + k / 6.0 * l1[i];
        }
    }
    rhs
}

fn coupling_term(space: &BrokenSpace, previous: Previous<'_>) -> Vec<f64> {
    match previous {
        Previous::Initial(u0) => space.load_vector(u0, &make_rule(RuleKind::Gauss3)),
        Previous::Slab { space: prev, end } => cross_mass_apply(prev, space, end),
    }
}

/// Assembles the block system of slab `n` on `space`.
pub fn assemble_slab(
    q: usize,
    space: BrokenSpace,
    previous: Previous<'_>,
    timeline: &SlabTimeline,
    n: usize,
    params: &NitscheParams,
    problem: &HeatProblem,
) -> Result<SlabSystem> {
    if q > 1 {
        return Err(Error::invalid("q", "only dG(0) and dG(1) are supported"));
    }
    if n > 1 && matches!(previous, Previous::Initial(_)) {
        return Err(Error::MissingPrevious { slab: n });
    }
    if let Previous::Slab { space: prev, end } = previous {
        if end.len() != prev.dim() {
            return Err(Error::DimensionMismatch {
                expected: prev.dim(),
                got: end.len(),
            });
        }
    }
    let (t0, t1) = timeline.slab(n);
    let k = t1 - t0;
    let stiffness = assemble_stiffness_banded(&space, params);
    let mass = space.mass_banded();
    let coupling = coupling_term(&space, previous);
    let matrix = block_matrix(q, k, &mass, &stiffness);
    let rhs = block_rhs(q, k, t0, t1, &space, &coupling, problem);
    Ok(SlabSystem {
        slab: n,
        q,
        k,
        space,
        stiffness,
        mass,
        coupling,
        matrix,
        rhs,
    })
}

/// Solves a slab system and checks its residual.
pub fn solve_slab(system: &SlabSystem) -> Result<Vec<Vec<f64>>> {
    let lu = system.matrix.clone().factor()?;
    solve_with(system, &lu)
}

fn solve_with(system: &SlabSystem, lu: &BandedLu) -> Result<Vec<Vec<f64>>> {
    let x = lu.solve(&system.rhs)?;
    let residual = system.relative_residual(&x);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Residual {
            residual,
            tol: RESIDUAL_TOL,
        });
    }
    Ok(system.split(&x))
}

/// What a march hands to its observer after each slab.
pub struct SlabView<'a> {
    pub system: &'a SlabSystem,
    pub previous: Previous<'a>,
    /// Solution at the temporal nodes; the last entry is `U_n⁻`.
    pub nodes: &'a [Vec<f64>],
    pub t0: f64,
    pub t1: f64,
}

/// One solved slab.
#[derive(Debug, Clone)]
pub struct SlabSolution {
    pub slab: usize,
    pub t0: f64,
    pub t1: f64,
    pub space: BrokenSpace,
    pub nodes: Vec<Vec<f64>>,
}

impl SlabSolution {
    pub fn end_value(&self) -> &[f64] {
        self.nodes.last().expect("at least one temporal node")
    }

    pub fn start_value(&self) -> &[f64] {
        &self.nodes[0]
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub slabs: Vec<SlabSolution>,
    pub params: NitscheParams,
    pub q: usize,
    pub h0: f64,
    pub hg: f64,
    pub k: f64,
}

impl Trajectory {
    pub fn num_slabs(&self) -> usize {
        self.slabs.len()
    }

    pub fn last(&self) -> &SlabSolution {
        self.slabs.last().expect("trajectory has at least one slab")
    }

    pub fn final_time(&self) -> f64 {
        self.last().t1
    }
}

/// Marches all slabs, calling `observe` after each solve. Only the last
/// slab is returned.
pub fn march_with(
    disc: &Discretization,
    problem: &HeatProblem,
    mut observe: impl FnMut(&SlabView<'_>) -> Result<()>,
) -> Result<SlabSolution> {
    let timeline = &disc.timeline;
    let initial = problem.initial.as_ref();
    let mut prev: Option<SlabSolution> = None;
    let mut cached: Option<(BandedLu, f64)> = None;
    for n in 1..=timeline.num_slabs() {
        let (t0, t1) = timeline.slab(n);
        let k = t1 - t0;
        let step = |e: Error| e.at_slab(n);
        let space = match &prev {
            Some(p) => {
                let (a, b) = disc.trajectory.slab_interface(timeline, n).map_err(step)?;
                if p.space.config().interval == Some((a, b)) {
                    let mut s = p.space.clone();
                    s.set_slab(n);
                    s
                } else {
                    disc.slab_space(n).map_err(step)?
                }
            }
            None => disc.slab_space(n).map_err(step)?,
        };
        let same = prev.as_ref().is_some_and(|p| p.space.config().interval == space.config().interval);
        let previous = match &prev {
            Some(p) => Previous::Slab {
                space: &p.space,
                end: p.end_value(),
            },
            None => Previous::Initial(initial),
        };
        let system = assemble_slab(disc.q, space, previous, timeline, n, &disc.params, problem).map_err(step)?;
        let reuse = same && cached.as_ref().is_some_and(|(_, kc)| *kc == k);
        if !reuse {
            cached = Some((system.matrix.clone().factor().map_err(step)?, k));
        }
        let lu = &cached.as_ref().expect("factorization present").0;
        let nodes = solve_with(&system, lu).map_err(step)?;
        observe(&SlabView {
            system: &system,
            previous,
            nodes: &nodes,
            t0,
            t1,
        })
        .map_err(step)?;
        let SlabSystem { space, .. } = system;
        prev = Some(SlabSolution {
            slab: n,
            t0,
            t1,
            space,
            nodes,
        });
    }
    prev.ok_or_else(|| Error::invalid("slabs", "timeline has no slabs"))
}

/// Marches all slabs and keeps every slab solution.
pub fn march(disc: &Discretization, problem: &HeatProblem) -> Result<Trajectory> {
    let mut slabs = Vec::with_capacity(disc.timeline.num_slabs());
    march_with(disc, problem, |v| {
        slabs.push(SlabSolution {
            slab: v.system.slab,
            t0: v.t0,
            t1: v.t1,
            space: v.system.space.clone(),
            nodes: v.nodes.to_vec(),
        });
        Ok(())
    })?;
    Ok(Trajectory {
        slabs,
        params: disc.params,
        q: disc.q,
        h0: disc.h0(),
        hg: disc.hg(),
        k: disc.timeline.k_max(),
    })
}
