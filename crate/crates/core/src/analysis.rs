//! Final-time errors, least-squares convergence slopes, convergence sweeps
//! and stability probes.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::{energy_norm, NitscheParams};
use crate::geometry::{InterfaceTrajectory, SlabTimeline, Velocity};
use crate::linalg::{dot, BandedMatrix};
use crate::quadrature::{integrate, make_rule, subdivide, RuleKind};
use crate::timestepping::{march_with, Discretization, HeatProblem, SlabSolution, SlabView};

/// Longest quadrature piece used by [`final_error`].
pub const MAX_PIECE: f64 = 1.0 / 128.0;

/// `‖u(T) − u_{h,N}⁻‖` by composite gauss3; every cut segment is split into
/// at least `sub` pieces, none longer than [`MAX_PIECE`].
pub fn final_error(last: &SlabSolution, exact: impl Fn(f64) -> f64, sub: usize) -> f64 {
    let rule = make_rule(RuleKind::Gauss3);
    let coeffs = last.end_value();
    let mut acc = 0.0;
    for (a, b, f) in last.space.active_pieces() {
        let pieces = sub.max(((b - a) / MAX_PIECE).ceil() as usize).max(1);
        for seg in subdivide(a, b, pieces) {
            acc += rule.apply(|x| (exact(x) - f.value(coeffs, x)).powi(2), seg.a, seg.b);
        }
    }
    acc.sqrt()
}

/// Slope of the least-squares line through `(log x, log e)` over the
/// 1-based inclusive point range `range`.
pub fn lls_slope(points: &[(f64, f64)], range: (usize, usize)) -> Result<f64> {
    let (lo, hi) = range;
    if lo < 1 || hi > points.len() || hi < lo + 1 {
        return Err(Error::DegenerateFit(format!(
            "range {lo}-{hi} does not select at least two of {} points",
            points.len()
        )));
    }
    let sel = &points[lo - 1..hi];
    if sel.iter().any(|&(x, e)| !(x > 0.0) || !(e > 0.0)) {
        return Err(Error::DegenerateFit("steps and errors must be positive".into()));
    }
    let n = sel.len() as f64;
    let lx: Vec<f64> = sel.iter().map(|p| p.0.ln()).collect();
    let le: Vec<f64> = sel.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let me = le.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * n {
        return Err(Error::DegenerateFit("all step sizes are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&le).map(|(x, e)| (x - mx) * (e - me)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    K,
    H,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::K => "k",
            Axis::H => "h",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(Axis::K),
            "h" => Ok(Axis::H),
            other => Err(Error::invalid("sweep", format!("axis must be `k` or `h`, got `{other}`"))),
        }
    }
}

/// `k_j = T·2^{−j}` for `j = 1..=count`.
pub fn k_grid(t_final: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|j| t_final * 0.5f64.powi(j as i32)).collect()
}

/// `h_j = 2^{−j−2}` for `j = 1..=count`.
pub fn h_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|j| 0.5f64.powi(j as i32 + 2)).collect()
}

/// `k_j = T / round(2^{j/2})` for `j = 1..=count`: half-octave steps on whole slab counts.
pub fn k_grid_half(t_final: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|j| t_final / 2f64.powf(j as f64 / 2.0).round()).collect()
}

/// `h_j = 1 / round(2^{(j+5)/2})` for `j = 1..=count`, starting at `h = 1/8`.
pub fn h_grid_half(count: usize) -> Vec<f64> {
    (1..=count).map(|j| 1.0 / 2f64.powf((j + 5) as f64 / 2.0).round()).collect()
}

/// Everything a convergence sweep needs.
#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub axis: Axis,
    pub q: usize,
    pub velocity: Velocity,
    pub t_final: f64,
    pub g_start: f64,
    pub g_length: f64,
    pub params: NitscheParams,
    /// `h` for a k-sweep (with `h_G = h₀ = h`), `k` for an h-sweep.
    pub fixed: f64,
    pub sweep: Vec<f64>,
    /// 1-based inclusive point range of the fit.
    pub range: (usize, usize),
    pub problem: HeatProblem,
    /// Pieces per cut segment in the final-error quadrature.
    pub error_sub: usize,
}

impl ConvergenceSetup {
    /// Manufactured problem with the default geometry (`G = (0.125, 0.375)`, `T = 1`, `γ = 10`).
    pub fn manufactured(axis: Axis, q: usize, mu: f64, fixed: f64, sweep: Vec<f64>, range: (usize, usize)) -> Self {
        Self {
            axis,
            q,
            velocity: Velocity::Constant(mu),
            t_final: 1.0,
            g_start: 0.125,
            g_length: 0.25,
            params: NitscheParams::default(),
            fixed,
            sweep,
            range,
            problem: HeatProblem::manufactured(),
            error_sub: 2,
        }
    }

    /// `(h, k)` of sweep point `j` (0-based).
    pub fn point(&self, j: usize) -> (f64, f64) {
        match self.axis {
            Axis::K => (self.fixed, self.sweep[j]),
            Axis::H => (self.sweep[j], self.fixed),
        }
    }

    pub fn discretization(&self, h: f64, k: f64) -> Result<Discretization> {
        let slabs = (self.t_final / k).round().max(1.0) as usize;
        let timeline = SlabTimeline::uniform(self.t_final, slabs)?;
        let trajectory = InterfaceTrajectory::new(self.g_start, self.g_length, self.velocity.clone())?;
        Discretization::uniform(h, h, timeline, trajectory, self.params, self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h0: f64,
    pub hg: f64,
    pub k: f64,
    pub error: f64,
    pub runtime: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub axis: Axis,
    pub q: usize,
    pub rows: Vec<ConvergenceRow>,
    pub slope: f64,
    pub range: (usize, usize),
}

impl ConvergenceReport {
    /// `(step, error)` along the sweep axis.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| match self.axis {
                Axis::K => (r.k, r.error),
                Axis::H => (r.h0, r.error),
            })
            .collect()
    }
}

/// One run of a sweep: final-time error and wall time.
pub fn run_point(setup: &ConvergenceSetup, h: f64, k: f64) -> Result<ConvergenceRow> {
    let exact = setup
        .problem
        .exact
        .clone()
        .ok_or_else(|| Error::invalid("problem", "a convergence study needs the exact solution"))?;
    let start = Instant::now();
    let disc = setup.discretization(h, k)?;
    let last = march_with(&disc, &setup.problem, |_| Ok(()))?;
    let t = last.t1;
    let error = final_error(&last, |x| exact(x, t), setup.error_sub);
    Ok(ConvergenceRow {
        h0: disc.h0(),
        hg: disc.hg(),
        k: disc.timeline.k_max(),
        error,
        runtime: start.elapsed().as_secs_f64(),
    })
}

/// Runs every sweep point (in parallel) and fits the slope over `setup.range`.
pub fn convergence_study(setup: &ConvergenceSetup) -> Result<ConvergenceReport> {
    if setup.sweep.is_empty() || setup.sweep.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::invalid("sweep", "values must be positive"));
    }
    if setup.sweep.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("sweep", "values must be strictly decreasing"));
    }
    // Most expensive points first keeps the pool busy.
    let rows: Vec<Result<ConvergenceRow>> = (0..setup.sweep.len())
        .into_par_iter()
        .rev()
        .map(|j| {
            let (h, k) = setup.point(j);
            run_point(setup, h, k).map_err(|e| {
                Error::invalid("sweep", format!("run with h = {h:e}, k = {k:e} failed: {e}"))
            })
        })
        .collect();
    let mut rows = rows.into_iter().rev().collect::<Result<Vec<_>>>()?;
    rows.shrink_to_fit();
    let mut report = ConvergenceReport {
        axis: setup.axis,
        q: setup.q,
        rows,
        slope: f64::NAN,
        range: setup.range,
    };
    report.slope = lls_slope(&report.points(), setup.range)?;
    Ok(report)
}

/// Stability quantities of one run with `f ≡ 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StabilityReport {
    pub h0: f64,
    pub k: f64,
    pub initial_norm: f64,
    /// `‖u_{h,N}⁻‖`
    pub final_norm: f64,
    /// `Σₙ ∫ ‖u̇_h‖`
    pub time_derivative: f64,
    /// `Σₙ ∫ ‖Δₙ u_h‖`
    pub laplacian: f64,
    /// `Σₙ ‖[u_h]_{n−1}‖`
    pub jumps: f64,
    /// `Σₙ ∫ |||u_h|||²`
    pub energy: f64,
    /// `Σₙ ‖[u_h]_{n−1}‖²`
    pub jumps_squared: f64,
    /// `Σₙ tₙ ∫ ‖u̇_h‖²`
    pub strong_time_derivative: f64,
    /// `Σₙ tₙ ∫ ‖Δₙ u_h‖²`
    pub strong_laplacian: f64,
    /// `Σ_{n≥2} (tₙ/kₙ) ‖[u_h]_{n−1}‖²`
    pub strong_jumps: f64,
    /// `(log(t_N/k₁) + 1)^{1/2}`
    pub log_factor: f64,
}

impl StabilityReport {
    /// Left side of the main estimate over `(log(t_N/k₁)+1)^{1/2} ‖u₀‖`.
    pub fn main_constant(&self) -> f64 {
        ratio(
            self.final_norm + self.time_derivative + self.laplacian + self.jumps,
            self.log_factor * self.initial_norm,
        )
    }

    /// Left side of the basic estimate over `‖u₀‖²`.
    pub fn basic_constant(&self) -> f64 {
        ratio(
            self.final_norm.powi(2) + self.energy + self.jumps_squared,
            self.initial_norm.powi(2),
        )
    }

    /// Left side of the strong estimate over `‖u₀‖²`.
    pub fn strong_constant(&self) -> f64 {
        ratio(
            self.strong_time_derivative + self.strong_laplacian + self.strong_jumps,
            self.initial_norm.powi(2),
        )
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// `‖u₀‖` by composite gauss3 on `pieces` equal cells.
pub fn function_norm(u: impl Fn(f64) -> f64, pieces: usize) -> f64 {
    integrate(|x| u(x).powi(2), &subdivide(0.0, 1.0, pieces), &make_rule(RuleKind::Gauss3)).sqrt()
}

fn mass_norm(mass: &BandedMatrix, v: &[f64]) -> f64 {
    mass.bilinear(v, v).max(0.0).sqrt()
}

/// Marches `disc` with `f ≡ 0` and collects all stability quantities.
pub fn stability_run(disc: &Discretization, initial: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> Result<StabilityReport> {
    let problem = HeatProblem::free(initial.clone());
    let pieces = 4 * disc.background.num_cells().max(64);
    let u0_norm = function_norm(&initial, pieces);
    let params: NitscheParams = disc.params;
    let g3 = make_rule(RuleKind::Gauss3);
    let mut rep = StabilityReport {
        h0: disc.h0(),
        k: disc.timeline.k_max(),
        initial_norm: u0_norm,
        ..Default::default()
    };
    let mut prev_end_sq = u0_norm * u0_norm;
    march_with(disc, &problem, |v: &SlabView<'_>| {
        let sys = v.system;
        let (k, tn) = (v.t1 - v.t0, v.t1);
        let start = &v.nodes[0];
        let end = v.nodes.last().expect("nodes");

        // Jump at t_{n−1}: ‖U⁺‖² − 2 (U⁺, U⁻) + ‖U⁻‖².
        let jump_sq = (sys.mass.bilinear(start, start) - 2.0 * dot(start, &sys.coupling) + prev_end_sq).max(0.0);
        rep.jumps += jump_sq.sqrt();
        rep.jumps_squared += jump_sq;
        if sys.slab >= 2 {
            rep.strong_jumps += tn / k * jump_sq;
        }

        let mass_lu = sys.mass.clone().factor()?;
        let lap: Vec<Vec<f64>> = v
            .nodes
            .iter()
            .map(|u| {
                let au: Vec<f64> = sys.stiffness.mul_vec(u).into_iter().map(|x| -x).collect();
                mass_lu.solve(&au)
            })
            .collect::<Result<_>>()?;
        let combine = |vals: &[Vec<f64>], s: f64| -> Vec<f64> {
            if vals.len() == 1 {
                vals[0].clone()
            } else {
                vals[0].iter().zip(&vals[1]).map(|(a, b)| (1.0 - s) * a + s * b).collect()
            }
        };
        for (s, w) in g3.nodes.iter().zip(&g3.weights) {
            let l = mass_norm(&sys.mass, &combine(&lap, *s));
            rep.laplacian += k * w * l;
            rep.strong_laplacian += tn * k * w * l * l;
            let u = combine(v.nodes, *s);
            rep.energy += k * w * energy_norm(&sys.space, &u, &params).powi(2);
        }
        if v.nodes.len() == 2 {
            let du: Vec<f64> = v.nodes[1].iter().zip(&v.nodes[0]).map(|(b, a)| b - a).collect();
            let d = mass_norm(&sys.mass, &du);
            // u̇ = (U¹ − U⁰)/k is constant on the slab.
            rep.time_derivative += d;
            rep.strong_time_derivative += tn * d * d / k;
        }
        prev_end_sq = sys.mass.bilinear(end, end).max(0.0);
        Ok(())
    })?;
    rep.final_norm = prev_end_sq.sqrt();
    let k1 = disc.timeline.step(1);
    rep.log_factor = ((disc.timeline.final_time() / k1).ln() + 1.0).sqrt();
    Ok(rep)
}

/// Stability runs over `levels` simultaneous dyadic refinements of `h` and `k`.
#[allow(clippy::too_many_arguments)]
pub fn stability_probe(
    initial: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    q: usize,
    velocity: Velocity,
    t_final: f64,
    h0: f64,
    k0: f64,
    levels: usize,
    params: NitscheParams,
) -> Result<Vec<StabilityReport>> {
    (0..levels)
        .into_par_iter()
        .map(|l| {
            let scale = 0.5f64.powi(l as i32);
            let (h, k) = (h0 * scale, k0 * scale);
            let slabs = (t_final / k).round().max(1.0) as usize;
            let timeline = SlabTimeline::uniform(t_final, slabs)?;
            let trajectory = InterfaceTrajectory::new(0.125, 0.25, velocity.clone())?;
            let disc = Discretization::uniform(h, h, timeline, trajectory, params, q)?;
            stability_run(&disc, initial.clone())
        })
        .collect()
}
