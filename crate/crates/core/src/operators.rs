//! Projections, the discrete Laplacian, the shift operator between slab
//! spaces, and the spatial and temporal interpolants.

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::forms::{assemble_special, assemble_stiffness, energy_parts, EnergyParts, NitscheParams};
use crate::linalg::solve_csr;
use crate::quadrature::{make_rule, RuleKind};
use crate::space::{cross_mass, BrokenSpace};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function on `[0, 1]` with its derivative and, optionally, its second
/// derivative.
#[derive(Clone)]
pub struct SmoothFunction {
    value: Scalar,
    derivative: Scalar,
    second: Option<Scalar>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFunction")
            .field("has_second", &self.second.is_some())
            .finish()
    }
}

impl SmoothFunction {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            second: None,
        }
    }

    pub fn with_second(mut self, second: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.second = Some(Arc::new(second));
        self
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, |_| 0.0).with_second(|_| 0.0)
    }

    /// `sin²(πx)`.
    pub fn sin_squared() -> Self {
        use std::f64::consts::PI;
        Self::new(
            |x| (PI * x).sin().powi(2),
            |x| PI * (2.0 * PI * x).sin(),
        )
        .with_second(|x| 2.0 * PI * PI * (2.0 * PI * x).cos())
    }

    /// `sin(πx)`.
    pub fn sin_pi() -> Self {
        use std::f64::consts::PI;
        Self::new(|x| (PI * x).sin(), |x| PI * (PI * x).cos())
            .with_second(|x| -PI * PI * (PI * x).sin())
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        self.second.as_ref().map(|s| s(x))
    }

    pub fn value_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |x| self.value(x)
    }
}

/// `P_n w`: `M_n x = (w, φᵢ)`.
pub fn l2_project(space: &BrokenSpace, w: &SmoothFunction) -> Result<Vec<f64>> {
    let rhs = space.load_vector(w.value_fn(), &make_rule(RuleKind::Gauss3));
    solve_csr(&space.mass_matrix(), &rhs)
}

/// `P_n v` for a discrete function `v` of another slab space.
pub fn l2_project_discrete(space: &BrokenSpace, from: &BrokenSpace, coeffs: &[f64]) -> Result<Vec<f64>> {
    let rhs = cross_mass(from, space).mul_vec(coeffs);
    solve_csr(&space.mass_matrix(), &rhs)
}

/// Right-hand side `A_n(w, φᵢ)` for a smooth `w`; its jumps vanish, so only
/// the broken gradient term and `−⟨∂ₙw⟩[φᵢ]` remain.
pub fn ritz_rhs(space: &BrokenSpace, w: &SmoothFunction) -> Vec<f64> {
    let rule = make_rule(RuleKind::Gauss3);
    let mut rhs = vec![0.0; space.dim()];
    for (a, b, f) in space.active_pieces() {
        for (x, wq) in rule.mapped(a, b) {
            let dw = wq * w.derivative(x);
            for (d, g) in f.active_grads() {
                rhs[d] += dw * g;
            }
        }
    }
    for g in &space.config().gamma {
        let flux = g.normal * w.derivative(g.x);
        let (one, two) = space.trace_fields(g);
        for (d, v) in one.active_values(g.x) {
            rhs[d] -= flux * v;
        }
        for (d, v) in two.active_values(g.x) {
            rhs[d] += flux * v;
        }
    }
    rhs
}

/// `R_n w`: `A_n(R_n w, v) = A_n(w, v)` for every discrete `v`.
pub fn ritz_project(space: &BrokenSpace, w: &SmoothFunction, params: &NitscheParams) -> Result<Vec<f64>> {
    solve_csr(&assemble_stiffness(space, params), &ritz_rhs(space, w))
}

/// `Δ_n v`: `(Δ_n v, w) = −A_n(v, w)`.
pub fn discrete_laplacian(space: &BrokenSpace, coeffs: &[f64], params: &NitscheParams) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = assemble_stiffness(space, params)
        .mul_vec(coeffs)
        .into_iter()
        .map(|x| -x)
        .collect();
    solve_csr(&space.mass_matrix(), &rhs)
}

/// `𝒮v ∈ V_m` for `v ∈ V_n`: `A_m(𝒮v, w) = 𝒜_{n,m}(v, w)`.
pub fn shift(space_n: &BrokenSpace, space_m: &BrokenSpace, coeffs: &[f64], params: &NitscheParams) -> Result<Vec<f64>> {
    let rhs = assemble_special(space_n, space_m, params).mul_vec(coeffs);
    solve_csr(&assemble_stiffness(space_m, params), &rhs)
}

/// Nodal interpolant, standing in for a Scott–Zhang operator.
pub fn spatial_interp(space: &BrokenSpace, w: &SmoothFunction) -> Vec<f64> {
    space.interpolate(w.value_fn())
}

/// Squared energy-norm pieces of `w − v` with `w` smooth and `v` discrete.
pub fn energy_error_parts(space: &BrokenSpace, w: &SmoothFunction, coeffs: &[f64], params: &NitscheParams) -> EnergyParts {
    let rule = make_rule(RuleKind::Gauss3);
    let disc = energy_parts(space, coeffs, params);
    let mut parts = EnergyParts {
        jump: disc.jump,
        overlap: disc.overlap,
        ..Default::default()
    };
    for (a, b, f) in space.active_pieces() {
        let s = f.slope(coeffs);
        parts.broken_gradient += rule.apply(|x| (w.derivative(x) - s).powi(2), a, b);
    }
    for g in &space.config().gamma {
        let (one, two) = space.trace_fields(g);
        let flux_v = g.normal * (params.w1 * one.slope(coeffs) + params.w2 * two.slope(coeffs));
        let flux = g.normal * w.derivative(g.x) - flux_v;
        parts.flux += g.h * flux * flux;
    }
    parts
}

/// `|||w − v|||`.
pub fn energy_error(space: &BrokenSpace, w: &SmoothFunction, coeffs: &[f64], params: &NitscheParams) -> f64 {
    energy_error_parts(space, w, coeffs, params).total().sqrt()
}

/// Polynomial `c0 + c1·t` on one slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePoly {
    pub c0: f64,
    pub c1: f64,
}

impl TimePoly {
    pub fn eval(&self, t: f64) -> f64 {
        self.c0 + self.c1 * t
    }
}

/// `Ĩⁿv` on `(t0, t1]`: for `q = 0` the constant `v(t1)`; for `q = 1` the
/// linear polynomial with `p(t1) = v(t1)` and the same integral as `v`.
pub fn temporal_interp(q: usize, v: impl Fn(f64) -> f64, t0: f64, t1: f64) -> Result<TimePoly> {
    let end = v(t1);
    match q {
        0 => Ok(TimePoly { c0: end, c1: 0.0 }),
        1 => {
            let k = t1 - t0;
            let integral = make_rule(RuleKind::Gauss3).apply(&v, t0, t1);
            let slope = 2.0 * (k * end - integral) / (k * k);
            Ok(TimePoly {
                c0: end - slope * t1,
                c1: slope,
            })
        }
        _ => Err(crate::Error::invalid("q", "only 0 and 1 are supported")),
    }
}
