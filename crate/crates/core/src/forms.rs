//! Bilinear forms of one slab and of pairs of slabs.
//!
//! `A_n(w, v) = Σᵢ (w', v')_{Ωᵢ} − ⟨∂ₙw⟩[v] − ⟨∂ₙv⟩[w] + γ h_K⁻¹ [w][v] + ([w'], [v'])_{Ω_O}`
//! with the interface terms evaluated at the two points of `Γ`, `[v] = v₁ − v₂`,
//! `⟨v⟩ = ω₁v₁ + ω₂v₂`, and `h_K` the owning background cell.

use crate::error::{Error, Result};
use crate::geometry::{partition_pairwise, GammaPoint};
use crate::linalg::{BandedMatrix, CooMatrix, CsrMatrix, TripletSink};
use crate::space::{BrokenSpace, LocalField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NitscheParams {
    pub gamma: f64,
    pub w1: f64,
    pub w2: f64,
}

impl Default for NitscheParams {
    fn default() -> Self {
        Self {
            gamma: 10.0,
            w1: 0.5,
            w2: 0.5,
        }
    }
}

impl NitscheParams {
    pub fn new(gamma: f64, w1: f64, w2: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be a finite non-negative number"));
        }
        if !(0.0..=1.0).contains(&w1) || !(0.0..=1.0).contains(&w2) || (w1 + w2 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weights", "need w1, w2 in [0, 1] with w1 + w2 = 1"));
        }
        Ok(Self { gamma, w1, w2 })
    }

    pub fn with_gamma(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.5, 0.5)
    }
}

/// Sparse linear functional `Σ cᵢ vᵢ` on the dofs, at most four terms.
#[derive(Debug, Clone, Copy, Default)]
struct Functional {
    len: usize,
    terms: [(usize, f64); 4],
}

impl Functional {
    fn push(&mut self, d: usize, c: f64) {
        self.terms[self.len] = (d, c);
        self.len += 1;
    }

    fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.terms[..self.len].iter().copied()
    }

    fn apply(&self, coeffs: &[f64]) -> f64 {
        self.iter().map(|(d, c)| c * coeffs[d]).sum()
    }
}

/// `[v] = v₁(s) − v₂(s)` from the two side fields.
fn jump_of(one: &LocalField, two: &LocalField, s: f64) -> Functional {
    let mut f = Functional::default();
    for (d, v) in one.active_values(s) {
        f.push(d, v);
    }
    for (d, v) in two.active_values(s) {
        f.push(d, -v);
    }
    f
}

/// `⟨∂ₙv⟩ = normal · (ω₁ v₁' + ω₂ v₂')`.
fn flux_of(one: &LocalField, two: &LocalField, normal: f64, p: &NitscheParams) -> Functional {
    let mut f = Functional::default();
    for (d, g) in one.active_grads() {
        f.push(d, normal * p.w1 * g);
    }
    for (d, g) in two.active_grads() {
        f.push(d, normal * p.w2 * g);
    }
    f
}

/// Side fields of a space at a point of another configuration's interface.
/// Side 1 lies opposite to the normal, side 2 along it.
fn sided_fields(space: &BrokenSpace, g: &GammaPoint) -> (LocalField, LocalField) {
    (
        space.field_from_side(g.x, -g.normal),
        space.field_from_side(g.x, g.normal),
    )
}

/// Adds the matrix of `A_n` into `sink`.
pub fn stiffness_into(space: &BrokenSpace, params: &NitscheParams, sink: &mut impl TripletSink) {
    let cfg = space.config();
    for (a, b, f) in space.active_pieces() {
        let len = b - a;
        for (i, gi) in f.active_grads() {
            for (j, gj) in f.active_grads() {
                sink.push(i, j, len * gi * gj);
            }
        }
    }
    for o in &cfg.overlap_segments {
        let fb = space.background_field(o.background_cell);
        let fo = space.overlap_field(o.overlap_cell);
        let mut d = Functional::default();
        fb.active_grads().for_each(|(k, g)| d.push(k, g));
        fo.active_grads().for_each(|(k, g)| d.push(k, -g));
        let len = o.seg.len();
        for (i, ci) in d.iter() {
            for (j, cj) in d.iter() {
                sink.push(i, j, len * ci * cj);
            }
        }
    }
    for g in &cfg.gamma {
        let (one, two) = space.trace_fields(g);
        let jump = jump_of(&one, &two, g.x);
        let flux = flux_of(&one, &two, g.normal, params);
        let pen = params.gamma / g.h;
        for (i, ji) in jump.iter() {
            for (j, jj) in jump.iter() {
                sink.push(i, j, pen * ji * jj);
            }
            for (j, fj) in flux.iter() {
                sink.push(i, j, -ji * fj);
                sink.push(j, i, -ji * fj);
            }
        }
    }
}

pub fn assemble_stiffness(space: &BrokenSpace, params: &NitscheParams) -> CsrMatrix {
    let n = space.dim();
    let mut coo = CooMatrix::with_capacity(n, n, 4 * n + 64);
    stiffness_into(space, params, &mut coo);
    coo.to_csr()
}

/// [`assemble_stiffness`] in band storage.
pub fn assemble_stiffness_banded(space: &BrokenSpace, params: &NitscheParams) -> BandedMatrix {
    let w = space.coupling_bandwidth();
    let mut m = BandedMatrix::zeros(space.dim(), w, w);
    stiffness_into(space, params, &mut m);
    m
}

pub fn assemble_mass(space: &BrokenSpace) -> CsrMatrix {
    space.mass_matrix()
}

/// Matrix of the pairwise form: entry `(i, j) = 𝒜_{n,m}(φ_j⁽ⁿ⁾, φ_i⁽ᵐ⁾)`,
/// i.e. `dim(space_m) × dim(space_n)`.
///
/// `𝒜_{n,m}(v, w) = Σ_{ij} (v', w')_{ω_ij} − ([v], ⟨∂ₙw⟩)_{Γ_n} − (⟨∂ₙv⟩, [w])_{Γ_m}`,
/// where traces of a function at the other configuration's interface are
/// its one-sided limits.
pub fn assemble_special(space_n: &BrokenSpace, space_m: &BrokenSpace, params: &NitscheParams) -> CsrMatrix {
    let parts = partition_pairwise(space_n.config(), space_m.config());
    let mut coo = CooMatrix::with_capacity(space_m.dim(), space_n.dim(), 4 * parts.len() + 64);
    for p in &parts {
        let fv = space_n.field(p.first);
        let fw = space_m.field(p.second);
        let len = p.seg.len();
        for (i, gi) in fw.active_grads() {
            for (j, gj) in fv.active_grads() {
                coo.push(i, j, len * gi * gj);
            }
        }
    }
    for g in &space_n.config().gamma {
        let (v1, v2) = space_n.trace_fields(g);
        let jump_v = jump_of(&v1, &v2, g.x);
        let (w1, w2) = sided_fields(space_m, g);
        let flux_w = flux_of(&w1, &w2, g.normal, params);
        for (i, fi) in flux_w.iter() {
            for (j, jj) in jump_v.iter() {
                coo.push(i, j, -jj * fi);
            }
        }
    }
    for g in &space_m.config().gamma {
        let (w1, w2) = space_m.trace_fields(g);
        let jump_w = jump_of(&w1, &w2, g.x);
        let (v1, v2) = sided_fields(space_n, g);
        let flux_v = flux_of(&v1, &v2, g.normal, params);
        for (i, ji) in jump_w.iter() {
            for (j, fj) in flux_v.iter() {
                coo.push(i, j, -fj * ji);
            }
        }
    }
    coo.to_csr()
}

/// Squared pieces of the energy norm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyParts {
    /// `Σᵢ ‖v'‖²_{Ωᵢ}`
    pub broken_gradient: f64,
    /// `Σ_Γ h_K ⟨∂ₙv⟩²`
    pub flux: f64,
    /// `Σ_Γ h_K⁻¹ [v]²`
    pub jump: f64,
    /// `‖[v']‖²_{Ω_O}`
    pub overlap: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.broken_gradient + self.flux + self.jump + self.overlap
    }
}

pub fn energy_parts(space: &BrokenSpace, coeffs: &[f64], params: &NitscheParams) -> EnergyParts {
    let cfg = space.config();
    let mut parts = EnergyParts::default();
    for (a, b, f) in space.active_pieces() {
        let s = f.slope(coeffs);
        parts.broken_gradient += (b - a) * s * s;
    }
    for o in &cfg.overlap_segments {
        let d = space.background_field(o.background_cell).slope(coeffs)
            - space.overlap_field(o.overlap_cell).slope(coeffs);
        parts.overlap += o.seg.len() * d * d;
    }
    for g in &cfg.gamma {
        let (one, two) = space.trace_fields(g);
        let j = jump_of(&one, &two, g.x).apply(coeffs);
        let q = flux_of(&one, &two, g.normal, params).apply(coeffs);
        parts.flux += g.h * q * q;
        parts.jump += j * j / g.h;
    }
    parts
}

/// `|||v|||` of a discrete function.
pub fn energy_norm(space: &BrokenSpace, coeffs: &[f64], params: &NitscheParams) -> f64 {
    energy_parts(space, coeffs, params).total().sqrt()
}

/// Both sides of `[AB] = [A]⟨B⟩ + ⟨A⟩[B] + (ω₋ − ω₊)[A][B]`.
pub fn jump_identity_check(
    a: (f64, f64),
    b: (f64, f64),
    w_plus: f64,
    w_minus: f64,
) -> Result<(f64, f64)> {
    if (w_plus + w_minus - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("weights", "ω₊ + ω₋ must equal 1"));
    }
    let (ap, am) = a;
    let (bp, bm) = b;
    let lhs = ap * bp - am * bm;
    let jump_a = ap - am;
    let jump_b = bp - bm;
    let avg_a = w_plus * ap + w_minus * am;
    let avg_b = w_plus * bp + w_minus * bm;
    let rhs = jump_a * avg_b + avg_a * jump_b + (w_minus - w_plus) * jump_a * jump_b;
    Ok((lhs, rhs))
}
