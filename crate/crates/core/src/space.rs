//! The broken P1 space of one slab.
//!
//! A function in the space equals a background finite element function `v₀`
//! on `Ω₁` and an overlapping-mesh function `v_G` on `Ω₂`. Dofs are the
//! active interior background nodes plus every overlapping node, numbered
//! by coordinate (background first on ties) so that assembled matrices are
//! banded.

use crate::error::{Error, Result};
use crate::geometry::{partition_pairwise, CutConfig, GammaPoint, Region};
use crate::linalg::{BandedMatrix, CooMatrix, CsrMatrix, TripletSink};
use crate::quadrature::{make_rule, QuadRule, RuleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Background(usize),
    Overlap(usize),
}

/// Which one-sided restriction to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The background function `v₀`.
    One,
    /// The overlapping function `v_G`; only defined on the closure of `Ω₂`.
    Two,
    /// Whatever is active at the point.
    Auto,
}

/// Linear field on one cell: two hat functions and their global dofs.
/// Dirichlet and covered background nodes carry no dof.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalField {
    pub x0: f64,
    pub x1: f64,
    pub dofs: [Option<usize>; 2],
}

impl LocalField {
    #[inline]
    pub fn shape(&self, x: f64) -> [f64; 2] {
        let t = (x - self.x0) / (self.x1 - self.x0);
        [1.0 - t, t]
    }

    #[inline]
    pub fn grads(&self) -> [f64; 2] {
        let g = 1.0 / (self.x1 - self.x0);
        [-g, g]
    }

    pub fn value(&self, coeffs: &[f64], x: f64) -> f64 {
        let s = self.shape(x);
        self.dofs
            .iter()
            .zip(s)
            .map(|(d, s)| d.map_or(0.0, |d| coeffs[d] * s))
            .sum()
    }

    pub fn slope(&self, coeffs: &[f64]) -> f64 {
        let g = self.grads();
        self.dofs
            .iter()
            .zip(g)
            .map(|(d, g)| d.map_or(0.0, |d| coeffs[d] * g))
            .sum()
    }

    /// `(dof, value)` pairs of the active hats at `x`.
    pub fn active_values(&self, x: f64) -> impl Iterator<Item = (usize, f64)> {
        let s = self.shape(x);
        let d = self.dofs;
        (0..2).filter_map(move |k| d[k].map(|i| (i, s[k])))
    }

    pub fn active_grads(&self) -> impl Iterator<Item = (usize, f64)> {
        let g = self.grads();
        let d = self.dofs;
        (0..2).filter_map(move |k| d[k].map(|i| (i, g[k])))
    }
}

#[derive(Debug, Clone)]
pub struct BrokenSpace {
    config: CutConfig,
    background_dofs: Vec<Option<usize>>,
    overlap_dofs: Vec<usize>,
    dof_kinds: Vec<DofKind>,
    dof_coords: Vec<f64>,
}

impl BrokenSpace {
    pub fn new(config: CutConfig) -> Self {
        let bg = config.background().clone();
        let n_bg = bg.num_nodes();
        let mut active = vec![true; n_bg];
        active[0] = false;
        active[n_bg - 1] = false;
        for &c in &config.covered {
            active[c] = false;
        }
        let mut candidates: Vec<(f64, DofKind)> = (0..n_bg)
            .filter(|&i| active[i])
            .map(|i| (bg.nodes()[i], DofKind::Background(i)))
            .collect();
        if let Some(ov) = config.overlap_mesh() {
            candidates.extend(ov.nodes().iter().enumerate().map(|(i, &x)| (x, DofKind::Overlap(i))));
        }
        // Stable sort keeps background nodes ahead of coincident overlap nodes.
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0));

        let mut background_dofs = vec![None; n_bg];
        let mut overlap_dofs = vec![0; config.overlap_mesh().map_or(0, |m| m.num_nodes())];
        for (d, &(_, kind)) in candidates.iter().enumerate() {
            match kind {
                DofKind::Background(i) => background_dofs[i] = Some(d),
                DofKind::Overlap(i) => overlap_dofs[i] = d,
            }
        }
        Self {
            config,
            background_dofs,
            overlap_dofs,
            dof_coords: candidates.iter().map(|c| c.0).collect(),
            dof_kinds: candidates.iter().map(|c| c.1).collect(),
        }
    }

    pub fn config(&self) -> &CutConfig {
        &self.config
    }

    /// Relabels the slab index of an unchanged configuration.
    pub fn set_slab(&mut self, slab: usize) {
        self.config.slab = slab;
    }

    pub fn dim(&self) -> usize {
        self.dof_kinds.len()
    }

    pub fn degree(&self) -> usize {
        1
    }

    pub fn dof_kind(&self, d: usize) -> DofKind {
        self.dof_kinds[d]
    }

    pub fn dof_coord(&self, d: usize) -> f64 {
        self.dof_coords[d]
    }

    pub fn num_background_dofs(&self) -> usize {
        self.background_dofs.iter().filter(|d| d.is_some()).count()
    }

    pub fn num_overlap_dofs(&self) -> usize {
        self.overlap_dofs.len()
    }

    pub fn background_dof(&self, node: usize) -> Option<usize> {
        self.background_dofs[node]
    }

    pub fn overlap_dof(&self, node: usize) -> usize {
        self.overlap_dofs[node]
    }

    pub fn background_field(&self, cell: usize) -> LocalField {
        let (x0, x1) = self.config.background().cell(cell);
        LocalField {
            x0,
            x1,
            dofs: [self.background_dofs[cell], self.background_dofs[cell + 1]],
        }
    }

    pub fn overlap_field(&self, cell: usize) -> LocalField {
        let mesh = self
            .config
            .overlap_mesh()
            .expect("overlap field requested in an uncut space");
        let (x0, x1) = mesh.cell(cell);
        LocalField {
            x0,
            x1,
            dofs: [Some(self.overlap_dofs[cell]), Some(self.overlap_dofs[cell + 1])],
        }
    }

    pub fn field(&self, region: Region) -> LocalField {
        match region {
            Region::Background(c) => self.background_field(c),
            Region::Overlap(c) => self.overlap_field(c),
        }
    }

    /// `(Ω₁-side field, Ω₂-side field)` at an interface point.
    pub fn trace_fields(&self, g: &GammaPoint) -> (LocalField, LocalField) {
        (self.background_field(g.background_cell), self.overlap_field(g.overlap_cell))
    }

    /// Field active just beside `x` in direction `dir`.
    pub fn field_from_side(&self, x: f64, dir: f64) -> LocalField {
        self.field(self.config.region_from_side(x, dir))
    }

    fn field_for(&self, x: f64, side: Side) -> Result<LocalField> {
        match side {
            Side::Auto => Ok(self.field(self.config.region_at(x))),
            Side::One => {
                if let Some(g) = self.config.gamma.iter().find(|g| g.x == x) {
                    return Ok(self.background_field(g.background_cell));
                }
                Ok(self.background_field(self.config.background().cell_at(x)))
            }
            Side::Two => match (self.config.interval, self.config.overlap_mesh()) {
                (Some((a, b)), Some(mesh)) if x >= a && x <= b => {
                    Ok(self.overlap_field(mesh.cell_at(x)))
                }
                _ => Err(Error::invalid(
                    "side",
                    format!("x = {x} is outside the closure of the overlapping domain"),
                )),
            },
        }
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Value of the broken function at `x` on the requested side.
    pub fn eval_broken(&self, coeffs: &[f64], x: f64, side: Side) -> Result<f64> {
        self.check_len(coeffs)?;
        Ok(self.field_for(x, side)?.value(coeffs, x))
    }

    /// Derivative of the broken function at `x` on the requested side.
    pub fn eval_broken_grad(&self, coeffs: &[f64], x: f64, side: Side) -> Result<f64> {
        self.check_len(coeffs)?;
        Ok(self.field_for(x, side)?.slope(coeffs))
    }

    /// Segments of `Ω₁` and `Ω₂` with the field active on each.
    pub fn active_pieces(&self) -> impl Iterator<Item = (f64, f64, LocalField)> + '_ {
        let one = self
            .config
            .omega1
            .iter()
            .map(|s| (s.seg.a, s.seg.b, self.background_field(s.cell)));
        let two = self
            .config
            .omega2
            .iter()
            .map(|s| (s.seg.a, s.seg.b, self.overlap_field(s.cell)));
        one.chain(two)
    }

    /// Like [`active_pieces`](Self::active_pieces), tagged with the subdomain (1 or 2).
    pub fn labeled_pieces(&self) -> impl Iterator<Item = (u8, f64, f64, LocalField)> + '_ {
        let n1 = self.config.omega1.len();
        self.active_pieces()
            .enumerate()
            .map(move |(i, (a, b, f))| (if i < n1 { 1 } else { 2 }, a, b, f))
    }

    /// `(g, φ_i)` for every dof, integrated over the cut segments.
    pub fn load_vector(&self, g: impl Fn(f64) -> f64, rule: &QuadRule) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (a, b, f) in self.active_pieces() {
            for (x, w) in rule.mapped(a, b) {
                let gx = w * g(x);
                for (d, v) in f.active_values(x) {
                    out[d] += gx * v;
                }
            }
        }
        out
    }

    /// Adds the broken L² mass matrix into `sink`.
    pub fn mass_into(&self, sink: &mut impl TripletSink) {
        let rule = make_rule(RuleKind::Gauss2);
        for (a, b, f) in self.active_pieces() {
            for (x, w) in rule.mapped(a, b) {
                for (i, vi) in f.active_values(x) {
                    for (j, vj) in f.active_values(x) {
                        sink.push(i, j, w * vi * vj);
                    }
                }
            }
        }
    }

    /// Broken L² mass matrix of this space.
    pub fn mass_matrix(&self) -> CsrMatrix {
        let mut coo = CooMatrix::with_capacity(self.dim(), self.dim(), 4 * self.dim() + 16);
        self.mass_into(&mut coo);
        coo.to_csr()
    }

    /// The mass matrix in band storage.
    pub fn mass_banded(&self) -> BandedMatrix {
        let w = self.coupling_bandwidth();
        let mut m = BandedMatrix::zeros(self.dim(), w, w);
        self.mass_into(&mut m);
        m
    }

    /// Largest `|i − j|` over dof pairs sharing a cell, an overlap segment
    /// or an interface point.
    pub fn coupling_bandwidth(&self) -> usize {
        let spread = |dofs: &[Option<usize>]| {
            let it = dofs.iter().flatten();
            match (it.clone().min(), it.max()) {
                (Some(lo), Some(hi)) => hi - lo,
                _ => 0,
            }
        };
        let mut w = 0;
        for (_, _, f) in self.active_pieces() {
            w = w.max(spread(&f.dofs));
        }
        for o in &self.config.overlap_segments {
            let (fb, fo) = (self.background_field(o.background_cell), self.overlap_field(o.overlap_cell));
            w = w.max(spread(&[fb.dofs[0], fb.dofs[1], fo.dofs[0], fo.dofs[1]]));
        }
        for g in &self.config.gamma {
            let (fb, fo) = self.trace_fields(g);
            w = w.max(spread(&[fb.dofs[0], fb.dofs[1], fo.dofs[0], fo.dofs[1]]));
        }
        w
    }

    /// Nodal interpolant: values of `g` at active background nodes and at
    /// all overlapping nodes.
    pub fn interpolate(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        self.dof_coords.iter().map(|&x| g(x)).collect()
    }

    /// `√(Σ over cut segments ∫ (g − v)²)` with each segment split into `sub` pieces.
    pub fn l2_distance(&self, coeffs: &[f64], g: impl Fn(f64) -> f64, rule: &QuadRule, sub: usize) -> f64 {
        let mut acc = 0.0;
        for (a, b, f) in self.active_pieces() {
            let h = (b - a) / sub as f64;
            for s in 0..sub {
                let (x0, x1) = (a + s as f64 * h, if s + 1 == sub { b } else { a + (s + 1) as f64 * h });
                for (x, w) in rule.mapped(x0, x1) {
                    let e = g(x) - f.value(coeffs, x);
                    acc += w * e * e;
                }
            }
        }
        acc.sqrt()
    }
}

pub fn build_space(config: CutConfig) -> BrokenSpace {
    BrokenSpace::new(config)
}

/// `∫_{Ω₀} φ_j^{(m)} φ_i^{(n)} dx` with rows indexed by `space_n` and
/// columns by `space_m`; each basis function is restricted by its own
/// configuration.
pub fn cross_mass(space_m: &BrokenSpace, space_n: &BrokenSpace) -> CsrMatrix {
    let rule = make_rule(RuleKind::Gauss2);
    let parts = partition_pairwise(space_n.config(), space_m.config());
    let mut coo = CooMatrix::with_capacity(space_n.dim(), space_m.dim(), 8 * parts.len());
    for p in &parts {
        let fn_ = space_n.field(p.first);
        let fm = space_m.field(p.second);
        for (x, w) in rule.mapped(p.seg.a, p.seg.b) {
            for (i, vi) in fn_.active_values(x) {
                for (j, vj) in fm.active_values(x) {
                    coo.push(i, j, w * vi * vj);
                }
            }
        }
    }
    coo.to_csr()
}

/// `M_{n,m} v` without storing the matrix; rows on `space_n`.
pub fn cross_mass_apply(space_m: &BrokenSpace, space_n: &BrokenSpace, coeffs_m: &[f64]) -> Vec<f64> {
    let rule = make_rule(RuleKind::Gauss2);
    let mut out = vec![0.0; space_n.dim()];
    for p in partition_pairwise(space_n.config(), space_m.config()) {
        let fn_ = space_n.field(p.first);
        let fm = space_m.field(p.second);
        for (x, w) in rule.mapped(p.seg.a, p.seg.b) {
            let vm = w * fm.value(coeffs_m, x);
            for (i, vi) in fn_.active_values(x) {
                out[i] += vi * vm;
            }
        }
    }
    out
}

/// `‖u − v‖` over `Ω₀` for `u` in `space_u` and `v` in `space_v`, each
/// restricted by its own configuration.
pub fn cross_l2_distance(space_u: &BrokenSpace, u: &[f64], space_v: &BrokenSpace, v: &[f64]) -> Result<f64> {
    space_u.check_len(u)?;
    space_v.check_len(v)?;
    let rule = make_rule(RuleKind::Gauss2);
    let mut sum = 0.0;
    for p in partition_pairwise(space_u.config(), space_v.config()) {
        let fu = space_u.field(p.first);
        let fv = space_v.field(p.second);
        for (x, w) in rule.mapped(p.seg.a, p.seg.b) {
            let d = fu.value(u, x) - fv.value(v, x);
            sum += w * d * d;
        }
    }
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cut_config, Mesh1D, DEFAULT_SNAP_TOL};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    pub(crate) fn space(n0: usize, a: f64, b: f64, n_g: usize) -> BrokenSpace {
        let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, n0).unwrap());
        let ov = Mesh1D::uniform(a, b, n_g).unwrap();
        BrokenSpace::new(build_cut_config(bg, ov, (a, b), 1, DEFAULT_SNAP_TOL).unwrap())
    }

    #[test]
    fn dimensions() {
        assert_eq!(space(10, 0.125, 0.375, 6).dim(), 9 + 7);
        assert_eq!(space(20, 0.125, 0.375, 6).dim(), 19 - 3 + 7);
        let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, 10).unwrap());
        assert_eq!(BrokenSpace::new(CutConfig::uncut(bg, 1)).dim(), 9);
        let s = space(21, 0.13, 0.38, 6);
        assert_eq!(s.dim(), 20 - s.config().covered.len() + 7);
    }

    #[test]
    fn numbering_is_sorted_background_first() {
        let s = space(8, 0.125, 0.375, 2);
        let xs: Vec<f64> = (0..s.dim()).map(|d| s.dof_coord(d)).collect();
        assert!(xs.windows(2).all(|w| w[0] <= w[1]));
        // Node 0.125 appears twice: background then overlap.
        let i = xs.iter().position(|&x| x == 0.125).unwrap();
        assert_eq!(s.dof_kind(i), DofKind::Background(1));
        assert_eq!(s.dof_kind(i + 1), DofKind::Overlap(0));
    }

    #[test]
    fn eval_interpolant_and_sides() {
        let s = space(10, 0.125, 0.375, 6);
        let g = |x: f64| x * (1.0 - x);
        let c = s.interpolate(g);
        // 0.25 is an overlapping node, so the Ω₂ interpolant reproduces g there.
        assert_abs_diff_eq!(s.eval_broken(&c, 0.25, Side::Auto).unwrap(), g(0.25), epsilon = 1e-15);
        let v1 = s.eval_broken(&c, 0.125, Side::One).unwrap();
        let v2 = s.eval_broken(&c, 0.125, Side::Two).unwrap();
        assert_abs_diff_eq!(v2, g(0.125), epsilon = 1e-15);
        let background = 0.75 * g(0.1) + 0.25 * g(0.2);
        assert_abs_diff_eq!(v1, background, epsilon = 1e-15);
        assert!(s.eval_broken(&c, 0.6, Side::Two).is_err());
        let zero = vec![0.0; s.dim()];
        for x in [0.0, 0.125, 0.3, 0.9] {
            assert_eq!(s.eval_broken(&zero, x, Side::Auto).unwrap(), 0.0);
        }
        assert!(s.eval_broken(&[1.0], 0.5, Side::Auto).is_err());
    }

    #[test]
    fn self_cross_mass_equals_mass() {
        let s = space(17, 0.13, 0.41, 5);
        let m = s.mass_matrix();
        let c = cross_mass(&s, &s);
        assert!(m.asymmetry() < 1e-14);
        for (i, j, v) in c.triplets() {
            assert_abs_diff_eq!(v, m.get(i, j), epsilon = 1e-15);
        }
    }

    #[test]
    fn cross_mass_far_from_interface_matches_plain_mass() {
        let n = space(20, 0.11, 0.36, 5);
        let m = space(20, 0.17, 0.42, 5);
        let c = cross_mass(&m, &n);
        let h = 0.05;
        let i = n.background_dof(15).unwrap();
        let j = m.background_dof(15).unwrap();
        let j1 = m.background_dof(16).unwrap();
        assert_abs_diff_eq!(c.get(i, j), 2.0 * h / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.get(i, j1), h / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn cross_mass_against_brute_force() {
        let n = space(13, 0.11, 0.36, 6);
        let m = space(13, 0.19, 0.44, 5);
        let vm = m.interpolate(|x| (std::f64::consts::PI * x).sin());
        let got = cross_mass(&m, &n).mul_vec(&vm);
        // Oracle: every mesh node and interface point is a breakpoint; each gap
        // is cut into equal pieces and integrated with eval_broken directly.
        let mut cuts: Vec<f64> = Vec::new();
        for s in [&n, &m] {
            cuts.extend_from_slice(s.config().background().nodes());
            cuts.extend_from_slice(s.config().overlap_mesh().unwrap().nodes());
        }
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup();
        let per_gap = 10_000 / cuts.len() + 1;
        let rule = make_rule(RuleKind::Gauss3);
        for i in 0..n.dim() {
            let mut e = vec![0.0; n.dim()];
            e[i] = 1.0;
            let mut acc = 0.0;
            for w in cuts.windows(2) {
                let h = (w[1] - w[0]) / per_gap as f64;
                for k in 0..per_gap {
                    let a = w[0] + k as f64 * h;
                    for (x, wt) in rule.mapped(a, a + h) {
                        acc += wt
                            * n.eval_broken(&e, x, Side::Auto).unwrap()
                            * m.eval_broken(&vm, x, Side::Auto).unwrap();
                    }
                }
            }
            assert_abs_diff_eq!(got[i], acc, epsilon = 1e-10);
        }
    }

    #[test]
    fn cross_distance_against_pointwise_oracle() {
        let s1 = space(12, 0.21, 0.46, 4);
        let s2 = space(12, 0.27, 0.52, 5);
        let u: Vec<f64> = (0..s1.dim()).map(|i| (i as f64 * 0.7).sin()).collect();
        let v: Vec<f64> = (0..s2.dim()).map(|i| (i as f64 * 0.3).cos()).collect();
        assert_eq!(cross_l2_distance(&s1, &u, &s1, &u).unwrap(), 0.0);
        let d = cross_l2_distance(&s1, &u, &s2, &v).unwrap();
        // Oracle: midpoint sum of the pointwise difference on a fine grid.
        let n = 200_000;
        let mut sum = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let a = s1.eval_broken(&u, x, Side::Auto).unwrap();
            let b = s2.eval_broken(&v, x, Side::Auto).unwrap();
            sum += (a - b).powi(2) / n as f64;
        }
        assert!((d - sum.sqrt()).abs() < 1e-4 * d, "{d} vs {}", sum.sqrt());
    }

    #[test]
    fn banded_and_matrix_free_variants_agree() {
        let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, 23).unwrap());
        let make = |a: f64, b: f64| {
            let ov = Mesh1D::uniform(a, b, 7).unwrap();
            BrokenSpace::new(build_cut_config(bg.clone(), ov, (a, b), 1, DEFAULT_SNAP_TOL).unwrap())
        };
        let (n, m) = (make(0.21, 0.46), make(0.137, 0.387));
        let banded = n.mass_banded();
        let csr = n.mass_matrix();
        for (i, j, v) in csr.triplets() {
            assert_eq!(banded.get(i, j), v);
        }
        let v: Vec<f64> = (0..m.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let direct = cross_mass(&m, &n).mul_vec(&v);
        let free = cross_mass_apply(&m, &n, &v);
        for (a, b) in direct.iter().zip(&free) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

