//! L² and Ritz projections, the discrete Laplacian and the shift operator
//! on a sequence of refined cut configurations.

use std::sync::Arc;

use cutfem1d::analysis::lls_slope;
use cutfem1d::forms::{assemble_mass, assemble_stiffness, energy_norm, NitscheParams};
use cutfem1d::geometry::{build_cut_config, Mesh1D, DEFAULT_SNAP_TOL};
use cutfem1d::operators::{discrete_laplacian, energy_error, l2_project, ritz_project, shift, SmoothFunction};
use cutfem1d::quadrature::{make_rule, RuleKind};
use cutfem1d::space::{cross_l2_distance, BrokenSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(n0: usize, a: f64) -> Result<BrokenSpace, cutfem1d::Error> {
    let b = a + 0.25;
    let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, n0)?);
    let ov = Mesh1D::uniform(a, b, (n0 / 4).max(2))?;
    Ok(BrokenSpace::new(build_cut_config(bg, ov, (a, b), 1, DEFAULT_SNAP_TOL)?))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = NitscheParams::default();
    let w = SmoothFunction::sin_squared();
    let rule = make_rule(RuleKind::Gauss3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut l2_ritz = Vec::new();
    let mut en_ritz = Vec::new();
    let mut l2_proj = Vec::new();
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}", "n0", "|w-Pw|", "|w-Rw|", "|||w-Rw|||", "lap resid", "shift const");
    for n0 in [16, 32, 64, 128, 256] {
        let h = 1.0 / n0 as f64;
        let s = space(n0, 0.25 + 0.37 * h)?;
        let p = l2_project(&s, &w)?;
        let r = ritz_project(&s, &w, &params)?;
        let ep = s.l2_distance(&p, w.value_fn(), &rule, 4);
        let er = s.l2_distance(&r, w.value_fn(), &rule, 4);
        let ee = energy_error(&s, &w, &r, &params);

        let z = discrete_laplacian(&s, &r, &params)?;
        let m = assemble_mass(&s).mul_vec(&z);
        let a = assemble_stiffness(&s, &params).mul_vec(&r);
        let resid = m.iter().zip(&a).map(|(m, a)| (m + a).abs()).fold(0.0, f64::max)
            / a.iter().fold(0.0f64, |x, v| x.max(v.abs()));

        // Shift of a random discrete function from a neighbouring placement.
        let s_prev = space(n0, 0.25 + 0.37 * h - 0.6 * h)?;
        let v: Vec<f64> = (0..s_prev.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sv = shift(&s, &s_prev, &v, &params)?;
        let constant = cross_l2_distance(&s_prev, &v, &s, &sv)? / (h * energy_norm(&s_prev, &v, &params));

        println!("{n0:>6} {ep:>12.4e} {er:>12.4e} {ee:>12.4e} {resid:>12.2e} {constant:>12.4e}");
        l2_proj.push((h, ep));
        l2_ritz.push((h, er));
        en_ritz.push((h, ee));
    }
    let n = l2_ritz.len();
    println!("L2 projection slope {:.3}", lls_slope(&l2_proj, (1, n))?);
    println!("Ritz L2 slope       {:.3}", lls_slope(&l2_ritz, (1, n))?);
    println!("Ritz energy slope   {:.3}", lls_slope(&en_ritz, (1, n))?);
    Ok(())
}
