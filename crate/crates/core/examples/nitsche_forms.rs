//! Assembles the Nitsche stiffness and mass matrices for one cut
//! configuration and checks symmetry and coercivity on random vectors.

use std::sync::Arc;

use cutfem1d::forms::{assemble_mass, assemble_stiffness, energy_parts, NitscheParams};
use cutfem1d::geometry::{build_cut_config, Mesh1D, DEFAULT_SNAP_TOL};
use cutfem1d::space::BrokenSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = NitscheParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("{:>6} {:>6} {:>12} {:>12} {:>12}", "n0", "dim", "asymmetry", "min ratio", "mass asym");
    for n0 in [10, 20, 40, 80, 160] {
        let (a, b) = (0.2 + 0.3 / n0 as f64, 0.45 + 0.3 / n0 as f64);
        let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, n0)?);
        let ov = Mesh1D::uniform(a, b, (n0 / 4).max(2))?;
        let space = BrokenSpace::new(build_cut_config(bg, ov, (a, b), 1, DEFAULT_SNAP_TOL)?);
        let stiff = assemble_stiffness(&space, &params);
        let mass = assemble_mass(&space);
        let mut worst = f64::INFINITY;
        for _ in 0..100 {
            let v: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let energy = energy_parts(&space, &v, &params).total();
            worst = worst.min(stiff.bilinear(&v, &v) / energy);
        }
        println!(
            "{:>6} {:>6} {:>12.3e} {:>12.4} {:>12.3e}",
            n0,
            space.dim(),
            stiff.asymmetry(),
            worst,
            mass.asymmetry()
        );
    }
    Ok(())
}
