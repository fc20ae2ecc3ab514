//! Marches the manufactured heat problem with dG(0) and dG(1) and reports
//! the final-time error.
//!
//! `cargo run --release --example heat_solve -- [h] [k] [mu]`

use cutfem1d::analysis::{final_error, Axis, ConvergenceSetup};
use cutfem1d::timestepping::march;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let h: f64 = args.first().map_or(Ok(1.0 / 64.0), |s| s.parse())?;
    let k: f64 = args.get(1).map_or(Ok(0.01), |s| s.parse())?;
    let mu: f64 = args.get(2).map_or(Ok(0.6), |s| s.parse())?;
    for q in [0, 1] {
        let setup = ConvergenceSetup::manufactured(Axis::K, q, mu, h, vec![k], (1, 1));
        let disc = setup.discretization(h, k)?;
        let traj = march(&disc, &setup.problem)?;
        let exact = setup.problem.exact.clone().expect("manufactured problem has an exact solution");
        let last = traj.last();
        let err = final_error(last, |x| exact(x, last.t1), setup.error_sub);
        let g = last.space.config().interval.expect("cut configuration");
        println!(
            "dG({q}): {} slabs, dofs on last slab {}, G_N = ({:.4}, {:.4}), error {:.6e}",
            traj.num_slabs(),
            last.space.dim(),
            g.0,
            g.1,
            err
        );
    }
    Ok(())
}
