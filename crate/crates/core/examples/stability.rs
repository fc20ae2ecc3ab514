//! Stability quantities of free decay from `sin²(πx)` over three
//! simultaneous refinements of `h` and `k`.

use cutfem1d::cli::{stability_csv, stability_levels, Command, Mu, ProblemKind, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for q in [0, 1] {
        let config = RunConfig {
            command: Command::Stability,
            slabs: 20,
            h0: 1.0 / 16.0,
            hg: 1.0 / 16.0,
            mu: Mu::Constant(0.4),
            problem: ProblemKind::Free,
            q,
            levels: 3,
            ..RunConfig::default()
        };
        let reports = stability_levels(&config)?;
        println!("dG({q})");
        print!("{}", stability_csv(&reports));
        for r in &reports {
            println!(
                "  h = {:.4}: |u_N|/|u_0| = {:.3e}, main {:.4}, basic {:.4}, strong {:.4}",
                r.h0,
                r.final_norm / r.initial_norm,
                r.main_constant(),
                r.basic_constant(),
                r.strong_constant()
            );
        }
    }
    Ok(())
}
