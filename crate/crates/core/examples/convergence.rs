//! Convergence sweep for the manufactured problem.
//!
//! `cargo run --release --example convergence -- <sweep> <q> <mu> <fixed> [lo hi]`
//!
//! `<sweep>` is `k`, `h`, `k:12`, `h-half:11` or `k=0.1,0.05,...`; `<fixed>`
//! is `h` for a k-sweep and `k` for an h-sweep.

use cutfem1d::analysis::{convergence_study, ConvergenceSetup};
use cutfem1d::cli::{convergence_csv, Sweep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let get = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let sweep = Sweep::parse(&get(0, "k:10"), 1.0)?;
    let q: usize = get(1, "0").parse()?;
    let mu: f64 = get(2, "0.6").parse()?;
    let fixed: f64 = get(3, "1e-3").parse()?;
    let n = sweep.values.len();
    let lo: usize = get(4, "1").parse()?;
    let hi: usize = get(5, &n.to_string()).parse()?;
    let setup = ConvergenceSetup::manufactured(sweep.axis, q, mu, fixed, sweep.values, (lo, hi));
    let report = convergence_study(&setup)?;
    print!("{}", convergence_csv(report.axis, &report.points(), report.slope, (lo, hi)));
    for r in &report.rows {
        eprintln!("h0 {:.4e}  hg {:.4e}  k {:.4e}  {:.2} s", r.h0, r.hg, r.k, r.runtime);
    }
    Ok(())
}
