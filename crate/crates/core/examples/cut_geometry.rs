//! Cut decomposition of the unit interval for one placement of the
//! overlapping mesh.
//!
//! `cargo run --example cut_geometry -- [n0] [ng] [a] [length]`

use std::sync::Arc;

use cutfem1d::geometry::{build_cut_config, Mesh1D, DEFAULT_SNAP_TOL};
use cutfem1d::space::BrokenSpace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n0: usize = args.first().map_or(Ok(10), |s| s.parse())?;
    let ng: usize = args.get(1).map_or(Ok(4), |s| s.parse())?;
    let a: f64 = args.get(2).map_or(Ok(0.23), |s| s.parse())?;
    let len: f64 = args.get(3).map_or(Ok(0.25), |s| s.parse())?;

    let background = Arc::new(Mesh1D::uniform(0.0, 1.0, n0)?);
    let overlap = Mesh1D::uniform(a, a + len, ng)?;
    let cfg = build_cut_config(background, overlap, (a, a + len), 1, DEFAULT_SNAP_TOL)?;

    println!("G = ({a}, {})", a + len);
    for g in &cfg.gamma {
        println!("  gamma x = {:.4}  normal {:+}  h = {:.4}  snapped {}", g.x, g.normal, g.h, g.snapped);
    }
    println!("omega1 pieces:");
    for s in &cfg.omega1 {
        println!("  cell {:>3}  [{:.4}, {:.4}]", s.cell, s.seg.a, s.seg.b);
    }
    println!("omega2 pieces:");
    for s in &cfg.omega2 {
        println!("  cell {:>3}  [{:.4}, {:.4}]", s.cell, s.seg.a, s.seg.b);
    }
    println!("overlap region:");
    for s in &cfg.overlap_segments {
        println!("  bg {:>3} / ov {:>3}  [{:.4}, {:.4}]", s.background_cell, s.overlap_cell, s.seg.a, s.seg.b);
    }
    println!("covered background nodes: {:?}", cfg.covered);
    println!(
        "|omega1| = {:.4}, |omega2| = {:.4}, |overlap| = {:.4}",
        cfg.omega1_measure(),
        cfg.omega2_measure(),
        cfg.overlap_measure()
    );

    let space = BrokenSpace::new(cfg);
    println!("dofs: {}", space.dim());
    for i in 0..space.dim() {
        println!("  {:>3} {:?} x = {:.4}", i, space.dof_kind(i), space.dof_coord(i));
    }
    Ok(())
}
