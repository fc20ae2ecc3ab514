//! Acceptance checks. Each test prints one `PASS`/`FAIL` line (written
//! straight to stderr so it shows without `--nocapture`) and then asserts.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use cutfem1d::analysis::{convergence_study, h_grid_half, k_grid, k_grid_half, lls_slope, Axis, ConvergenceSetup};
use cutfem1d::cli::{run_demo, stability_levels, Command, Mu, ProblemKind, RunConfig, SOLUTION_HEADER};
use cutfem1d::forms::{assemble_mass, assemble_special, assemble_stiffness, energy_norm, energy_parts, jump_identity_check, NitscheParams};
use cutfem1d::geometry::{build_cut_config, Mesh1D, DEFAULT_SNAP_TOL};
use cutfem1d::linalg::CsrMatrix;
use cutfem1d::operators::{discrete_laplacian, energy_error, l2_project, ritz_project, ritz_rhs, shift, SmoothFunction};
use cutfem1d::quadrature::{make_rule, RuleKind};
use cutfem1d::space::{cross_l2_distance, BrokenSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, name: &str, pass: bool, detail: &str, started: Instant) {
    let line = format!(
        "[acceptance] criterion {id} {:<4} {name}: {detail} ({:.1} s)\n",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn fmt_points(points: &[(f64, f64)]) -> String {
    points.iter().map(|(s, e)| format!("{s:.3e}:{e:.3e}")).collect::<Vec<_>>().join(" ")
}

fn slope_check(id: u32, name: &str, setup: ConvergenceSetup, accept: impl Fn(f64) -> bool, bar: &str) {
    let t = Instant::now();
    let report = convergence_study(&setup).expect("sweep runs");
    let pass = accept(report.slope);
    let detail = format!(
        "slope {:.4} over points {}-{} (need {bar}); {}",
        report.slope,
        report.range.0,
        report.range.1,
        fmt_points(&report.points())
    );
    verdict(id, name, pass, &detail, t);
}

#[test]
fn criterion_1_dg0_k_convergence() {
    let setup = ConvergenceSetup::manufactured(Axis::K, 0, 0.6, 1e-3, k_grid(1.0, 15), (1, 15));
    slope_check(1, "dG(0) vs k, h = 1e-3", setup, |s| (s - 1.0064).abs() <= 0.10, "1.0064 ± 0.10");
}

#[test]
fn criterion_2_dg0_h_convergence() {
    let setup = ConvergenceSetup::manufactured(Axis::H, 0, 0.6, 1e-4, h_grid_half(11), (1, 11));
    slope_check(2, "dG(0) vs h, k = 1e-4", setup, |s| (s - 2.05).abs() <= 0.10, "2.05 ± 0.10");
}

#[test]
fn criterion_3_dg1_h_convergence() {
    let setup = ConvergenceSetup::manufactured(Axis::H, 1, 0.6, 1e-3, h_grid_half(15), (1, 15));
    slope_check(3, "dG(1) vs h, k = 1e-3", setup, |s| (s - 2.00).abs() <= 0.06, "2.00 ± 0.06");
}

#[test]
fn criterion_4_dg1_k_superconvergence() {
    let setup = ConvergenceSetup::manufactured(Axis::K, 1, 0.6, 5e-5, k_grid_half(1.0, 15), (9, 12));
    slope_check(4, "dG(1) vs k, h = 5e-5", setup, |s| s >= 2.6, "≥ 2.6");
}

/// Cut space on `(0, 1)` with `n0` cells and `G = (a, a + ¼)` meshed with `h_G = h₀`.
fn cut_space(n0: usize, a: f64) -> BrokenSpace {
    let bg = Arc::new(Mesh1D::uniform(0.0, 1.0, n0).unwrap());
    let ov = Mesh1D::uniform(a, a + 0.25, (n0 / 4).max(2)).unwrap();
    BrokenSpace::new(build_cut_config(bg, ov, (a, a + 0.25), 1, DEFAULT_SNAP_TOL).unwrap())
}

fn rel_residual(lhs: &[f64], rhs: &[f64]) -> f64 {
    let diff = lhs.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = rhs.iter().chain(lhs).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn neg(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| -x).collect()
}

#[test]
fn criterion_5_operator_suite() {
    let t = Instant::now();
    let params = NitscheParams::default();
    let w = SmoothFunction::sin_squared();
    let gauss3 = make_rule(RuleKind::Gauss3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_residual: f64 = 0.0;
    let (mut l2, mut en, mut constants) = (Vec::new(), Vec::new(), Vec::new());
    for n0 in [32, 64, 128, 256] {
        let h = 1.0 / n0 as f64;
        // Same placement relative to the cells at every level.
        let a = 0.25 + 0.37 * h;
        let s = cut_space(n0, a);
        let prev = cut_space(n0, a - 0.6 * h);
        let mass: CsrMatrix = assemble_mass(&s);
        let stiff = assemble_stiffness(&s, &params);

        let p = l2_project(&s, &w).unwrap();
        let load = s.load_vector(w.value_fn(), &gauss3);
        worst_residual = worst_residual.max(rel_residual(&mass.mul_vec(&p), &load));

        let r = ritz_project(&s, &w, &params).unwrap();
        worst_residual = worst_residual.max(rel_residual(&stiff.mul_vec(&r), &ritz_rhs(&s, &w)));

        let z = discrete_laplacian(&s, &r, &params).unwrap();
        worst_residual = worst_residual.max(rel_residual(&mass.mul_vec(&z), &neg(stiff.mul_vec(&r))));

        let v: Vec<f64> = (0..prev.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sv = shift(&prev, &s, &v, &params).unwrap();
        let special = assemble_special(&prev, &s, &params).mul_vec(&v);
        worst_residual = worst_residual.max(rel_residual(&stiff.mul_vec(&sv), &special));

        l2.push((h, s.l2_distance(&r, w.value_fn(), &gauss3, 4)));
        en.push((h, energy_error(&s, &w, &r, &params)));
        constants.push(cross_l2_distance(&prev, &v, &s, &sv).unwrap() / (h * energy_norm(&prev, &v, &params)));
    }
    let l2_slope = lls_slope(&l2, (1, 4)).unwrap();
    let en_slope = lls_slope(&en, (1, 4)).unwrap();
    let cmax = constants.iter().cloned().fold(f64::MIN, f64::max);
    let cmin = constants.iter().cloned().fold(f64::MAX, f64::min);
    let pass = worst_residual <= 1e-10
        && (l2_slope - 2.0).abs() <= 0.1
        && (en_slope - 1.0).abs() <= 0.1
        && cmin > 0.0
        && cmax / cmin <= 2.0;
    let detail = format!(
        "max relative residual {worst_residual:.2e} (≤ 1e-10), Ritz L2 slope {l2_slope:.4} (2 ± 0.1), energy slope {en_slope:.4} (1 ± 0.1), shift constants {:?} max/min {:.3} (≤ 2)",
        constants.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>(),
        cmax / cmin
    );
    verdict(5, "operator suite", pass, &detail, t);
}

/// Fails when the sequence rises at every step and ends more than 10% up.
fn grows(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] > w[0]) && values[values.len() - 1] > 1.1 * values[0]
}

#[test]
fn criterion_6_stability_suite() {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [0, 1] {
        let config = RunConfig {
            command: Command::Stability,
            slabs: 20,
            h0: 1.0 / 16.0,
            hg: 1.0 / 16.0,
            mu: Mu::Constant(0.6),
            problem: ProblemKind::Free,
            q,
            levels: 3,
            ..RunConfig::default()
        };
        let reports = stability_levels(&config).unwrap();
        let decay = reports.iter().map(|r| r.final_norm / r.initial_norm).fold(0.0, f64::max);
        let main: Vec<f64> = reports.iter().map(|r| r.main_constant()).collect();
        let basic: Vec<f64> = reports.iter().map(|r| r.basic_constant()).collect();
        let strong: Vec<f64> = reports.iter().map(|r| r.strong_constant()).collect();
        let ok = decay <= 1.05 && !grows(&main) && !grows(&basic) && !grows(&strong);
        pass &= ok;
        parts.push(format!(
            "dG({q}): max |u_N|/|u_0| {decay:.3e}, main {main:.4?}, basic {basic:.4?}, strong {strong:.4?}"
        ));
    }
    verdict(6, "stability suite", pass, &parts.join("; "), t);
}

#[test]
fn criterion_7_exactness_suite() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut jump_err: f64 = 0.0;
    for _ in 0..1000 {
        let mut r = || rng.gen_range(-10.0..10.0);
        let (a, b) = ((r(), r()), (r(), r()));
        let wp = rng.gen_range(0.0..1.0);
        let (lhs, rhs) = jump_identity_check(a, b, wp, 1.0 - wp).unwrap();
        jump_err = jump_err.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }

    let gauss3 = make_rule(RuleKind::Gauss3);
    let mut quad_err: f64 = 0.0;
    for (lo, hi) in [(0.0f64, 1.0f64), (-1.0, 1.0), (0.25, 0.5)] {
        for p in 0..=5 {
            let exact = (hi.powi(p + 1) - lo.powi(p + 1)) / (p + 1) as f64;
            let got = gauss3.apply(|x| x.powi(p), lo, hi);
            quad_err = quad_err.max((got - exact).abs() / exact.abs().max(1.0));
        }
    }

    let params = NitscheParams::default();
    let (mut asym, mut min_ratio) = (0.0f64, f64::INFINITY);
    for n0 in [10, 20, 40, 80, 160] {
        let a = 0.2 + 0.3 / n0 as f64;
        let s = cut_space(n0, a);
        let stiff = assemble_stiffness(&s, &params);
        asym = asym.max(stiff.asymmetry() / stiff.max_abs());
        for _ in 0..100 {
            let v: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            min_ratio = min_ratio.min(stiff.bilinear(&v, &v) / energy_parts(&s, &v, &params).total());
        }
    }
    let pass = jump_err <= 1e-12 && quad_err <= 1e-15 && asym <= 1e-12 && min_ratio > 0.0;
    let detail = format!(
        "jump identity {jump_err:.2e} (≤ 1e-12), gauss3 degree ≤ 5 {quad_err:.2e} (≤ 1e-15), A_n asymmetry {asym:.2e} (≤ 1e-12), min coercivity ratio {min_ratio:.4} (> 0)"
    );
    verdict(7, "exactness suite", pass, &detail, t);
}

#[test]
fn criterion_8_demo() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = run_demo(&RunConfig {
        out: Some(dir.path().to_path_buf()),
        ..RunConfig::default()
    })
    .unwrap();
    let mut problems = Vec::new();
    let mut sup: f64 = 0.0;
    for q in [0, 1] {
        let text = std::fs::read_to_string(dir.path().join(format!("demo_q{q}.csv"))).unwrap();
        let mut lines = text.lines();
        if lines.next() != Some(SOLUTION_HEADER) {
            problems.push(format!("q = {q}: bad header"));
        }
        let mut slabs = std::collections::BTreeSet::new();
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            let ok = cols.len() == 6
                && cols[0].parse::<usize>().map(|n| slabs.insert(n)).is_ok()
                && [1, 4, 5].iter().all(|&i| cols[i].parse::<f64>().is_ok_and(f64::is_finite))
                && (cols[2] == "+" || cols[2] == "-")
                && (cols[3] == "1" || cols[3] == "2");
            if !ok {
                problems.push(format!("q = {q}: malformed row {line:?}"));
                break;
            }
            sup = sup.max(cols[5].parse::<f64>().unwrap().abs());
        }
        if slabs.len() != 10 {
            problems.push(format!("q = {q}: {} slabs in output", slabs.len()));
        }
    }
    let interfaces = std::fs::read_to_string(dir.path().join("demo_interfaces.csv")).unwrap();
    if interfaces.lines().count() != 11 {
        problems.push("interface table does not have 10 rows".into());
    }
    let runs_sup = out.runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let elapsed = t.elapsed().as_secs_f64();
    let pass = problems.is_empty() && sup < 1.1 && runs_sup < 1.1 && elapsed <= 5.0;
    let detail = format!(
        "sup |u_h| {sup:.4} (< 1.1) for q = 0, 1; runtime {elapsed:.2} s (≤ 5 s); {}",
        if problems.is_empty() { "CSV well-formed".to_string() } else { problems.join(", ") }
    );
    verdict(8, "demo", pass, &detail, t);
}
