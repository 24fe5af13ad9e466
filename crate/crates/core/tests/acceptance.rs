//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines print in order.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use extbound::analytic::{
    asymptotic_band, build_report, rectangle_lower_bound, wedge_lower_bound, Mode,
};
use extbound::geometry::{build_mesh, DomainKind, DomainSpec};
use extbound::reflection::{build_mirror_mesh, discrete_operator_norm, verify_gradient_identities};
use extbound::roots::{
    solve_unit_root, solve_unit_root_with, Discretization, FEvaluator, Problem, DEFAULT_TOL_ROOT,
};
use extbound::verify::{run_suite, VerifyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn spec(kind: DomainKind, r: f64, h: f64) -> Result<DomainSpec, String> {
    lib(DomainSpec::new(kind, r, h))
}

fn rel(x: f64, exact: f64) -> f64 {
    (x - exact).abs() / exact
}

const TOL: f64 = DEFAULT_TOL_ROOT;

fn c1_halfplane_robin() -> Outcome {
    let start = Instant::now();
    let s = spec(DomainKind::HalfPlane, 12.0, 0.05)?;
    let mut ev = lib(FEvaluator::new(&s, Problem::Robin, &Discretization::default()))?;
    let r = lib(solve_unit_root_with(&mut ev, TOL))?;
    let secs = start.elapsed().as_secs_f64();
    let f1 = lib(ev.eval(1.0))?.eigenvalue;
    ensure((0.98..=1.02).contains(&r.root), || format!("root {} outside [0.98, 1.02]", r.root))?;
    ensure(r.root >= 0.9999 - TOL, || format!("root {} below certified side", r.root))?;
    ensure((-1.0..=-0.97).contains(&f1), || format!("F(1) = {f1} outside [-1, -0.97]"))?;
    ensure(secs <= 60.0, || format!("root took {secs:.1} s > 60 s"))?;
    Ok(format!("root {:.5}, F(1) = {f1:.5}, {} dofs, solve {secs:.1} s", r.root, r.num_dofs))
}

fn c2_wedge_roots() -> Outcome {
    let disc = Discretization::default();
    let mut out = Vec::new();
    for phi in [FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3] {
        let start = Instant::now();
        let r = lib(solve_unit_root(&spec(lib(DomainKind::wedge(phi))?, 8.0, 0.05)?, Problem::Robin, &disc, TOL))?;
        let secs = start.elapsed().as_secs_f64();
        let exact = (phi / 2.0).sin();
        ensure(rel(r.root, exact) <= 0.02, || format!("phi = {phi:.4}: root {} vs {exact}", r.root))?;
        ensure(secs <= 60.0, || format!("phi = {phi:.4}: {secs:.1} s"))?;
        out.push(format!("wedge {:.5} ({:.2}%, {secs:.1} s)", r.root, 100.0 * rel(r.root, exact)));
    }
    // The complement ground state spreads along the rays, so truncation at
    // R = 8 costs about 5%; R = 24 keeps it under 1%.
    for phi in [FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3] {
        let start = Instant::now();
        let kind = lib(DomainKind::wedge_complement(phi))?;
        let r = lib(solve_unit_root(&spec(kind, 24.0, 0.2)?, Problem::Robin, &disc, TOL))?;
        let secs = start.elapsed().as_secs_f64();
        ensure(rel(r.root, 1.0) <= 0.02, || format!("complement phi = {phi:.4}: root {}", r.root))?;
        ensure(secs <= 60.0, || format!("complement phi = {phi:.4}: {secs:.1} s"))?;
        out.push(format!("complement {:.5} ({secs:.1} s)", r.root));
    }
    let kind = lib(DomainKind::wedge_complement(FRAC_PI_2))?;
    let short = lib(solve_unit_root(&spec(kind, 8.0, 0.1)?, Problem::Robin, &disc, TOL))?;
    out.push(format!("[info: complement at R = 8 gives {:.4}]", short.root));
    Ok(out.join(", "))
}

fn c3_halfplane_delta() -> Outcome {
    let start = Instant::now();
    let s = spec(DomainKind::HalfPlane, 12.0, 0.05)?;
    let mut ev = lib(FEvaluator::new(&s, Problem::Delta, &Discretization::default()))?;
    let r = lib(solve_unit_root_with(&mut ev, TOL))?;
    let secs = start.elapsed().as_secs_f64();
    let f2 = lib(ev.eval(2.0))?.eigenvalue;
    ensure(rel(r.root, 2.0) <= 0.02, || format!("root {} vs 2", r.root))?;
    ensure(r.root >= 2.0 - TOL, || format!("root {} below certified side", r.root))?;
    ensure((-1.0..=-0.97).contains(&f2), || format!("F(2) = {f2} outside [-1, -0.97]"))?;
    ensure(secs <= 90.0, || format!("root took {secs:.1} s > 90 s"))?;
    Ok(format!("root {:.5}, F(2) = {f2:.5}, {} dofs, solve {secs:.1} s", r.root, r.num_dofs))
}

fn c4_bound_consistency() -> Outcome {
    let exact = (1.0 + SQRT_2).sqrt();
    let s = spec(lib(DomainKind::wedge(FRAC_PI_2))?, 8.0, 0.1)?;
    let disc = Discretization::default();
    let est = lib(build_report(&s, &disc, TOL, Mode::NumericEstimate))?;
    let ana = lib(build_report(&s, &disc, TOL, Mode::Analytic))?;
    ensure(rel(est.lower_bound_robin, exact) <= 0.03, || {
        format!("FEM bound {} vs {exact}", est.lower_bound_robin)
    })?;
    ensure((ana.lower_bound_robin - exact).abs() <= 1e-12, || {
        format!("analytic bound {} vs {exact}", ana.lower_bound_robin)
    })?;
    Ok(format!(
        "FEM {:.5} ({:.2}%), analytic {:.12}",
        est.lower_bound_robin,
        100.0 * rel(est.lower_bound_robin, exact),
        ana.lower_bound_robin
    ))
}

fn c5_rectangle() -> Outcome {
    let v = lib(rectangle_lower_bound(1.0, 1.0))?;
    ensure((v - 5f64.sqrt()).abs() <= 1e-12, || format!("analytic {v}"))?;
    let s = lib(DomainSpec::bounded(lib(DomainKind::rectangle(1.0, 1.0))?, 0.1))?;
    let r = lib(solve_unit_root(&s, Problem::Robin, &Discretization::default(), TOL))?;
    ensure(r.certified_upper() <= 0.25 + 1e-10, || format!("FEM beta {}", r.certified_upper()))?;
    Ok(format!("analytic {v:.12}, FEM beta <= {:.6}", r.certified_upper()))
}

fn c6_reflection() -> Outcome {
    let wedge = |phi: f64| -> Result<_, String> {
        let kind = if phi >= PI { DomainKind::HalfPlane } else { lib(DomainKind::wedge(phi))? };
        lib(build_mesh(&spec(kind, 8.0, 0.1)?))
    };
    let right = wedge(FRAC_PI_2)?;
    let mirror = lib(build_mirror_mesh(&right))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f: Vec<f64> = (0..mirror.wedge.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = lib(verify_gradient_identities(&mirror, &f))?;
        worst = worst.max((d.l2_full - 2.0 * d.l2_wedge).abs() / d.l2_wedge);
    }
    ensure(worst <= 1e-10, || format!("L2 doubling defect {worst:e}"))?;
    // For the half-plane the pencil is exactly 2 Q_1, so the value is sqrt 2
    // up to rounding in the last place.
    let hp = lib(discrete_operator_norm(&wedge(PI)?))?.value;
    ensure(hp >= SQRT_2 - 1e-3 && hp <= SQRT_2 + 1e-12, || format!("half-plane norm {hp}"))?;
    let rn = lib(discrete_operator_norm(&right))?.value;
    ensure(rn <= 2.61313 + 1e-6, || format!("right-angle norm {rn}"))?;
    Ok(format!("L2 defect {worst:.1e}, norm(pi) {hp:.15}, norm(pi/2) {rn:.5}"))
}

fn c7_property_suite() -> Outcome {
    let start = Instant::now();
    let report = run_suite(&VerifyConfig::default(), None);
    let secs = start.elapsed().as_secs_f64();
    for c in &report.checks {
        println!(
            "    {} {}::{} ({:.2} s) {}",
            if c.passed { "ok  " } else { "FAIL" },
            c.module,
            c.name,
            c.seconds,
            c.detail
        );
    }
    ensure(report.all_passed(), || format!("{} verify checks failed", report.failures()))?;
    ensure(secs <= 300.0, || format!("verify took {secs:.1} s > 300 s"))?;
    Ok(format!("{} checks, {secs:.1} s", report.checks.len()))
}

fn c8_asymptotic_band() -> Outcome {
    let mut out = Vec::new();
    for theta in [0.05, 0.1, 0.2] {
        let b = lib(asymptotic_band(theta))?;
        let lo = lib(wedge_lower_bound(PI - theta))?;
        ensure((lo - b.low).abs() <= 1e-3, || format!("theta {theta}: lower {lo} vs {}", b.low))?;
        ensure((b.exact_upper - b.high).abs() <= 1e-2, || {
            format!("theta {theta}: upper {} vs {}", b.exact_upper, b.high)
        })?;
        out.push(format!(
            "{theta}: {:.1e}/{:.1e}",
            (lo - b.low).abs(),
            (b.exact_upper - b.high).abs()
        ));
    }
    Ok(format!("remainders {}", out.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 half-plane Robin root", c1_halfplane_robin),
        ("2 wedge and complement roots", c2_wedge_roots),
        ("3 half-plane delta root", c3_halfplane_delta),
        ("4 FEM and analytic bound agree", c4_bound_consistency),
        ("5 rectangle", c5_rectangle),
        ("6 reflection operator", c6_reflection),
        ("7 property suite", c7_property_suite),
        ("8 asymptotic band", c8_asymptotic_band),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {name} ({secs:.1} s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1} s): {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
