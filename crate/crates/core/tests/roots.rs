use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use extbound::geometry::{DomainKind, DomainSpec};
use extbound::roots::{
    solve_unit_root, sweep_F, write_sweep_csv, Discretization, FEvaluator, Problem, F_discrete,
    DEFAULT_TOL_ROOT,
};
use extbound::Error;
use proptest::prelude::*;

fn spec(kind: DomainKind, r: f64, h: f64) -> DomainSpec {
    DomainSpec::new(kind, r, h).unwrap()
}

fn disc() -> Discretization {
    Discretization::default()
}

fn coarse_specs() -> Vec<(DomainSpec, Problem)> {
    vec![
        (spec(DomainKind::HalfPlane, 5.0, 0.25), Problem::Robin),
        (spec(DomainKind::wedge(FRAC_PI_2).unwrap(), 5.0, 0.25), Problem::Robin),
        (spec(DomainKind::wedge_complement(FRAC_PI_3).unwrap(), 5.0, 0.3), Problem::Robin),
        (DomainSpec::bounded(DomainKind::rectangle(1.0, 2.0).unwrap(), 0.1).unwrap(), Problem::Robin),
        (spec(DomainKind::HalfPlane, 4.0, 0.25), Problem::Delta),
        (DomainSpec::bounded(DomainKind::rectangle(1.0, 1.0).unwrap(), 0.2).unwrap(), Problem::Delta),
    ]
}

#[test]
fn nonnegative_at_zero() {
    for (s, p) in coarse_specs() {
        let (v, r) = F_discrete(&s, 0.0, p, &disc()).unwrap();
        assert!(v >= -1e-10, "{} {}: {v}", s.kind, p.name());
        assert_eq!(v, r.eigenvalue);
        let pts = sweep_F(&s, p, &disc(), &[0.0]).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].ground_eigenvalue >= -1e-10);
    }
}

#[test]
fn sweeps_monotone_with_one_crossing() {
    for (s, p) in coarse_specs() {
        let couplings: Vec<f64> = match p {
            Problem::Robin => (0..=16).map(|k| 0.125 * k as f64).collect(),
            Problem::Delta => (0..=16).map(|k| 0.25 * k as f64).collect(),
        };
        let pts = sweep_F(&s, p, &disc(), &couplings).unwrap();
        for w in pts.windows(2) {
            let (a, b) = (w[0].ground_eigenvalue, w[1].ground_eigenvalue);
            assert!(b <= a + 1e-8 * a.abs().max(1.0), "{}: {a} -> {b}", s.kind);
            if a < -1e-8 {
                assert!(b < a, "{}: flat at {}", s.kind, w[0].coupling);
            }
        }
        let changes = pts
            .windows(2)
            .filter(|w| (w[0].ground_eigenvalue > -1.0) != (w[1].ground_eigenvalue > -1.0))
            .count();
        assert_eq!(changes, 1, "{} {}", s.kind, p.name());
    }
}

#[test]
fn unit_square_curve_below_constant_bound() {
    let s = DomainSpec::bounded(DomainKind::rectangle(1.0, 1.0).unwrap(), 0.1).unwrap();
    for p in sweep_F(&s, Problem::Robin, &disc(), &[0.1, 0.2]).unwrap() {
        assert!(p.ground_eigenvalue <= -4.0 * p.coupling, "{p:?}");
    }
    let root = solve_unit_root(&s, Problem::Robin, &disc(), DEFAULT_TOL_ROOT).unwrap();
    assert!(root.certified_upper() <= 0.25 + 1e-10, "{root:?}");
}

#[test]
fn halfplane_sweep_tracks_minus_beta_squared() {
    // Truncation shifts F by about (pi / 2R)^2, so relative accuracy at
    // small beta needs a wide disc.
    let s = spec(DomainKind::HalfPlane, 24.0, 0.1);
    let pts = sweep_F(&s, Problem::Robin, &disc(), &[0.5, 1.0, 1.5]).unwrap();
    for p in pts {
        let exact = -p.coupling * p.coupling;
        assert!(p.ground_eigenvalue >= exact, "{p:?}");
        assert!((p.ground_eigenvalue - exact).abs() <= 0.03 * exact.abs(), "{p:?}");
    }
}

#[test]
fn right_wedge_root() {
    let s = spec(DomainKind::wedge(FRAC_PI_2).unwrap(), 8.0, 0.05);
    let r = solve_unit_root(&s, Problem::Robin, &disc(), 1e-4).unwrap();
    let exact = (PI / 4.0).sin();
    assert!((r.root - exact).abs() <= 0.02 * exact, "{}", r.root);
    assert!(r.root >= exact - 1e-4);
}

#[test]
fn wedge_complement_root() {
    let s = spec(DomainKind::wedge_complement(FRAC_PI_2).unwrap(), 24.0, 0.2);
    let r = solve_unit_root(&s, Problem::Robin, &disc(), 1e-4).unwrap();
    assert!((r.root - 1.0).abs() <= 0.02, "{}", r.root);
    assert!(r.root >= 1.0 - 1e-4);
}

#[test]
fn bracket_structure() {
    let s = spec(DomainKind::wedge(FRAC_PI_3).unwrap(), 4.0, 0.25);
    let tol = 1e-3;
    let r = solve_unit_root(&s, Problem::Robin, &disc(), tol).unwrap();
    let (lo, hi) = r.bracket;
    assert!(hi - lo <= tol && lo <= r.root && r.root <= hi);
    assert_eq!(r.certified_upper(), hi);
    assert!(r.certified_side);
    let at = |c: f64| r.evaluations.iter().find(|e| e.0 == c).unwrap().1;
    assert!(at(hi) < -1.0);
    if lo > 0.0 {
        assert!(at(lo) > -1.0);
    }
    assert!(r.num_dofs > 0);
}

#[test]
fn refinement_lowers_root() {
    for (kind, p) in [
        (DomainKind::wedge(FRAC_PI_2).unwrap(), Problem::Robin),
        (DomainKind::HalfPlane, Problem::Delta),
    ] {
        let s = spec(kind, 3.0, 0.4);
        let coarse = solve_unit_root(&s, p, &disc(), 1e-4).unwrap();
        let fine_disc = Discretization { refinements: 1, ..disc() };
        let fine = solve_unit_root(&s, p, &fine_disc, 1e-4).unwrap();
        assert!(fine.root <= coarse.root + 1e-4, "{}: {} > {}", s.kind, fine.root, coarse.root);
        assert!(fine.num_dofs > coarse.num_dofs);
    }
}

#[test]
fn roots_on_certified_side() {
    for (kind, exact) in [
        (DomainKind::HalfPlane, 1.0),
        (DomainKind::wedge(FRAC_PI_3).unwrap(), 0.5),
        (DomainKind::wedge(2.0 * FRAC_PI_3).unwrap(), (FRAC_PI_3).sin()),
        (DomainKind::wedge_complement(FRAC_PI_2).unwrap(), 1.0),
    ] {
        let s = spec(kind, 4.0, 0.3);
        let r = solve_unit_root(&s, Problem::Robin, &disc(), 1e-4).unwrap();
        assert!(r.root >= exact - 1e-4, "{}: {} < {exact}", s.kind, r.root);
    }
}

#[test]
fn evaluator_matches_free_function() {
    let s = spec(DomainKind::wedge(1.0).unwrap(), 3.0, 0.3);
    let mut ev = FEvaluator::new(&s, Problem::Robin, &disc()).unwrap();
    for c in [0.3, 1.7, 0.9] {
        let a = ev.eval(c).unwrap().eigenvalue;
        let (b, _) = F_discrete(&s, c, Problem::Robin, &disc()).unwrap();
        assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn invalid_couplings_rejected() {
    let s = spec(DomainKind::HalfPlane, 2.0, 0.4);
    assert!(matches!(sweep_F(&s, Problem::Robin, &disc(), &[1.0, 0.5]), Err(Error::InvalidInput(_))));
    assert!(matches!(sweep_F(&s, Problem::Robin, &disc(), &[-1.0]), Err(Error::InvalidInput(_))));
    assert!(matches!(F_discrete(&s, f64::NAN, Problem::Robin, &disc()), Err(Error::InvalidInput(_))));
    assert!(matches!(solve_unit_root(&s, Problem::Robin, &disc(), 0.0), Err(Error::InvalidInput(_))));
}

#[test]
fn sweep_csv_layout() {
    let s = spec(DomainKind::HalfPlane, 2.0, 0.4);
    let pts = sweep_F(&s, Problem::Robin, &disc(), &[0.0, 1.0]).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&pts, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "coupling,ground_eigenvalue,residual,iterations");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("1,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_sweeps_non_increasing(
        phi in 0.8f64..PI,
        mut betas in prop::collection::vec(0.0f64..3.0, 2..6),
    ) {
        betas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s = spec(DomainKind::wedge(phi).unwrap(), 3.0, 0.3);
        let pts = sweep_F(&s, Problem::Robin, &disc(), &betas).unwrap();
        for w in pts.windows(2) {
            let (a, b) = (w[0].ground_eigenvalue, w[1].ground_eigenvalue);
            prop_assert!(b <= a + 1e-8 * a.abs().max(1.0), "{} -> {}", a, b);
        }
        for p in &pts {
            let bound = -p.coupling * p.coupling / (phi / 2.0).sin().powi(2);
            prop_assert!(p.ground_eigenvalue >= bound - 1e-8 * bound.abs().max(1.0),
                "F_h({}) = {} below exact {}", p.coupling, p.ground_eigenvalue, bound);
        }
    }
}
