use std::f64::consts::FRAC_PI_2;

use extbound::assembly::{assemble, pencil, SymSparse};
use extbound::eigensolve::{
    largest_eigenpair, smallest_eigenpair, EigenError, EigenOptions, Method, PencilSolver,
};
use extbound::geometry::{build_mesh, BoundaryTag, DomainKind, DomainSpec};
use proptest::prelude::*;

/// Eigenvalues (ascending) of a dense symmetric matrix by cyclic Jacobi.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// Eigenvalues of the pencil `(s, m)` through `L^{-1} S L^{-T}`.
fn pencil_oracle(s: &[Vec<f64>], m: &[Vec<f64>]) -> Vec<f64> {
    let n = s.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = m[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            l[i][j] = (m[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / l[j][j];
        }
    }
    // X = L^{-1} S, then C = X L^{-T} = (L^{-1} X^T)^T.
    let forward = |b: &[f64]| {
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
        }
        y
    };
    let cols: Vec<Vec<f64>> = (0..n).map(|j| forward(&(0..n).map(|i| s[i][j]).collect::<Vec<_>>())).collect();
    let x: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
    let c_cols: Vec<Vec<f64>> = (0..n).map(|i| forward(&x[i])).collect();
    let c: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (c_cols[i][j] + c_cols[j][i])).collect())
        .collect();
    jacobi_eigenvalues(c)
}

fn pencil_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..=50).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-1.0f64..1.0, n * n),
        )
            .prop_map(move |(a, g)| {
                let s: Vec<Vec<f64>> = (0..n)
                    .map(|i| (0..n).map(|j| a[i.max(j) * n + i.min(j)]).collect())
                    .collect();
                let m: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                (0..n).map(|k| g[k * n + i] * g[k * n + j]).sum::<f64>() / n as f64
                                    + if i == j { 1.0 } else { 0.0 }
                            })
                            .collect()
                    })
                    .collect();
                (s, m)
            })
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(1.0)
}

#[test]
fn identity_pencil() {
    let id = SymSparse::identity(5);
    let r = smallest_eigenpair(&id, &id, 1e-10, 100).unwrap();
    assert!((r.eigenvalue - 1.0).abs() < 1e-14);
    assert!((id.quadratic_form(&r.eigenvector) - 1.0).abs() < 1e-10);
}

#[test]
fn diagonal_pencil() {
    let s = SymSparse::diagonal(&[3.0, -2.0, 7.0]).unwrap();
    let id = SymSparse::identity(3);
    let lo = smallest_eigenpair(&s, &id, 1e-10, 100).unwrap();
    assert!((lo.eigenvalue + 2.0).abs() < 1e-14);
    assert!((lo.eigenvector[1] - 1.0).abs() < 1e-12);
    assert!(lo.eigenvector[0].abs() < 1e-12 && lo.eigenvector[2].abs() < 1e-12);
    let hi = largest_eigenpair(&s, &id, 1e-10, 100).unwrap();
    assert!((hi.eigenvalue - 7.0).abs() < 1e-14);
}

#[test]
fn scaled_pencil_largest() {
    let m = SymSparse::from_dense(&[
        vec![4.0, 1.0, 0.0, 0.5],
        vec![1.0, 3.0, 0.2, 0.0],
        vec![0.0, 0.2, 2.0, 0.1],
        vec![0.5, 0.0, 0.1, 1.0],
    ])
    .unwrap();
    let r = largest_eigenpair(&m.scaled(2.0), &m, 1e-10, 100).unwrap();
    assert!((r.eigenvalue - 2.0).abs() < 1e-12);
}

#[test]
fn random_spd_six_largest() {
    let g: Vec<f64> = (0..36).map(|k| ((k * 37 % 17) as f64 - 8.0) / 8.0).collect();
    let s: Vec<Vec<f64>> = (0..6)
        .map(|i| (0..6).map(|j| (0..6).map(|k| g[k * 6 + i] * g[k * 6 + j]).sum::<f64>() + if i == j { 0.3 } else { 0.0 }).collect())
        .collect();
    let m: Vec<Vec<f64>> = (0..6usize)
        .map(|i| (0..6).map(|j| if i == j { 1.0 + 0.1 * i as f64 } else if i.abs_diff(j) == 1 { 0.2 } else { 0.0 }).collect())
        .collect();
    let want = *pencil_oracle(&s, &m).last().unwrap();
    let (ss, ms) = (SymSparse::from_dense(&s).unwrap(), SymSparse::from_dense(&m).unwrap());
    for method in [Method::Auto, Method::Krylov] {
        let opts = EigenOptions { method, ..Default::default() };
        let r = PencilSolver::new(ms.clone()).largest(&ss, &opts).unwrap();
        assert!(close(r.eigenvalue, want, 1e-8), "{method:?}: {} vs {want}", r.eigenvalue);
    }
}

#[test]
fn indefinite_mass_reported() {
    let m = SymSparse::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    let s = SymSparse::identity(2);
    let err = smallest_eigenpair(&s, &m, 1e-9, 10).unwrap_err();
    assert!(matches!(err, EigenError::IndefiniteMass));
}

#[test]
fn invalid_arguments() {
    let id = SymSparse::identity(3);
    assert!(matches!(
        smallest_eigenpair(&id, &SymSparse::identity(4), 1e-9, 10),
        Err(EigenError::DimensionMismatch(..))
    ));
    assert!(matches!(
        smallest_eigenpair(&id, &id, 0.0, 10),
        Err(EigenError::InvalidTolerance(_))
    ));
}

/// `-u''` on (0, 10) with `-beta u(0)^2`, Dirichlet at 10, `n` nodes:
/// forward differences and trapezoidal (diagonal) mass.
fn robin_fd(n: usize, beta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = 10.0 / n as f64;
    let mut d = vec![2.0 / h; n];
    d[0] = 1.0 / h - beta;
    let e = vec![-1.0 / h; n - 1];
    let mut w = vec![h; n];
    w[0] = h / 2.0;
    (d, e, w)
}

/// Smallest eigenvalue of the tridiagonal pencil by Sturm-sequence bisection.
fn sturm_smallest(d: &[f64], e: &[f64], w: &[f64]) -> f64 {
    let n = d.len();
    let dd: Vec<f64> = (0..n).map(|i| d[i] / w[i]).collect();
    let ee: Vec<f64> = (0..n - 1).map(|i| e[i] / (w[i] * w[i + 1]).sqrt()).collect();
    let below = |x: f64| {
        let mut count = 0;
        let mut q = dd[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let q_prev = if q == 0.0 { 1e-300 } else { q };
            q = dd[i] - x - ee[i - 1] * ee[i - 1] / q_prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let radius = |i: usize| {
        (if i > 0 { ee[i - 1].abs() } else { 0.0 }) + (if i + 1 < n { ee[i].abs() } else { 0.0 })
    };
    let mut lo = (0..n).map(|i| dd[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| dd[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn robin_surrogate_1d() {
    let n = 2000;
    let (d, e, w) = robin_fd(n, 1.0);
    let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, d[i])).collect();
    trip.extend((0..n - 1).map(|i| (i, i + 1, e[i])));
    let s = SymSparse::from_triplets(n, &trip).unwrap();
    let m = SymSparse::diagonal(&w).unwrap();
    let r = smallest_eigenpair(&s, &m, 1e-9, 500).unwrap();
    let oracle = sturm_smallest(&d, &e, &w);
    assert!((r.eigenvalue + 1.0).abs() < 1e-3, "{}", r.eigenvalue);
    assert!(close(r.eigenvalue, oracle, 1e-8), "{} vs {oracle}", r.eigenvalue);
    assert!(r.relative_residual <= 1e-9);
    assert!((m.quadratic_form(&r.eigenvector) - 1.0).abs() < 1e-10);
}

#[test]
fn deterministic_results() {
    let mesh = build_mesh(&DomainSpec::new(DomainKind::wedge(FRAC_PI_2).unwrap(), 4.0, 0.15).unwrap()).unwrap();
    let f = assemble(&mesh, BoundaryTag::Robin).unwrap();
    let s = pencil(&f, 1.0);
    let a = smallest_eigenpair(&s, &f.m, 1e-9, 500).unwrap();
    let b = smallest_eigenpair(&s, &f.m, 1e-9, 500).unwrap();
    assert_eq!(a, b);
}

#[test]
fn non_convergence_reported() {
    let mesh = build_mesh(&DomainSpec::new(DomainKind::HalfPlane, 4.0, 0.2).unwrap()).unwrap();
    let f = assemble(&mesh, BoundaryTag::Robin).unwrap();
    let err = smallest_eigenpair(&pencil(&f, 1.0), &f.m, 1e-12, 1).unwrap_err();
    assert!(matches!(err, EigenError::NonConvergence { iterations: 1, .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dense_oracle_agreement((s, m) in pencil_strategy()) {
        let oracle = pencil_oracle(&s, &m);
        let (lo, hi) = (oracle[0], *oracle.last().unwrap());
        let (ss, ms) = (SymSparse::from_dense(&s).unwrap(), SymSparse::from_dense(&m).unwrap());
        for method in [Method::Auto, Method::Krylov] {
            let opts = EigenOptions { method, ..Default::default() };
            let mut solver = PencilSolver::new(ms.clone());
            let a = solver.smallest(&ss, &opts).unwrap();
            let b = solver.largest(&ss, &opts).unwrap();
            prop_assert!(close(a.eigenvalue, lo, 1e-8), "{:?} min {} vs {}", method, a.eigenvalue, lo);
            prop_assert!(close(b.eigenvalue, hi, 1e-8), "{:?} max {} vs {}", method, b.eigenvalue, hi);
            prop_assert!((ms.quadratic_form(&a.eigenvector) - 1.0).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shift_identity(sigma in -10.0f64..10.0, beta in 0.0f64..3.0) {
        let mesh = build_mesh(&DomainSpec::new(DomainKind::wedge(1.2).unwrap(), 3.0, 0.15).unwrap()).unwrap();
        let f = assemble(&mesh, BoundaryTag::Robin).unwrap();
        prop_assume!(f.num_dofs() > 200);
        let tol = 1e-9;
        let s = pencil(&f, beta);
        let base = smallest_eigenpair(&s, &f.m, tol, 500).unwrap().eigenvalue;
        let shifted = smallest_eigenpair(&s.combine(1.0, &f.m, sigma).unwrap(), &f.m, tol, 500).unwrap().eigenvalue;
        let scale = (base.abs() + sigma.abs()).max(1.0);
        prop_assert!((shifted - base - sigma).abs() <= 10.0 * tol * scale,
            "sigma {sigma}: {shifted} vs {}", base + sigma);
    }
}
