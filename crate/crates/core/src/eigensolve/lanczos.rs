use faer::{Mat, Side};

use super::{default_start, dot, finish, EigenError, EigenOptions, Factor, PencilSolver, Result, SpectralResult};
use crate::assembly::SymSparse;

const MAX_SHIFT_TRIES: usize = 60;
const RESHIFT_ESTIMATE: f64 = 1e-3;

/// Distance kept between a shift and an eigenvalue estimate.
fn hint_gap(estimate: f64) -> f64 {
    0.05 * estimate.abs().max(0.1)
}

/// Finds `sigma` with `S - sigma M` positive definite, starting from
/// `first` and moving down by `delta`, quadrupling the step on every
/// failed factorization.
fn shift_below(
    solver: &mut PencilSolver,
    s: &SymSparse,
    m: &SymSparse,
    first: f64,
    mut delta: f64,
) -> Result<(f64, Factor)> {
    for _ in 0..MAX_SHIFT_TRIES {
        let sigma = first - delta;
        let k = s.combine(1.0, m, -sigma).expect("dimensions checked");
        if let Some(f) = solver.factor(&k)? {
            return Ok((sigma, f));
        }
        delta *= 4.0;
    }
    Err(EigenError::ShiftFailure)
}

/// Eigenpairs of the projected matrix, largest first.
fn ritz_pairs(h: &[Vec<f64>]) -> Vec<(f64, Vec<f64>)> {
    let k = h.len();
    let t = Mat::from_fn(k, k, |i, j| h[i][j]);
    let eig = t.self_adjoint_eigen(Side::Lower).expect("projected eigensolve");
    (0..k)
        .rev()
        .map(|c| (eig.S()[c], (0..k).map(|i| eig.U()[(i, c)]).collect()))
        .collect()
}

fn combine_columns(basis: &[Vec<f64>], coeffs: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (qi, &c) in basis.iter().zip(coeffs) {
        out.iter_mut().zip(qi).for_each(|(a, b)| *a += c * b);
    }
}

/// Shift-invert Lanczos in the M inner product with full
/// reorthogonalization. When the basis is full it is compressed to the
/// leading Ritz vectors plus the last residual direction (thick restart),
/// so clustered spectra keep their accumulated information.
pub(super) fn smallest(
    solver: &mut PencilSolver,
    s: &SymSparse,
    opts: &EigenOptions,
) -> Result<SpectralResult> {
    let n = s.dim();
    let m = solver.mass().clone();
    let mut start = opts.start.clone().unwrap_or_else(|| default_start(n));
    if !(m.quadratic_form(&start) > 0.0) {
        start = default_start(n);
    }
    let rho = s.quadratic_form(&start) / m.quadratic_form(&start);
    let (first, delta) = match opts.shift_hint {
        Some(h) if h.is_finite() => (h.min(rho), hint_gap(h)),
        _ => (rho, 0.5 * rho.abs().max(1.0)),
    };
    let (mut sigma, mut factor) = shift_below(solver, s, &m, first, delta)?;
    let mut reshifted = false;

    let max_basis = opts.max_basis.max(4).min(n);
    let keep = (max_basis / 3).max(1);
    let mut iterations = 0;
    let mut best = f64::INFINITY;
    let mut work = vec![0.0; n];
    let mut ritz = vec![0.0; n];

    let mq0 = m.mul_vec(&start);
    let nrm = dot(&start, &mq0).sqrt();
    let mut q: Vec<Vec<f64>> = vec![start.iter().map(|x| x / nrm).collect()];
    let mut mq: Vec<Vec<f64>> = vec![mq0.iter().map(|x| x / nrm).collect()];
    let mut h: Vec<Vec<f64>> = vec![vec![0.0]];
    loop {
        let j = q.len() - 1;
        let mut w = mq[j].clone();
        factor.solve_in_place(&mut w);
        iterations += 1;
        let mut col = vec![0.0; j + 1];
        for _ in 0..2 {
            for (i, (qi, mqi)) in q.iter().zip(&mq).enumerate() {
                let c = dot(&w, mqi);
                col[i] += c;
                w.iter_mut().zip(qi).for_each(|(a, b)| *a -= c * b);
            }
        }
        for (i, &c) in col.iter().enumerate() {
            h[i][j] = c;
            h[j][i] = c;
        }
        m.mul_vec_into(&w, &mut work);
        let b = dot(&w, &work).max(0.0).sqrt();
        let pairs = ritz_pairs(&h);
        let (theta, y) = &pairs[0];
        let estimate = (b * y[j]).abs() / theta.abs();
        let exhausted = b <= 1e-13 * theta.abs() || q.len() == n;
        let basis_full = q.len() >= max_basis;
        let out_of_budget = iterations >= opts.max_iterations;
        let rough = sigma + 1.0 / theta;
        if !reshifted && estimate < RESHIFT_ESTIMATE && rough - sigma > 4.0 * hint_gap(rough) {
            // the first shift was far below the target: move it up once the
            // Ritz value is roughly known, keeping the old factor on failure
            reshifted = true;
            let target = rough - hint_gap(rough);
            let k = s.combine(1.0, &m, -target).expect("dimensions checked");
            if let Some(f) = solver.factor(&k)? {
                factor = f;
                sigma = target;
                combine_columns(&q, y, &mut ritz);
                let mr = m.mul_vec(&ritz);
                let nrm = dot(&ritz, &mr).sqrt();
                q = vec![ritz.iter().map(|x| x / nrm).collect()];
                mq = vec![mr.iter().map(|x| x / nrm).collect()];
                h = vec![vec![0.0]];
                continue;
            }
        }
        if estimate < opts.tol || exhausted || basis_full || out_of_budget {
            combine_columns(&q, y, &mut ritz);
            let lambda = s.quadratic_form(&ritz) / m.quadratic_form(&ritz);
            match finish(s, &m, lambda, ritz.clone(), iterations, opts.tol) {
                Ok(r) => return Ok(r),
                Err(EigenError::NonConvergence { residual, .. }) => best = best.min(residual),
                Err(e) => return Err(e),
            }
            if out_of_budget {
                return Err(EigenError::NonConvergence {
                    iterations,
                    residual: best,
                });
            }
            if exhausted {
                // invariant subspace without meeting the tolerance: restart
                // from the Ritz vector alone
                let mr = m.mul_vec(&ritz);
                let nrm = dot(&ritz, &mr).sqrt();
                q = vec![ritz.iter().map(|x| x / nrm).collect()];
                mq = vec![mr.iter().map(|x| x / nrm).collect()];
                h = vec![vec![0.0]];
                continue;
            }
        }
        if basis_full {
            let kept = &pairs[..keep];
            let mut nq = Vec::with_capacity(max_basis);
            let mut nmq = Vec::with_capacity(max_basis);
            for (_, yk) in kept {
                let mut v = vec![0.0; n];
                combine_columns(&q, yk, &mut v);
                nq.push(v);
                let mut v = vec![0.0; n];
                combine_columns(&mq, yk, &mut v);
                nmq.push(v);
            }
            q = nq;
            mq = nmq;
            h = vec![vec![0.0; keep + 1]; keep + 1];
            for (i, (t, _)) in kept.iter().enumerate() {
                h[i][i] = *t;
            }
        } else {
            for row in &mut h {
                row.push(0.0);
            }
            h.push(vec![0.0; j + 2]);
        }
        q.push(w.iter().map(|x| x / b).collect());
        mq.push(work.iter().map(|x| x / b).collect());
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::assembly::SymSparse;

    /// -u'' on (0, len) with natural condition at 0 minus beta u(0)^2 and
    /// u(len) = 0, linear elements on a uniform grid.
    fn robin_1d(nodes: usize, len: f64, beta: f64) -> (SymSparse, SymSparse) {
        let h = len / (nodes - 1) as f64;
        let n = nodes - 1;
        let mut a = Vec::new();
        let mut m = Vec::new();
        for e in 0..n {
            let (i, j) = (e, e + 1);
            for &(p, q, ka, km) in &[
                (i, i, 1.0 / h, h / 3.0),
                (j, j, 1.0 / h, h / 3.0),
                (i, j, -1.0 / h, h / 6.0),
            ] {
                if p < n && q < n {
                    a.push((p, q, ka));
                    m.push((p, q, km));
                }
            }
        }
        a.push((0, 0, -beta));
        (
            SymSparse::from_triplets(n, &a).unwrap(),
            SymSparse::from_triplets(n, &m).unwrap(),
        )
    }

    #[test]
    fn robin_surrogate_ground_state() {
        let (s, m) = robin_1d(2000, 10.0, 1.0);
        let r = smallest_eigenpair(&s, &m, 1e-9, 500).unwrap();
        assert!((r.eigenvalue + 1.0).abs() < 1e-3, "{}", r.eigenvalue);
        assert!(r.relative_residual <= 1e-9);
        assert!((m.quadratic_form(&r.eigenvector) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sparse_agrees_with_dense_path() {
        let (s, m) = robin_1d(400, 4.0, 0.7);
        let dense = dense_generalized_eigen(&s.to_dense(), &m.to_dense()).unwrap();
        let r = smallest_eigenpair(&s, &m, 1e-10, 500).unwrap();
        assert!((r.eigenvalue - dense.values[0]).abs() < 1e-8);
        let r = largest_eigenpair(&s, &m, 1e-10, 500).unwrap();
        let top = *dense.values.last().unwrap();
        assert!((r.eigenvalue - top).abs() < 1e-8 * top.abs());
    }

    #[test]
    fn shift_hint_from_above_still_finds_minimum() {
        let (s, m) = robin_1d(600, 6.0, 1.3);
        let plain = smallest_eigenpair(&s, &m, 1e-9, 500).unwrap();
        let mut solver = PencilSolver::new(m.clone());
        let opts = EigenOptions {
            shift_hint: Some(5.0),
            ..Default::default()
        };
        let hinted = solver.smallest(&s, &opts).unwrap();
        assert!((plain.eigenvalue - hinted.eigenvalue).abs() < 1e-9);
    }
}
