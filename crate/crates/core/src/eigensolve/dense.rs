use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{Mat, Par, Side};

/// All eigenpairs of a dense pencil, eigenvalues ascending, eigenvectors
/// M-orthonormal.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn to_mat(a: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(a.len(), a.len(), |i, j| a[i][j])
}

/// Lower Cholesky factor, `None` unless `a` is positive definite.
pub(crate) fn cholesky(a: &[Vec<f64>]) -> Option<Mat<f64>> {
    to_mat(a).llt(Side::Lower).ok().map(|llt| llt.L().to_owned())
}

/// Solves `S v = lambda M v` through `M = L L^T` and the standard problem
/// for `L^{-1} S L^{-T}`. Returns `None` if `M` is not positive definite.
pub fn dense_generalized_eigen(s: &[Vec<f64>], m: &[Vec<f64>]) -> Option<DenseEigen> {
    let n = s.len();
    let l = cholesky(m)?;
    let mut x = to_mat(s);
    solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let eig = c.self_adjoint_eigen(Side::Lower).ok()?;
    let mut y = eig.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), y.as_mut(), Par::Seq);
    let values = (0..n).map(|k| eig.S()[k]).collect();
    let vectors = (0..n)
        .map(|k| (0..n).map(|i| y[(i, k)]).collect())
        .collect();
    Some(DenseEigen { values, vectors })
}
