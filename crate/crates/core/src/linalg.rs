//! Small dense helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn cholesky(a: &Mat, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("{what}: matrix is not square")));
    }
    Cholesky::new(a.clone()).ok_or_else(|| Error::Singular(what.to_string()))
}

pub fn spd_solve(a: &Mat, b: &Vector, what: &str) -> Result<Vector> {
    Ok(cholesky(a, what)?.solve(b))
}

pub fn spd_solve_mat(a: &Mat, b: &Mat, what: &str) -> Result<Mat> {
    Ok(cholesky(a, what)?.solve(b))
}

pub fn spd_inverse(a: &Mat, what: &str) -> Result<Mat> {
    Ok(cholesky(a, what)?.inverse())
}

/// LU solve for matrices that are not guaranteed to be positive definite.
pub fn lu_solve(a: &Mat, b: &Vector, what: &str) -> Result<Vector> {
    let lu = a.clone().lu();
    let x = lu.solve(b).ok_or_else(|| Error::Singular(what.to_string()))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular(what.to_string()))
    }
}

pub fn select_columns(x: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(x.nrows(), idx.len(), |i, j| x[(i, idx[j])])
}

pub fn select_rows(x: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

pub fn select_entries(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub fn sub_block(a: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn symmetrize(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Positive semidefinite up to `tol` scaled by the largest eigenvalue magnitude.
pub fn is_psd(a: &Mat, tol: f64) -> bool {
    let ev = sym_eigenvalues(&symmetrize(a));
    let scale = ev.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    ev.first().map_or(true, |&min| min >= -tol * scale)
}

/// `n` log-spaced points from `hi` down to `lo`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
