//! Dense floating-point helpers built on nalgebra's SVD.

use crate::lorentz::{Matrix, Vector};

/// Singular values in decreasing order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Number of singular values above `tol * sigma_max`. The zero matrix has rank 0.
pub fn numeric_rank(m: &Matrix, tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&top) if top <= f64::MIN_POSITIVE => 0,
        Some(&top) => s.iter().filter(|&&x| x > tol * top).count(),
    }
}

/// Orthonormal basis (columns) of the right null space of `m`.
///
/// Singular values at most `tol * max(sigma_max, 1e-300)` count as zero.
pub fn null_space(m: &Matrix, tol: f64) -> Matrix {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return Matrix::identity(cols, cols);
    }
    // Pad to at least as many rows as columns so the SVD returns a full V.
    let padded = if m.nrows() < cols {
        let mut p = Matrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol * top.max(1e-300) {
            basis.push(vt.row(i).transpose());
        }
    }
    if basis.is_empty() {
        Matrix::zeros(cols, 0)
    } else {
        Matrix::from_columns(&basis)
    }
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space(m: &Matrix, tol: f64) -> Matrix {
    if m.ncols() == 0 {
        return Matrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > tol * top && top > 1e-300)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        Matrix::zeros(m.nrows(), 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Matrix whose columns are the given vectors.
pub fn columns(vs: &[Vector]) -> Matrix {
    if vs.is_empty() {
        return Matrix::zeros(0, 0);
    }
    Matrix::from_columns(vs)
}

/// Matrix whose rows are the given vectors.
pub fn rows(vs: &[Vector], len: usize) -> Matrix {
    let mut m = Matrix::zeros(vs.len(), len);
    for (i, v) in vs.iter().enumerate() {
        m.set_row(i, &v.transpose());
    }
    m
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |a, b| a.max(b.abs()))
}
