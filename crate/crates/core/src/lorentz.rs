//! Minkowski space `R^{n,1}` with the form `x . y = -x0 y0 + x1 y1 + ... + xn yn`.
//!
//! Vectors have length `n + 1` and index 0 is the timelike coordinate. The
//! hyperboloid model is `H = { x : x . x = -1, x0 > 0 }`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Gram matrix `diag(-1, 1, ..., 1)` of size `len`.
pub fn form(len: usize) -> Matrix {
    let mut j = Matrix::identity(len, len);
    j[(0, 0)] = -1.0;
    j
}

/// Lorentzian inner product.
pub fn dot(x: &Vector, y: &Vector) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

/// Lorentzian quadratic form `x . x`.
pub fn norm_sq(x: &Vector) -> f64 {
    dot(x, x)
}

/// `J v`, the Euclidean representative of the functional `w -> w . v`.
pub fn lower(v: &Vector) -> Vector {
    let mut w = v.clone();
    w[0] = -w[0];
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalClass {
    TimelikeFuture,
    TimelikePast,
    NullFuture,
    NullPast,
    Spacelike,
    Zero,
}

impl CausalClass {
    pub fn is_timelike(self) -> bool {
        matches!(self, CausalClass::TimelikeFuture | CausalClass::TimelikePast)
    }

    pub fn is_null(self) -> bool {
        matches!(self, CausalClass::NullFuture | CausalClass::NullPast)
    }
}

/// Causal character of `v`; `|v . v| <= tol * |v|^2` counts as null.
pub fn causal_class(v: &Vector, tol: f64) -> CausalClass {
    let e = v.norm_squared();
    if e.sqrt() <= tol {
        return CausalClass::Zero;
    }
    let q = norm_sq(v);
    if q.abs() <= tol * e {
        if v[0] > 0.0 {
            CausalClass::NullFuture
        } else {
            CausalClass::NullPast
        }
    } else if q < 0.0 {
        if v[0] > 0.0 {
            CausalClass::TimelikeFuture
        } else {
            CausalClass::TimelikePast
        }
    } else {
        CausalClass::Spacelike
    }
}

/// Rescales a future timelike vector onto `H`.
pub fn normalize_to_hyperboloid(v: &Vector) -> Result<Vector> {
    let q = norm_sq(v);
    if !(q < 0.0) || v[0] <= 0.0 {
        return Err(GeomError::NotFutureTimelike);
    }
    Ok(v / (-q).sqrt())
}

/// Scales a timelike vector of either time orientation onto `H`.
pub fn normalize_any_timelike(v: &Vector) -> Result<Vector> {
    if v[0] < 0.0 {
        normalize_to_hyperboloid(&(-v))
    } else {
        normalize_to_hyperboloid(v)
    }
}

/// Hyperbolic distance between two points of `H`.
///
/// Uses `2 asinh(|x - y| / 2)` near the diagonal, where `acosh` loses
/// half of its digits.
pub fn hyperbolic_distance(x: &Vector, y: &Vector) -> f64 {
    let c = -dot(x, y);
    if c < 2.0 {
        let d = x - y;
        let s = norm_sq(&d).max(0.0);
        2.0 * (s.sqrt() / 2.0).asinh()
    } else {
        c.acosh()
    }
}

/// Klein model coordinates `(v1 / v0, ..., vn / v0)`.
pub fn klein_projection(v: &Vector) -> Result<Vector> {
    if v[0].abs() <= f64::EPSILON * v.norm() {
        return Err(GeomError::InvalidInput("vector lies on x0 = 0".into()));
    }
    Ok(v.rows(1, v.len() - 1) / v[0])
}

/// Lifts a point of the open unit ball (Klein model) to `H`.
pub fn from_klein(k: &Vector) -> Result<Vector> {
    let r2 = k.norm_squared();
    if r2 >= 1.0 {
        return Err(GeomError::InvalidInput("Klein point outside the unit ball".into()));
    }
    let s = 1.0 / (1.0 - r2).sqrt();
    let mut v = Vector::zeros(k.len() + 1);
    v[0] = s;
    for i in 0..k.len() {
        v[i + 1] = k[i] * s;
    }
    Ok(v)
}

/// Uniform sample in the Euclidean ball of the given radius (Klein model),
/// lifted to `H`.
pub fn sample_klein<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vector {
    loop {
        let k = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        if k.norm_squared() < 1.0 {
            return from_klein(&(k * radius)).expect("radius below one");
        }
    }
}

/// Uniform direction on the sphere at infinity, as a future null vector with
/// `v0 = 1`.
pub fn sample_ideal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    loop {
        let k = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let r = k.norm();
        if r > 1e-3 && r < 1.0 {
            let mut v = Vector::zeros(n + 1);
            v[0] = 1.0;
            for i in 0..n {
                v[i + 1] = k[i] / r;
            }
            return v;
        }
    }
}

/// Change of basis from null coordinates to standard coordinates.
///
/// Columns are `(e0 + e1) / sqrt 2`, `(e0 - e1) / sqrt 2`, `e2`, ..., so the
/// first two basis vectors are future null with product `-1`.
pub fn null_basis_change(len: usize) -> Matrix {
    assert!(len >= 2);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut p = Matrix::identity(len, len);
    p[(0, 0)] = h;
    p[(1, 0)] = h;
    p[(0, 1)] = h;
    p[(1, 1)] = -h;
    p
}

/// Inverse of a Lorentz matrix `M`, computed as `J M^T J`.
pub fn lorentz_inverse(m: &Matrix) -> Matrix {
    let j = form(m.nrows());
    &j * m.transpose() * &j
}

/// Lorentz-orthonormal basis of the Lorentz-orthogonal complement of the
/// span of `vectors`, which must be a nondegenerate subspace.
///
/// Basis vectors are ordered with the timelike one (if any) first.
pub fn orthogonal_complement(vectors: &[Vector], len: usize) -> Vec<Vector> {
    let comp = if vectors.is_empty() {
        Matrix::identity(len, len)
    } else {
        let lowered: Vec<Vector> = vectors.iter().map(lower).collect();
        crate::linalg::null_space(&crate::linalg::rows(&lowered, len), 1e-10)
    };
    lorentz_orthonormalize(&comp)
}

/// Lorentz-orthonormal basis of the column span of `basis` (nondegenerate).
pub fn lorentz_orthonormalize(basis: &Matrix) -> Vec<Vector> {
    if basis.ncols() == 0 {
        return Vec::new();
    }
    let gram = basis.transpose() * form(basis.nrows()) * basis;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    order
        .into_iter()
        .filter(|&k| eig.eigenvalues[k].abs() > 1e-14)
        .map(|k| {
            let w = basis * eig.eigenvectors.column(k);
            let w = &w / eig.eigenvalues[k].abs().sqrt();
            if eig.eigenvalues[k] < 0.0 && w[0] < 0.0 {
                -w
            } else {
                w
            }
        })
        .collect()
}
