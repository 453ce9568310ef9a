//! Elements of `O(n,1)^+` and their dynamical classification.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{max_abs, null_space};
use crate::lorentz::{self, dot, form, norm_sq, Matrix, Vector};

/// A validated Lorentz matrix preserving the future cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    matrix: Matrix,
}

/// Checks `|M^T J M - J| <= tol * max(1, |M|^2)` and `M00 > 0`.
///
/// The defect is measured in the max norm and scaled by the squared entry
/// size, so long products with large entries are judged relatively.
pub fn validate_isometry(m: &Matrix, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() < 2 {
        return Err(GeomError::InvalidInput(format!(
            "isometry matrix must be square of size at least 2, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::InvalidInput("matrix has non-finite entries".into()));
    }
    let j = form(m.nrows());
    let defect = max_abs(&(m.transpose() * &j * m - &j));
    let scale = max_abs(m).max(1.0);
    if defect > tol * scale * scale {
        return Err(GeomError::NotLorentzian { defect });
    }
    if m[(0, 0)] <= 0.0 {
        return Err(GeomError::NotOrthochronous);
    }
    Ok(())
}

impl Isometry {
    pub fn new(matrix: Matrix, tol: f64) -> Result<Self> {
        validate_isometry(&matrix, tol)?;
        Ok(Isometry { matrix })
    }

    /// Wraps a matrix known to be Lorentzian by construction.
    pub fn from_trusted(matrix: Matrix) -> Self {
        debug_assert!(validate_isometry(&matrix, 1e-6).is_ok());
        Isometry { matrix }
    }

    pub fn identity(n: usize) -> Self {
        Isometry { matrix: Matrix::identity(n + 1, n + 1) }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// Hyperbolic dimension `n`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }

    pub fn inverse(&self) -> Isometry {
        Isometry { matrix: lorentz::lorentz_inverse(&self.matrix) }
    }

    /// `self * other`, acting as `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { matrix: &self.matrix * &other.matrix }
    }

    pub fn power(&self, k: i64) -> Isometry {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Isometry::identity(self.dim());
        for _ in 0..k.unsigned_abs() {
            out = out.compose(&base);
        }
        out
    }

    pub fn conjugate_by(&self, g: &Isometry) -> Isometry {
        g.compose(self).compose(&g.inverse())
    }

    pub fn is_orientation_preserving(&self) -> bool {
        self.matrix.determinant() > 0.0
    }

    /// Max-norm distance between matrices.
    pub fn distance(&self, other: &Isometry) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.distance(&Isometry::identity(self.dim())) <= tol * max_abs(&self.matrix).max(1.0)
    }

    pub fn is_involution(&self, tol: f64) -> bool {
        let sq = self.compose(self);
        sq.is_identity(tol) && !self.is_identity(tol)
    }

    pub fn commutes_with(&self, other: &Isometry, tol: f64) -> bool {
        let ab = self.compose(other);
        let ba = other.compose(self);
        ab.distance(&ba) <= tol * max_abs(&ab.matrix).max(1.0)
    }
}

/// Boost of rapidity `t` in the plane of `e0` and `e_axis`.
pub fn boost(n: usize, axis: usize, t: f64) -> Isometry {
    assert!(axis >= 1 && axis <= n);
    let mut m = Matrix::identity(n + 1, n + 1);
    m[(0, 0)] = t.cosh();
    m[(axis, axis)] = t.cosh();
    m[(0, axis)] = t.sinh();
    m[(axis, 0)] = t.sinh();
    Isometry { matrix: m }
}

/// Rotation by `angle` in the spacelike plane of `e_i` and `e_j`.
pub fn rotation(n: usize, i: usize, j: usize, angle: f64) -> Isometry {
    assert!(i >= 1 && j >= 1 && i <= n && j <= n && i != j);
    let mut m = Matrix::identity(n + 1, n + 1);
    let (s, c) = angle.sin_cos();
    m[(i, i)] = c;
    m[(j, j)] = c;
    m[(i, j)] = -s;
    m[(j, i)] = s;
    Isometry { matrix: m }
}

/// Reflection in the hyperplane Lorentz-orthogonal to the spacelike `normal`.
pub fn reflection(normal: &Vector) -> Result<Isometry> {
    let q = norm_sq(normal);
    if q <= 0.0 {
        return Err(GeomError::InvalidInput("mirror normal must be spacelike".into()));
    }
    let len = normal.len();
    let m = Matrix::identity(len, len) - normal * lorentz::lower(normal).transpose() * (2.0 / q);
    Ok(Isometry { matrix: m })
}

/// Involution fixing `p` and acting as `-1` on its Lorentz complement:
/// `v -> -v - 2 (v . p) p`.
pub fn make_cartan(p: &Vector) -> Result<Isometry> {
    if (norm_sq(p) + 1.0).abs() > 1e-9 * p.norm_squared().max(1.0) || p[0] <= 0.0 {
        return Err(GeomError::NotFutureTimelike);
    }
    let len = p.len();
    let m = -Matrix::identity(len, len) - p * lorentz::lower(p).transpose() * 2.0;
    Ok(Isometry { matrix: m })
}

/// Lorentz frame `[u, w, f2, ..., fn]` adapted to the null pair `(e_plus, e_minus)`:
/// `u` timelike on the axis, `w` pointing toward `e_plus`.
fn axis_frame(e_plus: &Vector, e_minus: &Vector) -> Result<Matrix> {
    let len = e_plus.len();
    if e_minus.len() != len {
        return Err(GeomError::DimensionMismatch { expected: len, found: e_minus.len() });
    }
    let ep = future_null(e_plus)?;
    let em = future_null(e_minus)?;
    let pair = dot(&ep, &em);
    if pair > -1e-9 {
        return Err(GeomError::InvalidInput("axis endpoints coincide".into()));
    }
    let u = lorentz::normalize_to_hyperboloid(&(&ep + &em))?;
    let wv = &ep - &em;
    let w = &wv / norm_sq(&wv).sqrt();
    let mut cols = vec![u.clone(), w.clone()];
    cols.extend(lorentz::orthogonal_complement(&[u, w], len));
    Ok(Matrix::from_columns(&cols))
}

fn future_null(v: &Vector) -> Result<Vector> {
    let scale = v.norm();
    if scale == 0.0 {
        return Err(GeomError::ZeroVector);
    }
    if norm_sq(v).abs() > 1e-8 * scale * scale {
        return Err(GeomError::InvalidInput("axis endpoint is not null".into()));
    }
    let w = if v[0] < 0.0 { -v } else { v.clone() };
    Ok(&w / w[0])
}

fn canonical_loxodromic(len: usize, length: f64, angle: f64) -> Matrix {
    let mut c = Matrix::identity(len, len);
    c[(0, 0)] = length.cosh();
    c[(1, 1)] = length.cosh();
    c[(0, 1)] = length.sinh();
    c[(1, 0)] = length.sinh();
    if len >= 4 {
        let (s, co) = angle.sin_cos();
        c[(2, 2)] = co;
        c[(3, 3)] = co;
        c[(2, 3)] = -s;
        c[(3, 2)] = s;
    }
    c
}

/// Orientation-preserving loxodromic with attracting fixed point `e_plus`,
/// repelling fixed point `e_minus`, translation length `length` and rotation
/// `angle` about the axis.
///
/// In dimension 2 the rotation must vanish.
pub fn make_loxodromic(e_plus: &Vector, e_minus: &Vector, length: f64, angle: f64) -> Result<Isometry> {
    if !(length > 0.0) {
        return Err(GeomError::InvalidInput("translation length must be positive".into()));
    }
    let len = e_plus.len();
    if len < 4 && angle.rem_euclid(2.0 * std::f64::consts::PI) > 1e-12 {
        return Err(GeomError::InvalidInput("rotation needs dimension at least 3".into()));
    }
    let f = axis_frame(e_plus, e_minus)?;
    let finv = lorentz::lorentz_inverse(&f);
    Ok(Isometry { matrix: &f * canonical_loxodromic(len, length, angle) * finv })
}

/// Glide reflection: translation along the axis composed with the reflection
/// in the hyperplane orthogonal to `mirror`, which must contain the axis.
pub fn make_glide_reflection(e_plus: &Vector, e_minus: &Vector, length: f64, mirror: &Vector) -> Result<Isometry> {
    let ep = future_null(e_plus)?;
    let em = future_null(e_minus)?;
    let scale = mirror.norm();
    if dot(mirror, &ep).abs() > 1e-9 * scale || dot(mirror, &em).abs() > 1e-9 * scale {
        return Err(GeomError::InvalidInput("mirror must contain the axis".into()));
    }
    let t = make_loxodromic(&ep, &em, length, 0.0)?;
    Ok(t.compose(&reflection(mirror)?))
}

/// Endpoints and translation data of a loxodromic element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// Attracting fixed point, future null with `x0 = 1`.
    pub attracting: Vec<f64>,
    /// Repelling fixed point, future null with `x0 = 1`.
    pub repelling: Vec<f64>,
    /// Eigenvalue on the attracting fixed point.
    pub multiplier: f64,
    pub translation_length: f64,
}

impl Axis {
    pub fn attracting(&self) -> Vector {
        Vector::from_vec(self.attracting.clone())
    }

    pub fn repelling(&self) -> Vector {
        Vector::from_vec(self.repelling.clone())
    }

    /// Point of the axis closest to the origin of the frame.
    pub fn midpoint(&self) -> Vector {
        lorentz::normalize_to_hyperboloid(&(self.attracting() + self.repelling())).expect("distinct endpoints")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum IsometryClass {
    Identity,
    EllipticCartan { fixed_point: Vec<f64> },
    EllipticOther { fixed_point: Vec<f64> },
    Parabolic { fixed_null: Vec<f64> },
    Hyperbolic { axis: Axis },
    StrictlyLoxodromic {
        axis: Axis,
        /// Rotation about the axis in `(0, pi]`; absent for a pure glide reflection.
        rotation_angle: Option<f64>,
        reflection: bool,
    },
    UnclassifiableWithinTolerance { reason: String },
}

impl IsometryClass {
    pub fn is_elliptic(&self) -> bool {
        matches!(self, IsometryClass::EllipticCartan { .. } | IsometryClass::EllipticOther { .. })
    }

    pub fn is_loxodromic(&self) -> bool {
        matches!(self, IsometryClass::Hyperbolic { .. } | IsometryClass::StrictlyLoxodromic { .. })
    }

    pub fn axis(&self) -> Option<&Axis> {
        match self {
            IsometryClass::Hyperbolic { axis } | IsometryClass::StrictlyLoxodromic { axis, .. } => Some(axis),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IsometryClass::Identity => "Identity",
            IsometryClass::EllipticCartan { .. } => "EllipticCartan",
            IsometryClass::EllipticOther { .. } => "EllipticOther",
            IsometryClass::Parabolic { .. } => "Parabolic",
            IsometryClass::Hyperbolic { .. } => "Hyperbolic",
            IsometryClass::StrictlyLoxodromic { .. } => "StrictlyLoxodromic",
            IsometryClass::UnclassifiableWithinTolerance { .. } => "UnclassifiableWithinTolerance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: IsometryClass,
    pub orientation_preserving: bool,
}

const LOXO_MULTIPLIER_BAND: f64 = 1e-7;
const UNIPOTENT_BAND: f64 = 1e-4;
const ENDPOINT_SEPARATION: f64 = 1e-4;
const FIXED_SPACE_TOL: f64 = 1e-7;
const AXIAL_IDENTITY_TOL: f64 = 1e-7;

fn smallest_singular_vector(m: &Matrix) -> (Vector, f64) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let (i, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, s)| (i, *s))
        .unwrap();
    (vt.row(i).transpose(), s)
}

fn max_arg(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.im.atan2(z.re).abs()).fold(0.0, f64::max)
}

/// Dynamical type of `a`.
///
/// Borderline spectra, where the multiplier is too close to 1 to separate a
/// loxodromic from a parabolic, are reported as
/// [`IsometryClass::UnclassifiableWithinTolerance`].
pub fn classify(a: &Isometry, tol: f64) -> Classification {
    let m = a.matrix();
    let len = m.nrows();
    let scale = max_abs(m).max(1.0);
    let orientation_preserving = a.is_orientation_preserving();
    let done = |class| Classification { class, orientation_preserving };
    let id = Matrix::identity(len, len);
    if max_abs(&(m - &id)) <= tol * scale {
        return done(IsometryClass::Identity);
    }

    let eigs: Vec<Complex<f64>> = m.clone().complex_eigenvalues().iter().copied().collect();
    let top = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);

    if top > 1.0 + LOXO_MULTIPLIER_BAND {
        match loxodromic_data(a, top, tol) {
            Ok(class) => return done(class),
            Err(reason) => {
                if top > 1.0 + UNIPOTENT_BAND {
                    return done(IsometryClass::UnclassifiableWithinTolerance { reason });
                }
            }
        }
    }

    let fixed = null_space(&(m - &id), FIXED_SPACE_TOL);
    if fixed.ncols() > 0 {
        let j = form(len);
        let gram = fixed.transpose() * &j * &fixed;
        let eig = gram.clone().symmetric_eigen();
        let (k, lo) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .map(|(k, v)| (k, *v))
            .unwrap();
        if lo < -FIXED_SPACE_TOL {
            let v = &fixed * eig.eigenvectors.column(k);
            let p = lorentz::normalize_any_timelike(&v).expect("timelike fixed vector");
            let fixed_point: Vec<f64> = p.iter().copied().collect();
            let involution = max_abs(&(m * m - &id)) <= tol.max(1e-12) * scale * scale * 10.0;
            if involution && fixed.ncols() == 1 {
                return done(IsometryClass::EllipticCartan { fixed_point });
            }
            return done(IsometryClass::EllipticOther { fixed_point });
        }
        if top <= 1.0 + UNIPOTENT_BAND {
            let k = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
                .map(|(k, _)| k)
                .unwrap();
            let v = &fixed * eig.eigenvectors.column(k);
            if lorentz::causal_class(&v, 1e-6).is_null() {
                let v = if v[0] < 0.0 { -v } else { v };
                let v = &v / v[0];
                return done(IsometryClass::Parabolic { fixed_null: v.iter().copied().collect() });
            }
        }
    }
    done(IsometryClass::UnclassifiableWithinTolerance {
        reason: format!("no timelike fixed vector and spectral radius {top}"),
    })
}

fn loxodromic_data(a: &Isometry, lambda: f64, tol: f64) -> std::result::Result<IsometryClass, String> {
    let m = a.matrix();
    let len = m.nrows();
    let id = Matrix::identity(len, len);
    let (vp, _) = smallest_singular_vector(&(m - &id * lambda));
    let (vm, _) = smallest_singular_vector(&(m - &id * (1.0 / lambda)));
    let normalize = |v: Vector| -> std::result::Result<Vector, String> {
        if v[0].abs() < 1e-12 {
            return Err("eigenvector is not future null".into());
        }
        let v = &v / v[0];
        if norm_sq(&v).abs() > 1e-6 * v.norm_squared() {
            return Err("eigenvector is not null".into());
        }
        Ok(v)
    };
    let ep = normalize(vp)?;
    let em = normalize(vm)?;
    if (m * &ep - &ep * lambda).norm() > 1e-6 * lambda * ep.norm() {
        return Err("eigenvector residual too large".into());
    }
    if dot(&ep, &em) > -ENDPOINT_SEPARATION {
        return Err("fixed points at infinity are not separated".into());
    }
    let axis = Axis {
        attracting: ep.iter().copied().collect(),
        repelling: em.iter().copied().collect(),
        multiplier: lambda,
        translation_length: lambda.ln(),
    };
    if len == 2 {
        return Ok(IsometryClass::Hyperbolic { axis });
    }
    let w = lorentz::orthogonal_complement(&[ep.clone(), em.clone()], len);
    let k = w.len();
    let mut r = Matrix::zeros(k, k);
    for (i, wi) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            r[(i, j)] = dot(wi, &(m * wj));
        }
    }
    let dev = max_abs(&(&r - Matrix::identity(k, k)));
    if dev <= AXIAL_IDENTITY_TOL.max(tol) {
        return Ok(IsometryClass::Hyperbolic { axis });
    }
    let det = r.determinant();
    let eigs: Vec<Complex<f64>> = r.clone().complex_eigenvalues().iter().copied().collect();
    if det > 0.0 {
        Ok(IsometryClass::StrictlyLoxodromic { axis, rotation_angle: Some(max_arg(&eigs)), reflection: false })
    } else {
        let mut rest = eigs.clone();
        if let Some(pos) = rest
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 + 1.0).norm().partial_cmp(&(y.1 + 1.0).norm()).unwrap())
            .map(|(p, _)| p)
        {
            rest.remove(pos);
        }
        let ang = max_arg(&rest);
        let rotation_angle = if ang > AXIAL_IDENTITY_TOL.sqrt() { Some(ang) } else { None };
        Ok(IsometryClass::StrictlyLoxodromic { axis, rotation_angle, reflection: true })
    }
}

/// Fixed points at infinity and translation length of a loxodromic element.
pub fn axis_and_dynamics(a: &Isometry, tol: f64) -> Result<Axis> {
    classify(a, tol)
        .class
        .axis()
        .cloned()
        .ok_or_else(|| GeomError::InvalidInput("element is not loxodromic".into()))
}

/// Whether `a` is a Cartan involution: `a^2 = 1` with a one-dimensional
/// timelike `+1` eigenspace.
pub fn is_cartan_involution(a: &Isometry, tol: f64) -> bool {
    matches!(classify(a, tol).class, IsometryClass::EllipticCartan { .. })
}

/// Hyperbolic distance from `p` to the geodesic with endpoints `axis`.
pub fn distance_to_axis(p: &Vector, axis: &Axis) -> f64 {
    let ep = axis.attracting();
    let em = axis.repelling();
    let pair = dot(&ep, &em);
    // Project p onto span(e+, e-) and measure the orthogonal part.
    let a = dot(p, &em) / pair;
    let b = dot(p, &ep) / pair;
    let perp = p - &ep * a - &em * b;
    norm_sq(&perp).max(0.0).sqrt().asinh()
}
