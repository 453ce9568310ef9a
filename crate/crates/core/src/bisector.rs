//! Bisectors, Dirichlet half-spaces and the linear map whose rank detects
//! tuples of bisectors through a common codimension-2 locus.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::exact::{int, RatMatrix, Rational};
use crate::isometry::Isometry;
use crate::linalg::{self, columns};
use crate::lorentz::{self, dot, Vector};
use crate::par;

/// Normal of the bisector `{p : d(p, x) = d(p, y)}` for `x, y` in `H`: the
/// hyperplane is `{p : p . (x - y) = 0}`.
pub fn bisector(x: &Vector, y: &Vector, tol: f64) -> Result<Vector> {
    let n = x - y;
    if n.norm() <= tol * x.norm().max(1.0) {
        return Err(GeomError::FixedPoint);
    }
    Ok(n)
}

/// Closed half-space `{p : p . normal >= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vector,
    pub label: String,
}

impl HalfSpace {
    /// Euclidean coefficient vector `a` with `a^T p = p . normal`.
    pub fn functional(&self) -> Vector {
        lorentz::lower(&self.normal)
    }

    pub fn value(&self, p: &Vector) -> f64 {
        dot(p, &self.normal)
    }

    pub fn contains(&self, p: &Vector, tol: f64) -> bool {
        self.value(p) >= -tol * self.normal.norm() * p.norm()
    }
}

/// Half-space of points at least as close to `x` as to `gamma x`.
pub fn dirichlet_halfspace(x: &Vector, gamma: &Isometry, label: &str, tol: f64) -> Result<HalfSpace> {
    let normal = bisector(x, &gamma.apply(x), tol)?;
    Ok(HalfSpace { normal, label: label.to_string() })
}

/// Columns `A_i x - x` for a tuple of isometries.
pub fn bmap(tuple: &[&Isometry], x: &Vector) -> lorentz::Matrix {
    let cols: Vec<Vector> = tuple.iter().map(|a| a.apply(x) - x).collect();
    columns(&cols)
}

/// Exact version of [`bmap`].
pub fn bmap_exact(tuple: &[RatMatrix], x: &[Rational]) -> RatMatrix {
    let cols: Vec<Vec<Rational>> = tuple
        .iter()
        .map(|a| a.mul_vec(x).iter().zip(x).map(|(u, v)| u - v).collect())
        .collect();
    RatMatrix::from_columns(&cols, x.len())
}

/// Rank of `B_A(x)` with singular values below `tol * sigma_max` discarded.
pub fn numeric_rank(b: &lorentz::Matrix, tol: f64) -> usize {
    linalg::numeric_rank(b, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum SingularityVerdict {
    /// Every trial had rank below the tuple size.
    SingularWithConfidence {
        trials: usize,
        max_rank: usize,
        /// Upper bound on the chance that a nonsingular tuple passes all
        /// trials (exact mode only; zero when not derived).
        error_bound: f64,
    },
    Nonsingular { witness: Vec<f64>, rank: usize },
}

impl SingularityVerdict {
    pub fn is_singular(&self) -> bool {
        matches!(self, SingularityVerdict::SingularWithConfidence { .. })
    }
}

#[derive(Debug, Clone)]
pub struct SingularityOptions {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Euclidean radius of the Klein ball sampled for base points.
    pub radius: f64,
}

impl Default for SingularityOptions {
    fn default() -> Self {
        SingularityOptions { trials: 1000, tol: 1e-8, seed: 0, radius: 0.9 }
    }
}

/// Tests whether `B_A(x)` is rank deficient for all `x` by random trials.
///
/// Base points are drawn uniformly from a Klein ball and lifted to `H`; each
/// trial has its own random stream, so the verdict does not depend on thread
/// scheduling.
pub fn is_singular_tuple(tuple: &[&Isometry], opts: &SingularityOptions) -> Result<SingularityVerdict> {
    let Some(first) = tuple.first() else {
        return Err(GeomError::InvalidInput("empty tuple".into()));
    };
    let n = first.dim();
    if tuple.iter().any(|a| a.dim() != n) {
        return Err(GeomError::InvalidInput("tuple mixes dimensions".into()));
    }
    let k = tuple.len();
    let ranks = par::map_range(opts.trials, |i| {
        let mut rng = par::stream(opts.seed, i as u64);
        let x = lorentz::sample_klein(&mut rng, n, opts.radius);
        let r = numeric_rank(&bmap(tuple, &x), opts.tol);
        (r, x)
    });
    let max_rank = ranks.iter().map(|r| r.0).max().unwrap_or(0);
    if let Some((r, x)) = ranks.into_iter().find(|(r, _)| *r >= k) {
        return Ok(SingularityVerdict::Nonsingular { witness: x.iter().copied().collect(), rank: r });
    }
    Ok(SingularityVerdict::SingularWithConfidence { trials: opts.trials, max_rank, error_bound: 0.0 })
}

/// Number of random points in exact mode.
pub const EXACT_POINTS: usize = 8;
/// Bit size of the sampled integer coordinates in exact mode.
pub const EXACT_BITS: u32 = 16;

/// Exact singularity test for rational matrices.
///
/// The maximal minors of `B_A(x)` are polynomials of degree `k` in `x`; each
/// is evaluated at [`EXACT_POINTS`] random integer points with coordinates of
/// magnitude at most `2^16`. A nonzero value proves nonsingularity. If all
/// vanish, a nonzero polynomial would survive with probability at most
/// `(k / (2^17 + 1))^8`.
pub fn is_singular_tuple_exact(tuple: &[RatMatrix], seed: u64) -> Result<SingularityVerdict> {
    let Some(first) = tuple.first() else {
        return Err(GeomError::InvalidInput("empty tuple".into()));
    };
    let len = first.nrows();
    let k = tuple.len();
    let bound = 1i64 << EXACT_BITS;
    let mut max_rank = 0;
    for i in 0..EXACT_POINTS {
        let mut rng = par::stream(seed, i as u64);
        let x: Vec<Rational> = (0..len).map(|_| int(rng.gen_range(-bound..=bound))).collect();
        let b = bmap_exact(tuple, &x);
        let r = b.rank();
        max_rank = max_rank.max(r);
        if r >= k {
            let witness = x.iter().map(|q| num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::NAN)).collect();
            return Ok(SingularityVerdict::Nonsingular { witness, rank: r });
        }
    }
    let p = k as f64 / (2.0 * bound as f64 + 1.0);
    Ok(SingularityVerdict::SingularWithConfidence {
        trials: EXACT_POINTS,
        max_rank,
        error_bound: p.powi(EXACT_POINTS as i32),
    })
}

/// Reason a point of the closed future cone lies in the degeneracy locus of a
/// pair of isometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaTag {
    FixedByA1,
    FixedByA2,
    FixedByQuotient,
    CommonNullEigenvector,
    NotInSigma,
    /// Rank deficient but no listed cause detected within tolerance.
    Unexplained,
}

/// Classifies `x` (nonzero, in the closed future cone) for the pair `(a1, a2)`.
pub fn sigma_classify(a1: &Isometry, a2: &Isometry, x: &Vector, tol: f64) -> SigmaTag {
    let y1 = a1.apply(x);
    let y2 = a2.apply(x);
    let scale = x.norm() * linalg::max_abs(a1.matrix()).max(linalg::max_abs(a2.matrix())).max(1.0);
    let small = |v: &Vector| v.norm() <= tol * scale;
    let b1 = &y1 - x;
    let b2 = &y2 - x;
    if small(&b1) {
        return SigmaTag::FixedByA1;
    }
    if small(&b2) {
        return SigmaTag::FixedByA2;
    }
    if small(&(&y1 - &y2)) {
        return SigmaTag::FixedByQuotient;
    }
    if numeric_rank(&columns(&[b1.clone(), b2.clone()]), tol) >= 2 {
        return SigmaTag::NotInSigma;
    }
    let parallel = |v: &Vector| {
        let s = v.dot(x) / x.norm_squared();
        (v - x * s).norm() <= tol * scale
    };
    if lorentz::causal_class(x, tol).is_null() && parallel(&y1) && parallel(&y2) {
        return SigmaTag::CommonNullEigenvector;
    }
    SigmaTag::Unexplained
}

/// Whether hyperplanes `{p : p . n_i = 0}` through `y` meet transversally,
/// that is whether their normals are linearly independent.
pub fn transversal_at(y: &Vector, normals: &[Vector], tol: f64) -> Result<bool> {
    for (i, n) in normals.iter().enumerate() {
        if dot(y, n).abs() > tol * y.norm() * n.norm() {
            return Err(GeomError::NotIncident(i));
        }
    }
    if normals.is_empty() {
        return Ok(true);
    }
    let r = linalg::numeric_rank(&columns(normals), tol);
    Ok(r == normals.len())
}

/// Normal of the hyperplane `{x : p lies on Bis(A x, x)}`, namely
/// `A^{-1} p - p`.
pub fn q_p_locus(a: &Isometry, p: &Vector, tol: f64) -> Result<Vector> {
    let n = a.inverse().apply(p) - p;
    if n.norm() <= tol * p.norm() * linalg::max_abs(a.matrix()).max(1.0) {
        return Err(GeomError::FixedPoint);
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::{boost, make_cartan, rotation};
    use crate::lorentz::from_klein;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn bisector_of_origin_and_boosted_point() {
        let x = v(&[1.0, 0.0, 0.0, 0.0]);
        let t: f64 = 1.0;
        let y = v(&[t.cosh(), t.sinh(), 0.0, 0.0]);
        let n = bisector(&x, &y, 1e-12).unwrap();
        // Midpoint of the segment lies on the bisector.
        let m = v(&[(t / 2.0).cosh(), (t / 2.0).sinh(), 0.0, 0.0]);
        assert!(dot(&m, &n).abs() < 1e-14);
        assert!(bisector(&x, &x, 1e-12).is_err());
    }

    #[test]
    fn halfspace_contains_base_point() {
        let x = from_klein(&v(&[0.2, -0.1, 0.3])).unwrap();
        let h = dirichlet_halfspace(&x, &boost(3, 2, 0.7), "a", 1e-12).unwrap();
        assert!(h.value(&x) > 0.0);
    }

    #[test]
    fn rank_edge_cases() {
        let id = Isometry::identity(3);
        let a = boost(3, 1, 1.0);
        let x = from_klein(&v(&[0.1, 0.2, 0.3])).unwrap();
        assert_eq!(numeric_rank(&bmap(&[&id], &x), 1e-8), 0);
        assert_eq!(numeric_rank(&bmap(&[&a, &a], &x), 1e-8), 1);
        let verdict = is_singular_tuple(&[&a, &a.inverse(), &boost(3, 2, 1.0)], &SingularityOptions::default()).unwrap();
        assert!(!verdict.is_singular());
    }

    #[test]
    fn sigma_tags() {
        let a = boost(3, 1, 1.0);
        let r = rotation(3, 2, 3, std::f64::consts::PI);
        let on_axis = v(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sigma_classify(&r, &a, &on_axis, 1e-9), SigmaTag::FixedByA1);
        let ar = a.compose(&r);
        let x = v(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sigma_classify(&a, &ar, &x, 1e-9), SigmaTag::FixedByQuotient);
        let e = v(&[1.0, 1.0, 0.0, 0.0]);
        let a2 = boost(3, 1, 2.5);
        assert_eq!(sigma_classify(&a, &a2, &e, 1e-9), SigmaTag::CommonNullEigenvector);
        let generic = from_klein(&v(&[0.3, 0.2, -0.4])).unwrap();
        assert_eq!(sigma_classify(&a, &boost(3, 2, 1.0), &generic, 1e-9), SigmaTag::NotInSigma);
    }

    #[test]
    fn transversality() {
        let y = v(&[1.0, 0.0, 0.0, 0.0]);
        let n1 = v(&[0.0, 1.0, 0.0, 0.0]);
        let n2 = v(&[0.0, 0.0, 1.0, 0.0]);
        assert!(transversal_at(&y, &[n1.clone(), n2.clone()], 1e-9).unwrap());
        assert!(!transversal_at(&y, &[n1.clone(), n2.clone(), &n1 + &n2], 1e-9).unwrap());
        assert_eq!(transversal_at(&y, &[v(&[1.0, 0.0, 0.0, 0.0])], 1e-9), Err(GeomError::NotIncident(0)));
    }

    #[test]
    fn q_p_locus_behaviour() {
        let p = from_klein(&v(&[0.1, 0.0, 0.2])).unwrap();
        let j = make_cartan(&p).unwrap();
        assert_eq!(q_p_locus(&j, &p, 1e-9), Err(GeomError::FixedPoint));
        let a = boost(3, 1, 0.8);
        let n = q_p_locus(&a, &p, 1e-9).unwrap();
        let x = from_klein(&v(&[-0.3, 0.4, 0.1])).unwrap();
        let lhs = dot(&p, &(a.apply(&x) - &x));
        assert!((lhs - dot(&n, &x)).abs() < 1e-12);
    }
}
