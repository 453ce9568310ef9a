//! A boost and the half-turn about its axis: triple bisector intersections
//! on the boundary of the Dirichlet domain.

use dirichlet_core::domain::{compute_domain, simplicity_check, DomainOptions, FaceIncidence};
use dirichlet_core::error::{GeomError, Result};
use dirichlet_core::group::{class_k_audit, GroupPresentation};
use dirichlet_core::isometry::{boost, Isometry};
use dirichlet_core::linalg;
use dirichlet_core::lorentz::{dot, hyperbolic_distance, lorentz_orthonormalize, lower, norm_sq, Matrix, Vector};
use serde::{Deserialize, Serialize};

use crate::example1::{certify_tuple, Certificate};

/// Points sampled along each boundary geodesic.
pub const GEODESIC_SAMPLES: usize = 41;
pub const AUDIT_LEN: usize = 3;

/// `diag(1, 1, -1, -1)`, the half-turn about the `x1` axis.
pub fn half_turn() -> Isometry {
    Isometry::from_trusted(Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, -1.0, -1.0])))
}

pub fn example2_group(t: f64) -> Result<GroupPresentation> {
    GroupPresentation::from_pairs(vec![("a", boost(3, 1, t)), ("r", half_turn())])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example2Report {
    pub t: f64,
    pub base: Vec<f64>,
    pub converged: bool,
    /// Words of the facet-defining elements.
    pub facets: Vec<String>,
    /// Facets are exactly `Bis(Ax, x)`, `Bis(A^-1 x, x)` and `Bis(Rx, x)`.
    pub facets_as_stated: bool,
    /// Common locus of `Bis(Rx, x)`, `Bis(Ax, x)` and `Bis(RAx, x)`.
    pub triple: Certificate,
    /// Largest relative violation of the domain inequalities or of the two
    /// defining equations along the geodesic.
    pub boundary_excess: f64,
    pub on_boundary: bool,
    /// Largest spread of `d(y, x)`, `d(y, Ax)`, `d(y, RAx)` along the geodesic.
    pub distance_spread: f64,
    pub equidistant: bool,
    pub weakly_simple: bool,
    pub triple_faces: Vec<FaceIncidence>,
    pub class_k: bool,
    pub class_k_witness: Option<String>,
}

impl Example2Report {
    pub fn pass(&self) -> bool {
        self.converged
            && self.facets_as_stated
            && self.triple.holds()
            && self.on_boundary
            && self.equidistant
            && !self.weakly_simple
            && self.triple_faces.iter().any(|f| f.bisector_count == 3)
            && !self.class_k
    }
}

fn same(a: &Isometry, b: &Isometry) -> bool {
    a.distance(b) <= 1e-9 * a.matrix().abs().max().max(1.0)
}

/// Points `cosh(s) u + sinh(s) w` of the geodesic cut out by the bisector
/// normals, for `s` in `[-span, span]`.
pub fn geodesic_samples(normals: &[Vector], span: f64, count: usize) -> Result<Vec<Vector>> {
    let len = normals[0].len();
    let lowered: Vec<Vector> = normals.iter().map(lower).collect();
    let kernel = linalg::null_space(&linalg::rows(&lowered, len), 1e-9);
    if kernel.ncols() != 2 {
        return Err(GeomError::InvalidInput(format!("common locus has dimension {}", kernel.ncols())));
    }
    let frame = lorentz_orthonormalize(&kernel);
    let (u, w) = (&frame[0], &frame[1]);
    if norm_sq(u) >= 0.0 {
        return Err(GeomError::InvalidInput("common locus misses H".into()));
    }
    let u = if u[0] < 0.0 { -u } else { u.clone() };
    Ok((0..count)
        .map(|i| {
            let s = -span + 2.0 * span * i as f64 / (count - 1).max(1) as f64;
            &u * s.cosh() + w * s.sinh()
        })
        .collect())
}

pub fn example2_verify(t: f64, x: &Vector, tol: f64) -> Result<Example2Report> {
    let g = example2_group(t)?;
    let a = boost(3, 1, t);
    let r = half_turn();
    let ra = r.compose(&a);
    if (r.apply(x) - x).norm() <= 1e-6 * x.norm() {
        return Err(GeomError::InvalidInput("base point lies on the axis".into()));
    }
    let d = compute_domain(&g, x, &DomainOptions::default())?;
    let facet_elements: Vec<&Isometry> =
        d.contributors.iter().map(|c| &d.enumeration.elements[c.element].isometry).collect();
    let stated = [a.clone(), a.inverse(), r.clone()];
    let facets_as_stated = facet_elements.len() == 3
        && stated.iter().all(|s| facet_elements.iter().any(|f| same(f, s)));

    let triple = certify_tuple(&[&r, &a, &ra], x);

    let na = x - a.apply(x);
    let nr = x - r.apply(x);
    let samples = geodesic_samples(&[na.clone(), nr.clone()], 3.0, GEODESIC_SAMPLES)?;
    let mut boundary_excess: f64 = 0.0;
    let mut distance_spread: f64 = 0.0;
    let mut on_boundary = true;
    let ax = a.apply(x);
    let rax = ra.apply(x);
    for y in &samples {
        on_boundary &= d.contains(y, tol.max(1e-9));
        let rel = |n: &Vector| dot(y, n) / (y.norm() * n.norm());
        let residual = [&na, &nr].iter().map(|n| rel(n).abs()).fold(0.0, f64::max);
        let violation = d.contributors.iter().map(|c| -rel(&c.normal)).fold(0.0, f64::max);
        boundary_excess = boundary_excess.max(residual).max(violation);
        let ds = [hyperbolic_distance(y, x), hyperbolic_distance(y, &ax), hyperbolic_distance(y, &rax)];
        let spread = ds.iter().cloned().fold(f64::MIN, f64::max) - ds.iter().cloned().fold(f64::MAX, f64::min);
        distance_spread = distance_spread.max(spread / ds[0].max(1.0));
    }
    on_boundary &= boundary_excess <= 1e-7;

    let simplicity = simplicity_check(&d);
    let triple_faces: Vec<FaceIncidence> = simplicity.codim2.iter().filter(|f| f.bisector_count != 2).cloned().collect();
    let audit = class_k_audit(&g, AUDIT_LEN, 1e-9)?;
    Ok(Example2Report {
        t,
        base: x.iter().copied().collect(),
        converged: d.converged,
        facets: d.contributors.iter().map(|c| c.word.clone()).collect(),
        facets_as_stated,
        triple,
        boundary_excess,
        on_boundary,
        distance_spread,
        equidistant: distance_spread <= tol,
        weakly_simple: simplicity.weakly_simple,
        triple_faces,
        class_k: audit.pass,
        class_k_witness: audit.witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dirichlet_core::lorentz::from_klein;

    #[test]
    fn boundary_geodesic() {
        let x = from_klein(&Vector::from_column_slice(&[0.0, 0.45, 0.1])).unwrap();
        let rep = example2_verify(1.0, &x, 1e-9).unwrap();
        assert!(rep.pass(), "{rep:#?}");
        assert_eq!(rep.class_k_witness.as_deref(), Some("r"));
        let on_axis = from_klein(&Vector::from_column_slice(&[0.3, 0.0, 0.0])).unwrap();
        assert!(example2_verify(1.0, &on_axis, 1e-9).is_err());
    }
}
