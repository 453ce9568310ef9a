//! Dirichlet domains of cyclic groups: loxodromic generators and glide
//! reflections.

use dirichlet_core::domain::{codim2_cycles, compute_domain, simplicity_check, DirichletDomain, DomainOptions};
use dirichlet_core::error::{GeomError, Result};
use dirichlet_core::group::GroupPresentation;
use dirichlet_core::isometry::{
    boost, classify, distance_to_axis, make_glide_reflection, make_loxodromic, rotation, Axis, Isometry, IsometryClass,
};
use dirichlet_core::linalg;
use dirichlet_core::lorentz::{dot, lower, normalize_any_timelike, sample_ideal, sample_klein, Matrix, Vector};
use dirichlet_core::par;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CyclicReport {
    pub class: String,
    pub base: Vec<f64>,
    pub converged: bool,
    pub final_word_length: usize,
    pub facets: usize,
    /// Hyperbolic faces per dimension.
    pub faces_by_dim: Vec<usize>,
    pub weakly_simple: bool,
    pub simple: bool,
}

pub fn cyclic_group(a: &Isometry) -> Result<GroupPresentation> {
    GroupPresentation::from_pairs(vec![("a", a.clone())])
}

pub fn cyclic_simplicity_experiment(a: &Isometry, x: &Vector, opts: &DomainOptions) -> Result<CyclicReport> {
    let class = classify(a, 1e-9).class;
    if !class.is_loxodromic() {
        return Err(GeomError::InvalidInput(format!("generator is {}, not loxodromic", class.name())));
    }
    let d = compute_domain(&cyclic_group(a)?, x, opts)?;
    let s = simplicity_check(&d);
    let sum = d.summary();
    Ok(CyclicReport {
        class: class.name().into(),
        base: x.iter().copied().collect(),
        converged: d.converged,
        final_word_length: d.final_len,
        facets: d.facet_count(),
        faces_by_dim: sum.faces_by_dim,
        weakly_simple: s.weakly_simple,
        simple: s.simple,
    })
}

/// Orientation-preserving loxodromic with random endpoints, translation
/// length in `[0.4, 2]` and rotation angle in `(0, pi]`.
pub fn random_loxodromic<R: Rng + ?Sized>(rng: &mut R) -> Isometry {
    loop {
        let ep = sample_ideal(rng, 3);
        let em = sample_ideal(rng, 3);
        if (&ep - &em).norm() < 0.2 {
            continue;
        }
        let length = rng.gen_range(0.4..2.0);
        let angle = rng.gen_range(0.05..std::f64::consts::PI);
        if let Ok(a) = make_loxodromic(&ep, &em, length, angle) {
            return a;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CyclicBatch {
    pub seed: u64,
    pub runs: Vec<CyclicReport>,
    pub converged: usize,
    /// Converged runs whose domain is not simple.
    pub failures: usize,
}

/// `generators` random loxodromics, each with `points` random base points.
pub fn cyclic_batch(generators: usize, points: usize, seed: u64) -> Result<CyclicBatch> {
    let opts = DomainOptions::default();
    let runs = par::map_range(generators * points, |i| {
        let mut grng = par::stream(seed, (i / points) as u64);
        let a = random_loxodromic(&mut grng);
        let mut prng = par::stream(seed ^ 0x5eed, i as u64);
        let x = sample_klein(&mut prng, 3, 0.8);
        cyclic_simplicity_experiment(&a, &x, &opts)
    });
    let runs: Vec<CyclicReport> = runs.into_iter().collect::<Result<_>>()?;
    let converged = runs.iter().filter(|r| r.converged).count();
    let failures = runs.iter().filter(|r| r.converged && !r.simple).count();
    Ok(CyclicBatch { seed, runs, converged, failures })
}

/// A glide reflection with axis along `x1` and mirror `x3 = 0`, conjugated
/// by `frame`.
#[derive(Debug, Clone)]
pub struct GlideSetup {
    pub glide: Isometry,
    pub frame: Isometry,
    pub length: f64,
}

impl GlideSetup {
    pub fn new(length: f64, frame: Isometry) -> Result<Self> {
        let ep = Vector::from_column_slice(&[1.0, 1.0, 0.0, 0.0]);
        let em = Vector::from_column_slice(&[1.0, -1.0, 0.0, 0.0]);
        let mirror = Vector::from_column_slice(&[0.0, 0.0, 0.0, 1.0]);
        let g0 = make_glide_reflection(&ep, &em, length, &mirror)?;
        let glide = frame.compose(&g0).compose(&frame.inverse());
        Ok(GlideSetup { glide, frame, length })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, length: (f64, f64)) -> Result<Self> {
        let l = rng.gen_range(length.0..length.1);
        let mut frame = Isometry::identity(3);
        for _ in 0..3 {
            let step = match rng.gen_range(0..4) {
                0 => boost(3, rng.gen_range(1..4), rng.gen_range(-0.8..0.8)),
                1 => rotation(3, 1, 2, rng.gen_range(0.0..6.3)),
                2 => rotation(3, 2, 3, rng.gen_range(0.0..6.3)),
                _ => rotation(3, 1, 3, rng.gen_range(0.0..6.3)),
            };
            frame = frame.compose(&step);
        }
        GlideSetup::new(l, frame)
    }

    /// Point at distance `r` from the axis inside the invariant plane
    /// `x2 = 0`, `s` along the axis, then pushed `h` off the plane.
    pub fn point(&self, r: f64, s: f64, h: f64) -> Vector {
        let in_plane = boost(3, 1, s).apply(&Vector::from_column_slice(&[r.cosh(), 0.0, 0.0, r.sinh()]));
        let off = &in_plane * h.cosh() + Vector::from_column_slice(&[0.0, 0.0, h.sinh(), 0.0]);
        self.frame.apply(&off)
    }
}

/// `tanh d(x_P, L)` must exceed this for the four-sided polygon to appear.
pub fn polygon_threshold(length: f64) -> f64 {
    (length / 2.0).sinh().powi(2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerpCheck {
    pub power: i64,
    /// `|(x - A^k x) . p|`, relative to the norms.
    pub orthogonality: f64,
    /// Sine of the angle between the normals of `Bis(x, A^k x)` and
    /// `Bis(x_P, A^k x_P)`.
    pub projection_defect: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlideReport {
    pub base: Vec<f64>,
    pub translation_length: f64,
    pub distance_to_axis: f64,
    /// `tanh d(x_P, L) > sinh^2(l / 2)`.
    pub polygon_regime: bool,
    pub converged: bool,
    pub facets: usize,
    pub facet_words: Vec<String>,
    pub codim2_faces: usize,
    /// `d(., L)` at the points where the codimension-2 faces cross the plane.
    pub vertex_distances: Vec<f64>,
    pub cycle_lengths: Vec<usize>,
    pub perp: Vec<PerpCheck>,
    pub simple: bool,
}

impl GlideReport {
    pub fn distance_spread(&self) -> f64 {
        let max = self.vertex_distances.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.vertex_distances.iter().cloned().fold(f64::MAX, f64::min);
        if self.vertex_distances.is_empty() {
            0.0
        } else {
            max - min
        }
    }

    pub fn perp_defect(&self) -> f64 {
        self.perp.iter().map(|c| c.orthogonality.max(c.projection_defect)).fold(0.0, f64::max)
    }

    /// Four sides, three vertex classes at equal distance from the axis,
    /// one vertex cycle of length three.
    pub fn polygon_holds(&self, tol: f64) -> bool {
        self.converged
            && self.facets == 4
            && self.codim2_faces == 3
            && self.distance_spread() <= tol
            && self.cycle_lengths == vec![3]
            && self.perp_defect() <= tol
            && self.simple
    }

    /// Two sides and no codimension-2 faces.
    pub fn strip_holds(&self, tol: f64) -> bool {
        self.converged && self.facets == 2 && self.codim2_faces == 0 && self.perp_defect() <= tol && self.simple
    }

    pub fn pass(&self, tol: f64) -> bool {
        if self.polygon_regime {
            self.polygon_holds(tol)
        } else {
            self.strip_holds(tol)
        }
    }
}

/// Pole of the plane through the axis of a glide reflection and
/// perpendicular to its mirror: the `+1` eigenvector. The glide acts on
/// that plane as a glide reflection of `H^2`.
pub fn plane_pole(a: &Isometry) -> Result<Vector> {
    let len = a.matrix().nrows();
    let k = linalg::null_space(&(a.matrix() - Matrix::identity(len, len)), 1e-9);
    if k.ncols() != 1 {
        return Err(GeomError::InvalidInput(format!("+1 eigenspace has dimension {}", k.ncols())));
    }
    Ok(k.column(0).into_owned())
}

fn glide_axis(a: &Isometry) -> Result<Axis> {
    match classify(a, 1e-9) {
        c if c.orientation_preserving => Err(GeomError::InvalidInput("generator preserves orientation".into())),
        c => match c.class {
            IsometryClass::StrictlyLoxodromic { axis, reflection: true, .. } => Ok(axis),
            other => Err(GeomError::InvalidInput(format!("generator is {}, not a glide reflection", other.name()))),
        },
    }
}

fn rel(a: &Vector, b: &Vector) -> f64 {
    dot(a, b).abs() / (a.norm() * b.norm())
}

fn sine(a: &Vector, b: &Vector) -> f64 {
    let (ua, ub) = (a / a.norm(), b / b.norm());
    (&ua - &ub * ua.dot(&ub)).norm()
}

/// Nearest point to `x` on the plane `p^perp`.
pub fn project_to_plane(x: &Vector, p: &Vector) -> Result<Vector> {
    normalize_any_timelike(&(x - p * (dot(x, p) / dot(p, p))))
}

/// Where the codimension-2 face `face` crosses the plane `p^perp`.
fn crossing(d: &DirichletDomain, face: usize, p: &Vector) -> Result<Vector> {
    let mut rows: Vec<Vector> = d.faces[face].contributors.iter().map(|&c| lower(&d.contributors[c].normal)).collect();
    rows.push(lower(p));
    let k = linalg::null_space(&linalg::rows(&rows, p.len()), 1e-9);
    if k.ncols() != 1 {
        return Err(GeomError::InvalidInput("face is not orthogonal to the plane".into()));
    }
    normalize_any_timelike(&k.column(0).into_owned())
}

pub fn glide_domain_verify(a: &Isometry, x: &Vector, opts: &DomainOptions) -> Result<GlideReport> {
    let axis = glide_axis(a)?;
    let p = plane_pole(a)?;
    let xp = project_to_plane(x, &p)?;
    let r = distance_to_axis(&xp, &axis);
    let length = axis.translation_length;
    let perp = [-2i64, -1, 1, 2]
        .iter()
        .map(|&k| {
            let ak = a.power(k);
            let n = x - ak.apply(x);
            let np = &xp - ak.apply(&xp);
            PerpCheck { power: k, orthogonality: rel(&n, &p), projection_defect: sine(&n, &np) }
        })
        .collect();

    let d = compute_domain(&cyclic_group(a)?, x, opts)?;
    if !d.converged {
        return Err(GeomError::NotConverged(d.final_len));
    }
    let codim2: Vec<usize> = d.faces_of_dim(d.dim - 2).map(|(i, _)| i).collect();
    let vertex_distances = codim2
        .iter()
        .map(|&f| crossing(&d, f, &p).map(|y| distance_to_axis(&y, &axis)))
        .collect::<Result<Vec<f64>>>()?;
    let cycle_lengths = if codim2.is_empty() {
        Vec::new()
    } else {
        codim2_cycles(&d)?.iter().map(|c| c.faces.len()).collect()
    };
    let s = simplicity_check(&d);
    Ok(GlideReport {
        base: x.iter().copied().collect(),
        translation_length: length,
        distance_to_axis: r,
        polygon_regime: r.tanh() > polygon_threshold(length),
        converged: d.converged,
        facets: d.facet_count(),
        facet_words: d.contributors.iter().map(|c| c.word.clone()).collect(),
        codim2_faces: codim2.len(),
        vertex_distances,
        cycle_lengths,
        perp,
        simple: s.simple,
    })
}

/// Random base point for `setup` whose projection lies at distance with
/// `tanh` at least `margin` above (or below, when `polygon` is false) the
/// threshold.
pub fn glide_base_point<R: Rng + ?Sized>(rng: &mut R, setup: &GlideSetup, polygon: bool, margin: f64) -> Vector {
    let t = polygon_threshold(setup.length);
    let tanh_r = if polygon {
        rng.gen_range((t + margin).min(0.95)..0.97)
    } else {
        rng.gen_range(0.0..(t - margin).max(1e-3))
    };
    let s = rng.gen_range(-1.0..1.0);
    let h = rng.gen_range(-0.8..0.8);
    setup.point(tanh_r.atanh(), s, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loxodromic_domains_are_simple() {
        let b = cyclic_batch(2, 2, 11).unwrap();
        assert_eq!(b.runs.len(), 4);
        assert_eq!(b.failures, 0);
        assert_eq!(b.converged, 4);
    }

    #[test]
    fn rejects_non_loxodromic() {
        let r = rotation(3, 1, 2, 1.0);
        let x = dirichlet_core::lorentz::from_klein(&Vector::from_column_slice(&[0.1, 0.2, 0.3])).unwrap();
        assert!(cyclic_simplicity_experiment(&r, &x, &DomainOptions::default()).is_err());
    }

    #[test]
    fn glide_polygon_and_strip() {
        let setup = GlideSetup::new(0.8, Isometry::identity(3)).unwrap();
        let x = setup.point(1.0, 0.3, 0.4);
        let rep = glide_domain_verify(&setup.glide, &x, &DomainOptions::default()).unwrap();
        assert!(rep.polygon_regime);
        assert!(rep.polygon_holds(1e-9), "{rep:#?}");
        assert!((rep.distance_to_axis - 1.0).abs() < 1e-9);

        let y = setup.point(0.05, 0.0, 0.2);
        let rep = glide_domain_verify(&setup.glide, &y, &DomainOptions::default()).unwrap();
        assert!(!rep.polygon_regime);
        assert!(rep.strip_holds(1e-9), "{rep:#?}");
    }
}
