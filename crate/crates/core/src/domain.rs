//! Dirichlet domains `D_x = {p : d(p, x) <= d(p, gamma x) for all gamma}`.
//!
//! The domain is the cone cut out by the half-spaces `p . (x - gamma x) >= 0`
//! together with `p0 >= 0`. Half-spaces are added in order of word length;
//! after each length, constraints whose facet misses the open future cone are
//! discarded, which leaves `D_x` itself unchanged because the cone's
//! intersection with the future cone is convex.

use serde::{Deserialize, Serialize};

use crate::bisector::transversal_at;
use crate::cone::{self, Cone, FaceLattice};
use crate::error::{GeomError, Result};
use crate::group::{dedup_tolerance, enumerate, Enumeration, GroupPresentation};
use crate::isometry::{classify, Isometry, IsometryClass};
use crate::linalg::max_abs;
use crate::lorentz::{self, dot, Vector};

#[derive(Debug, Clone)]
pub struct DomainOptions {
    pub len_start: usize,
    pub len_max: usize,
    /// Consecutive word-length increments with an unchanged active set
    /// required for convergence.
    pub stability_window: usize,
    pub dedup_tol: f64,
    /// Zero threshold of the double description, for unit vectors.
    pub cone_tol: f64,
    /// Relative threshold for a face lying on a bisector.
    pub incidence_tol: f64,
    /// Maximum number of half-spaces held at once.
    pub halfspace_cap: usize,
}

impl Default for DomainOptions {
    fn default() -> Self {
        DomainOptions {
            len_start: 1,
            len_max: 12,
            stability_window: 2,
            dedup_tol: 1e-9,
            cone_tol: 1e-9,
            incidence_tol: 1e-7,
            halfspace_cap: 256,
        }
    }
}

/// A half-space bounding the domain in a facet.
#[derive(Debug, Clone)]
pub struct Contributor {
    pub word: String,
    /// Index into the final enumeration.
    pub element: usize,
    /// Lorentz normal `x - gamma x`.
    pub normal: Vector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Epoch {
    pub word_length: usize,
    pub elements: usize,
    pub active: Vec<String>,
}

/// A face of the domain meeting hyperbolic space.
#[derive(Debug, Clone)]
pub struct DomainFace {
    /// Index into the face lattice of the cone.
    pub lattice_face: usize,
    /// Dimension as a subset of `H^n`.
    pub dim: usize,
    /// Contributors whose facets contain the face.
    pub contributors: Vec<usize>,
    /// A point of `H` in the relative interior of the face.
    pub point: Vector,
}

#[derive(Debug, Clone)]
pub struct DirichletDomain {
    pub dim: usize,
    pub base: Vector,
    pub enumeration: Enumeration,
    /// Constraint 0 is `p0 >= 0`; constraint `i + 1` belongs to contributor `i`.
    pub cone: Cone,
    pub contributors: Vec<Contributor>,
    pub lattice: FaceLattice,
    pub faces: Vec<DomainFace>,
    pub converged: bool,
    pub final_len: usize,
    pub history: Vec<Epoch>,
    pub options: DomainOptions,
}

fn time_functional(len: usize) -> Vector {
    let mut e = Vector::zeros(len);
    e[0] = 1.0;
    e
}

fn facet_meets(cone: &Cone, constraint: usize) -> bool {
    cone::face_meets_hyperbolic(&cone.face_generators(&cone.incidence(constraint)))
}

fn rebuild(len: usize, normals: &[&Vector], tol: f64) -> Result<Cone> {
    let mut c = Cone::whole_space(len, tol);
    c.add(&time_functional(len))?;
    for n in normals {
        c.add(&lorentz::lower(n))?;
    }
    Ok(c)
}

/// A relative-interior timelike point of the cone spanned by `gens`,
/// normalized to `H`.
pub fn interior_timelike_point(gens: &[Vector]) -> Option<Vector> {
    let m = cone::minimize_form(gens, 0);
    if m.value >= -cone::MEET_TOL {
        return None;
    }
    let mut center = Vector::zeros(m.point.len());
    for g in gens {
        if g.norm() > 0.0 {
            center += g.normalize();
        }
    }
    let mut t = 0.5;
    for _ in 0..60 {
        let p = &m.point + &center * t;
        if dot(&p, &p) < 0.5 * m.value {
            return lorentz::normalize_any_timelike(&p).ok();
        }
        t *= 0.5;
    }
    lorentz::normalize_any_timelike(&m.point).ok()
}

/// Computes `D_x` by increasing word length until the set of facet-defining
/// half-spaces is stable.
///
/// A run that reaches `len_max` without stabilizing is returned with
/// `converged == false`.
pub fn compute_domain(g: &GroupPresentation, x: &Vector, opts: &DomainOptions) -> Result<DirichletDomain> {
    let len = g.dim + 1;
    if x.len() != len {
        return Err(GeomError::DimensionMismatch { expected: len, found: x.len() });
    }
    if (lorentz::norm_sq(x) + 1.0).abs() > 1e-9 * x.norm_squared().max(1.0) || x[0] <= 0.0 {
        return Err(GeomError::NotFutureTimelike);
    }
    let mut kept: Vec<(Vector, usize)> = Vec::new();
    let mut history: Vec<Epoch> = Vec::new();
    let mut stable = 0;
    let mut converged = false;
    let mut enumeration = enumerate(g, 0, opts.dedup_tol)?;
    let mut final_len = 0;
    let start = opts.len_start.max(1);
    for word_len in start..=opts.len_max.max(start) {
        let prev = enumeration.elements.len();
        enumeration = enumerate(g, word_len, opts.dedup_tol)?;
        final_len = word_len;
        let fresh = if word_len == start { 1 } else { prev };
        let normals_so_far: Vec<&Vector> = kept.iter().map(|k| &k.0).collect();
        let mut cone = rebuild(len, &normals_so_far, opts.cone_tol)?;
        let mut members: Vec<(Vector, usize)> = kept.clone();
        for i in fresh..enumeration.elements.len() {
            let e = &enumeration.elements[i];
            let y = e.isometry.apply(x);
            let n = x - &y;
            if n.norm() <= opts.dedup_tol * y.norm().max(1.0) * 10.0 {
                return Err(GeomError::InvalidInput(format!(
                    "base point is fixed by {}",
                    enumeration.word(i)
                )));
            }
            cone.add(&lorentz::lower(&n))?;
            members.push((n, i));
            if members.len() > opts.halfspace_cap * 4 {
                cone = prune(len, &mut members, opts)?;
            }
        }
        prune(len, &mut members, opts)?;
        if members.len() > opts.halfspace_cap {
            return Err(GeomError::HalfSpaceCap { count: members.len(), cap: opts.halfspace_cap });
        }
        let mut active: Vec<String> = members.iter().map(|m| enumeration.word(m.1)).collect();
        active.sort();
        let same = history.last().is_some_and(|h| h.active == active);
        stable = if same { stable + 1 } else { 0 };
        history.push(Epoch { word_length: word_len, elements: enumeration.elements.len(), active });
        kept = members;
        if stable >= opts.stability_window {
            converged = true;
            break;
        }
    }
    kept.sort_by_key(|k| k.1);
    let normals: Vec<&Vector> = kept.iter().map(|k| &k.0).collect();
    let cone = rebuild(len, &normals, opts.cone_tol)?;
    let contributors: Vec<Contributor> = kept
        .iter()
        .map(|(n, i)| Contributor { word: enumeration.word(*i), element: *i, normal: n.clone() })
        .collect();
    let lattice = cone.face_lattice();
    let mut faces = Vec::new();
    for (fi, f) in lattice.faces.iter().enumerate() {
        let gens = cone.face_generators(&f.rays);
        if let Some(point) = interior_timelike_point(&gens) {
            let contributors: Vec<usize> = f.facets.iter().filter(|&&c| c > 0).map(|&c| c - 1).collect();
            faces.push(DomainFace { lattice_face: fi, dim: f.dim - 1, contributors, point });
        }
    }
    Ok(DirichletDomain {
        dim: g.dim,
        base: x.clone(),
        enumeration,
        cone,
        contributors,
        lattice,
        faces,
        converged,
        final_len,
        history,
        options: opts.clone(),
    })
}

/// Rebuilds the cone from `members`, keeping only facet-defining half-spaces
/// whose facets meet the open future cone.
fn prune(len: usize, members: &mut Vec<(Vector, usize)>, opts: &DomainOptions) -> Result<Cone> {
    let normals: Vec<&Vector> = members.iter().map(|m| &m.0).collect();
    let cone = rebuild(len, &normals, opts.cone_tol)?;
    let facets = cone.facets();
    let keep: Vec<usize> = facets
        .into_iter()
        .filter(|&c| c > 0 && facet_meets(&cone, c))
        .map(|c| c - 1)
        .collect();
    let mut next: Vec<(Vector, usize)> = keep.iter().map(|&k| members[k].clone()).collect();
    next.sort_by_key(|m| m.1);
    *members = next;
    let normals: Vec<&Vector> = members.iter().map(|m| &m.0).collect();
    rebuild(len, &normals, opts.cone_tol)
}

impl DirichletDomain {
    /// Facet-defining constraint index of contributor `i`.
    pub fn constraint_of(&self, contributor: usize) -> usize {
        contributor + 1
    }

    /// Whether `p` satisfies every half-space within a relative tolerance.
    pub fn contains(&self, p: &Vector, tol: f64) -> bool {
        self.contributors.iter().all(|c| dot(p, &c.normal) >= -tol * p.norm() * c.normal.norm())
    }

    /// Contributors whose bisector passes through `p`.
    pub fn tight_at(&self, p: &Vector, tol: f64) -> Vec<usize> {
        (0..self.contributors.len())
            .filter(|&i| {
                let n = &self.contributors[i].normal;
                dot(p, n).abs() <= tol * p.norm() * n.norm()
            })
            .collect()
    }

    /// Hyperbolic face containing `p` in its relative interior, if `p` lies in
    /// the domain.
    pub fn locate(&self, p: &Vector, tol: f64) -> Option<usize> {
        if !self.contains(p, tol) {
            return None;
        }
        let tight = self.tight_at(p, tol);
        let mut rays: Vec<usize> = (0..self.cone.rays().len()).collect();
        for c in &tight {
            let inc = self.cone.incidence(self.constraint_of(*c));
            rays.retain(|r| inc.binary_search(r).is_ok());
        }
        let lf = self.lattice.faces.iter().position(|f| f.rays == rays)?;
        self.faces.iter().position(|f| f.lattice_face == lf)
    }

    /// Faces of dimension `d` meeting `H`.
    pub fn faces_of_dim(&self, d: usize) -> impl Iterator<Item = (usize, &DomainFace)> {
        self.faces.iter().enumerate().filter(move |(_, f)| f.dim == d)
    }

    pub fn facet_count(&self) -> usize {
        self.contributors.len()
    }

    /// Cone generators of a hyperbolic face.
    pub fn generators(&self, face: usize) -> Vec<Vector> {
        self.cone.face_generators(&self.lattice.faces[self.faces[face].lattice_face].rays)
    }

    /// Enumerated elements whose bisector contains the whole face.
    pub fn bisectors_through(&self, face: usize, tol: f64) -> Vec<usize> {
        let gens = self.generators(face);
        self.enumeration
            .non_identity()
            .filter(|(_, e)| {
                let n = &self.base - e.isometry.apply(&self.base);
                gens.iter().all(|g| dot(g, &n).abs() <= tol * g.norm() * n.norm())
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Index of the enumerated element within tolerance of `m`.
    pub fn find_element(&self, m: &Isometry) -> Option<usize> {
        let tol = dedup_tolerance(self.options.dedup_tol, self.final_len, m.matrix()) * 10.0;
        self.enumeration.elements.iter().position(|e| max_abs(&(e.isometry.matrix() - m.matrix())) <= tol)
    }

    /// Faces touching the sphere at infinity without entering `H`.
    pub fn ideal_faces(&self) -> Vec<usize> {
        self.lattice
            .faces
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                if f.dim == 0 {
                    return false;
                }
                let gens = self.cone.face_generators(&f.rays);
                let m = cone::minimize_form(&gens, 0);
                m.value.abs() <= 1e-9 && m.point[0] > 0.0
            })
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceIncidence {
    pub face: usize,
    pub dim: usize,
    pub bisector_count: usize,
    pub words: Vec<String>,
    /// Normals of the bisectors through a vertex are independent.
    pub transversal: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CartanLocation {
    pub word: String,
    pub fixed_point: Vec<f64>,
    /// Dimension of the smallest face of the domain containing the fixed
    /// point, when the fixed point lies in the domain.
    pub face_dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplicityReport {
    pub weakly_simple: bool,
    pub simple: bool,
    pub codim2: Vec<FaceIncidence>,
    pub vertices: Vec<FaceIncidence>,
    pub cartan: Vec<CartanLocation>,
}

/// Counts bisectors through every codimension-2 face and every vertex in `H`.
///
/// Weakly simple: each codimension-2 face lies on exactly two bisectors.
/// Simple: additionally each vertex lies on exactly `n` bisectors with
/// independent normals.
pub fn simplicity_check(d: &DirichletDomain) -> SimplicityReport {
    let n = d.dim;
    let tol = d.options.incidence_tol;
    let mut codim2 = Vec::new();
    let mut vertices = Vec::new();
    for (i, f) in d.faces.iter().enumerate() {
        if f.dim + 2 != n && f.dim != 0 {
            continue;
        }
        let through = d.bisectors_through(i, tol);
        let words: Vec<String> = through.iter().map(|&k| d.enumeration.word(k)).collect();
        let mut rec = FaceIncidence { face: i, dim: f.dim, bisector_count: through.len(), words, transversal: None };
        if f.dim == 0 {
            let normals: Vec<Vector> =
                through.iter().map(|&k| &d.base - d.enumeration.elements[k].isometry.apply(&d.base)).collect();
            rec.transversal = transversal_at(&f.point, &normals, tol).ok();
            vertices.push(rec.clone());
        }
        if f.dim + 2 == n {
            codim2.push(rec);
        }
    }
    let weakly_simple = codim2.iter().all(|r| r.bisector_count == 2);
    let simple = weakly_simple && vertices.iter().all(|r| r.bisector_count == n && r.transversal == Some(true));

    let mut cartan = Vec::new();
    for (i, e) in d.enumeration.non_identity() {
        if let IsometryClass::EllipticCartan { fixed_point } = classify(&e.isometry, 1e-9).class {
            let p = Vector::from_vec(fixed_point.clone());
            let face_dim = d.locate(&p, tol).map(|f| d.faces[f].dim);
            cartan.push(CartanLocation { word: d.enumeration.word(i), fixed_point, face_dim });
        }
    }
    SimplicityReport { weakly_simple, simple, codim2, vertices, cartan }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidePairing {
    pub facet: String,
    /// Element carrying the facet onto its partner.
    pub map: String,
    pub partner: Option<String>,
    pub verified: bool,
}

/// For each facet on `Bis(x, gamma x)`, checks that `gamma^{-1}` carries it
/// onto the facet on `Bis(x, gamma^{-1} x)`.
pub fn side_pairings(d: &DirichletDomain) -> Vec<SidePairing> {
    let tol = d.options.incidence_tol;
    d.contributors
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let g = &d.enumeration.elements[c.element].isometry;
            let inv = g.inverse();
            let inv_idx = d.find_element(&inv);
            let partner = inv_idx.and_then(|k| d.contributors.iter().position(|o| o.element == k));
            let facet_face = d.faces.iter().find(|f| f.dim + 1 == d.dim && f.contributors == vec![ci]);
            let verified = match (partner, facet_face) {
                (Some(pi), Some(f)) => {
                    let q = inv.apply(&f.point);
                    d.contains(&q, tol) && d.tight_at(&q, tol).contains(&pi)
                }
                _ => false,
            };
            SidePairing {
                facet: c.word.clone(),
                map: inv_idx.map_or_else(|| "?".into(), |k| d.enumeration.word(k)),
                partner: partner.map(|p| d.contributors[p].word.clone()),
                verified,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceCycle {
    /// Hyperbolic faces visited, as indices into `DirichletDomain::faces`.
    pub faces: Vec<usize>,
    /// Words of the pairing maps applied along the cycle.
    pub maps: Vec<String>,
}

/// Cycles of codimension-2 faces under the side pairings.
///
/// Starting from a face `e` on facets `f` and `f'`, the pairing of `f` maps
/// `e` to a face `e'` on the partner facet; the walk continues through the
/// other facet of `e'` until it returns to the starting pair.
pub fn codim2_cycles(d: &DirichletDomain) -> Result<Vec<FaceCycle>> {
    let tol = d.options.incidence_tol;
    let targets: Vec<usize> = d.faces_of_dim(d.dim.saturating_sub(2)).map(|(i, _)| i).collect();
    let mut seen = std::collections::HashSet::new();
    let mut cycles = Vec::new();
    for &start in &targets {
        if d.faces[start].contributors.len() != 2 {
            continue;
        }
        let first = d.faces[start].contributors[0];
        if seen.contains(&(start, first)) {
            continue;
        }
        let mut state = (start, first);
        let mut faces = Vec::new();
        let mut maps = Vec::new();
        for _ in 0..=4 * targets.len() + 4 {
            seen.insert(state);
            faces.push(state.0);
            let (e, f) = state;
            let g = d.enumeration.elements[d.contributors[f].element].isometry.inverse();
            let gi = d.find_element(&g).ok_or_else(|| GeomError::InvalidInput("pairing element not enumerated".into()))?;
            maps.push(d.enumeration.word(gi));
            let q = g.apply(&d.faces[e].point);
            let next = d
                .locate(&q, tol)
                .ok_or_else(|| GeomError::InvalidInput("paired face leaves the domain".into()))?;
            let partner = d
                .contributors
                .iter()
                .position(|c| c.element == gi)
                .ok_or_else(|| GeomError::InvalidInput("facet has no partner".into()))?;
            let nf = &d.faces[next];
            if nf.contributors.len() != 2 || !nf.contributors.contains(&partner) {
                return Err(GeomError::InvalidInput("codimension-2 face is not on exactly two facets".into()));
            }
            let other = if nf.contributors[0] == partner { nf.contributors[1] } else { nf.contributors[0] };
            state = (next, other);
            // Traversal in the reverse direction is the same cycle.
            seen.insert((next, partner));
            if state == (start, first) {
                break;
            }
        }
        cycles.push(FaceCycle { faces, maps });
    }
    Ok(cycles)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContributorRecord {
    pub word: String,
    pub normal: Vec<f64>,
}

/// Serializable summary of a domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSummary {
    pub dim: usize,
    pub base: Vec<f64>,
    pub converged: bool,
    pub final_word_length: usize,
    pub contributors: Vec<ContributorRecord>,
    /// Number of faces meeting `H`, indexed by dimension.
    pub faces_by_dim: Vec<usize>,
    pub vertices: Vec<Vec<f64>>,
    pub ideal_faces: usize,
    pub history: Vec<Epoch>,
}

impl DirichletDomain {
    pub fn summary(&self) -> DomainSummary {
        let mut faces_by_dim = vec![0; self.dim + 1];
        for f in &self.faces {
            faces_by_dim[f.dim] += 1;
        }
        DomainSummary {
            dim: self.dim,
            base: self.base.iter().copied().collect(),
            converged: self.converged,
            final_word_length: self.final_len,
            contributors: self
                .contributors
                .iter()
                .map(|c| ContributorRecord { word: c.word.clone(), normal: c.normal.iter().copied().collect() })
                .collect(),
            faces_by_dim,
            vertices: self.faces_of_dim(0).map(|(_, f)| f.point.iter().copied().collect()).collect(),
            ideal_faces: self.ideal_faces().len(),
            history: self.history.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::{boost, rotation};
    use crate::lorentz::{form, from_klein};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn boost_slab() {
        let g = GroupPresentation::from_pairs(vec![("a", boost(3, 1, 1.0))]).unwrap();
        let x = v(&[1.0, 0.0, 0.0, 0.0]);
        let d = compute_domain(&g, &x, &DomainOptions::default()).unwrap();
        assert!(d.converged);
        let mut words: Vec<&str> = d.contributors.iter().map(|c| c.word.as_str()).collect();
        words.sort();
        assert_eq!(words, vec!["a", "a^-1"]);
        assert_eq!(d.faces_of_dim(2).count(), 2);
        assert_eq!(d.faces_of_dim(1).count(), 0);
        let s = simplicity_check(&d);
        assert!(s.simple);
    }

    #[test]
    fn cartan_half_space() {
        let j = Isometry::new(-form(4), 1e-12).unwrap();
        let g = GroupPresentation::from_pairs(vec![("j", j)]).unwrap();
        let x = from_klein(&v(&[0.3, 0.1, 0.0])).unwrap();
        let d = compute_domain(&g, &x, &DomainOptions::default()).unwrap();
        assert_eq!(d.contributors.len(), 1);
        let s = simplicity_check(&d);
        assert_eq!(s.cartan.len(), 1);
        assert_eq!(s.cartan[0].face_dim, Some(2));
        let pairs = side_pairings(&d);
        assert!(pairs[0].verified);
    }

    #[test]
    fn rejects_fixed_base_point() {
        let g = GroupPresentation::from_pairs(vec![("r", rotation(3, 1, 2, 1.0))]).unwrap();
        let x = v(&[1.0, 0.0, 0.0, 0.0]);
        assert!(compute_domain(&g, &x, &DomainOptions::default()).is_err());
    }

    #[test]
    fn schottky_pair_domain() {
        let g = GroupPresentation::from_pairs(vec![("a", boost(3, 1, 2.0)), ("b", boost(3, 2, 2.0))]).unwrap();
        let x = from_klein(&v(&[0.05, -0.03, 0.02])).unwrap();
        let opts = DomainOptions { len_max: 5, ..Default::default() };
        let d = compute_domain(&g, &x, &opts).unwrap();
        assert!(d.converged);
        assert_eq!(d.facet_count(), 4);
        assert!(side_pairings(&d).iter().all(|p| p.verified));
    }
}
