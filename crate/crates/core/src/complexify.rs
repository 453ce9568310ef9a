//! Projective spans of faces, parasitic intersections and their saturation.
//!
//! Each face `c` gets the projective space `P_c = Span(c)`, a linear subspace
//! of `R^{n+1}`. A morphism `c_i -> c` maps `P_{c_i}` into `P_c` by its
//! matrix. An intersection of images of sub-faces that is not itself the
//! image of a common incident face is parasitic.

use std::collections::{HashSet, VecDeque};

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::complexes::{group_action_on_complex, PolyComplex};
use crate::cone::{self, Cone};
use crate::error::{GeomError, Result};
use crate::exact::{self, RatMatrix, RatPair, Rational};
use crate::isometry::Isometry;
use crate::linalg::{self, column_space, max_abs, null_space, numeric_rank};
use crate::lorentz::{self, dot, Matrix, Vector};

/// Relative singular-value threshold for float subspaces.
pub const RANK_TOL: f64 = 1e-8;
/// Default largest tuple size in the primary enumeration.
pub const SIGMA_CAP: usize = 4;
/// Default limit on tuples examined per host face.
pub const TUPLE_BUDGET: usize = 1_000_000;
/// Orbit size at which saturation stops.
pub const ORBIT_CAP: usize = 10_000;

/// A linear subspace of `R^{n+1}`, read projectively.
#[derive(Debug, Clone)]
pub enum ProjectiveSubspace {
    /// Canonical rational basis: equal subspaces have equal matrices.
    Exact(RatMatrix),
    /// Orthonormal float basis.
    Float(Matrix),
}

impl ProjectiveSubspace {
    pub fn exact(cols: &RatMatrix) -> Self {
        ProjectiveSubspace::Exact(cols.canonical_column_space())
    }

    pub fn float(cols: &Matrix) -> Self {
        ProjectiveSubspace::Float(column_space(cols, RANK_TOL))
    }

    pub fn whole(len: usize, exact: bool) -> Self {
        if exact {
            ProjectiveSubspace::Exact(RatMatrix::identity(len))
        } else {
            ProjectiveSubspace::Float(Matrix::identity(len, len))
        }
    }

    pub fn ambient_len(&self) -> usize {
        match self {
            ProjectiveSubspace::Exact(m) => m.nrows(),
            ProjectiveSubspace::Float(m) => m.nrows(),
        }
    }

    /// Linear dimension; the projective dimension is one less.
    pub fn dim(&self) -> usize {
        match self {
            ProjectiveSubspace::Exact(m) => m.ncols(),
            ProjectiveSubspace::Float(m) => m.ncols(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ProjectiveSubspace::Exact(_))
    }

    pub fn basis_f64(&self) -> Matrix {
        match self {
            ProjectiveSubspace::Exact(m) => m.to_f64(),
            ProjectiveSubspace::Float(m) => m.clone(),
        }
    }

    pub fn to_float(&self) -> ProjectiveSubspace {
        match self {
            ProjectiveSubspace::Exact(m) => ProjectiveSubspace::float(&m.to_f64()),
            f => f.clone(),
        }
    }

    fn annihilator_rows_exact(m: &RatMatrix) -> RatMatrix {
        m.transpose().null_space().transpose()
    }

    fn annihilator_rows_float(m: &Matrix) -> Matrix {
        if m.ncols() == 0 {
            return Matrix::identity(m.nrows(), m.nrows());
        }
        null_space(&m.transpose(), RANK_TOL).transpose()
    }

    /// Whether `other` is contained in `self`.
    pub fn contains(&self, other: &ProjectiveSubspace) -> bool {
        match (self, other) {
            (ProjectiveSubspace::Exact(a), ProjectiveSubspace::Exact(b)) => {
                b.ncols() == 0 || Self::annihilator_rows_exact(a).mul(b).is_zero()
            }
            _ => {
                let (a, b) = (self.basis_f64(), other.basis_f64());
                if b.ncols() == 0 {
                    return true;
                }
                let joined = Matrix::from_fn(a.nrows(), a.ncols() + b.ncols(), |i, j| {
                    if j < a.ncols() {
                        a[(i, j)]
                    } else {
                        let col = b.column(j - a.ncols());
                        col[i] / col.norm().max(f64::MIN_POSITIVE)
                    }
                });
                numeric_rank(&joined, RANK_TOL) == a.ncols()
            }
        }
    }

    /// Equal dimension and mutual containment.
    pub fn same_as(&self, other: &ProjectiveSubspace) -> bool {
        match (self, other) {
            (ProjectiveSubspace::Exact(a), ProjectiveSubspace::Exact(b)) => a == b,
            _ => self.dim() == other.dim() && self.contains(other) && other.contains(self),
        }
    }

    /// Image under a linear map.
    pub fn image(&self, m: &Matrix, exact: Option<&RatMatrix>) -> ProjectiveSubspace {
        match (self, exact) {
            (ProjectiveSubspace::Exact(b), Some(e)) => ProjectiveSubspace::exact(&e.mul(b)),
            _ => ProjectiveSubspace::float(&(m * self.basis_f64())),
        }
    }

    /// `{v in domain : M v in self}`.
    pub fn preimage(&self, m: &Matrix, exact: Option<&RatMatrix>, domain: &ProjectiveSubspace) -> ProjectiveSubspace {
        match (self, exact, domain) {
            (ProjectiveSubspace::Exact(s), Some(e), ProjectiveSubspace::Exact(d)) => {
                let coeffs = Self::annihilator_rows_exact(s).mul(&e.mul(d)).null_space();
                ProjectiveSubspace::exact(&d.mul(&coeffs))
            }
            _ => {
                let d = domain.basis_f64();
                let ann = Self::annihilator_rows_float(&self.basis_f64());
                let md = m * &d;
                let scale = max_abs(&md).max(1.0);
                let coeffs = null_space(&(ann * md / scale), RANK_TOL);
                ProjectiveSubspace::float(&(d * coeffs))
            }
        }
    }

    /// Canonical text form used to order exact subspaces.
    pub fn canonical_key(&self) -> String {
        match self {
            ProjectiveSubspace::Exact(m) => {
                let mut s = String::new();
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        s.push_str(&m.get(i, j).to_string());
                        s.push(',');
                    }
                    s.push(';');
                }
                s
            }
            ProjectiveSubspace::Float(m) => {
                // Projector entries rounded, stable under change of basis.
                let p = m * m.transpose();
                p.iter().map(|x| format!("{:.6}", x + 0.0)).collect::<Vec<_>>().join(",")
            }
        }
    }

    pub fn to_json(&self) -> SubspaceJson {
        match self {
            ProjectiveSubspace::Exact(m) => SubspaceJson::Exact(
                m.columns().iter().map(|c| c.iter().map(RatPair::from_rational).collect()).collect(),
            ),
            ProjectiveSubspace::Float(m) => {
                SubspaceJson::Float(m.column_iter().map(|c| c.iter().copied().collect()).collect())
            }
        }
    }
}

/// Basis columns of a subspace, exact as `[num, den]` pairs or floats.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceJson {
    Exact(Vec<Vec<RatPair>>),
    Float(Vec<Vec<f64>>),
}

/// Intersection of subspaces: null space of the stacked annihilators.
/// Exact when every input is exact.
pub fn intersect_subspaces(list: &[ProjectiveSubspace]) -> Result<ProjectiveSubspace> {
    let Some(first) = list.first() else {
        return Err(GeomError::InvalidInput("nothing to intersect".into()));
    };
    let len = first.ambient_len();
    if let Some(bad) = list.iter().find(|s| s.ambient_len() != len) {
        return Err(GeomError::DimensionMismatch { expected: len, found: bad.ambient_len() });
    }
    if list.iter().all(|s| s.is_exact()) {
        let mut rows = RatMatrix::zeros(0, len);
        for s in list {
            if let ProjectiveSubspace::Exact(m) = s {
                rows = rows.vstack(&ProjectiveSubspace::annihilator_rows_exact(m));
            }
        }
        return Ok(ProjectiveSubspace::exact(&rows.null_space()));
    }
    let mut rows: Vec<Vector> = Vec::new();
    for s in list {
        let a = ProjectiveSubspace::annihilator_rows_float(&s.basis_f64());
        rows.extend(a.row_iter().map(|r| r.transpose()));
    }
    if rows.is_empty() {
        return Ok(ProjectiveSubspace::whole(len, false));
    }
    let b = null_space(&linalg::rows(&rows, len), RANK_TOL);
    Ok(ProjectiveSubspace::Float(b))
}

/// Projective span of a face: exact from rational rays, otherwise the
/// thresholded column space of the generators.
pub fn span_of_face(cx: &PolyComplex, face: usize) -> Result<ProjectiveSubspace> {
    let f = &cx.faces()[face];
    let Some(g) = &f.geometry else {
        return Err(GeomError::InvalidInput(format!("face {} has no geometry", f.id)));
    };
    if g.generators.is_empty() {
        return Err(GeomError::InvalidInput(format!("face {} has no rays", f.id)));
    }
    Ok(match &g.exact {
        Some(rays) => ProjectiveSubspace::exact(&RatMatrix::from_columns(rays, rays[0].len())),
        None => ProjectiveSubspace::float(&linalg::columns(&g.generators)),
    })
}

pub fn spans(cx: &PolyComplex) -> Result<Vec<ProjectiveSubspace>> {
    (0..cx.faces().len()).map(|i| span_of_face(cx, i)).collect()
}

/// `F_{c,s}(P_s)` for a morphism `s -> c`.
fn mapped_span(cx: &PolyComplex, spans: &[ProjectiveSubspace], s: usize, c: usize) -> ProjectiveSubspace {
    let m = cx.morphism(s, c).expect("incident pair");
    spans[s].image(&m.matrix, m.exact.as_ref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParasiticKind {
    Primary,
    Secondary,
}

#[derive(Debug, Clone)]
pub struct ParasiticRecord {
    pub kind: ParasiticKind,
    /// Face index of the host `c`.
    pub host: usize,
    /// Defining tuple of sub-faces; for secondary records the single proper
    /// face `e`.
    pub sigma: Vec<usize>,
    /// Cartan fixed point of a secondary record.
    pub point: Option<Vec<f64>>,
    pub subspace: ProjectiveSubspace,
    /// Images and preimages under morphisms, including `(host, subspace)`.
    pub orbit: Vec<(usize, ProjectiveSubspace)>,
}

#[derive(Debug, Clone)]
pub struct ParasiticOptions {
    pub sigma_cap: usize,
    pub tuple_budget: usize,
}

impl Default for ParasiticOptions {
    fn default() -> Self {
        ParasiticOptions { sigma_cap: SIGMA_CAP, tuple_budget: TUPLE_BUDGET }
    }
}

/// Faces comparable with `a` (equal, above or below).
fn incident(cx: &PolyComplex, a: usize, b: usize) -> bool {
    a == b || cx.has_morphism(a, b) || cx.has_morphism(b, a)
}

fn host_records(
    cx: &PolyComplex,
    spans: &[ProjectiveSubspace],
    c: usize,
    opts: &ParasiticOptions,
) -> Result<Vec<ParasiticRecord>> {
    let subs: Vec<usize> = cx.below(c).to_vec();
    let images: Vec<ProjectiveSubspace> = subs.iter().map(|&s| mapped_span(cx, spans, s, c)).collect();
    // candidate witnesses: sub-faces and the host itself
    let mut witnesses: Vec<(usize, ProjectiveSubspace)> = subs.iter().copied().zip(images.iter().cloned()).collect();
    witnesses.push((c, spans[c].clone()));

    let mut out: Vec<ParasiticRecord> = Vec::new();
    let mut examined = 0usize;
    let mut stack: Vec<(Vec<usize>, ProjectiveSubspace)> =
        (0..subs.len()).rev().map(|i| (vec![i], images[i].clone())).collect();
    while let Some((tuple, inter)) = stack.pop() {
        examined += 1;
        if examined > opts.tuple_budget {
            return Err(GeomError::InvalidInput(format!(
                "tuple budget {} exceeded at face {}",
                opts.tuple_budget,
                cx.faces()[c].id
            )));
        }
        if tuple.len() >= 2 {
            let sigma: Vec<usize> = tuple.iter().map(|&i| subs[i]).collect();
            let realized = witnesses
                .iter()
                .any(|(w, sp)| sp.same_as(&inter) && sigma.iter().all(|&s| incident(cx, *w, s)));
            if !realized && !out.iter().any(|r| r.subspace.same_as(&inter)) {
                out.push(ParasiticRecord {
                    kind: ParasiticKind::Primary,
                    host: c,
                    sigma,
                    point: None,
                    subspace: inter.clone(),
                    orbit: Vec::new(),
                });
            }
        }
        if tuple.len() < opts.sigma_cap {
            let last = *tuple.last().expect("nonempty");
            for j in (last + 1..subs.len()).rev() {
                let next = intersect_subspaces(&[inter.clone(), images[j].clone()])?;
                if next.is_empty() {
                    continue;
                }
                let mut t = tuple.clone();
                t.push(j);
                stack.push((t, next));
            }
        }
    }
    Ok(out)
}

fn sort_records(records: &mut [ParasiticRecord]) {
    records.sort_by(|a, b| {
        (a.host, a.kind as u8, a.subspace.canonical_key(), &a.sigma).cmp(&(
            b.host,
            b.kind as u8,
            b.subspace.canonical_key(),
            &b.sigma,
        ))
    });
}

/// Primary parasitic intersections `I_{c, sigma}` over all host faces `c` and
/// tuples `sigma` of at least two sub-faces of `c`.
///
/// Tuples are enumerated depth first with the running intersection; a tuple
/// whose intersection is zero is dropped together with its extensions. Each
/// host keeps one record per distinct subspace, with the first tuple found.
pub fn primary_parasitic(cx: &PolyComplex, opts: &ParasiticOptions) -> Result<Vec<ParasiticRecord>> {
    let spans = spans(cx)?;
    let per_host = crate::par::map_range(cx.faces().len(), |c| host_records(cx, &spans, c, opts));
    let mut out = Vec::new();
    for r in per_host {
        out.extend(r?);
    }
    sort_records(&mut out);
    Ok(out)
}

/// A Cartan fixed point attached to a face.
#[derive(Debug, Clone)]
pub enum FixedPoint {
    Exact(Vec<Rational>),
    Float(Vector),
}

impl FixedPoint {
    pub fn to_f64(&self) -> Vector {
        match self {
            FixedPoint::Float(v) => v.clone(),
            FixedPoint::Exact(v) => Vector::from_iterator(v.len(), v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN))),
        }
    }

    /// `p^perp`, the Lorentz annihilator of `p`.
    pub fn polar(&self) -> ProjectiveSubspace {
        match self {
            FixedPoint::Exact(p) => {
                let len = p.len();
                let row = RatMatrix::from_fn(1, len, |_, j| if j == 0 { -p[0].clone() } else { p[j].clone() });
                ProjectiveSubspace::exact(&row.null_space())
            }
            FixedPoint::Float(p) => {
                let l = lorentz::lower(p);
                ProjectiveSubspace::Float(null_space(&Matrix::from_row_slice(1, l.len(), l.as_slice()), RANK_TOL))
            }
        }
    }

    fn on_hyperboloid(&self, tol: f64) -> bool {
        match self {
            FixedPoint::Exact(p) => exact::lorentz_dot(p, p) == exact::int(-1) && p[0].is_positive(),
            FixedPoint::Float(p) => (dot(p, p) + 1.0).abs() <= tol && p[0] > 0.0,
        }
    }

    fn as_subspace(&self) -> ProjectiveSubspace {
        match self {
            FixedPoint::Exact(p) => ProjectiveSubspace::exact(&RatMatrix::from_columns(std::slice::from_ref(p), p.len())),
            FixedPoint::Float(p) => ProjectiveSubspace::float(&Matrix::from_column_slice(p.len(), 1, p.as_slice())),
        }
    }
}

/// Secondary parasitic subspaces `Q_{e,p} = P_e ∩ p^perp` for proper faces
/// `e` of each face `c` carrying a fixed point `p`.
pub fn secondary_parasitic(cx: &PolyComplex, cartan: &[(usize, FixedPoint)]) -> Result<Vec<ParasiticRecord>> {
    let spans = spans(cx)?;
    let mut out = Vec::new();
    for (c, p) in cartan {
        let c = *c;
        if c >= cx.faces().len() {
            return Err(GeomError::InvalidInput(format!("unknown face index {c}")));
        }
        if !p.on_hyperboloid(1e-9) {
            return Err(GeomError::NotFutureTimelike);
        }
        if !spans[c].contains(&p.as_subspace()) {
            return Err(GeomError::InvalidInput(format!("fixed point outside the span of face {}", cx.faces()[c].id)));
        }
        let polar = p.polar();
        for &e in cx.below(c) {
            let q = intersect_subspaces(&[mapped_span(cx, &spans, e, c), polar.clone()])?;
            if q.is_empty() {
                continue;
            }
            out.push(ParasiticRecord {
                kind: ParasiticKind::Secondary,
                host: c,
                sigma: vec![e],
                point: Some(p.to_f64().iter().copied().collect()),
                subspace: q,
                orbit: Vec::new(),
            });
        }
    }
    sort_records(&mut out);
    Ok(out)
}

/// Closure of `(face, subspace)` under morphism images and preimages.
pub fn orbit_of(
    cx: &PolyComplex,
    spans: &[ProjectiveSubspace],
    host: usize,
    s: &ProjectiveSubspace,
) -> Vec<(usize, ProjectiveSubspace)> {
    let mut orbit: Vec<(usize, ProjectiveSubspace)> = vec![(host, s.clone())];
    let mut keys: HashSet<(usize, String)> = HashSet::new();
    let mut exact_keys = s.is_exact();
    keys.insert((host, s.canonical_key()));
    let mut queue = VecDeque::from([0usize]);
    while let Some(k) = queue.pop_front() {
        if orbit.len() >= ORBIT_CAP {
            break;
        }
        let (f, sub) = orbit[k].clone();
        let mut next = Vec::new();
        for &t in cx.above(f) {
            let m = cx.morphism(f, t).expect("incident pair");
            next.push((t, sub.image(&m.matrix, m.exact.as_ref())));
        }
        for &b in cx.below(f) {
            let m = cx.morphism(b, f).expect("incident pair");
            let pre = sub.preimage(&m.matrix, m.exact.as_ref(), &spans[b]);
            if !pre.is_empty() {
                next.push((b, pre));
            }
        }
        for (g, t) in next {
            exact_keys &= t.is_exact();
            let fresh = if exact_keys {
                keys.insert((g, t.canonical_key()))
            } else {
                !orbit.iter().any(|(h, u)| *h == g && u.same_as(&t))
            };
            if fresh {
                orbit.push((g, t));
                queue.push_back(orbit.len() - 1);
            }
        }
    }
    orbit.sort_by(|a, b| (a.0, a.1.canonical_key()).cmp(&(b.0, b.1.canonical_key())));
    orbit
}

/// Extends each record with its orbit under morphisms in both directions.
pub fn saturate(records: &[ParasiticRecord], cx: &PolyComplex) -> Result<Vec<ParasiticRecord>> {
    let spans = spans(cx)?;
    Ok(records
        .iter()
        .map(|r| ParasiticRecord { orbit: orbit_of(cx, &spans, r.host, &r.subspace), ..r.clone() })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitEntryJson {
    pub face: usize,
    pub subspace: SubspaceJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParasiticRecordJson {
    pub kind: ParasiticKind,
    pub host: usize,
    pub sigma: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    /// Projective dimension of the subspace.
    pub projective_dim: i64,
    pub subspace: SubspaceJson,
    pub orbit: Vec<OrbitEntryJson>,
}

impl ParasiticRecord {
    /// JSON form with face ids in place of indices.
    pub fn to_json(&self, cx: &PolyComplex) -> ParasiticRecordJson {
        let id = |i: usize| cx.faces()[i].id;
        ParasiticRecordJson {
            kind: self.kind,
            host: id(self.host),
            sigma: self.sigma.iter().map(|&i| id(i)).collect(),
            point: self.point.clone(),
            projective_dim: self.subspace.dim() as i64 - 1,
            subspace: self.subspace.to_json(),
            orbit: self.orbit.iter().map(|(f, s)| OrbitEntryJson { face: id(*f), subspace: s.to_json() }).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedSetCheck {
    /// Id of the minimal invariant face.
    pub face: usize,
    pub point: Option<Vec<f64>>,
    /// The fixed set in the span is a timelike point and a codimension-1
    /// subspace.
    pub splits: bool,
    /// The codimension-1 part avoids the face inside the future cone.
    pub polar_misses_face: bool,
    /// Ids of the faces containing the point.
    pub containing_faces: Vec<usize>,
    /// Exactly two facets and the invariant codimension-1 face.
    pub three_faces: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvolutionCheck {
    pub element: String,
    pub acts_freely: bool,
    pub involutive: bool,
    pub fixed_sets: Vec<FixedSetCheck>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CartanAssumptionReport {
    pub pass: bool,
    pub elements: Vec<InvolutionCheck>,
}

/// Whether the part of the face cone inside the subspace spanned by the
/// columns of `basis` meets the open future cone.
fn subspace_meets_face(basis: &Matrix, cx: &PolyComplex, face: usize) -> bool {
    let k = basis.ncols();
    if k == 0 {
        return false;
    }
    let gram = basis.transpose() * lorentz::form(basis.nrows()) * basis;
    if gram.symmetric_eigenvalues().iter().all(|&e| e > 1e-12) {
        return false;
    }
    let geo = cx.faces()[face].geometry.as_ref().expect("face geometry");
    // functionals in the coordinates of the subspace
    let mut fs: Vec<Vector> = geo.inequalities.iter().map(|m| basis.transpose() * lorentz::lower(m)).collect();
    let mut e0 = Vector::zeros(basis.nrows());
    e0[0] = 1.0;
    fs.push(basis.transpose() * e0);
    let fs: Vec<Vector> = fs.into_iter().filter(|f| f.norm() > 1e-12).map(|f| f.normalize()).collect();
    let Ok(c) = Cone::from_functionals(k, &fs, 1e-9) else { return true };
    let rays: Vec<usize> = (0..c.rays().len()).collect();
    let gens: Vec<Vector> = c.face_generators(&rays).iter().map(|g| basis * g).collect();
    !gens.is_empty() && cone::face_meets_hyperbolic(&gens)
}

/// Checks the Cartan assumption for the given elements acting on a complex
/// whose faces carry geometry.
///
/// For each element that fixes some face: it must be an involution; on the
/// span of every minimal invariant face its fixed set must be a timelike
/// point `p` together with `p^perp`, the latter must miss the face, and `p`
/// must lie in exactly three faces: two facets and the invariant
/// codimension-1 face.
pub fn assumption_cartan_check(
    cx: &PolyComplex,
    elements: &[(String, Isometry)],
    tol: f64,
) -> Result<CartanAssumptionReport> {
    let action = group_action_on_complex(cx, elements)?;
    let n = cx.dim();
    let mut checks = Vec::new();
    for (e, (label, theta)) in elements.iter().enumerate() {
        if theta.is_identity(tol) {
            continue;
        }
        let inv = action.invariant_faces(e);
        let involutive = theta.compose(theta).is_identity(tol);
        let minimal: Vec<usize> =
            inv.iter().copied().filter(|&c| !cx.below(c).iter().any(|b| inv.contains(b))).collect();
        let mut fixed_sets = Vec::new();
        for &c in &minimal {
            let span = span_of_face(cx, c)?.basis_f64();
            let t = theta.matrix();
            let plus = null_space(&((t - Matrix::identity(t.nrows(), t.ncols())) * &span), 1e-7);
            let minus = null_space(&((t + Matrix::identity(t.nrows(), t.ncols())) * &span), 1e-7);
            let plus = &span * plus;
            let minus = &span * minus;
            let k = span.ncols();
            let timelike_line = |m: &Matrix| m.ncols() == 1 && dot(&m.column(0).into_owned(), &m.column(0).into_owned()) < -1e-9;
            let (point_part, polar_part) = if timelike_line(&plus) {
                (Some(plus.clone()), minus.clone())
            } else if timelike_line(&minus) {
                (Some(minus.clone()), plus.clone())
            } else {
                (None, Matrix::zeros(span.nrows(), 0))
            };
            let splits = point_part.is_some() && polar_part.ncols() + 1 == k;
            let p = point_part.map(|m| lorentz::normalize_any_timelike(&m.column(0).into_owned())).transpose()?;
            let polar_misses_face = splits && !subspace_meets_face(&polar_part, cx, c);
            let containing: Vec<usize> = match &p {
                Some(p) => (0..cx.faces().len())
                    .filter(|&j| cx.faces()[j].geometry.as_ref().is_some_and(|g| g.contains(p, 1e-7)))
                    .collect(),
                None => Vec::new(),
            };
            let facets = containing.iter().filter(|&&j| cx.faces()[j].dim == n).count();
            let three_faces = containing.len() == 3
                && facets == 2
                && containing.contains(&c)
                && cx.faces()[c].dim + 1 == n;
            fixed_sets.push(FixedSetCheck {
                face: cx.faces()[c].id,
                point: p.map(|v| v.iter().copied().collect()),
                splits,
                polar_misses_face,
                containing_faces: containing.iter().map(|&j| cx.faces()[j].id).collect(),
                three_faces,
            });
        }
        let acts_freely = inv.is_empty();
        let pass = acts_freely || (involutive && fixed_sets.iter().all(|f| f.splits && f.polar_misses_face && f.three_faces));
        checks.push(InvolutionCheck { element: label.clone(), acts_freely, involutive, fixed_sets, pass });
    }
    Ok(CartanAssumptionReport { pass: checks.iter().all(|c| c.pass), elements: checks })
}

/// Rational point of `H` from a rational vector of negative norm, when its
/// norm is minus a rational square.
pub fn exact_point(v: &[Rational]) -> Option<Vec<Rational>> {
    let q = -exact::lorentz_dot(v, v);
    if !q.is_positive() || !v[0].is_positive() {
        return None;
    }
    let (n, d) = (q.numer().sqrt(), q.denom().sqrt());
    let r = Rational::new(n.clone(), d.clone());
    if &r * &r != q || r.is_zero() {
        return None;
    }
    Some(v.iter().map(|x| x / &r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::{build_local_dirichlet_complex, Face, FaceGeometry, Morphism};
    use crate::domain::{compute_domain, DomainOptions};
    use crate::exact::rat;
    use crate::group::GroupPresentation;
    use crate::isometry::{make_cartan, Isometry};

    /// Complex whose faces are given by vertex sets of rational points; a
    /// face includes into another when its vertex set is a proper subset.
    fn vertex_complex(dim: usize, verts: &[Vec<Rational>], faces: &[(usize, Vec<usize>)]) -> PolyComplex {
        let len = verts[0].len();
        let fs: Vec<Face> = faces
            .iter()
            .enumerate()
            .map(|(i, (d, vs))| Face {
                id: i,
                dim: *d,
                complete: true,
                key: None,
                geometry: Some(FaceGeometry::from_exact(vs.iter().map(|&v| verts[v].clone()).collect())),
            })
            .collect();
        let mut ms = Vec::new();
        for (a, (_, va)) in faces.iter().enumerate() {
            for (b, (_, vb)) in faces.iter().enumerate() {
                if va.len() < vb.len() && va.iter().all(|v| vb.contains(v)) {
                    ms.push(Morphism::inclusion(a, b, len));
                }
            }
        }
        PolyComplex::new(dim, fs, ms, 1e-9).unwrap()
    }

    fn pt(xs: &[(i64, i64)]) -> Vec<Rational> {
        xs.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    /// A convex polygon in the Klein disk with all its edges and vertices.
    fn polygon(corners: &[[(i64, i64); 2]]) -> PolyComplex {
        let verts: Vec<Vec<Rational>> = corners.iter().map(|c| pt(&[(1, 1), c[0], c[1]])).collect();
        let k = verts.len();
        let mut faces = vec![(2, (0..k).collect::<Vec<_>>())];
        for i in 0..k {
            faces.push((1, vec![i, (i + 1) % k]));
        }
        for i in 0..k {
            faces.push((0, vec![i]));
        }
        vertex_complex(2, &verts, &faces)
    }

    #[test]
    fn intersections() {
        let a = ProjectiveSubspace::exact(&RatMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]));
        let b = ProjectiveSubspace::exact(&RatMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 0], &[0, 0, 1]]));
        let line = intersect_subspaces(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(line.dim(), 2);
        assert!(a.contains(&line) && b.contains(&line));
        let c = ProjectiveSubspace::exact(&RatMatrix::from_i64_rows(&[&[0, 0], &[0, 0], &[1, 0], &[0, 1]]));
        let d = ProjectiveSubspace::exact(&RatMatrix::from_i64_rows(&[&[1, 0], &[0, 1], &[0, 0], &[0, 0]]));
        assert!(intersect_subspaces(&[c, d]).unwrap().is_empty());
        let lf = intersect_subspaces(&[a.to_float(), b.to_float()]).unwrap();
        assert!(lf.same_as(&line));
    }

    #[test]
    fn triangle_has_no_parasitic_intersection() {
        let t = polygon(&[[(0, 1), (1, 2)], [(-1, 2), (-1, 4)], [(1, 2), (-1, 4)]]);
        assert!(primary_parasitic(&t, &ParasiticOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn quadrilateral_opposite_sides() {
        let q = polygon(&[[(1, 2), (0, 1)], [(0, 1), (1, 2)], [(-1, 2), (0, 1)], [(0, 1), (-1, 3)]]);
        let recs = primary_parasitic(&q, &ParasiticOptions::default()).unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert_eq!(r.host, 0);
            assert_eq!(r.subspace.dim(), 1);
            assert_eq!(r.sigma.len(), 2);
            // outside the closed disk
            let v = r.subspace.basis_f64().column(0).into_owned();
            assert!(dot(&v, &v) > 0.0);
        }
        let sat = saturate(&recs, &q).unwrap();
        // host plus the two opposite sides whose lines meet there
        for r in &sat {
            assert_eq!(r.orbit.len(), 3);
            let sides: Vec<usize> = r.orbit.iter().map(|(f, _)| *f).filter(|&f| f != 0).collect();
            let mut sorted = r.sigma.clone();
            sorted.sort();
            assert_eq!(sides, sorted);
        }
        let again = saturate(&sat, &q).unwrap();
        for (a, b) in sat.iter().zip(&again) {
            assert_eq!(a.orbit.len(), b.orbit.len());
        }
    }

    #[test]
    fn mirror_morphism_carries_records() {
        // The edge includes into the first triangle by the identity and into
        // the second by a map reversing the edge.
        let len = 3;
        let refl = RatMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, -1]]);
        let other = RatMatrix::from_i64_rows(&[&[1, 0, 0], &[0, -1, 0], &[0, 0, -1]]);
        let v = |a: (i64, i64), b: (i64, i64)| pt(&[(1, 1), a, b]);
        let e = vec![v((0, 1), (1, 2)), v((0, 1), (-1, 2))];
        let a_tri = vec![e[0].clone(), e[1].clone(), v((1, 2), (0, 1))];
        let b_tri: Vec<Vec<Rational>> = a_tri.iter().map(|r| other.mul_vec(r)).collect();
        let faces = vec![
            Face { id: 0, dim: 2, complete: true, key: None, geometry: Some(FaceGeometry::from_exact(a_tri)) },
            Face { id: 1, dim: 2, complete: true, key: None, geometry: Some(FaceGeometry::from_exact(b_tri)) },
            Face { id: 2, dim: 1, complete: true, key: None, geometry: Some(FaceGeometry::from_exact(e)) },
        ];
        let ms = vec![
            Morphism::inclusion(2, 0, len),
            Morphism { source: 2, target: 1, matrix: refl.to_f64(), exact: Some(refl.clone()) },
        ];
        let cx = PolyComplex::new(2, faces, ms, 1e-9).unwrap();
        // a point of the shared edge's span, placed on the first triangle
        let p = ProjectiveSubspace::exact(&RatMatrix::from_columns(&[pt(&[(1, 1), (0, 1), (2, 1)])], len));
        let rec = ParasiticRecord {
            kind: ParasiticKind::Primary,
            host: 0,
            sigma: vec![],
            point: None,
            subspace: p.clone(),
            orbit: vec![],
        };
        let sat = saturate(&[rec], &cx).unwrap();
        let faces: Vec<usize> = sat[0].orbit.iter().map(|(f, _)| *f).collect();
        assert_eq!(faces, vec![0, 1, 2]);
        let mirrored = &sat[0].orbit.iter().find(|(f, _)| *f == 1).unwrap().1;
        assert!(mirrored.same_as(&p.image(&refl.to_f64(), Some(&refl))));
        assert!(!mirrored.same_as(&p));
        // closed under one more step
        let spans = spans(&cx).unwrap();
        for (f, s) in &sat[0].orbit {
            let o = orbit_of(&cx, &spans, *f, s);
            assert_eq!(o.len(), sat[0].orbit.len());
        }
    }

    fn cartan_complex(theta: &Isometry) -> PolyComplex {
        let g = GroupPresentation::from_pairs(vec![("j", theta.clone())]).unwrap();
        let x = lorentz::from_klein(&Vector::from_column_slice(&[0.1, 0.3, 0.1])).unwrap();
        let d = compute_domain(&g, &x, &DomainOptions::default()).unwrap();
        build_local_dirichlet_complex(&d, &g, 0).unwrap()
    }

    #[test]
    fn cartan_assumption() {
        let p = lorentz::from_klein(&Vector::from_column_slice(&[0.2, -0.1, 0.3])).unwrap();
        let j = make_cartan(&p).unwrap();
        let cx = cartan_complex(&j);
        let rep = assumption_cartan_check(&cx, &[("j".into(), j.clone())], 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
        let fp = &rep.elements[0].fixed_sets[0];
        let q = Vector::from_vec(fp.point.clone().unwrap());
        assert!((q - &p).norm() < 1e-8);

        let r = crate::isometry::rotation(3, 2, 3, std::f64::consts::PI);
        let cr = cartan_complex(&r);
        let rep = assumption_cartan_check(&cr, &[("r".into(), r)], 1e-9).unwrap();
        assert!(!rep.pass);
        assert!(!rep.elements[0].fixed_sets[0].splits);

        let b = crate::isometry::boost(3, 1, 1.0);
        let g = GroupPresentation::from_pairs(vec![("b", b.clone())]).unwrap();
        let x = lorentz::from_klein(&Vector::from_column_slice(&[0.1, 0.3, 0.1])).unwrap();
        let d = compute_domain(&g, &x, &DomainOptions::default()).unwrap();
        let cb = build_local_dirichlet_complex(&d, &g, 1).unwrap();
        let rep = assumption_cartan_check(&cb, &[("b".into(), b)], 1e-9).unwrap();
        assert!(rep.pass && rep.elements[0].acts_freely);
    }

    #[test]
    fn secondary_points_on_edges() {
        let p = lorentz::from_klein(&Vector::from_column_slice(&[0.2, -0.1, 0.3])).unwrap();
        let j = make_cartan(&p).unwrap();
        let cx = cartan_complex(&j);
        let shared = (0..cx.faces().len()).find(|&i| cx.faces()[i].dim == 2).unwrap();
        let recs = secondary_parasitic(&cx, &[(shared, FixedPoint::Float(p.clone()))]).unwrap();
        // the shared face of two half-spaces has no proper faces in H
        assert!(recs.is_empty());

        // exact: a square face of a cube with p at its centre
        let h = |a: i64, b: i64, c: i64| pt(&[(1, 1), (a, 2), (b, 2), (c, 2)]);
        let verts = vec![h(0, 1, 1), h(0, -1, 1), h(0, -1, -1), h(0, 1, -1)];
        let mut faces = vec![(2, vec![0, 1, 2, 3])];
        for i in 0..4 {
            faces.push((1, vec![i, (i + 1) % 4]));
        }
        for i in 0..4 {
            faces.push((0, vec![i]));
        }
        let sq = vertex_complex(3, &verts, &faces);
        let centre = FixedPoint::Exact(pt(&[(1, 1), (0, 1), (0, 1), (0, 1)]));
        let recs = secondary_parasitic(&sq, &[(0, centre)]).unwrap();
        let edges: Vec<&ParasiticRecord> = recs.iter().filter(|r| sq.faces()[r.sigma[0]].dim == 1).collect();
        assert_eq!(edges.len(), 4);
        for r in edges {
            assert_eq!(r.subspace.dim(), 1);
        }
        // vertices are timelike, never on the polar
        assert!(recs.iter().all(|r| sq.faces()[r.sigma[0]].dim == 1));
        assert!(secondary_parasitic(&sq, &[(0, FixedPoint::Exact(pt(&[(2, 1), (0, 1), (0, 1), (0, 1)])))]).is_err());
    }
}
