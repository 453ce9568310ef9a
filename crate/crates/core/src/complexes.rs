//! Hyperbolic polyhedral complexes as small categories.
//!
//! Objects are faces, morphisms are incidence maps `c -> c'` for `c` a face of
//! `c'`. Identity morphisms are implicit. Geometry is optional: abstract
//! complexes carry only dimensions and incidences.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::domain::DirichletDomain;
use crate::error::{GeomError, Result};
use crate::exact::{self, RatMatrix, RatPair, Rational};
use crate::group::{dedup_tolerance, GroupPresentation, MatrixIndex};
use crate::isometry::Isometry;
use crate::linalg::{self, max_abs};
use crate::lorentz::{dot, Matrix, Vector};

/// Tolerance for matching geometry under morphisms and group elements.
pub const MATCH_TOL: f64 = 1e-7;

/// Cone data of a face in `R^{n+1}`.
#[derive(Debug, Clone)]
pub struct FaceGeometry {
    /// Generators of the face cone.
    pub generators: Vec<Vector>,
    /// The same generators over the rationals, when known exactly.
    pub exact: Option<Vec<Vec<Rational>>>,
    /// Lorentz normals `m` of a containing tile, `{p : p . m >= 0}`.
    pub inequalities: Vec<Vector>,
    /// A point of `H` in the relative interior.
    pub point: Option<Vector>,
}

impl FaceGeometry {
    pub fn from_float(generators: Vec<Vector>) -> Self {
        FaceGeometry { generators, exact: None, inequalities: Vec::new(), point: None }
    }

    pub fn from_exact(rays: Vec<Vec<Rational>>) -> Self {
        let generators = rays
            .iter()
            .map(|r| Vector::from_iterator(r.len(), r.iter().map(|x| num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN))))
            .collect();
        FaceGeometry { generators, exact: Some(rays), inequalities: Vec::new(), point: None }
    }

    pub fn ambient_len(&self) -> Option<usize> {
        self.generators.first().map(|g| g.len())
    }

    /// Whether `p` lies in the linear span of the generators.
    pub fn spans(&self, p: &Vector, tol: f64) -> bool {
        if self.generators.is_empty() {
            return p.norm() <= tol;
        }
        let basis = linalg::column_space(&linalg::columns(&self.generators), 1e-9);
        let proj = &basis * (basis.transpose() * p);
        (p - proj).norm() <= tol * p.norm().max(1.0)
    }

    /// Membership of `p` in the face: in the span and on the inner side of
    /// every recorded inequality.
    pub fn contains(&self, p: &Vector, tol: f64) -> bool {
        self.spans(p, tol) && self.inequalities.iter().all(|m| dot(p, m) >= -tol * p.norm() * m.norm())
    }

    pub fn transformed(&self, g: &Matrix) -> FaceGeometry {
        FaceGeometry {
            generators: self.generators.iter().map(|v| g * v).collect(),
            exact: None,
            inequalities: self.inequalities.iter().map(|m| g * m).collect(),
            point: self.point.as_ref().map(|p| g * p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    pub id: usize,
    pub dim: usize,
    /// The residue of the face is entirely present in the complex.
    pub complete: bool,
    /// Sorted registry ids of the tiles containing the face, for complexes
    /// built from a Dirichlet tiling.
    pub key: Option<Vec<usize>>,
    pub geometry: Option<FaceGeometry>,
}

impl Face {
    pub fn abstract_face(id: usize, dim: usize) -> Self {
        Face { id, dim, complete: true, key: None, geometry: None }
    }
}

#[derive(Debug, Clone)]
pub struct Morphism {
    /// Index of the source face.
    pub source: usize,
    /// Index of the target face.
    pub target: usize,
    pub matrix: Matrix,
    pub exact: Option<RatMatrix>,
}

impl Morphism {
    pub fn inclusion(source: usize, target: usize, len: usize) -> Self {
        Morphism { source, target, matrix: Matrix::identity(len, len), exact: Some(RatMatrix::identity(len)) }
    }
}

/// Group elements indexed up to tolerance, with their words.
#[derive(Debug, Clone)]
pub struct TileRegistry {
    index: MatrixIndex,
    words: Vec<String>,
    base_tol: f64,
}

impl TileRegistry {
    pub fn new(len: usize, base_tol: f64) -> Self {
        TileRegistry { index: MatrixIndex::new(len), words: Vec::new(), base_tol }
    }

    fn tol(&self, m: &Matrix) -> f64 {
        dedup_tolerance(self.base_tol, 8, m)
    }

    pub fn find(&self, m: &Matrix) -> Option<usize> {
        self.index.find(m, self.tol(m))
    }

    pub fn intern(&mut self, m: &Matrix, word: impl FnOnce() -> String) -> usize {
        match self.find(m) {
            Some(i) => i,
            None => {
                self.words.push(word());
                self.index.insert(m.clone())
            }
        }
    }

    pub fn matrix(&self, i: usize) -> &Matrix {
        self.index.get(i)
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A finite hyperbolic polyhedral complex of dimension `dim`.
#[derive(Debug, Clone)]
pub struct PolyComplex {
    dim: usize,
    faces: Vec<Face>,
    morphisms: Vec<Morphism>,
    pairs: HashMap<(usize, usize), usize>,
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
    registry: Option<TileRegistry>,
}

fn compose_ok(a: &Morphism, b: &Morphism, ab: &Morphism, tol: f64) -> bool {
    if let (Some(x), Some(y), Some(z)) = (&a.exact, &b.exact, &ab.exact) {
        return &y.mul(x) == z;
    }
    let m = &b.matrix * &a.matrix;
    max_abs(&(m - &ab.matrix)) <= tol * max_abs(&ab.matrix).max(1.0)
}

fn exact_span_contains(outer: &[Vec<Rational>], inner: &[Vec<Rational>], len: usize) -> bool {
    let o = RatMatrix::from_columns(outer, len);
    let both = o.hcat(&RatMatrix::from_columns(inner, len));
    o.rank() == both.rank()
}

impl PolyComplex {
    /// Validates and assembles a complex.
    ///
    /// Axiom 1: the composite of incidences `a -> b -> c` is present and
    /// agrees with the morphism `a -> c`. Axiom 2: at most one morphism per
    /// ordered pair.
    pub fn new(dim: usize, faces: Vec<Face>, morphisms: Vec<Morphism>, tol: f64) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for f in &faces {
            if !ids.insert(f.id) {
                return Err(GeomError::InvalidInput(format!("duplicate face id {}", f.id)));
            }
            if f.dim > dim {
                return Err(GeomError::InvalidInput(format!("face {} has dimension {} above {}", f.id, f.dim, dim)));
            }
        }
        let n = faces.len();
        let mut pairs = HashMap::new();
        let mut up = vec![Vec::new(); n];
        let mut down = vec![Vec::new(); n];
        for (k, m) in morphisms.iter().enumerate() {
            if m.source >= n || m.target >= n {
                return Err(GeomError::InvalidInput("morphism refers to a missing face".into()));
            }
            let (s, t) = (&faces[m.source], &faces[m.target]);
            if s.dim >= t.dim {
                return Err(GeomError::InvalidInput(format!(
                    "morphism {} -> {} does not raise dimension",
                    s.id, t.id
                )));
            }
            if pairs.insert((m.source, m.target), k).is_some() {
                return Err(GeomError::AxiomViolation {
                    axiom: 2,
                    detail: format!("two morphisms {} -> {}", s.id, t.id),
                });
            }
            up[m.source].push(m.target);
            down[m.target].push(m.source);
        }
        for v in up.iter_mut().chain(down.iter_mut()) {
            v.sort_unstable();
        }
        for a in 0..n {
            for &b in &up[a] {
                for &c in &up[b] {
                    let Some(&ac) = pairs.get(&(a, c)) else {
                        return Err(GeomError::AxiomViolation {
                            axiom: 1,
                            detail: format!("{} -> {} -> {} without {} -> {}", faces[a].id, faces[b].id, faces[c].id, faces[a].id, faces[c].id),
                        });
                    };
                    let (ab, bc) = (&morphisms[pairs[&(a, b)]], &morphisms[pairs[&(b, c)]]);
                    if !compose_ok(ab, bc, &morphisms[ac], tol) {
                        return Err(GeomError::AxiomViolation {
                            axiom: 1,
                            detail: format!("composite {} -> {} disagrees", faces[a].id, faces[c].id),
                        });
                    }
                }
            }
        }
        for m in &morphisms {
            let (Some(gs), Some(gt)) = (&faces[m.source].geometry, &faces[m.target].geometry) else { continue };
            let ok = match (&gs.exact, &gt.exact, &m.exact) {
                (Some(rs), Some(rt), Some(mx)) => {
                    let len = mx.nrows();
                    let imgs: Vec<Vec<Rational>> = rs.iter().map(|r| mx.mul_vec(r)).collect();
                    exact_span_contains(rt, &imgs, len)
                }
                _ => gs.generators.iter().all(|v| {
                    let w = &m.matrix * v;
                    gt.contains(&(&w / w.norm().max(f64::MIN_POSITIVE)), tol)
                }),
            };
            if !ok {
                return Err(GeomError::NotPreserved(format!(
                    "morphism {} -> {} does not land in the target face",
                    faces[m.source].id, faces[m.target].id
                )));
            }
        }
        Ok(PolyComplex { dim, faces, morphisms, pairs, up, down, registry: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn registry(&self) -> Option<&TileRegistry> {
        self.registry.as_ref()
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.faces.iter().position(|f| f.id == id)
    }

    pub fn morphism(&self, source: usize, target: usize) -> Option<&Morphism> {
        self.pairs.get(&(source, target)).map(|&k| &self.morphisms[k])
    }

    pub fn has_morphism(&self, source: usize, target: usize) -> bool {
        self.pairs.contains_key(&(source, target))
    }

    /// Faces receiving a morphism from `c`.
    pub fn above(&self, c: usize) -> &[usize] {
        &self.up[c]
    }

    /// Faces with a morphism into `c`.
    pub fn below(&self, c: usize) -> &[usize] {
        &self.down[c]
    }

    pub fn facets(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&i| self.faces[i].dim == self.dim).collect()
    }

    /// Facets containing `c`, including `c` itself when it is a facet.
    pub fn facets_containing(&self, c: usize) -> Vec<usize> {
        if self.faces[c].dim == self.dim {
            return vec![c];
        }
        self.up[c].iter().copied().filter(|&t| self.faces[t].dim == self.dim).collect()
    }

    /// Whether every face lies in a facet.
    pub fn is_pure(&self) -> bool {
        (0..self.faces.len()).all(|c| !self.facets_containing(c).is_empty())
    }

    /// Full subcomplex on the given face indices.
    pub fn subcomplex(&self, keep: &[usize]) -> PolyComplex {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let faces: Vec<Face> = keep.iter().map(|&c| self.faces[c].clone()).collect();
        let morphisms: Vec<Morphism> = self
            .morphisms
            .iter()
            .filter_map(|m| {
                let (s, t) = (pos.get(&m.source)?, pos.get(&m.target)?);
                Some(Morphism { source: *s, target: *t, ..m.clone() })
            })
            .collect();
        let n = faces.len();
        let mut pairs = HashMap::new();
        let mut up = vec![Vec::new(); n];
        let mut down = vec![Vec::new(); n];
        for (k, m) in morphisms.iter().enumerate() {
            pairs.insert((m.source, m.target), k);
            up[m.source].push(m.target);
            down[m.target].push(m.source);
        }
        for v in up.iter_mut().chain(down.iter_mut()) {
            v.sort_unstable();
        }
        PolyComplex { dim: self.dim, faces, morphisms, pairs, up, down, registry: self.registry.clone() }
    }

    /// Faces of dimension at most `k`.
    pub fn skeleton(&self, k: usize) -> PolyComplex {
        let keep: Vec<usize> = (0..self.faces.len()).filter(|&c| self.faces[c].dim <= k).collect();
        self.subcomplex(&keep)
    }

    /// Removes the given faces and restricts incidences to what remains.
    pub fn difference(&self, removed: &[usize]) -> PolyComplex {
        let removed: BTreeSet<usize> = removed.iter().copied().collect();
        let keep: Vec<usize> = (0..self.faces.len()).filter(|c| !removed.contains(c)).collect();
        self.subcomplex(&keep)
    }
}

/// The complex on all faces reachable from `c` by a morphism, and `c`.
pub fn residue(cx: &PolyComplex, c: usize) -> PolyComplex {
    let mut keep = vec![c];
    keep.extend_from_slice(cx.above(c));
    cx.subcomplex(&keep)
}

/// The complex with its faces of dimension at most `n - 3` removed.
pub fn derived_complex(cx: &PolyComplex) -> PolyComplex {
    if cx.dim < 3 {
        return cx.clone();
    }
    let low: Vec<usize> = (0..cx.faces.len()).filter(|&c| cx.faces[c].dim + 3 <= cx.dim).collect();
    cx.difference(&low)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerveSimplex {
    /// Positions into `Nerve::vertices`, sorted.
    pub vertices: Vec<usize>,
    /// Faces dual to the simplex: faces of dimension `n - k` lying in exactly
    /// these facets (among possibly more).
    pub duals: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Nerve {
    /// Facet indices in the complex, one per vertex.
    pub vertices: Vec<usize>,
    pub simplices: Vec<NerveSimplex>,
}

impl Nerve {
    pub fn simplex(&self, vs: &[usize]) -> Option<&NerveSimplex> {
        self.simplices.iter().find(|s| s.vertices == vs)
    }

    /// Whether every nonempty subset of a simplex is again a simplex.
    pub fn is_closed(&self) -> bool {
        let sets: BTreeSet<&Vec<usize>> = self.simplices.iter().map(|s| &s.vertices).collect();
        self.simplices.iter().all(|s| {
            let k = s.vertices.len();
            (1..(1u64 << k) - 1).all(|mask| {
                let sub: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| s.vertices[i]).collect();
                sets.contains(&sub)
            })
        })
    }
}

fn subsets_of_size(items: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), out);
}

/// Nerve of a pure complex: `k + 1` facets span a `k`-simplex when some
/// `(n - k)`-face lies in all of them.
pub fn nerve(cx: &PolyComplex) -> Result<Nerve> {
    if !cx.is_pure() {
        return Err(GeomError::InvalidInput("nerve needs a pure complex".into()));
    }
    let vertices = cx.facets();
    let pos: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut simplices: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for c in 0..cx.faces.len() {
        let k = cx.dim - cx.faces[c].dim;
        let mut fs: Vec<usize> = cx.facets_containing(c).iter().map(|f| pos[f]).collect();
        fs.sort_unstable();
        if fs.len() < k + 1 {
            continue;
        }
        let mut subs = Vec::new();
        subsets_of_size(&fs, k + 1, &mut subs);
        for s in subs {
            simplices.entry(s).or_default().push(c);
        }
    }
    let simplices = simplices.into_iter().map(|(vertices, duals)| NerveSimplex { vertices, duals }).collect();
    Ok(Nerve { vertices, simplices })
}

/// Whether the residue of `c` is combinatorially the face poset of a simplex
/// of dimension `n - dim c`.
pub fn residue_is_simplex(cx: &PolyComplex, c: usize) -> bool {
    let r = residue(cx, c);
    let n = cx.dim;
    let k = cx.faces[c].dim;
    let facets = r.facets();
    if facets.len() != n - k + 1 || r.faces.len() != (1usize << facets.len()) - 1 {
        return false;
    }
    let sets: Vec<Vec<usize>> = (0..r.faces.len()).map(|i| r.facets_containing(i)).collect();
    let distinct: BTreeSet<&Vec<usize>> = sets.iter().collect();
    if distinct.len() != sets.len() {
        return false;
    }
    for (i, s) in sets.iter().enumerate() {
        if s.is_empty() || r.faces[i].dim + s.len() != n + 1 {
            return false;
        }
    }
    for a in 0..sets.len() {
        for b in 0..sets.len() {
            let sub = a != b && sets[b].iter().all(|f| sets[a].contains(f));
            if sub != r.has_morphism(a, b) {
                return false;
            }
        }
    }
    true
}

/// Simple: the residue of every complete face is a simplex face poset.
pub fn is_simple(cx: &PolyComplex) -> bool {
    (0..cx.faces.len()).filter(|&c| cx.faces[c].complete).all(|c| residue_is_simplex(cx, c))
}

/// Weakly simple: in the derived complex every complete `(n-2)`-face lies in
/// exactly 3 facets and every complete `(n-1)`-face in exactly 2.
pub fn is_weakly_simple(cx: &PolyComplex) -> bool {
    let d = derived_complex(cx);
    let n = d.dim;
    (0..d.faces.len()).filter(|&c| d.faces[c].complete).all(|c| {
        let count = d.facets_containing(c).len();
        match n - d.faces[c].dim {
            1 => count == 2,
            2 => count == 3,
            _ => true,
        }
    })
}

fn product_word(a: &str, b: &str) -> String {
    match (a, b) {
        ("1", w) | (w, "1") => w.to_string(),
        (x, y) => format!("{x}*{y}"),
    }
}

/// Local piece of the Dirichlet tiling around `D_x`.
///
/// Tiles are `D_{gamma x}` for `gamma` among the tiles touching `D_x` and
/// their products with up to `radius_words` generator letters. Faces of
/// `D_x` meeting `H` are carried to every tile; a face is identified by the
/// set of tiles containing it. A face is complete when all those tiles are
/// present.
pub fn build_local_dirichlet_complex(
    d: &DirichletDomain,
    g: &GroupPresentation,
    radius_words: usize,
) -> Result<PolyComplex> {
    let len = d.dim + 1;
    let tol = d.options.incidence_tol;
    let mut reg = TileRegistry::new(len, d.options.dedup_tol);
    let id = reg.intern(&Matrix::identity(len, len), || "1".into());
    let mut tiles_of: Vec<Vec<usize>> = Vec::with_capacity(d.faces.len());
    for f in 0..d.faces.len() {
        let mut t = vec![id];
        for k in d.bisectors_through(f, tol) {
            let e = &d.enumeration.elements[k];
            t.push(reg.intern(e.isometry.matrix(), || d.enumeration.word(k)));
        }
        t.sort_unstable();
        t.dedup();
        tiles_of.push(t);
    }
    let mut tiles: BTreeSet<usize> = tiles_of.iter().flatten().copied().collect();
    let letters = g.letters(d.options.dedup_tol.max(1e-12));
    let labels: Vec<String> = g.generators.iter().map(|x| x.label.clone()).collect();
    for _ in 0..radius_words {
        let mut next = tiles.clone();
        for &t in &tiles {
            for (letter, iso) in &letters {
                let m = reg.matrix(t) * iso.matrix();
                let w = product_word(reg.word(t), &crate::group::Word(vec![*letter]).display(&labels));
                next.insert(reg.intern(&m, || w));
            }
        }
        tiles = next;
    }

    let base_geometry: Vec<FaceGeometry> = (0..d.faces.len())
        .map(|i| FaceGeometry {
            generators: d.generators(i),
            exact: None,
            inequalities: d.contributors.iter().map(|c| c.normal.clone()).collect(),
            point: Some(d.faces[i].point.clone()),
        })
        .collect();
    let mut sub_pairs = Vec::new();
    for (a, fa) in d.faces.iter().enumerate() {
        for (b, fb) in d.faces.iter().enumerate() {
            if a != b && fa.dim < fb.dim && d.lattice.is_subface(fa.lattice_face, fb.lattice_face) {
                sub_pairs.push((a, b));
            }
        }
    }

    let mut faces: Vec<Face> = Vec::new();
    let mut by_key: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut morphisms = Vec::new();
    let mut seen_pairs = BTreeSet::new();
    let tile_list: Vec<usize> = tiles.iter().copied().collect();
    for &t in &tile_list {
        let mt = reg.matrix(t).clone();
        let wt = reg.word(t).to_string();
        let mut local = Vec::with_capacity(d.faces.len());
        for (f, df) in d.faces.iter().enumerate() {
            let mut key = Vec::with_capacity(tiles_of[f].len());
            for &s in &tiles_of[f] {
                let m = &mt * reg.matrix(s);
                let w = product_word(&wt, reg.word(s));
                key.push(reg.intern(&m, || w));
            }
            key.sort_unstable();
            key.dedup();
            let idx = match by_key.get(&key) {
                Some(&i) => {
                    if faces[i].dim != df.dim {
                        return Err(GeomError::InvalidInput(format!(
                            "faces of dimensions {} and {} share the tile set {:?}",
                            faces[i].dim, df.dim, key
                        )));
                    }
                    i
                }
                None => {
                    let complete = key.iter().all(|k| tiles.contains(k));
                    faces.push(Face {
                        id: faces.len(),
                        dim: df.dim,
                        complete,
                        key: Some(key.clone()),
                        geometry: Some(base_geometry[f].transformed(&mt)),
                    });
                    by_key.insert(key, faces.len() - 1);
                    faces.len() - 1
                }
            };
            local.push(idx);
        }
        for &(a, b) in &sub_pairs {
            if seen_pairs.insert((local[a], local[b])) {
                morphisms.push(Morphism::inclusion(local[a], local[b], len));
            }
        }
    }
    let mut cx = PolyComplex::new(d.dim, faces, morphisms, MATCH_TOL)?;
    cx.registry = Some(reg);
    Ok(cx)
}

/// Images of faces under a list of isometries; `None` where the image leaves
/// the complex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionTable {
    pub labels: Vec<String>,
    pub identity: Vec<bool>,
    pub images: Vec<Vec<Option<usize>>>,
}

impl ActionTable {
    pub fn image(&self, element: usize, face: usize) -> Option<usize> {
        self.images[element][face]
    }

    /// Faces mapped to themselves by the element.
    pub fn invariant_faces(&self, element: usize) -> Vec<usize> {
        (0..self.images[element].len()).filter(|&c| self.images[element][c] == Some(c)).collect()
    }
}

fn geometric_image(cx: &PolyComplex, g: &Isometry, c: usize) -> Result<Option<usize>> {
    let Some(geo) = &cx.faces[c].geometry else {
        return Err(GeomError::InvalidInput(format!("face {} has neither key nor geometry", cx.faces[c].id)));
    };
    let Some(p) = &geo.point else {
        return Err(GeomError::InvalidInput(format!("face {} has no interior point", cx.faces[c].id)));
    };
    let q = g.apply(p);
    let inv = g.inverse();
    let hits: Vec<usize> = (0..cx.faces.len())
        .filter(|&j| cx.faces[j].dim == cx.faces[c].dim)
        .filter(|&j| {
            let Some(gj) = &cx.faces[j].geometry else { return false };
            gj.contains(&q, MATCH_TOL) && gj.point.as_ref().is_some_and(|pj| geo.contains(&inv.apply(pj), MATCH_TOL))
        })
        .collect();
    match hits.len() {
        0 => Ok(None),
        1 => Ok(Some(hits[0])),
        _ => Err(GeomError::NotPreserved(format!("face {} has several candidate images", cx.faces[c].id))),
    }
}

/// Permutation table of the faces under each element.
///
/// Complexes built from a tiling map tile sets through the registry; other
/// complexes match interior points geometrically.
pub fn group_action_on_complex(cx: &PolyComplex, elements: &[(String, Isometry)]) -> Result<ActionTable> {
    let by_key: HashMap<&Vec<usize>, usize> =
        cx.faces.iter().enumerate().filter_map(|(i, f)| f.key.as_ref().map(|k| (k, i))).collect();
    let mut images = Vec::with_capacity(elements.len());
    for (label, g) in elements {
        let mut row = Vec::with_capacity(cx.faces.len());
        for (c, face) in cx.faces.iter().enumerate() {
            let img = match (&face.key, &cx.registry) {
                (Some(key), Some(reg)) => {
                    let mapped: Option<Vec<usize>> = key.iter().map(|&k| reg.find(&(g.matrix() * reg.matrix(k)))).collect();
                    mapped.and_then(|mut m| {
                        m.sort_unstable();
                        by_key.get(&m).copied()
                    })
                }
                _ => geometric_image(cx, g, c)?,
            };
            if let Some(j) = img {
                if cx.faces[j].dim != face.dim {
                    return Err(GeomError::NotPreserved(format!("{label} changes the dimension of face {}", face.id)));
                }
                if let (Some(gc), Some(gj)) = (&face.geometry, &cx.faces[j].geometry) {
                    if let Some(p) = &gc.point {
                        if !gj.contains(&g.apply(p), MATCH_TOL) {
                            return Err(GeomError::NotPreserved(format!("{label} moves face {} off its image", face.id)));
                        }
                    }
                }
            }
            row.push(img);
        }
        images.push(row);
    }
    Ok(ActionTable {
        labels: elements.iter().map(|(l, _)| l.clone()).collect(),
        identity: elements.iter().map(|(_, g)| g.is_identity(1e-9)).collect(),
        images,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientViolation {
    pub element: String,
    pub face: usize,
    pub image: usize,
    pub target: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientReport {
    /// No element sends a face `c1` to a different face that is also
    /// incident to a face `c2` above `c1`.
    pub valid: bool,
    /// No nontrivial element fixes a facet.
    pub free_on_facets: bool,
    pub violations: Vec<QuotientViolation>,
}

/// Checks whether dividing by the action would create two morphisms between
/// the same pair of orbits.
pub fn quotient_check(cx: &PolyComplex, action: &ActionTable) -> QuotientReport {
    let mut violations = Vec::new();
    let mut free = true;
    for e in 0..action.images.len() {
        if action.identity[e] {
            continue;
        }
        for f in cx.facets() {
            if action.image(e, f) == Some(f) {
                free = false;
            }
        }
        for m in &cx.morphisms {
            if let Some(j) = action.image(e, m.source) {
                if j != m.source && cx.has_morphism(j, m.target) {
                    violations.push(QuotientViolation {
                        element: action.labels[e].clone(),
                        face: cx.faces[m.source].id,
                        image: cx.faces[j].id,
                        target: cx.faces[m.target].id,
                    });
                }
            }
        }
    }
    QuotientReport { valid: violations.is_empty(), free_on_facets: free, violations }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceSpec {
    pub id: usize,
    pub dim: usize,
    /// Cone generators, one row per ray, exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rays: Option<Vec<Vec<RatPair>>>,
    #[serde(default = "default_true")]
    pub complete: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphismSpec {
    pub src: usize,
    pub dst: usize,
    /// Row-major; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<RatPair>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CartanSpec {
    pub face: usize,
    pub point: Vec<RatPair>,
}

/// JSON form of a complex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexSpec {
    pub dim: usize,
    pub faces: Vec<FaceSpec>,
    pub morphisms: Vec<MorphismSpec>,
    /// Fixed points of Cartan involutions, with the face containing each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cartan: Vec<CartanSpec>,
}

fn rat_row(row: &[RatPair]) -> Result<Vec<Rational>> {
    row.iter()
        .map(|p| p.to_rational().ok_or_else(|| GeomError::InvalidInput("bad rational".into())))
        .collect()
}

fn pair_row(row: &[Rational]) -> Vec<RatPair> {
    row.iter().map(RatPair::from_rational).collect()
}

impl ComplexSpec {
    pub fn into_complex(self) -> Result<PolyComplex> {
        let len = self.dim + 1;
        let pos: HashMap<usize, usize> = self.faces.iter().enumerate().map(|(i, f)| (f.id, i)).collect();
        let mut faces = Vec::with_capacity(self.faces.len());
        for f in &self.faces {
            let geometry = match &f.rays {
                Some(rays) => {
                    let rs: Vec<Vec<Rational>> = rays.iter().map(|r| rat_row(r)).collect::<Result<_>>()?;
                    if rs.iter().any(|r| r.len() != len) {
                        return Err(GeomError::DimensionMismatch { expected: len, found: rs.iter().map(|r| r.len()).find(|&l| l != len).unwrap_or(0) });
                    }
                    Some(FaceGeometry::from_exact(rs))
                }
                None => None,
            };
            faces.push(Face { id: f.id, dim: f.dim, complete: f.complete, key: None, geometry });
        }
        let mut morphisms = Vec::with_capacity(self.morphisms.len());
        for m in &self.morphisms {
            let (Some(&s), Some(&t)) = (pos.get(&m.src), pos.get(&m.dst)) else {
                return Err(GeomError::InvalidInput(format!("morphism {} -> {} refers to a missing face", m.src, m.dst)));
            };
            let exact = match &m.matrix {
                Some(rows) => {
                    let rs: Vec<Vec<Rational>> = rows.iter().map(|r| rat_row(r)).collect::<Result<_>>()?;
                    if rs.len() != len || rs.iter().any(|r| r.len() != len) {
                        return Err(GeomError::DimensionMismatch { expected: len, found: rs.len() });
                    }
                    RatMatrix::from_fn(len, len, |i, j| rs[i][j].clone())
                }
                None => RatMatrix::identity(len),
            };
            morphisms.push(Morphism { source: s, target: t, matrix: exact.to_f64(), exact: Some(exact) });
        }
        PolyComplex::new(self.dim, faces, morphisms, MATCH_TOL)
    }

    /// Cartan data as (face index, exact point).
    pub fn cartan_points(&self) -> Result<Vec<(usize, Vec<Rational>)>> {
        self.cartan
            .iter()
            .map(|c| {
                let i = self
                    .faces
                    .iter()
                    .position(|f| f.id == c.face)
                    .ok_or_else(|| GeomError::InvalidInput(format!("unknown face {}", c.face)))?;
                Ok((i, rat_row(&c.point)?))
            })
            .collect()
    }
}

impl PolyComplex {
    /// JSON form; float geometry is written as exact binary fractions.
    pub fn to_spec(&self) -> ComplexSpec {
        let faces = self
            .faces
            .iter()
            .map(|f| FaceSpec {
                id: f.id,
                dim: f.dim,
                rays: f.geometry.as_ref().map(|g| match &g.exact {
                    Some(rs) => rs.iter().map(|r| pair_row(r)).collect(),
                    None => g
                        .generators
                        .iter()
                        .map(|v| v.iter().map(|x| RatPair::from_rational(&exact::from_f64(*x))).collect())
                        .collect(),
                }),
                complete: f.complete,
            })
            .collect();
        let morphisms = self
            .morphisms
            .iter()
            .map(|m| {
                let ex = m.exact.clone().unwrap_or_else(|| RatMatrix::from_f64(&m.matrix));
                let len = ex.nrows();
                let matrix = if ex == RatMatrix::identity(len) {
                    None
                } else {
                    Some((0..len).map(|i| (0..len).map(|j| RatPair::from_rational(ex.get(i, j))).collect()).collect())
                };
                MorphismSpec { src: self.faces[m.source].id, dst: self.faces[m.target].id, matrix }
            })
            .collect();
        ComplexSpec { dim: self.dim, faces, morphisms, cartan: Vec::new() }
    }
}

/// Breadth-first closure of a face set under morphisms in both directions.
pub fn connected_faces(cx: &PolyComplex, start: usize) -> Vec<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for &o in cx.above(c).iter().chain(cx.below(c)) {
            if seen.insert(o) {
                queue.push_back(o);
            }
        }
    }
    seen.into_iter().collect()
}
