//! Finitely generated subgroups of `O(n,1)^+`: word enumeration, orbits and
//! structural diagnostics.

use std::collections::BTreeMap;
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::isometry::{classify, Isometry, IsometryClass};
use crate::linalg::max_abs;
use crate::lorentz::{self, Matrix, Vector};
use crate::par;

/// Hard cap on the number of distinct enumerated elements.
pub const ELEMENT_CAP: usize = 200_000;

#[derive(Debug, Clone)]
pub struct Generator {
    pub label: String,
    pub isometry: Isometry,
}

/// A finite generating set acting on `H^n`.
#[derive(Debug, Clone)]
pub struct GroupPresentation {
    pub dim: usize,
    pub generators: Vec<Generator>,
}

/// Serialized group: `{"dim": 3, "generators": [{"label": "a", "matrix": [[...]]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub dim: usize,
    pub generators: Vec<GeneratorSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub label: String,
    pub matrix: Vec<Vec<f64>>,
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(GeomError::InvalidInput("ragged matrix".into()));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl GroupSpec {
    pub fn into_presentation(self, tol: f64) -> Result<GroupPresentation> {
        let mut generators = Vec::new();
        for g in self.generators {
            let m = matrix_from_rows(&g.matrix)?;
            if m.nrows() != self.dim + 1 {
                return Err(GeomError::DimensionMismatch { expected: self.dim + 1, found: m.nrows() });
            }
            generators.push(Generator { label: g.label, isometry: Isometry::new(m, tol)? });
        }
        GroupPresentation::new(self.dim, generators)
    }
}

impl GroupPresentation {
    pub fn new(dim: usize, generators: Vec<Generator>) -> Result<Self> {
        if generators.is_empty() {
            return Err(GeomError::InvalidInput("group needs at least one generator".into()));
        }
        for g in &generators {
            if g.isometry.dim() != dim {
                return Err(GeomError::DimensionMismatch { expected: dim + 1, found: g.isometry.dim() + 1 });
            }
        }
        Ok(GroupPresentation { dim, generators })
    }

    /// Convenience constructor from `(label, isometry)` pairs.
    pub fn from_pairs(pairs: Vec<(&str, Isometry)>) -> Result<Self> {
        let dim = pairs.first().map_or(0, |p| p.1.dim());
        Self::new(dim, pairs.into_iter().map(|(l, i)| Generator { label: l.to_string(), isometry: i }).collect())
    }

    pub fn to_spec(&self) -> GroupSpec {
        GroupSpec {
            dim: self.dim,
            generators: self
                .generators
                .iter()
                .map(|g| GeneratorSpec { label: g.label.clone(), matrix: matrix_to_rows(g.isometry.matrix()) })
                .collect(),
        }
    }

    /// Generators and inverses, with one self-inverse letter per involution.
    pub fn letters(&self, tol: f64) -> Vec<(Letter, Isometry)> {
        let mut out = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            out.push((Letter { generator: i, inverse: false }, g.isometry.clone()));
            if !g.isometry.is_involution(tol) {
                out.push((Letter { generator: i, inverse: true }, g.isometry.inverse()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    fn cancels(self, other: Letter) -> bool {
        self.generator == other.generator && self.inverse != other.inverse
    }
}

/// A word in the generators; displayed as `a*b^-1*a`, the empty word as `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn display(&self, labels: &[String]) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|l| {
                if l.inverse {
                    format!("{}^-1", labels[l.generator])
                } else {
                    labels[l.generator].clone()
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

#[derive(Debug, Clone)]
pub struct GroupElement {
    pub word: Word,
    pub isometry: Isometry,
}

/// Distinct elements of word length at most `max_len`, shortest word first.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub labels: Vec<String>,
    pub elements: Vec<GroupElement>,
    pub max_len: usize,
}

impl Enumeration {
    pub fn word(&self, i: usize) -> String {
        self.elements[i].word.display(&self.labels)
    }

    pub fn non_identity(&self) -> impl Iterator<Item = (usize, &GroupElement)> {
        self.elements.iter().enumerate().filter(|(_, e)| !e.word.is_empty())
    }

    pub fn isometries(&self) -> Vec<Isometry> {
        self.elements.iter().map(|e| e.isometry.clone()).collect()
    }
}

/// Lookup table of matrices up to a max-norm tolerance.
///
/// Matrices are bucketed by a fixed random linear functional of their entries,
/// so a lookup only compares against matrices whose functional lies within the
/// tolerance window.
#[derive(Debug, Clone)]
pub struct MatrixIndex {
    weights: Vec<f64>,
    weight_sum: f64,
    keys: BTreeMap<OrderedFloat<f64>, Vec<usize>>,
    matrices: Vec<Matrix>,
}

impl MatrixIndex {
    pub fn new(len: usize) -> Self {
        let mut state: u64 = 0x2545_F491_4F6C_DD1D;
        let weights: Vec<f64> = (0..len * len)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let weight_sum = weights.iter().sum();
        MatrixIndex { weights, weight_sum, keys: BTreeMap::new(), matrices: Vec::new() }
    }

    fn key(&self, m: &Matrix) -> f64 {
        m.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Index of a stored matrix within max-norm distance `tol`.
    pub fn find(&self, m: &Matrix, tol: f64) -> Option<usize> {
        let k = self.key(m);
        let w = self.weight_sum * tol;
        self.keys
            .range(OrderedFloat(k - w)..=OrderedFloat(k + w))
            .flat_map(|(_, v)| v.iter())
            .copied()
            .find(|&i| max_abs(&(&self.matrices[i] - m)) <= tol)
    }

    pub fn insert(&mut self, m: Matrix) -> usize {
        let i = self.matrices.len();
        self.keys.entry(OrderedFloat(self.key(&m))).or_default().push(i);
        self.matrices.push(m);
        i
    }

    pub fn get(&self, i: usize) -> &Matrix {
        &self.matrices[i]
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// Dedup tolerance for an element of the given word length and size.
pub fn dedup_tolerance(base: f64, len: usize, m: &Matrix) -> f64 {
    base * (1 + len) as f64 * max_abs(m).max(1.0)
}

/// Breadth-first enumeration of the Cayley graph up to word length `max_len`.
///
/// Each distinct element keeps its first (shortest) word. Involutive
/// generators get a single self-inverse letter.
pub fn enumerate(g: &GroupPresentation, max_len: usize, dedup_tol: f64) -> Result<Enumeration> {
    let len = g.dim + 1;
    let letters = g.letters(dedup_tol.max(1e-12));
    let labels: Vec<String> = g.generators.iter().map(|x| x.label.clone()).collect();
    let mut index = MatrixIndex::new(len);
    let id = Matrix::identity(len, len);
    index.insert(id.clone());
    let mut elements = vec![GroupElement { word: Word::default(), isometry: Isometry::identity(g.dim) }];
    let mut frontier = vec![0usize];
    for depth in 1..=max_len {
        let mut next = Vec::new();
        for &e in &frontier {
            let last = elements[e].word.0.last().copied();
            for (letter, iso) in &letters {
                if let Some(l) = last {
                    if l.cancels(*letter) {
                        continue;
                    }
                }
                let m = elements[e].isometry.matrix() * iso.matrix();
                let tol = dedup_tolerance(dedup_tol, depth, &m);
                if index.find(&m, tol).is_some() {
                    continue;
                }
                if elements.len() >= ELEMENT_CAP {
                    return Err(GeomError::ElementCap(ELEMENT_CAP));
                }
                index.insert(m.clone());
                let mut word = elements[e].word.clone();
                word.0.push(*letter);
                elements.push(GroupElement { word, isometry: Isometry::from_trusted(m) });
                next.push(elements.len() - 1);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(Enumeration { labels, elements, max_len })
}

/// Orbit points `gamma x` for enumerated `gamma`, deduplicated, each with the
/// shortest word reaching it.
pub fn orbit(g: &GroupPresentation, x: &Vector, max_len: usize, tol: f64) -> Result<Vec<(String, Vector)>> {
    if x.len() != g.dim + 1 {
        return Err(GeomError::DimensionMismatch { expected: g.dim + 1, found: x.len() });
    }
    let en = enumerate(g, max_len, tol)?;
    let mut out: Vec<(String, Vector)> = Vec::new();
    for (i, e) in en.elements.iter().enumerate() {
        let y = e.isometry.apply(x);
        let scale = y.norm().max(1.0);
        if out.iter().all(|(_, z)| (z - &y).norm() > tol * scale * 10.0) {
            out.push((en.word(i), y));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipticRecord {
    pub word: String,
    pub kind: String,
    pub fixed_point: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassKReport {
    pub pass: bool,
    pub elements_checked: usize,
    pub elliptic: Vec<EllipticRecord>,
    /// Shortest elliptic element that is not a Cartan involution.
    pub witness: Option<String>,
    pub unclassified: Vec<String>,
}

/// Checks that every enumerated elliptic element is a Cartan involution.
pub fn class_k_audit(g: &GroupPresentation, max_len: usize, tol: f64) -> Result<ClassKReport> {
    let en = enumerate(g, max_len, tol)?;
    let classes = par::map_slice(&en.elements, |e| classify(&e.isometry, tol).class);
    let mut elliptic = Vec::new();
    let mut witness = None;
    let mut unclassified = Vec::new();
    for (i, c) in classes.iter().enumerate() {
        match c {
            IsometryClass::EllipticCartan { fixed_point } | IsometryClass::EllipticOther { fixed_point } => {
                if witness.is_none() && matches!(c, IsometryClass::EllipticOther { .. }) {
                    witness = Some(en.word(i));
                }
                elliptic.push(EllipticRecord { word: en.word(i), kind: c.name().into(), fixed_point: fixed_point.clone() });
            }
            IsometryClass::UnclassifiableWithinTolerance { .. } => unclassified.push(en.word(i)),
            _ => {}
        }
    }
    Ok(ClassKReport { pass: witness.is_none(), elements_checked: en.elements.len(), elliptic, witness, unclassified })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureReport {
    /// Description of a common fixed point or invariant geodesic, if found.
    pub elementary_witness: Option<String>,
    /// Shortest non-identity enumerated element commuting with every generator.
    pub center_witness: Option<String>,
    pub class_k: bool,
    /// False when a nonelementary group of class K shows a central element.
    pub consistent: bool,
}

fn fixes_direction(g: &Isometry, v: &Vector, tol: f64) -> bool {
    let w = g.apply(v);
    // w must be a positive multiple of v.
    let s = w.dot(v) / v.norm_squared();
    s > 0.0 && (&w - v * s).norm() <= tol * w.norm().max(1.0)
}

fn swaps_or_fixes_pair(g: &Isometry, a: &Vector, b: &Vector, tol: f64) -> bool {
    (fixes_direction(g, a, tol) && fixes_direction(g, b, tol)) || {
        let ga = g.apply(a);
        let gb = g.apply(b);
        let pa = ga.dot(b) / b.norm_squared();
        let pb = gb.dot(a) / a.norm_squared();
        pa > 0.0 && pb > 0.0 && (&ga - b * pa).norm() <= tol * ga.norm() && (&gb - a * pb).norm() <= tol * gb.norm()
    }
}

/// Searches for elementary structure (a global fixed point in `H^n` or at
/// infinity, or an invariant geodesic) and for central elements.
pub fn elementary_and_center_diagnostics(g: &GroupPresentation, max_len: usize, tol: f64) -> Result<StructureReport> {
    let en = enumerate(g, max_len, tol)?;
    let gens: Vec<&Isometry> = g.generators.iter().map(|x| &x.isometry).collect();
    let loose = tol.max(1e-7);
    let mut elementary_witness = None;

    // Common fixed point inside H^n.
    let len = g.dim + 1;
    let stacked = Matrix::from_fn(len * gens.len(), len, |r, c| {
        let k = r / len;
        let i = r % len;
        gens[k].matrix()[(i, c)] - if i == c { 1.0 } else { 0.0 }
    });
    let common = crate::linalg::null_space(&stacked, loose);
    if common.ncols() > 0 {
        let gram = common.transpose() * lorentz::form(len) * &common;
        if gram.symmetric_eigen().eigenvalues.iter().any(|&e| e < -loose) {
            elementary_witness = Some("common fixed point in hyperbolic space".to_string());
        }
    }

    if elementary_witness.is_none() {
        'outer: for (i, e) in en.non_identity() {
            let class = classify(&e.isometry, tol).class;
            let candidates: Vec<Vector> = match &class {
                IsometryClass::Hyperbolic { axis } | IsometryClass::StrictlyLoxodromic { axis, .. } => {
                    let (a, b) = (axis.attracting(), axis.repelling());
                    if gens.iter().all(|h| swaps_or_fixes_pair(h, &a, &b, loose)) {
                        elementary_witness = Some(format!("invariant axis of {}", en.word(i)));
                        break 'outer;
                    }
                    vec![a, b]
                }
                IsometryClass::Parabolic { fixed_null } => vec![Vector::from_vec(fixed_null.clone())],
                _ => vec![],
            };
            for v in candidates {
                if gens.iter().all(|h| fixes_direction(h, &v, loose)) {
                    elementary_witness = Some(format!("common fixed point at infinity of {}", en.word(i)));
                    break 'outer;
                }
            }
        }
    }

    let center_witness = en
        .non_identity()
        .find(|(_, e)| gens.iter().all(|h| e.isometry.commutes_with(h, loose)))
        .map(|(i, _)| en.word(i));
    let class_k = class_k_audit(g, max_len, tol)?.pass;
    let consistent = !(class_k && elementary_witness.is_none() && center_witness.is_some());
    Ok(StructureReport { elementary_witness, center_witness, class_k, consistent })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscretenessReport {
    pub elements: usize,
    pub min_matrix_distance: f64,
    pub closest_word: Option<String>,
    pub min_displacement: f64,
    /// Set when a non-identity element is within `threshold` of the identity.
    pub warning: bool,
    pub threshold: f64,
}

/// Smallest distance to the identity among enumerated non-identity elements,
/// and smallest displacement of the probe point.
pub fn discreteness_heuristic(
    g: &GroupPresentation,
    max_len: usize,
    probe: Option<&Vector>,
    threshold: f64,
    tol: f64,
) -> Result<DiscretenessReport> {
    let en = enumerate(g, max_len, tol)?;
    let mut origin = Vector::zeros(g.dim + 1);
    origin[0] = 1.0;
    let p = probe.cloned().unwrap_or(origin);
    let id = Isometry::identity(g.dim);
    let mut min_matrix_distance = f64::INFINITY;
    let mut closest_word = None;
    let mut min_displacement = f64::INFINITY;
    for (i, e) in en.non_identity() {
        let d = e.isometry.distance(&id);
        if d < min_matrix_distance {
            min_matrix_distance = d;
            closest_word = Some(en.word(i));
        }
        min_displacement = min_displacement.min(lorentz::hyperbolic_distance(&p, &e.isometry.apply(&p)));
    }
    Ok(DiscretenessReport {
        elements: en.elements.len(),
        min_matrix_distance,
        closest_word,
        min_displacement,
        warning: min_matrix_distance < threshold,
        threshold,
    })
}

/// Whether the given elements all lie in one cyclic subgroup generated by an
/// enumerated element, with exponents bounded by `max_power`.
///
/// Elements that do not pairwise commute are rejected immediately.
pub fn generate_cyclic(elements: &[&Isometry], candidates: &Enumeration, max_power: i64, tol: f64) -> bool {
    for (i, a) in elements.iter().enumerate() {
        for b in &elements[i + 1..] {
            if !a.commutes_with(b, tol) {
                return false;
            }
        }
    }
    let nontrivial: Vec<&&Isometry> = elements.iter().filter(|e| !e.is_identity(tol)).collect();
    if nontrivial.is_empty() {
        return true;
    }
    for (_, c) in candidates.non_identity() {
        let mut found = vec![false; nontrivial.len()];
        let mut pos = c.isometry.clone();
        let mut neg = c.isometry.inverse();
        let inv = neg.clone();
        for _ in 1..=max_power {
            for (k, e) in nontrivial.iter().enumerate() {
                let t = tol * max_abs(e.matrix()).max(1.0) * 10.0;
                if e.distance(&pos) <= t || e.distance(&neg) <= t {
                    found[k] = true;
                }
            }
            if found.iter().all(|&f| f) {
                return true;
            }
            pos = pos.compose(&c.isometry);
            neg = neg.compose(&inv);
        }
    }
    false
}

impl fmt::Display for Enumeration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.elements.len() {
            writeln!(f, "{}", self.word(i))?;
        }
        Ok(())
    }
}
