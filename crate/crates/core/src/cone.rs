//! Polyhedral cones `{v : a_i^T v >= 0}` by the double description method,
//! their face lattices, and the test for faces meeting the hyperboloid.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;

use crate::error::{GeomError, Result};
use crate::lorentz::{dot, Vector};
use crate::par;

/// Small fixed-width bitset over constraint indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitSet(Vec<u64>);

impl BitSet {
    pub fn insert(&mut self, i: usize) {
        let w = i / 64;
        if self.0.len() <= w {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut v: Vec<u64> = self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect();
        while v.last() == Some(&0) {
            v.pop();
        }
        BitSet(v)
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(k, &w)| (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| k * 64 + b))
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.0.iter().enumerate().all(|(k, &w)| w & !other.0.get(k).copied().unwrap_or(0) == 0)
    }
}

/// Rank by Gaussian elimination with partial pivoting; entries below `tol`
/// (relative to the largest row norm) count as zero.
pub fn rank_of(vectors: &[&Vector], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols = vectors[0].len();
    let mut m: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().copied().collect()).collect();
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let eps = tol * scale;
    let mut rank = 0;
    for c in 0..cols {
        let Some((p, best)) = (rank..m.len())
            .map(|i| (i, m[i][c].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        else {
            break;
        };
        if best <= eps {
            continue;
        }
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            let f = m[i][c] / m[rank][c];
            if f != 0.0 {
                for j in c..cols {
                    m[i][j] -= f * m[rank][j];
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Cone `{v : a_i^T v >= 0}` held in both descriptions: constraint
/// functionals, and extreme rays plus a lineality basis.
#[derive(Debug, Clone)]
pub struct Cone {
    len: usize,
    tol: f64,
    constraints: Vec<Vector>,
    rays: Vec<Vector>,
    zeros: Vec<BitSet>,
    lineality: Vec<Vector>,
}

impl Cone {
    /// All of `R^len`.
    pub fn whole_space(len: usize, tol: f64) -> Self {
        let lineality = (0..len)
            .map(|i| {
                let mut e = Vector::zeros(len);
                e[i] = 1.0;
                e
            })
            .collect();
        Cone { len, tol, constraints: Vec::new(), rays: Vec::new(), zeros: Vec::new(), lineality }
    }

    pub fn from_functionals(len: usize, functionals: &[Vector], tol: f64) -> Result<Self> {
        let mut c = Cone::whole_space(len, tol);
        for a in functionals {
            c.add(a)?;
        }
        Ok(c)
    }

    pub fn ambient_len(&self) -> usize {
        self.len
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn constraints(&self) -> &[Vector] {
        &self.constraints
    }

    pub fn rays(&self) -> &[Vector] {
        &self.rays
    }

    pub fn lineality(&self) -> &[Vector] {
        &self.lineality
    }

    /// Constraint indices vanishing on ray `r`.
    pub fn tight(&self, r: usize) -> &BitSet {
        &self.zeros[r]
    }

    /// Dimension of the cone.
    pub fn dim(&self) -> usize {
        let mut all: Vec<&Vector> = self.rays.iter().collect();
        all.extend(self.lineality.iter());
        rank_of(&all, 1e-9)
    }

    /// Adds the constraint `a^T v >= 0`; returns whether the cone shrank.
    pub fn add(&mut self, a: &Vector) -> Result<bool> {
        if a.len() != self.len {
            return Err(GeomError::DimensionMismatch { expected: self.len, found: a.len() });
        }
        let norm = a.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GeomError::InvalidInput("zero or non-finite constraint".into()));
        }
        let a = a / norm;
        let k = self.constraints.len();
        self.constraints.push(a.clone());

        let lin_vals: Vec<f64> = self.lineality.iter().map(|l| a.dot(l)).collect();
        if let Some((p, &v)) = lin_vals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
            .filter(|(_, v)| v.abs() > self.tol)
        {
            let mut lstar = self.lineality[p].clone();
            let mut sv = v;
            if sv < 0.0 {
                lstar = -lstar;
                sv = -sv;
            }
            let mut new_lin = Vec::new();
            for (i, l) in self.lineality.iter().enumerate() {
                if i != p {
                    new_lin.push(l - &lstar * (a.dot(l) / sv));
                }
            }
            self.lineality = orthonormalize(&new_lin, self.tol);
            for (r, z) in self.rays.iter_mut().zip(self.zeros.iter_mut()) {
                let w = &*r - &lstar * (a.dot(r) / sv);
                *r = w.normalize();
                z.insert(k);
            }
            // The old lineality direction is tight on every earlier constraint.
            let mut z = BitSet::default();
            for i in 0..k {
                z.insert(i);
            }
            self.rays.push(lstar.normalize());
            self.zeros.push(z);
            // Keep rays modulo the new lineality space.
            let lin = self.lineality.clone();
            for r in self.rays.iter_mut() {
                let mut w = r.clone();
                for l in &lin {
                    w -= l * l.dot(&w);
                }
                *r = w.normalize();
            }
            return Ok(true);
        }

        let vals: Vec<f64> = self.rays.iter().map(|r| a.dot(r)).collect();
        let neg: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < -self.tol).collect();
        for (i, v) in vals.iter().enumerate() {
            if v.abs() <= self.tol {
                self.zeros[i].insert(k);
            }
        }
        if neg.is_empty() {
            return Ok(false);
        }
        let pos: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > self.tol).collect();
        let pointed_dim = self.len - self.lineality.len();
        let mut new_rays = Vec::new();
        let mut new_zeros = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = self.zeros[p].intersection(&self.zeros[n]);
                let need = pointed_dim.saturating_sub(2);
                if common.count() < need {
                    continue;
                }
                if need > 0 {
                    let rows: Vec<&Vector> = common.iter().map(|c| &self.constraints[c]).collect();
                    if rank_of(&rows, 1e-9) < need {
                        continue;
                    }
                }
                let r = &self.rays[n] * vals[p] - &self.rays[p] * vals[n];
                let mut z = common;
                z.insert(k);
                new_rays.push(r.normalize());
                new_zeros.push(z);
            }
        }
        let mut rays = Vec::new();
        let mut zeros = Vec::new();
        for i in 0..self.rays.len() {
            if vals[i] >= -self.tol {
                rays.push(self.rays[i].clone());
                zeros.push(self.zeros[i].clone());
            }
        }
        rays.extend(new_rays);
        zeros.extend(new_zeros);
        self.rays = rays;
        self.zeros = zeros;
        Ok(true)
    }

    /// Generators of the face with ray set `rays`: the rays plus both signs of
    /// each lineality direction.
    pub fn face_generators(&self, rays: &[usize]) -> Vec<Vector> {
        let mut g: Vec<Vector> = rays.iter().map(|&r| self.rays[r].clone()).collect();
        for l in &self.lineality {
            g.push(l.clone());
            g.push(-l);
        }
        g
    }

    fn rank_with_lineality(&self, rays: &[usize]) -> usize {
        let mut all: Vec<&Vector> = rays.iter().map(|&r| &self.rays[r]).collect();
        all.extend(self.lineality.iter());
        rank_of(&all, 1e-9)
    }

    /// Rays on which constraint `i` vanishes.
    pub fn incidence(&self, i: usize) -> Vec<usize> {
        (0..self.rays.len()).filter(|&r| self.zeros[r].contains(i)).collect()
    }

    /// Irredundant constraints, one per facet (the lowest index among
    /// constraints defining the same facet).
    pub fn facets(&self) -> Vec<usize> {
        let d = self.dim();
        if d == 0 {
            return Vec::new();
        }
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut out = Vec::new();
        for i in 0..self.constraints.len() {
            let inc = self.incidence(i);
            if inc.len() == self.rays.len() {
                continue;
            }
            if self.rank_with_lineality(&inc) == d - 1 && seen.insert(inc) {
                out.push(i);
            }
        }
        out
    }

    /// Full face lattice, top face first, ordered by decreasing dimension.
    pub fn face_lattice(&self) -> FaceLattice {
        let facets = self.facets();
        let facet_sets: Vec<Vec<usize>> = facets.iter().map(|&f| self.incidence(f)).collect();
        let top: Vec<usize> = (0..self.rays.len()).collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut queue: VecDeque<Vec<usize>> = VecDeque::new();
        seen.insert(top.clone());
        queue.push_back(top);
        while let Some(s) = queue.pop_front() {
            for fs in &facet_sets {
                let inter: Vec<usize> = s.iter().copied().filter(|r| fs.binary_search(r).is_ok()).collect();
                if inter.len() < s.len() && seen.insert(inter.clone()) {
                    queue.push_back(inter);
                }
            }
        }
        let mut faces: Vec<ConeFace> = seen
            .into_iter()
            .map(|rays| {
                let dim = self.rank_with_lineality(&rays);
                let on: Vec<usize> = facets
                    .iter()
                    .zip(&facet_sets)
                    .filter(|(_, fs)| rays.iter().all(|r| fs.binary_search(r).is_ok()))
                    .map(|(&f, _)| f)
                    .collect();
                ConeFace { rays, dim, facets: on }
            })
            .collect();
        faces.sort_by(|a, b| b.dim.cmp(&a.dim).then(a.rays.cmp(&b.rays)));
        FaceLattice { facets, faces }
    }
}

fn orthonormalize(vs: &[Vector], tol: f64) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                w -= u * u.dot(&w);
            }
        }
        let n = w.norm();
        if n > tol.max(1e-12) {
            out.push(w / n);
        }
    }
    out
}

/// A face of a cone, identified by its extreme rays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeFace {
    pub rays: Vec<usize>,
    pub dim: usize,
    /// Facet-defining constraints containing the face.
    pub facets: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FaceLattice {
    pub facets: Vec<usize>,
    pub faces: Vec<ConeFace>,
}

impl FaceLattice {
    /// Whether face `a` is contained in face `b`.
    pub fn is_subface(&self, a: usize, b: usize) -> bool {
        let (fa, fb) = (&self.faces[a], &self.faces[b]);
        fa.rays.iter().all(|r| fb.rays.binary_search(r).is_ok()) && fa.dim <= fb.dim
    }

    /// Map from ray set to face index.
    pub fn index(&self) -> HashMap<Vec<usize>, usize> {
        self.faces.iter().enumerate().map(|(i, f)| (f.rays.clone(), i)).collect()
    }
}

/// Largest generator count handled by exact KKT enumeration.
pub const KKT_CAP: usize = 12;
/// Random convex combinations tried when the KKT enumeration is skipped.
pub const FALLBACK_SAMPLES: usize = 1000;

/// Result of minimizing the Lorentz form over the convex hull of the
/// normalized generators.
#[derive(Debug, Clone)]
pub struct FormMinimum {
    pub value: f64,
    pub point: Vector,
    /// False when the sampling fallback was used.
    pub exact: bool,
}

fn normalized(gens: &[Vector]) -> Vec<Vector> {
    gens.iter().filter(|g| g.norm() > 0.0).map(|g| g.normalize()).collect()
}

fn solve_kkt(gram: &[Vec<f64>], subset: &[usize]) -> Option<Vec<f64>> {
    let k = subset.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k + 1);
    for (a, &i) in subset.iter().enumerate() {
        for (b, &j) in subset.iter().enumerate() {
            m[(a, b)] = gram[i][j];
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    rhs[k] = 1.0;
    let lu = m.lu();
    let sol = lu.solve(&rhs)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some(sol.iter().take(k).copied().collect())
}

/// Minimum of `v . v` over the convex hull of the Euclidean-normalized
/// generators.
///
/// Up to [`KKT_CAP`] generators every face of the simplex is visited and its
/// interior stationary point tested; beyond that random convex combinations
/// are sampled.
pub fn minimize_form(gens: &[Vector], seed: u64) -> FormMinimum {
    let g = normalized(gens);
    if g.is_empty() {
        return FormMinimum { value: 0.0, point: Vector::zeros(gens.first().map_or(1, |v| v.len())), exact: true };
    }
    let k = g.len();
    let gram: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| dot(&g[i], &g[j])).collect()).collect();
    let mut best = (f64::INFINITY, g[0].clone());
    let combo = |lam: &[f64], idx: &[usize]| -> Vector {
        let mut v = Vector::zeros(g[0].len());
        for (l, &i) in lam.iter().zip(idx) {
            v += &g[i] * *l;
        }
        v
    };
    for i in 0..k {
        if gram[i][i] < best.0 {
            best = (gram[i][i], g[i].clone());
        }
    }
    if k <= KKT_CAP {
        for mask in 1u32..(1 << k) {
            if mask.count_ones() < 2 {
                continue;
            }
            let subset: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            let Some(lam) = solve_kkt(&gram, &subset) else { continue };
            if lam.iter().any(|&l| l < -1e-12) {
                continue;
            }
            let mut val = 0.0;
            for (a, &i) in subset.iter().enumerate() {
                for (b, &j) in subset.iter().enumerate() {
                    val += lam[a] * lam[b] * gram[i][j];
                }
            }
            if val < best.0 {
                best = (val, combo(&lam, &subset));
            }
        }
        return FormMinimum { value: best.0, point: best.1, exact: true };
    }
    let mut rng = par::stream(seed, 0);
    let all: Vec<usize> = (0..k).collect();
    for i in 0..k {
        for j in i + 1..k {
            let idx = [i, j];
            if let Some(lam) = solve_kkt(&gram, &idx) {
                if lam.iter().all(|&l| l >= 0.0) {
                    let v = combo(&lam, &idx);
                    let val = dot(&v, &v);
                    if val < best.0 {
                        best = (val, v);
                    }
                }
            }
        }
    }
    for _ in 0..FALLBACK_SAMPLES {
        let w: Vec<f64> = (0..k).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
        let s: f64 = w.iter().sum();
        let lam: Vec<f64> = w.iter().map(|x| x / s).collect();
        let v = combo(&lam, &all);
        let val = dot(&v, &v);
        if val < best.0 {
            best = (val, v);
        }
    }
    FormMinimum { value: best.0, point: best.1, exact: false }
}

/// Threshold below which the minimum of the form counts as timelike.
pub const MEET_TOL: f64 = 1e-10;

/// Whether the cone generated by `gens` contains a timelike vector.
pub fn face_meets_hyperbolic(gens: &[Vector]) -> bool {
    minimize_form(gens, 0).value < -MEET_TOL
}

/// A timelike vector of the cone generated by `gens`, if any.
pub fn timelike_point(gens: &[Vector]) -> Option<Vector> {
    let m = minimize_form(gens, 0);
    (m.value < -MEET_TOL).then_some(m.point)
}
