//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process exits non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use dirichlet_core::complexes::ComplexSpec;
use dirichlet_core::complexify::{assumption_cartan_check, primary_parasitic, ParasiticOptions, SubspaceJson};
use dirichlet_core::isometry::Isometry;
use dirichlet_core::lorentz::{from_klein, sample_klein, Vector};
use dirichlet_core::par;
use dirichlet_lab::cyclic::{cyclic_batch, glide_base_point, glide_domain_verify, polygon_threshold, GlideSetup};
use dirichlet_lab::example1::{example1_det_gram, example1_matrices, example1_scan, rank_profile, Example1Config};
use dirichlet_lab::example2::example2_verify;
use dirichlet_lab::fixtures;
use dirichlet_lab::genericity::{genericity_scan, GenericityConfig};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Deserialize;

#[derive(Deserialize)]
struct Seeds {
    gram: u64,
    rank: u64,
    scan: u64,
    cyclic: u64,
    glide: u64,
    genericity: u64,
    affine: u64,
}

fn seeds() -> Seeds {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/acceptance_seeds.json");
    serde_json::from_str(&std::fs::read_to_string(path).expect("seed file")).expect("seed json")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- 1

/// `A = P diag(l, 1/l, -1, -1) P` with `P` the null-coordinate involution,
/// built from scratch.
fn oracle_a(lambda: f64) -> [[f64; 4]; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let p = [[h, h, 0.0, 0.0], [h, -h, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let d = [lambda, 1.0 / lambda, -1.0, -1.0];
    let mut a = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = (0..4).map(|k| p[i][k] * d[k] * p[k][j]).sum();
        }
    }
    a
}

fn mat_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn apply(a: &[[f64; 4]; 4], x: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = (0..4).map(|k| a[i][k] * x[k]).sum();
    }
    y
}

fn minkowski(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3]
}

/// Gram determinant of `A^-1 x - x` and `A^2 x - x`. `A` is an involution
/// up to the diagonal, so `A^-1 = P diag(1/l, l, -1, -1) P`.
fn oracle_det_gram(lambda: f64, null_x: &[f64; 4]) -> f64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = [h * (null_x[0] + null_x[1]), h * (null_x[0] - null_x[1]), null_x[2], null_x[3]];
    let a = oracle_a(lambda);
    let a_inv = oracle_a(1.0 / lambda);
    let a2 = mat_mul(&a, &a);
    let sub = |y: [f64; 4]| [y[0] - x[0], y[1] - x[1], y[2] - x[2], y[3] - x[3]];
    let b1 = sub(apply(&a_inv, &x));
    let b2 = sub(apply(&a2, &x));
    minkowski(&b1, &b1) * minkowski(&b2, &b2) - minkowski(&b1, &b2).powi(2)
}

fn criterion_1(s: &Seeds) -> Outcome {
    let mut worst = 0.0f64;
    let mut errors = 0;
    for i in 0..1000u64 {
        let mut rng = par::stream(s.gram, i);
        let lambda = rng.gen_range(1.0..5.0);
        if lambda <= 1.0 {
            continue;
        }
        let k = sample_klein(&mut rng, 2, 0.95);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let null_x = [h * (k[0] + k[1]), h * (k[0] - k[1]), k[2], 0.0];
        let closed = match example1_det_gram(lambda, &Vector::from_column_slice(&null_x)) {
            Ok(v) => v,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let oracle = oracle_det_gram(lambda, &null_x);
        worst = worst.max((closed - oracle).abs() / oracle.abs().max(1.0));
    }
    outcome(errors == 0 && worst <= 1e-9, format!("1000 samples, worst scaled error {worst:.3e}, errors {errors}"))
}

// ---------------------------------------------------------------- 2

fn criterion_2(s: &Seeds) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, lambda) in [1.5, 2.0, 3.0].into_iter().enumerate() {
        let t = match example1_matrices(lambda) {
            Ok(t) => t,
            Err(e) => return outcome(false, format!("lambda {lambda}: {e}")),
        };
        let singular = rank_profile(&t.triple(), 1000, s.rank + i as u64, 1e-8);
        let low = singular.iter().filter(|&&r| r <= 2).count();
        let a4 = t.a.power(4);
        let regular = rank_profile(&[&t.a, &t.a2, &a4], 1000, s.rank + 100 + i as u64, 1e-8);
        let full = regular.iter().filter(|&&r| r == 3).count();
        pass &= low == 1000 && full >= 999;
        parts.push(format!("lambda {lambda}: rank<=2 {low}/1000, rank 3 {full}/1000"));
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------- 3

fn criterion_3(s: &Seeds) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [1.2, 1.8, 2.4] {
        let start = Instant::now();
        let report = Example1Config::new(lambda, 10_000, s.scan).and_then(|c| example1_scan(&c));
        match report {
            Ok(r) => {
                let reverified = r
                    .slices
                    .iter()
                    .flat_map(|sl| &sl.scan.witnesses)
                    .all(|w| w.reverify(lambda).unwrap_or(false));
                let certified: usize = r.slices.iter().map(|sl| sl.certified).sum();
                let ok = r.pass() && reverified && certified > 0;
                pass &= ok;
                parts.push(format!(
                    "lambda {lambda}: hits {}, certified {certified}, {:.1}s",
                    r.hits(),
                    start.elapsed().as_secs_f64()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("lambda {lambda}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------- 4

fn criterion_4(s: &Seeds) -> Outcome {
    match cyclic_batch(20, 5, s.cyclic) {
        Ok(b) => outcome(
            b.failures == 0 && b.converged >= 95,
            format!("{} runs, {} converged, {} not simple", b.runs.len(), b.converged, b.failures),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

// ---------------------------------------------------------------- 5

fn criterion_5(s: &Seeds) -> Outcome {
    let opts = Default::default();
    let mut polygon_ok = 0;
    let mut strip_ok = 0;
    let mut worst_spread = 0.0f64;
    let mut worst_perp = 0.0f64;
    let mut notes = Vec::new();
    for i in 0..10u64 {
        let mut rng = par::stream(s.glide, i);
        let setup = match GlideSetup::random(&mut rng, (0.4, 1.2)) {
            Ok(g) => g,
            Err(e) => {
                notes.push(format!("glide {i}: {e}"));
                continue;
            }
        };
        let x = glide_base_point(&mut rng, &setup, true, 0.02);
        match glide_domain_verify(&setup.glide, &x, &opts) {
            Ok(r) => {
                worst_spread = worst_spread.max(r.distance_spread());
                worst_perp = worst_perp.max(r.perp_defect());
                if r.polygon_regime && r.polygon_holds(1e-9) {
                    polygon_ok += 1;
                } else {
                    notes.push(format!("glide {i}: facets {} codim2 {} cycles {:?}", r.facets, r.codim2_faces, r.cycle_lengths));
                }
            }
            Err(e) => notes.push(format!("glide {i}: {e}")),
        }
        // below the threshold the section is a strip
        if polygon_threshold(setup.length) > 0.05 {
            let y = glide_base_point(&mut rng, &setup, false, 0.02);
            match glide_domain_verify(&setup.glide, &y, &opts) {
                Ok(r) if !r.polygon_regime && r.strip_holds(1e-9) => strip_ok += 1,
                Ok(r) => notes.push(format!("strip {i}: facets {} codim2 {}", r.facets, r.codim2_faces)),
                Err(e) => notes.push(format!("strip {i}: {e}")),
            }
        } else {
            strip_ok += 1;
        }
    }
    let mut detail = format!(
        "polygon {polygon_ok}/10, strip {strip_ok}/10, worst vertex spread {worst_spread:.2e}, worst perp defect {worst_perp:.2e}"
    );
    if !notes.is_empty() {
        detail.push_str(&format!(" [{}]", notes.join("; ")));
    }
    outcome(polygon_ok == 10 && strip_ok == 10, detail)
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let x = match from_klein(&Vector::from_column_slice(&[0.0, 0.45, 0.1])) {
        Ok(x) => x,
        Err(e) => return outcome(false, e.to_string()),
    };
    match example2_verify(1.0, &x, 1e-9) {
        Ok(r) => {
            let count3 = r.triple_faces.iter().any(|f| f.bisector_count == 3);
            let witness_r = r.class_k_witness.as_deref() == Some("r");
            outcome(
                r.pass() && count3 && witness_r,
                format!(
                    "facets {:?}, boundary excess {:.2e}, count-3 face {count3}, class K witness {:?}",
                    r.facets, r.boundary_excess, r.class_k_witness
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

// ---------------------------------------------------------------- 7

fn criterion_7(s: &Seeds) -> Outcome {
    let schottky = fixtures::schottky_pair().and_then(|g| {
        genericity_scan(&g, &GenericityConfig { triples: 100, points: 10, cartan_points: 0, seed: s.genericity, ..Default::default() })
    });
    let cartan = fixtures::boost_and_cartan().and_then(|g| {
        genericity_scan(&g, &GenericityConfig { triples: 0, cartan_points: 100, seed: s.genericity, ..Default::default() })
    });
    match (schottky, cartan) {
        (Ok(a), Ok(b)) => {
            let rank_ok = a.scan.trials == 1000 && a.scan.hits == 0;
            let clauses = b.cartan.len();
            let cartan_ok = clauses > 0 && b.cartan.iter().all(|c| c.pass() && c.points == 100);
            outcome(
                rank_ok && cartan_ok,
                format!(
                    "schottky rank 3 on {}/{} pairs; {clauses} Cartan elements, violations {}",
                    a.scan.trials - a.scan.hits,
                    a.scan.trials,
                    b.cartan.iter().map(|c| c.violations.len() + c.missed_own).sum::<usize>()
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e.to_string()),
    }
}

// ---------------------------------------------------------------- 8

fn criterion_8(s: &Seeds) -> Outcome {
    let tol = 1e-9;
    let mut violations = 0;
    let mut tested = 0;
    let mut worst_constructed = 0.0f64;
    for i in 0..10_000u64 {
        let mut rng = par::stream(s.affine, i);
        let u = sample_klein(&mut rng, 3, 0.9);
        let sc: f64 = rng.gen_range(-5.0..5.0);
        let tc: f64 = rng.gen_range(-5.0..5.0);
        if (sc * tc).abs() <= tol || (sc + tc).abs() <= tol {
            continue;
        }
        if i % 10 == 0 {
            // u = v = w: the identity must hold up to rounding
            let r = &u * sc + &u * tc - &u * (sc + tc);
            let bound = 4.0 * f64::EPSILON * (sc.abs() + tc.abs() + (sc + tc).abs()) * u.norm();
            worst_constructed = worst_constructed.max(r.norm() / bound);
            if r.norm() > bound {
                violations += 1;
            }
            continue;
        }
        let v = sample_klein(&mut rng, 3, 0.9);
        let w = sample_klein(&mut rng, 3, 0.9);
        tested += 1;
        let r = &u * sc + &v * tc - &w * (sc + tc);
        let coincide = (&u - &v).norm() <= tol && (&u - &w).norm() <= tol;
        if !coincide && r.norm() <= tol {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{tested} generic and {} coincident instances, violations {violations}, worst coincident residual {worst_constructed:.2} x bound", 10_000 - tested),
    )
}

// ---------------------------------------------------------------- 9

type Q = BigRational;

fn q(p: &dirichlet_core::exact::RatPair) -> Q {
    p.to_rational().expect("finite rational")
}

/// Reduced row echelon form, in place; returns the rank.
fn rref(m: &mut Vec<Vec<Q>>) -> usize {
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else { continue };
        m.swap(rank, p);
        let inv = Q::one() / m[rank][c].clone();
        for x in m[rank].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                let pivot = m[rank].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot) {
                    *x = &*x - &f * y;
                }
            }
        }
        rank += 1;
    }
    m.truncate(rank);
    rank
}

/// Canonical basis of a row space: its reduced echelon rows.
fn canonical(rows: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut m = rows.to_vec();
    rref(&mut m);
    m
}

/// Orthogonal complement for the Euclidean pairing: the kernel of `rows`.
fn kernel(rows: &[Vec<Q>], len: usize) -> Vec<Vec<Q>> {
    let mut m = rows.to_vec();
    rref(&mut m);
    let pivots: Vec<usize> = m.iter().map(|r| r.iter().position(|x| !x.is_zero()).expect("nonzero row")).collect();
    (0..len)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Q::zero(); len];
            v[free] = Q::one();
            for (r, &p) in m.iter().zip(&pivots) {
                v[p] = -r[free].clone();
            }
            v
        })
        .collect()
}

/// Intersection of row spaces as the kernel of the stacked kernels.
fn intersect(spaces: &[&Vec<Vec<Q>>], len: usize) -> Vec<Vec<Q>> {
    let ann: Vec<Vec<Q>> = spaces.iter().flat_map(|s| kernel(s, len)).collect();
    if ann.is_empty() {
        return canonical(spaces[0]);
    }
    canonical(&kernel(&ann, len))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

type Key = (usize, Vec<Vec<Q>>);

/// Every tuple of at least two sub-faces of each host, with no pruning:
/// intersections that are nonzero and not the span of a face comparable
/// with all members, one per host and subspace.
fn brute_force(spec: &ComplexSpec) -> BTreeSet<Key> {
    let len = spec.dim + 1;
    let rays: Vec<Vec<Vec<Q>>> = spec
        .faces
        .iter()
        .map(|f| f.rays.as_ref().expect("rays").iter().map(|r| r.iter().map(q).collect()).collect())
        .collect();
    let spans: Vec<Vec<Vec<Q>>> = rays.iter().map(|r| canonical(r)).collect();
    let below = |a: usize, b: usize| a != b && rays[a].iter().all(|r| rays[b].contains(r));
    let comparable = |a: usize, b: usize| a == b || below(a, b) || below(b, a);
    let mut out = BTreeSet::new();
    for host in 0..spec.faces.len() {
        let subs: Vec<usize> = (0..spec.faces.len()).filter(|&s| below(s, host)).collect();
        let mut witnesses = subs.clone();
        witnesses.push(host);
        for k in 2..=len.min(subs.len()) {
            for tuple in subsets(subs.len(), k) {
                let sigma: Vec<usize> = tuple.iter().map(|&i| subs[i]).collect();
                let members: Vec<&Vec<Vec<Q>>> = sigma.iter().map(|&s| &spans[s]).collect();
                let inter = intersect(&members, len);
                if inter.is_empty() {
                    continue;
                }
                let realized = witnesses.iter().any(|&w| spans[w] == inter && sigma.iter().all(|&s| comparable(w, s)));
                if !realized {
                    out.insert((host, inter));
                }
            }
        }
    }
    out
}

fn from_library(spec: &ComplexSpec) -> Result<BTreeSet<Key>, String> {
    let cx = spec.clone().into_complex().map_err(|e| e.to_string())?;
    let records = primary_parasitic(&cx, &ParasiticOptions::default()).map_err(|e| e.to_string())?;
    let mut out = BTreeSet::new();
    for r in records {
        let SubspaceJson::Exact(cols) = r.subspace.to_json() else {
            return Err("record is not exact".into());
        };
        let rows: Vec<Vec<Q>> = cols.iter().map(|c| c.iter().map(q).collect()).collect();
        out.insert((r.host, canonical(&rows)));
    }
    Ok(out)
}

fn criterion_9() -> Outcome {
    // frozen counts. Cube: two pairs of opposite edges in each of six square
    // facets, and in the cell the three lines where opposite facet planes
    // meet plus the three points at infinity shared by parallel edges.
    // Quadrilateral: its two pairs of opposite sides.
    let cases = [
        ("cube", fixtures::rational_cube(), 18usize),
        ("two triangles", fixtures::two_triangles(), 0),
        ("quadrilateral", fixtures::quadrilateral(), 2),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec, frozen) in cases {
        let oracle = brute_force(&spec);
        match from_library(&spec) {
            Ok(lib) => {
                let ok = lib == oracle && oracle.len() == frozen;
                pass &= ok;
                parts.push(format!("{name}: library {} oracle {} frozen {frozen}", lib.len(), oracle.len()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let rejected = fixtures::axiom2_violation().into_complex().is_err();
    let check = |f: fn() -> dirichlet_core::error::Result<(dirichlet_core::complexes::PolyComplex, Vec<(String, Isometry)>)>| {
        f().and_then(|(cx, elems)| assumption_cartan_check(&cx, &elems, 1e-9)).map(|r| r.pass)
    };
    match (check(fixtures::cartan_fixture), check(fixtures::half_turn_fixture)) {
        (Ok(cartan), Ok(half_turn)) => outcome(
            rejected && cartan && !half_turn,
            format!("axiom 2 fixture rejected {rejected}; Cartan fixture passes {cartan}; half-turn passes {half_turn}"),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, e.to_string()),
    }
}

fn main() {
    let s = seeds();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("Gram-determinant fidelity", Box::new(|| criterion_1(&s))),
        ("singular-triple criterion", Box::new(|| criterion_2(&s))),
        ("U_lambda nonemptiness", Box::new(|| criterion_3(&s))),
        ("cyclic simplicity", Box::new(|| criterion_4(&s))),
        ("glide-reflection structure", Box::new(|| criterion_5(&s))),
        ("boost and half-turn failure mode", Box::new(|| criterion_6())),
        ("genericity", Box::new(|| criterion_7(&s))),
        ("no affine relation on H", Box::new(|| criterion_8(&s))),
        ("parasitic enumeration oracle", Box::new(|| criterion_9())),
        ("axiom and assumption validators", Box::new(|| criterion_10())),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} ({:.2}s): {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
