//! Nontransversal triple bisector intersections inside a cyclic group.
//!
//! `A` acts in null coordinates as `diag(lambda, 1/lambda, -1, -1)`; the
//! triple `(A^-1, A^2, A^3)` is singular because `A^2 = A^-1 A^3`, and the
//! set `U = {x : det Gr(x) > 0}` is where its three bisectors share a
//! hyperbolic geodesic.

use std::time::Instant;

use dirichlet_core::bisector::{bmap, is_singular_tuple, numeric_rank, transversal_at, SingularityOptions, SingularityVerdict};
use dirichlet_core::cone::{face_meets_hyperbolic, timelike_point};
use dirichlet_core::error::{GeomError, Result};
use dirichlet_core::isometry::{classify, Isometry, IsometryClass};
use dirichlet_core::linalg;
use dirichlet_core::lorentz::{self, dot, lower, null_basis_change, Matrix, Vector};
use dirichlet_core::par;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::report::ScanReport;

pub const RANK_TOL: f64 = 1e-8;
/// Euclidean radius of the Klein ball that scans sample from.
pub const SCAN_RADIUS: f64 = 0.95;
/// Witnesses kept per slice.
pub const WITNESS_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    Null,
    Standard,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example1Config {
    pub lambda: f64,
    /// Coordinates used for witnesses in reports.
    pub basis: BasisMode,
    /// Samples per slice.
    pub budget: usize,
    pub seed: u64,
}

impl Example1Config {
    pub fn new(lambda: f64, budget: usize, seed: u64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Example1Config { lambda, basis: BasisMode::Null, budget, seed })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(GeomError::InvalidInput(format!("lambda must exceed 1, got {lambda}")));
    }
    Ok(())
}

/// `A` and the triple `(A^-1, A^2, A^3)`, in standard coordinates.
#[derive(Debug, Clone)]
pub struct PowerTriple {
    pub a: Isometry,
    pub a_inv: Isometry,
    pub a2: Isometry,
    pub a3: Isometry,
}

impl PowerTriple {
    pub fn triple(&self) -> [&Isometry; 3] {
        [&self.a_inv, &self.a2, &self.a3]
    }
}

pub fn null_to_standard(x: &Vector) -> Vector {
    null_basis_change(x.len()) * x
}

pub fn standard_to_null(x: &Vector) -> Vector {
    let p = null_basis_change(x.len());
    // the change of basis is an involution
    &p * x
}

pub fn example1_matrices(lambda: f64) -> Result<PowerTriple> {
    check_lambda(lambda)?;
    let p = null_basis_change(4);
    let d = Matrix::from_diagonal(&Vector::from_vec(vec![lambda, 1.0 / lambda, -1.0, -1.0]));
    let a = Isometry::new(&p * d * &p, 1e-12)?;
    let c = classify(&a, 1e-9);
    match c.class {
        IsometryClass::StrictlyLoxodromic { rotation_angle: Some(t), .. } if (t - std::f64::consts::PI).abs() < 1e-9 => {}
        other => {
            return Err(GeomError::InvalidInput(format!("unexpected class {}", other.name())));
        }
    }
    Ok(PowerTriple { a_inv: a.inverse(), a2: a.power(2), a3: a.power(3), a })
}

/// `(mu, nu) = (lambda - 1)(lambda^2 - 1)(1 +- lambda^-3)`.
pub fn example1_mu_nu(lambda: f64) -> (f64, f64) {
    let base = (lambda - 1.0) * (lambda * lambda - 1.0);
    let c = lambda.powi(-3);
    (base * (1.0 + c), base * (1.0 - c))
}

fn check_future_null_coords(x: &Vector) -> Result<()> {
    if x.len() != 4 {
        return Err(GeomError::DimensionMismatch { expected: 4, found: x.len() });
    }
    let q = -2.0 * x[0] * x[1] + x[2] * x[2] + x[3] * x[3];
    if !(q < 0.0) || x[0] + x[1] <= 0.0 {
        return Err(GeomError::NotFutureTimelike);
    }
    Ok(())
}

/// Closed form of `det Gr(x)` for `x` in null coordinates, with
/// `x3^2 + x4^2` in place of `x3^2`.
pub fn example1_det_gram(lambda: f64, x: &Vector) -> Result<f64> {
    check_lambda(lambda)?;
    check_future_null_coords(x)?;
    let (_, nu) = example1_mu_nu(lambda);
    let l2 = lambda * lambda - 1.0;
    let p = x[0] * x[1];
    let s = x[2] * x[2] + x[3] * x[3];
    Ok(-nu * nu * p * p + 8.0 * l2 * l2 / (lambda * lambda) * p * s)
}

/// Gram determinant of `A^-1 x - x` and `A^2 x - x`, computed directly in
/// standard coordinates.
pub fn example1_det_gram_oracle(lambda: f64, x: &Vector) -> Result<f64> {
    check_future_null_coords(x)?;
    let t = example1_matrices(lambda)?;
    let xs = null_to_standard(x);
    let b1 = t.a_inv.apply(&xs) - &xs;
    let b2 = t.a2.apply(&xs) - &xs;
    Ok(dot(&b1, &b1) * dot(&b2, &b2) - dot(&b1, &b2).powi(2))
}

/// `B(x)` of the triple, expressed in null coordinates.
pub fn example1_bmap_null(lambda: f64, x: &Vector) -> Result<Matrix> {
    let t = example1_matrices(lambda)?;
    let p = null_basis_change(4);
    Ok(&p * bmap(&t.triple(), &null_to_standard(x)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub rank: usize,
    /// Dimension of the common kernel of the three bisector functionals.
    pub intersection_dim: usize,
    pub meets_hyperbolic: bool,
    /// Whether the bisector normals are independent at a common point.
    pub transversal: Option<bool>,
    /// A point of the common geodesic on `H`.
    pub geodesic_point: Option<Vec<f64>>,
}

impl Certificate {
    /// The three bisectors share a geodesic and meet non-transversally.
    pub fn holds(&self) -> bool {
        self.rank == 2 && self.intersection_dim == 2 && self.meets_hyperbolic && self.transversal == Some(false)
    }
}

/// Checks that the three bisectors through `x` (standard coordinates) meet
/// in a geodesic of `H`.
pub fn certify(triple: &PowerTriple, x: &Vector) -> Certificate {
    certify_tuple(&triple.triple(), x)
}

/// Rank of `B(x)` and the common locus of the bisectors `Bis(A_i x, x)`.
pub fn certify_tuple(tuple: &[&Isometry], x: &Vector) -> Certificate {
    let len = x.len();
    let b = bmap(tuple, x);
    let rank = numeric_rank(&b, RANK_TOL);
    let normals: Vec<Vector> = b.column_iter().map(|c| c.into_owned()).collect();
    let lowered: Vec<Vector> = normals.iter().map(lower).collect();
    let kernel = linalg::null_space(&linalg::rows(&lowered, len), RANK_TOL);
    let gens: Vec<Vector> = kernel.column_iter().flat_map(|c| [c.into_owned(), -c.into_owned()]).collect();
    let meets_hyperbolic = !gens.is_empty() && face_meets_hyperbolic(&gens);
    let point = timelike_point(&gens).and_then(|v| lorentz::normalize_any_timelike(&v).ok());
    let transversal = point.as_ref().and_then(|y| transversal_at(y, &normals, 1e-7).ok());
    Certificate {
        rank,
        intersection_dim: kernel.ncols(),
        meets_hyperbolic,
        transversal,
        geodesic_point: point.map(|p| p.iter().copied().collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slice {
    /// `x4 = 0` in null coordinates.
    Planar,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Witness {
    pub sample: usize,
    pub slice: Slice,
    pub basis: BasisMode,
    pub x: Vec<f64>,
    pub det_gram: f64,
    pub certificate: Certificate,
}

impl Example1Witness {
    fn standard_point(&self) -> Vector {
        let v = Vector::from_vec(self.x.clone());
        match self.basis {
            BasisMode::Null => null_to_standard(&v),
            BasisMode::Standard => v,
        }
    }

    /// Recomputes the determinant sign and the certificate.
    pub fn reverify(&self, lambda: f64) -> Result<bool> {
        let t = example1_matrices(lambda)?;
        let xs = self.standard_point();
        let det = example1_det_gram(lambda, &standard_to_null(&xs))?;
        Ok(det > 0.0 && certify(&t, &xs).holds())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceScan {
    pub slice: Slice,
    pub scan: ScanReport<Example1Witness>,
    /// Hits whose certificate holds.
    pub certified: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example1Report {
    pub config: Example1Config,
    pub mu: f64,
    pub nu: f64,
    pub singularity: SingularityVerdict,
    pub slices: Vec<SliceScan>,
}

impl Example1Report {
    pub fn hits(&self) -> usize {
        self.slices.iter().map(|s| s.scan.hits).sum()
    }

    /// At least one hit, and every hit certified.
    pub fn pass(&self) -> bool {
        self.singularity.is_singular() && self.hits() > 0 && self.slices.iter().all(|s| s.certified == s.scan.hits)
    }
}

pub fn sample_slice<R: Rng + ?Sized>(rng: &mut R, slice: Slice, radius: f64) -> Vector {
    match slice {
        Slice::General => lorentz::sample_klein(rng, 3, radius),
        Slice::Planar => {
            let k = lorentz::sample_klein(rng, 2, radius);
            Vector::from_vec(vec![k[0], k[1], k[2], 0.0])
        }
    }
}

fn scan_slice(cfg: &Example1Config, triple: &PowerTriple, slice: Slice) -> Result<SliceScan> {
    let start = Instant::now();
    let stream_base = match slice {
        Slice::Planar => 0u64,
        Slice::General => 1u64 << 40,
    };
    let results = par::map_range(cfg.budget, |i| -> Result<Option<Example1Witness>> {
        let mut rng = par::stream(cfg.seed, stream_base + i as u64);
        let xs = sample_slice(&mut rng, slice, SCAN_RADIUS);
        let xn = standard_to_null(&xs);
        let det = example1_det_gram(cfg.lambda, &xn)?;
        if det <= 0.0 {
            return Ok(None);
        }
        let x = match cfg.basis {
            BasisMode::Null => xn,
            BasisMode::Standard => xs.clone(),
        };
        Ok(Some(Example1Witness {
            sample: i,
            slice,
            basis: cfg.basis,
            x: x.iter().copied().collect(),
            det_gram: det,
            certificate: certify(triple, &xs),
        }))
    });
    let mut hits = 0;
    let mut certified = 0;
    let mut witnesses = Vec::new();
    for r in results {
        if let Some(w) = r? {
            hits += 1;
            if w.certificate.holds() {
                certified += 1;
            }
            if witnesses.len() < WITNESS_CAP {
                witnesses.push(w);
            }
        }
    }
    let scan = ScanReport { trials: cfg.budget, hits, witnesses, seed: cfg.seed, elapsed_ms: start.elapsed().as_millis() };
    Ok(SliceScan { slice, scan, certified })
}

/// Samples both slices for points of `U` and certifies every hit.
pub fn example1_scan(cfg: &Example1Config) -> Result<Example1Report> {
    let triple = example1_matrices(cfg.lambda)?;
    let (mu, nu) = example1_mu_nu(cfg.lambda);
    let opts = SingularityOptions { trials: 200, tol: RANK_TOL, seed: cfg.seed, radius: 0.9 };
    let singularity = is_singular_tuple(&triple.triple(), &opts)?;
    let slices = vec![scan_slice(cfg, &triple, Slice::Planar)?, scan_slice(cfg, &triple, Slice::General)?];
    Ok(Example1Report { config: cfg.clone(), mu, nu, singularity, slices })
}

/// Numeric ranks of `B(x)` at `trials` seeded points of the Klein ball.
pub fn rank_profile(tuple: &[&Isometry], trials: usize, seed: u64, tol: f64) -> Vec<usize> {
    let n = tuple[0].dim();
    par::map_range(trials, |i| {
        let mut rng = par::stream(seed, i as u64);
        let x = lorentz::sample_klein(&mut rng, n, 0.9);
        numeric_rank(&bmap(tuple, &x), tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn matrices() {
        let t = example1_matrices(2.0).unwrap();
        let p = null_basis_change(4);
        let d = &p * t.a.matrix() * &p;
        for (i, e) in [2.0, 0.5, -1.0, -1.0].iter().enumerate() {
            assert!((d[(i, i)] - e).abs() < 1e-12);
        }
        assert!(t.a2.distance(&t.a_inv.compose(&t.a3)) < 1e-12);
        assert!(example1_matrices(1.0).is_err());
        assert!(example1_matrices(0.5).is_err());
    }

    #[test]
    fn mu_nu_values() {
        let (mu, nu) = example1_mu_nu(2.0);
        assert!((mu - 3.375).abs() < 1e-15);
        assert!((nu - 2.625).abs() < 1e-15);
        let (m, n) = example1_mu_nu(1.0 + 1e-9);
        assert!(m.abs() < 1e-15 && n.abs() < 1e-15);
    }

    #[test]
    fn det_gram_values() {
        let x = v(&[1.0, 1.0, 1.0, 0.0]);
        assert!((example1_det_gram(2.0, &x).unwrap() - 11.109375).abs() < 1e-12);
        assert!((example1_det_gram_oracle(2.0, &x).unwrap() - 11.109375).abs() < 1e-12);
        let axis = v(&[0.7, 1.3, 0.0, 0.0]);
        let (_, nu) = example1_mu_nu(1.7);
        let d = example1_det_gram(1.7, &axis).unwrap();
        assert!((d + nu * nu * (0.7f64 * 1.3).powi(2)).abs() < 1e-12 && d < 0.0);
        // degree four homogeneity
        let y = v(&[0.9, 1.4, 0.6, 0.3]);
        let s = 1.7;
        let r = example1_det_gram(2.3, &(&y * s)).unwrap() / example1_det_gram(2.3, &y).unwrap();
        assert!((r - s.powi(4)).abs() < 1e-10);
        assert!(example1_det_gram(2.0, &v(&[1.0, 1.0, 2.0, 0.0])).is_err());
    }

    #[test]
    fn general_form_matches_oracle_off_the_slice() {
        let y = v(&[1.2, 0.9, 0.4, 0.5]);
        for lambda in [1.3, 2.0, 4.5] {
            let a = example1_det_gram(lambda, &y).unwrap();
            let b = example1_det_gram_oracle(lambda, &y).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn bottom_rows_in_null_coordinates() {
        let x = v(&[0.8, 1.1, 0.3, -0.2]);
        let b = example1_bmap_null(2.0, &x).unwrap();
        for i in [2, 3] {
            for (j, c) in [-2.0, 0.0, -2.0].iter().enumerate() {
                assert!((b[(i, j)] - x[i] * c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scan_is_reproducible() {
        let cfg = Example1Config::new(2.0, 400, 7).unwrap();
        let a = example1_scan(&cfg).unwrap();
        let b = example1_scan(&cfg).unwrap();
        assert!(a.pass());
        for (s, t) in a.slices.iter().zip(&b.slices) {
            assert!(s.scan.same_outcome(&t.scan));
        }
        for w in &a.slices[0].scan.witnesses {
            assert!(w.reverify(2.0).unwrap());
        }
    }
}
