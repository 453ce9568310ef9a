//! Random search for rank-deficient bisector triples, and the position of
//! Cartan fixed points relative to the enumerated bisectors.

use std::time::Instant;

use dirichlet_core::bisector::{bmap, numeric_rank};
use dirichlet_core::error::Result;
use dirichlet_core::group::{class_k_audit, enumerate, generate_cyclic, GroupPresentation};
use dirichlet_core::isometry::{classify, Isometry, IsometryClass};
use dirichlet_core::lorentz::{dot, sample_klein, Vector};
use dirichlet_core::par;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::report::ScanReport;

/// Relative threshold for a point lying on a bisector.
pub const ON_BISECTOR_TOL: f64 = 1e-9;
pub const RANK_TOL: f64 = 1e-8;
/// Redraws allowed when a sampled triple lies in a cyclic subgroup.
const REDRAWS: usize = 64;

#[derive(Debug, Clone)]
pub struct GenericityConfig {
    pub max_len: usize,
    pub triples: usize,
    /// Base points per triple.
    pub points: usize,
    /// Base points for the Cartan clause.
    pub cartan_points: usize,
    pub seed: u64,
    pub radius: f64,
}

impl Default for GenericityConfig {
    fn default() -> Self {
        GenericityConfig { max_len: 3, triples: 100, points: 10, cartan_points: 100, seed: 0, radius: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficientTriple {
    pub sample: usize,
    pub words: [String; 3],
    pub x: Vec<f64>,
    pub rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CartanClause {
    pub word: String,
    pub fixed_point: Vec<f64>,
    pub points: usize,
    /// `(point index, word)` for every other enumerated element whose
    /// bisector passes through the fixed point.
    pub violations: Vec<(usize, String)>,
    /// Base points where `Bis(Jx, x)` itself missed the fixed point.
    pub missed_own: usize,
}

impl CartanClause {
    pub fn pass(&self) -> bool {
        self.violations.is_empty() && self.missed_own == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenericityReport {
    pub class_k: bool,
    pub class_k_witness: Option<String>,
    pub elements: usize,
    /// Sampled `(triple, x)` pairs; hits are rank deficient.
    pub scan: ScanReport<DeficientTriple>,
    pub rank3_fraction: f64,
    /// Triples for which no non-cyclic draw was found.
    pub cyclic_only: usize,
    pub cartan: Vec<CartanClause>,
}

impl GenericityReport {
    pub fn pass(&self) -> bool {
        self.scan.hits == 0 && self.cartan.iter().all(CartanClause::pass)
    }
}

/// Non-identity elements whose bisector `Bis(gx, x)` passes through `p`.
pub fn bisectors_through(p: &Vector, x: &Vector, elements: &[(String, Isometry)]) -> Vec<usize> {
    elements
        .iter()
        .enumerate()
        .filter(|(_, (_, g))| {
            let n = x - g.apply(x);
            n.norm() > 0.0 && dot(p, &n).abs() <= ON_BISECTOR_TOL * p.norm() * n.norm()
        })
        .map(|(i, _)| i)
        .collect()
}

pub fn genericity_scan(g: &GroupPresentation, cfg: &GenericityConfig) -> Result<GenericityReport> {
    let start = Instant::now();
    let audit = class_k_audit(g, cfg.max_len, 1e-9)?;
    let en = enumerate(g, cfg.max_len, 1e-9)?;
    let others: Vec<(String, Isometry)> = en.non_identity().map(|(i, e)| (en.word(i), e.isometry.clone())).collect();
    let n = g.dim;

    let drawn = par::map_range(cfg.triples, |t| {
        let mut rng = par::stream(cfg.seed, t as u64);
        if others.len() < 3 {
            return None;
        }
        for _ in 0..REDRAWS {
            let mut idx = [0usize; 3];
            idx[0] = rng.gen_range(0..others.len());
            idx[1] = rng.gen_range(0..others.len());
            idx[2] = rng.gen_range(0..others.len());
            if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                continue;
            }
            let tuple: Vec<&Isometry> = idx.iter().map(|&i| &others[i].1).collect();
            if !generate_cyclic(&tuple, &en, 2 * cfg.max_len as i64, 1e-9) {
                return Some(idx);
            }
        }
        None
    });
    let cyclic_only = drawn.iter().filter(|d| d.is_none()).count();
    let pairs: Vec<(usize, [usize; 3], usize)> = drawn
        .iter()
        .enumerate()
        .filter_map(|(t, d)| d.map(|idx| (t, idx)))
        .flat_map(|(t, idx)| (0..cfg.points).map(move |k| (t, idx, k)))
        .collect();
    let ranks = par::map_slice(&pairs, |&(t, idx, k)| {
        let mut rng = par::stream(cfg.seed ^ 0xb15ec, (t * cfg.points + k) as u64);
        let x = sample_klein(&mut rng, n, cfg.radius);
        let tuple: Vec<&Isometry> = idx.iter().map(|&i| &others[i].1).collect();
        (numeric_rank(&bmap(&tuple, &x), RANK_TOL), x)
    });
    let mut witnesses = Vec::new();
    for (s, ((_, idx, _), (rank, x))) in pairs.iter().zip(&ranks).enumerate() {
        if *rank < 3 {
            witnesses.push(DeficientTriple {
                sample: s,
                words: idx.map(|i| others[i].0.clone()),
                x: x.iter().copied().collect(),
                rank: *rank,
            });
        }
    }
    let trials = pairs.len();
    let hits = witnesses.len();
    witnesses.truncate(16);

    let mut cartan = Vec::new();
    for (i, (word, j)) in others.iter().enumerate() {
        let IsometryClass::EllipticCartan { fixed_point } = classify(j, 1e-9).class else { continue };
        let p = Vector::from_vec(fixed_point.clone());
        let per_point = par::map_range(cfg.cartan_points, |k| {
            let mut rng = par::stream(cfg.seed ^ 0xca27a4, k as u64);
            let x = sample_klein(&mut rng, n, cfg.radius);
            bisectors_through(&p, &x, &others)
        });
        let mut violations = Vec::new();
        let mut missed_own = 0;
        for (k, through) in per_point.iter().enumerate() {
            if !through.contains(&i) {
                missed_own += 1;
            }
            violations.extend(through.iter().filter(|&&t| t != i).map(|&t| (k, others[t].0.clone())));
        }
        cartan.push(CartanClause { word: word.clone(), fixed_point, points: cfg.cartan_points, violations, missed_own });
    }

    Ok(GenericityReport {
        class_k: audit.pass,
        class_k_witness: audit.witness,
        elements: en.elements.len(),
        scan: ScanReport { trials, hits, witnesses, seed: cfg.seed, elapsed_ms: start.elapsed().as_millis() },
        rank3_fraction: if trials == 0 { 1.0 } else { (trials - hits) as f64 / trials as f64 },
        cyclic_only,
        cartan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dirichlet_core::isometry::{boost, make_cartan};
    use dirichlet_core::lorentz::from_klein;

    #[test]
    fn schottky_triples_have_full_rank() {
        let g = GroupPresentation::from_pairs(vec![("a", boost(3, 1, 2.0)), ("b", boost(3, 2, 2.0))]).unwrap();
        let cfg = GenericityConfig { triples: 30, points: 4, ..Default::default() };
        let rep = genericity_scan(&g, &cfg).unwrap();
        assert_eq!(rep.scan.trials, 120);
        assert!(rep.pass(), "{:?}", rep.scan.witnesses);
        assert!(rep.class_k);
    }

    #[test]
    fn half_turn_group_has_deficient_triples() {
        let g = crate::example2::example2_group(1.0).unwrap();
        let cfg = GenericityConfig { triples: 200, points: 1, cartan_points: 0, ..Default::default() };
        let rep = genericity_scan(&g, &cfg).unwrap();
        assert!(rep.scan.hits > 0);
        assert!(!rep.class_k);
    }

    #[test]
    fn single_cartan_is_vacuous() {
        let p = from_klein(&Vector::from_column_slice(&[0.1, -0.2, 0.3])).unwrap();
        let g = GroupPresentation::from_pairs(vec![("j", make_cartan(&p).unwrap())]).unwrap();
        let rep = genericity_scan(&g, &GenericityConfig { cartan_points: 20, ..Default::default() }).unwrap();
        assert_eq!(rep.scan.trials, 0);
        assert_eq!(rep.cartan.len(), 1);
        assert!(rep.pass());
    }
}
