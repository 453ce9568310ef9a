//! Hand-built complexes and groups shared by the CLI, the examples and the
//! acceptance suite.

use dirichlet_core::complexes::{build_local_dirichlet_complex, CartanSpec, ComplexSpec, FaceSpec, MorphismSpec, PolyComplex};
use dirichlet_core::domain::{compute_domain, DomainOptions};
use dirichlet_core::error::Result;
use dirichlet_core::exact::{rat, RatPair, Rational};
use dirichlet_core::group::GroupPresentation;
use dirichlet_core::isometry::{boost, make_cartan, Isometry};
use dirichlet_core::lorentz::{from_klein, Vector};

use crate::example2::half_turn;

fn pairs(v: &[Rational]) -> Vec<RatPair> {
    v.iter().map(RatPair::from_rational).collect()
}

/// Complex whose faces are convex hulls of the listed vertices; a face is
/// included in another when its vertex set is a proper subset. Face ids are
/// list positions.
pub fn vertex_complex_spec(dim: usize, verts: &[Vec<Rational>], faces: &[(usize, Vec<usize>)]) -> ComplexSpec {
    let face_specs = faces
        .iter()
        .enumerate()
        .map(|(i, (d, vs))| FaceSpec {
            id: i,
            dim: *d,
            rays: Some(vs.iter().map(|&v| pairs(&verts[v])).collect()),
            complete: true,
        })
        .collect();
    let mut morphisms = Vec::new();
    for (a, (_, va)) in faces.iter().enumerate() {
        for (b, (_, vb)) in faces.iter().enumerate() {
            if va.len() < vb.len() && va.iter().all(|v| vb.contains(v)) {
                morphisms.push(MorphismSpec { src: a, dst: b, matrix: None });
            }
        }
    }
    ComplexSpec { dim, faces: face_specs, morphisms, cartan: Vec::new() }
}

fn klein_vertex(k: &[(i64, i64)]) -> Vec<Rational> {
    std::iter::once(rat(1, 1)).chain(k.iter().map(|&(n, d)| rat(n, d))).collect()
}

/// The cube with vertices `(1, +-1/2, +-1/2, +-1/2)`: one face per sign
/// pattern in `{+, -, *}^3`, 27 in all.
pub fn rational_cube() -> ComplexSpec {
    let verts: Vec<Vec<Rational>> = (0..8)
        .map(|m| {
            let s = |b: usize| if m & (1 << b) != 0 { (1, 2) } else { (-1, 2) };
            klein_vertex(&[s(0), s(1), s(2)])
        })
        .collect();
    let mut faces = Vec::new();
    for code in 0..27usize {
        // digit 0: minus, 1: plus, 2: free
        let digits = [code % 3, (code / 3) % 3, code / 9];
        let members: Vec<usize> = (0..8)
            .filter(|m| (0..3).all(|b| digits[b] == 2 || (digits[b] == 1) == (m & (1 << b) != 0)))
            .collect();
        faces.push((digits.iter().filter(|&&d| d == 2).count(), members));
    }
    faces.sort_by_key(|(d, vs)| (std::cmp::Reverse(*d), vs.clone()));
    vertex_complex_spec(3, &verts, &faces)
}

fn polygon_faces(k: usize) -> Vec<(usize, Vec<usize>)> {
    let mut faces = vec![(2, (0..k).collect::<Vec<_>>())];
    faces.extend((0..k).map(|i| (1, vec![i, (i + 1) % k])));
    faces.extend((0..k).map(|i| (0, vec![i])));
    faces
}

/// Two triangles of the Klein disk glued along the edge `x1 = 0`.
pub fn two_triangles() -> ComplexSpec {
    let verts = vec![
        klein_vertex(&[(0, 1), (1, 2)]),
        klein_vertex(&[(0, 1), (-1, 2)]),
        klein_vertex(&[(1, 2), (0, 1)]),
        klein_vertex(&[(-1, 2), (0, 1)]),
    ];
    let faces = vec![
        (2, vec![0, 1, 2]),
        (2, vec![0, 1, 3]),
        (1, vec![0, 1]),
        (1, vec![0, 2]),
        (1, vec![1, 2]),
        (1, vec![0, 3]),
        (1, vec![1, 3]),
        (0, vec![0]),
        (0, vec![1]),
        (0, vec![2]),
        (0, vec![3]),
    ];
    vertex_complex_spec(2, &verts, &faces)
}

/// A quadrilateral whose opposite sides meet outside the disk.
pub fn quadrilateral() -> ComplexSpec {
    let verts = vec![
        klein_vertex(&[(1, 2), (0, 1)]),
        klein_vertex(&[(0, 1), (1, 2)]),
        klein_vertex(&[(-1, 2), (0, 1)]),
        klein_vertex(&[(0, 1), (-1, 3)]),
    ];
    vertex_complex_spec(2, &verts, &polygon_faces(4))
}

/// A square of `H^3` with the fixed point of a Cartan involution at its
/// centre, for secondary records.
pub fn cartan_square() -> ComplexSpec {
    let verts = vec![
        klein_vertex(&[(0, 1), (1, 2), (1, 2)]),
        klein_vertex(&[(0, 1), (-1, 2), (1, 2)]),
        klein_vertex(&[(0, 1), (-1, 2), (-1, 2)]),
        klein_vertex(&[(0, 1), (1, 2), (-1, 2)]),
    ];
    let mut spec = vertex_complex_spec(3, &verts, &polygon_faces(4));
    spec.cartan.push(CartanSpec { face: 0, point: pairs(&[rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)]) });
    spec
}

/// An edge included twice into the same segment.
pub fn axiom2_violation() -> ComplexSpec {
    let mut spec = vertex_complex_spec(1, &[klein_vertex(&[(0, 1)]), klein_vertex(&[(1, 2)])], &[(1, vec![0, 1]), (0, vec![0]), (0, vec![1])]);
    let dup = MorphismSpec { src: 1, dst: 0, matrix: None };
    spec.morphisms.push(dup);
    spec
}

pub const CARTAN_POINT: [f64; 3] = [0.2, -0.1, 0.3];
pub const CARTAN_BASE: [f64; 3] = [0.1, 0.3, 0.1];

fn single_element_complex(label: &str, g: Isometry) -> Result<(PolyComplex, Vec<(String, Isometry)>)> {
    let group = GroupPresentation::from_pairs(vec![(label, g.clone())])?;
    let x = from_klein(&Vector::from_column_slice(&CARTAN_BASE))?;
    let d = compute_domain(&group, &x, &DomainOptions::default())?;
    Ok((build_local_dirichlet_complex(&d, &group, 0)?, vec![(label.to_string(), g)]))
}

/// Local Dirichlet complex of a single Cartan involution.
pub fn cartan_fixture() -> Result<(PolyComplex, Vec<(String, Isometry)>)> {
    let p = from_klein(&Vector::from_column_slice(&CARTAN_POINT))?;
    single_element_complex("j", make_cartan(&p)?)
}

/// Local Dirichlet complex of the half-turn `diag(1, 1, -1, -1)`.
pub fn half_turn_fixture() -> Result<(PolyComplex, Vec<(String, Isometry)>)> {
    single_element_complex("r", half_turn())
}

/// Boosts of length 2 along perpendicular axes; their Dirichlet half-spaces
/// at the origin are pairwise disjoint.
pub fn schottky_pair() -> Result<GroupPresentation> {
    GroupPresentation::from_pairs(vec![("a", boost(3, 1, 2.0)), ("b", boost(3, 2, 2.0))])
}

/// A boost together with a Cartan involution off its axis.
pub fn boost_and_cartan() -> Result<GroupPresentation> {
    let p = from_klein(&Vector::from_column_slice(&CARTAN_POINT))?;
    GroupPresentation::from_pairs(vec![("a", boost(3, 1, 2.0)), ("j", make_cartan(&p)?)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_shape() {
        let c = rational_cube().into_complex().unwrap();
        let mut by_dim = [0; 4];
        for f in c.faces() {
            by_dim[f.dim] += 1;
        }
        assert_eq!(by_dim, [8, 12, 6, 1]);
        // every face sits below the cell
        assert_eq!(c.below(0).len(), 26);
    }

    #[test]
    fn fixtures_validate() {
        assert_eq!(two_triangles().into_complex().unwrap().faces().len(), 11);
        assert_eq!(quadrilateral().into_complex().unwrap().faces().len(), 9);
        assert!(cartan_square().into_complex().is_ok());
        assert!(axiom2_violation().into_complex().is_err());
    }

    fn committed(name: &str) -> serde_json::Value {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn committed_files_match_builders() {
        let groups = [
            ("example2.json", crate::example2::example2_group(1.0).unwrap()),
            ("schottky.json", schottky_pair().unwrap()),
            ("boost_cartan.json", boost_and_cartan().unwrap()),
        ];
        for (name, g) in groups {
            let spec: dirichlet_core::group::GroupSpec = serde_json::from_value(committed(name)).unwrap();
            let loaded = spec.into_presentation(1e-9).unwrap();
            assert_eq!(loaded.generators.len(), g.generators.len());
            for (a, b) in loaded.generators.iter().zip(&g.generators) {
                assert_eq!(a.label, b.label);
                assert!(a.isometry.distance(&b.isometry) < 1e-12, "{name}");
            }
        }
        let complexes = [
            ("cube.json", rational_cube()),
            ("two_triangles.json", two_triangles()),
            ("quadrilateral.json", quadrilateral()),
            ("cartan_square.json", cartan_square()),
            ("axiom2_violation.json", axiom2_violation()),
        ];
        for (name, c) in complexes {
            assert_eq!(committed(name), serde_json::to_value(c).unwrap(), "{name}");
        }
    }
}
