use dirichlet_core::bisector::{bmap, numeric_rank};
use dirichlet_core::complexify::{intersect_subspaces, FixedPoint, ProjectiveSubspace};
use dirichlet_core::domain::{compute_domain, DomainOptions};
use dirichlet_core::exact::RatMatrix;
use dirichlet_core::group::{enumerate, GroupPresentation};
use dirichlet_core::isometry::{boost, make_loxodromic, rotation, validate_isometry, Isometry};
use dirichlet_core::linalg::columns;
use dirichlet_core::lorentz::{
    causal_class, dot, form, from_klein, hyperbolic_distance, CausalClass, Matrix, Vector,
};
use proptest::prelude::*;

fn klein_point(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-0.57f64..0.57, n).prop_map(|k| from_klein(&Vector::from_vec(k)).unwrap())
}

fn ideal_point(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-1.0f64..1.0, n)
        .prop_filter("away from the origin", |k| k.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|k| {
            let r = k.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut v = vec![1.0];
            v.extend(k.iter().map(|x| x / r));
            Vector::from_vec(v)
        })
}

/// Products of boosts and rotations with moderate parameters in `H^3`.
fn isometry3() -> impl Strategy<Value = Isometry> {
    prop::collection::vec((0usize..6, -1.5f64..1.5), 1..5).prop_map(|steps| {
        steps.into_iter().fold(Isometry::identity(3), |acc, (k, t)| {
            let step = match k {
                0..=2 => boost(3, k + 1, t),
                3 => rotation(3, 1, 2, 2.0 * t),
                4 => rotation(3, 2, 3, 2.0 * t),
                _ => rotation(3, 1, 3, 2.0 * t),
            };
            acc.compose(&step)
        })
    })
}

fn small_int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = RatMatrix> {
    prop::collection::vec(-3i64..=3, rows * cols).prop_map(move |xs| {
        let r: Vec<&[i64]> = xs.chunks(cols).collect();
        RatMatrix::from_i64_rows(&r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isometries_preserve_the_form(a in isometry3(), b in isometry3()) {
        prop_assert!(validate_isometry(a.matrix(), 1e-9).is_ok());
        let ab = a.compose(&b);
        prop_assert!(validate_isometry(ab.matrix(), 1e-9).is_ok());
        prop_assert!(a.compose(&a.inverse()).is_identity(1e-8));
        let j = form(4);
        let scale = a.matrix().abs().max().max(1.0);
        let lhs: Matrix = a.matrix().transpose() * &j * a.matrix();
        prop_assert!((lhs - j).abs().max() <= 1e-10 * scale * scale);
    }

    #[test]
    fn distance_axioms(x in klein_point(3), y in klein_point(3), z in klein_point(3), g in isometry3()) {
        let dxy = hyperbolic_distance(&x, &y);
        prop_assert!(dxy >= 0.0);
        prop_assert!(hyperbolic_distance(&x, &x) < 1e-7);
        prop_assert!((dxy - hyperbolic_distance(&y, &x)).abs() < 1e-12);
        prop_assert!(dxy <= hyperbolic_distance(&x, &z) + hyperbolic_distance(&z, &y) + 1e-9);
        let moved = hyperbolic_distance(&g.apply(&x), &g.apply(&y));
        prop_assert!((moved - dxy).abs() < 1e-7 * (1.0 + dxy));
    }

    #[test]
    fn causal_classes(x in klein_point(3), e in ideal_point(3), s in 0.1f64..10.0, g in isometry3()) {
        prop_assert_eq!(causal_class(&x, 1e-9), CausalClass::TimelikeFuture);
        prop_assert_eq!(causal_class(&(-&x * s), 1e-9), CausalClass::TimelikePast);
        prop_assert_eq!(causal_class(&(&e * s), 1e-9), CausalClass::NullFuture);
        prop_assert_eq!(causal_class(&g.apply(&x), 1e-9), CausalClass::TimelikeFuture);
        // a tangent vector at x is spacelike
        let t = Vector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]);
        let tangent = &t + &x * dot(&t, &x);
        prop_assert_eq!(causal_class(&tangent, 1e-9), CausalClass::Spacelike);
    }

    /// `s u + t v - (s + t) w` never vanishes for points of `H` unless all
    /// three coincide.
    #[test]
    fn no_affine_relation_on_the_hyperboloid(
        u in klein_point(3), v in klein_point(3), w in klein_point(3),
        s in -5.0f64..5.0, t in -5.0f64..5.0,
    ) {
        let tol = 1e-9;
        prop_assume!((s * t).abs() > tol && (s + t).abs() > tol);
        let r = &u * s + &v * t - &w * (s + t);
        let coincide = (&u - &v).norm() < tol && (&v - &w).norm() < tol;
        prop_assert!(coincide || r.norm() > tol);
    }

    #[test]
    fn no_affine_relation_near_the_diagonal(u in klein_point(3), d in prop::collection::vec(-1e-4f64..1e-4, 3), s in 0.1f64..3.0, t in 0.1f64..3.0) {
        let k = u.rows(1, 3) / u[0] + Vector::from_vec(d);
        let v = from_klein(&k).unwrap();
        prop_assume!((&u - &v).norm() > 1e-8);
        for w in [&u, &v] {
            let r = &u * s + &v * t - w * (s + t);
            prop_assert!(r.norm() > 1e-9);
        }
    }

    #[test]
    fn polar_section_drops_one_dimension(
        gens in prop::collection::vec(klein_point(3), 1..4),
        p in klein_point(3),
    ) {
        let face = ProjectiveSubspace::float(&columns(&gens));
        let polar = FixedPoint::Float(p).polar();
        let q = intersect_subspaces(&[face.clone(), polar]).unwrap();
        prop_assert_eq!(q.dim() + 1, face.dim());
    }

    #[test]
    fn intersection_lattice(a in small_int_matrix(4, 2), b in small_int_matrix(4, 3), c in small_int_matrix(4, 3)) {
        let (a, b, c) = (ProjectiveSubspace::exact(&a), ProjectiveSubspace::exact(&b), ProjectiveSubspace::exact(&c));
        let ab = intersect_subspaces(&[a.clone(), b.clone()]).unwrap();
        let ba = intersect_subspaces(&[b.clone(), a.clone()]).unwrap();
        prop_assert!(ab.same_as(&ba));
        prop_assert!(a.contains(&ab) && b.contains(&ab));
        let left = intersect_subspaces(&[ab.clone(), c.clone()]).unwrap();
        let bc = intersect_subspaces(&[b.clone(), c.clone()]).unwrap();
        let right = intersect_subspaces(&[a.clone(), bc]).unwrap();
        prop_assert!(left.same_as(&right));
        prop_assert!(ab.contains(&left));
        prop_assert!(a.dim() + b.dim() <= 4 + ab.dim());
        let fl = intersect_subspaces(&[a.to_float(), b.to_float()]).unwrap();
        prop_assert!(fl.same_as(&ab));
    }

    #[test]
    fn bmap_is_linear(a in isometry3(), b in isometry3(), x in klein_point(3), y in klein_point(3), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let lhs = bmap(&[&a, &b], &(&x * s + &y * t));
        let rhs = bmap(&[&a, &b], &x) * s + bmap(&[&a, &b], &y) * t;
        let scale = a.matrix().abs().max().max(b.matrix().abs().max()) * (x.norm() + y.norm());
        prop_assert!((lhs - rhs).abs().max() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn bmap_rank_is_conjugation_invariant(
        a in isometry3(), b in isometry3(), c in isometry3(), g in isometry3(), x in klein_point(3),
    ) {
        let before = numeric_rank(&bmap(&[&a, &b, &c], &x), 1e-8);
        let conj: Vec<Isometry> = [&a, &b, &c].iter().map(|m| g.compose(m).compose(&g.inverse())).collect();
        let refs: Vec<&Isometry> = conj.iter().collect();
        let after = numeric_rank(&bmap(&refs, &g.apply(&x)), 1e-8);
        prop_assert_eq!(before, after);
    }

    #[test]
    fn exact_and_numeric_rank_agree(m in small_int_matrix(4, 3)) {
        prop_assert_eq!(m.rank(), numeric_rank(&m.to_f64(), 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `D_{g x}` for the conjugate group is the image of `D_x` under `g`.
    #[test]
    fn domains_are_equivariant(
        ep in ideal_point(3), em in ideal_point(3), len in 0.6f64..2.0, angle in 0.0f64..3.0,
        x in klein_point(3), g in isometry3(),
    ) {
        prop_assume!((&ep - &em).norm() > 0.3);
        let a = make_loxodromic(&ep, &em, len, angle).unwrap();
        let conj = g.compose(&a).compose(&g.inverse());
        let opts = DomainOptions::default();
        let d = compute_domain(&GroupPresentation::from_pairs(vec![("a", a)]).unwrap(), &x, &opts).unwrap();
        let gx = g.apply(&x);
        let dg = compute_domain(&GroupPresentation::from_pairs(vec![("a", conj)]).unwrap(), &gx, &opts).unwrap();
        prop_assert_eq!(d.facet_count(), dg.facet_count());
        prop_assert_eq!(d.faces.len(), dg.faces.len());
        for f in &d.faces {
            prop_assert!(dg.contains(&g.apply(&f.point), 1e-7));
        }
    }

    #[test]
    fn cyclic_enumeration_counts(t in 0.3f64..2.0, max_len in 1usize..6) {
        let g = GroupPresentation::from_pairs(vec![("b", boost(3, 1, t))]).unwrap();
        let e = enumerate(&g, max_len, 1e-9).unwrap();
        prop_assert_eq!(e.elements.len(), 2 * max_len + 1);
    }
}
