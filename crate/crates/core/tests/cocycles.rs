use std::sync::Arc;

use num_complex::Complex64;
use num_integer::Integer;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use realweight::cocycles::*;
use realweight::exact_core::{classical_dedekind_sum, rat, Cusp};
use realweight::forms::delta;
use realweight::iterated_periods::{FormFamily, TransportConfig};
use realweight::modular_group::{random_matrix, UniModularMatrix};
use realweight::nc_series::NCSeries;
use realweight::quadrature::QuadratureConfig;

/// The class of `q/p` modulo 1, computed with plain integers.
fn free_class(p: i64, q: i64) -> FreeElement<Cusp> {
    let (p, q) = if p < 0 { (-p, -q) } else { (p, q) };
    if p == 0 {
        FreeElement::generator(Cusp::Infinity)
    } else {
        FreeElement::generator(Cusp::ratio(q.rem_euclid(p), p))
    }
}

#[test]
fn free_symbol_is_recovered_word_for_word() {
    let f = free_reciprocity();
    assert!(validate_reciprocity(&f, 30, 0.0).passed());
    let d = reconstruct_symbol(&f);
    let report = d.validate(30, 0.0);
    assert!(report.passed(), "{:?}", report.violations.first());
    let base = free_class(0, 1).inv();
    for (p, q) in coprime_pairs(30) {
        // the symbol is unique up to a constant on the right
        assert_eq!(d.value(p, q).unwrap(), free_class(p, q).mul(&base), "({p}, {q})");
    }
}

#[test]
fn classical_symbol_from_its_reciprocity() {
    let f = classical_reciprocity();
    let d = reconstruct_symbol(&f);
    assert!(d.validate(30, 0.0).passed());
    for (p, q) in coprime_pairs(30).into_iter().filter(|&(p, _)| p > 0) {
        assert_eq!(d.value(p, q).unwrap(), classical_dedekind_sum(q, p).unwrap());
    }
    assert_eq!(f.value(2, 3).unwrap(), rat(-1, 18));
    let csv = d.to_csv(2).unwrap();
    assert!(csv.starts_with("p,q,value\n"));
    assert!(csv.contains("\n2,1,0\n"));
}

#[test]
fn corrupted_value_is_pinpointed() {
    let f = classical_reciprocity();
    let bad = f.with_override(2, 3, rat(1, 7));
    let report = validate_reciprocity(&bad, 6, 0.0);
    assert!(!report.passed());
    assert!(report.violations.iter().all(|v| v.involves(2, 3)));
    let relations: Vec<&str> = report.violations.iter().map(|v| v.relation).collect();
    assert!(relations.contains(&"inversion") && relations.contains(&"three-term") && relations.contains(&"sign"));
}

#[test]
fn period_polynomial_values_are_a_reciprocity_function() {
    let f = period_reciprocity(&delta(), &QuadratureConfig::default()).unwrap();
    let report = validate_reciprocity(&f, 8, 1e-10);
    assert!(report.passed(), "max {:e}", report.max_residual);
    eprintln!("period reciprocity max residual {:e}", report.max_residual);
    let eta = realweight::forms::eta_power(5.3, 64).unwrap();
    assert!(period_reciprocity(&eta, &QuadratureConfig::default()).is_err());
}

#[test]
fn identity_reciprocity_gives_identity_pair() {
    let f = ReciprocityFunction::identity(RationalAdditive);
    let (m, pair) = reciprocity_to_dedekind_cocycle(&f, 5, 0.0).unwrap();
    assert_eq!(m.distance(&pair.sigma, &m.identity()), 0.0);
    assert_eq!(m.distance(&pair.tau, &m.identity()), 0.0);
}

fn random_pairs(n: usize, seed: u64) -> Vec<(UniModularMatrix, UniModularMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (random_matrix(&mut rng, 5), random_matrix(&mut rng, 5))).collect()
}

#[test]
fn free_module_cocycles() {
    let m = Arc::new(FreeGroup::<Cusp>::new());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..50 {
        let g = random_free_cusp_element(&mut rng, 4, 4);
        let h = random_free_cusp_element(&mut rng, 4, 4);
        let side = if i % 2 == 0 { Side::Left } else { Side::Right };
        let c = pair_to_cocycle(m.clone(), twisted_pair(&*m, side, &g, &h), 0.0).unwrap();
        for (a, b) in random_pairs(3, i) {
            assert_eq!(c.law_residual(&a, &b), 0.0);
        }
        let other = left_right_convert(&c);
        assert_eq!(other.side(), side.flip());
        assert_eq!(pair_relations(&*m, other.pair()), [0.0, 0.0]);
        for (a, _) in random_pairs(3, 100 + i) {
            assert_eq!(other.evaluate(&a), c.evaluate(&a.inverse()).inv());
            assert_eq!(other.law_residual(&a, &a.inverse()), 0.0);
        }
        let back = left_right_convert(&other);
        assert_eq!(back.pair().sigma, c.pair().sigma);
        assert_eq!(back.pair().tau, c.pair().tau);
    }
}

#[test]
fn dedekind_pair_of_classical_reciprocity() {
    let f = classical_reciprocity();
    let (m, pair) = reciprocity_to_dedekind_cocycle(&f, 7, 0.0).unwrap();
    assert_eq!(pair_relations(&*m, &pair), [0.0, 0.0]);
    assert_eq!(dedekind_residual(&*m, &pair), 0.0);
    for x in &m.sample {
        let pq = x.to_pair().unwrap();
        let (p, q) = (pq.p, pq.q);
        assert_eq!(pair.sigma.at(x).unwrap(), f.value(-p, -q).unwrap());
        assert_eq!(pair.tau.at(x).unwrap(), f.value(q, q - p).unwrap());
    }
    let c = pair_to_cocycle(m.clone(), pair, 0.0).unwrap();
    for (a, b) in random_pairs(50, 5) {
        assert_eq!(c.law_residual(&a, &b), 0.0);
    }
    let right = left_right_convert(&c);
    assert_eq!(pair_relations(&*m, right.pair()), [0.0, 0.0]);
    assert_eq!(dedekind_residual(&*m, right.pair()), 0.0);
}

#[test]
fn invalid_reciprocity_is_refused() {
    let bad = classical_reciprocity().with_override(1, 2, rat(5, 1));
    assert!(reciprocity_to_dedekind_cocycle(&bad, 4, 0.0).is_err());
}

#[test]
fn path_cocycle_for_delta_and_eta() {
    let t = Complex64::new(0.0, -1.0);
    for (family, depth) in [(FormFamily::delta(), 3), (FormFamily::eta_powers(&[5.3], 256).unwrap(), 2)] {
        let m = Arc::new(PathModule::new(family, t, depth, TransportConfig::default()).unwrap());
        let r = path_cocycle_check(m, 20, 7).unwrap();
        assert_eq!(r.laws.len(), 20);
        eprintln!("depth {depth}: worst {:e}", r.worst());
        assert!(r.worst() < 1e-7, "{r:?}");
        assert_eq!(r.dedekind, 0.0);
    }
    let m = Arc::new(PathModule::new(FormFamily::delta(), t, 0, TransportConfig::default()).unwrap());
    assert_eq!(path_cocycle_check(m, 3, 1).unwrap().worst(), 0.0);
}

fn free_element() -> impl Strategy<Value = FreeElement<Cusp>> {
    any::<u64>().prop_map(|s| random_free_cusp_element(&mut ChaCha8Rng::seed_from_u64(s), 5, 3))
}

fn series() -> impl Strategy<Value = NCSeries> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 15).prop_map(|v| {
        let mut c: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        c[0] = Complex64::new(1.0, 0.0);
        NCSeries::from_coefficients(2, 3, c).unwrap()
    })
}

proptest! {
    #[test]
    fn free_group_axioms(a in free_element(), b in free_element(), c in free_element()) {
        let g = FreeGroup::<Cusp>::new();
        prop_assert_eq!(g.multiply(&g.multiply(&a, &b), &c), g.multiply(&a, &g.multiply(&b, &c)));
        prop_assert!(g.multiply(&a, &g.invert(&a)).is_identity());
        prop_assert_eq!(g.multiply(&g.identity(), &a), a.clone());
    }

    #[test]
    fn cusp_action_is_an_automorphism(a in free_element(), b in free_element(), s in any::<u64>()) {
        let g = FreeGroup::<Cusp>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let (x, y) = (random_matrix(&mut rng, 4), random_matrix(&mut rng, 4));
        prop_assert_eq!(g.left_act(&x, &g.multiply(&a, &b)), g.multiply(&g.left_act(&x, &a), &g.left_act(&x, &b)));
        prop_assert_eq!(g.left_act(&(x * y), &a), g.left_act(&x, &g.left_act(&y, &a)));
        prop_assert_eq!(g.right_act(&g.left_act(&x, &a), &x), a);
    }

    #[test]
    fn series_group_axioms(a in series(), b in series(), c in series()) {
        let g = SeriesGroup { num_vars: 2, depth: 3 };
        prop_assert!(g.distance(&g.multiply(&g.multiply(&a, &b), &c), &g.multiply(&a, &g.multiply(&b, &c))) < 1e-12);
        prop_assert!(g.distance(&g.multiply(&a, &g.invert(&a)), &g.identity()) < 1e-12);
    }

    #[test]
    fn rational_group_axioms(a in -50i64..50, b in 1i64..50, c in -50i64..50) {
        let g = RationalAdditive;
        let (x, y) = (rat(a, b), rat(c, b + 1));
        prop_assert_eq!(g.multiply(&x, &y), g.multiply(&y, &x));
        prop_assert_eq!(g.distance(&g.multiply(&x, &g.invert(&x)), &g.identity()), 0.0);
    }

    #[test]
    fn symbol_relations_on_random_pairs(p in -200i64..200, q in -200i64..200) {
        prop_assume!(p.gcd(&q) == 1);
        let d = reconstruct_symbol(&free_reciprocity());
        let f = free_reciprocity();
        prop_assert_eq!(d.value(p, q).unwrap(), d.value(p, q + p).unwrap());
        prop_assert_eq!(d.value(p, -q).unwrap(), d.value(-p, q).unwrap());
        prop_assert_eq!(d.value(p, q).unwrap().mul(&d.value(q, -p).unwrap().inv()), f.value(p, q).unwrap());
    }
}
