use proptest::prelude::*;

use monodromy_core::chebwitness::CycloElement;
use monodromy_core::decompose::{recognize_exceptional, right_components, ExceptionalKind};
use monodromy_core::hyperlat::{
    self, matrix_mod2, reduce_one_form, swap_matrix, BiPoly, HyperCenter, OneForm,
};
use monodromy_core::linalg;
use monodromy_core::permlab::{classify, BlockSystem, MonodromyClass, PermAction, Permutation};
use monodromy_core::polycore::{
    chebyshev, critical_data, normalize_linear, rat, CPoly, DEFAULT_CLUSTER_TOL,
};
use monodromy_core::tracker::{self, track_loop};
use monodromy_core::zerodim::{span_test, SimpleCycle, SpanResult};
use monodromy_core::{RatPoly, Rational};

fn small_int_poly(max_degree: usize, range: i64) -> impl Strategy<Value = RatPoly> {
    prop::collection::vec(-range..=range, 1..=max_degree + 1).prop_map(|c| RatPoly::from_ints(&c))
}

/// Degree exactly `lo..=hi`, nonzero leading coefficient.
fn proper_poly(lo: usize, hi: usize, range: i64) -> impl Strategy<Value = RatPoly> {
    (lo..=hi).prop_flat_map(move |d| {
        (
            prop::collection::vec(-range..=range, d),
            (1..=range).prop_flat_map(|m| prop_oneof![Just(m), Just(-m)]),
        )
            .prop_map(|(mut c, lead)| {
                c.push(lead);
                RatPoly::from_ints(&c)
            })
    })
}

fn rational_poly(max_degree: usize) -> impl Strategy<Value = RatPoly> {
    prop::collection::vec((-6i64..=6, 1i64..=5), 0..=max_degree + 1).prop_map(|c| {
        RatPoly::new(
            c.into_iter()
                .map(|(n, d)| Rational::new(n.into(), d.into()))
                .collect(),
        )
    })
}

fn bipoly() -> impl Strategy<Value = BiPoly> {
    prop::collection::vec(rational_poly(4), 0..=5).prop_map(BiPoly::new)
}

fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_is_associative(a in small_int_poly(4, 4), b in small_int_poly(4, 4), c in small_int_poly(4, 4)) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
    }

    #[test]
    fn poly_text_round_trips(f in rational_poly(8)) {
        let back: RatPoly = f.to_string().parse().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn critical_multiplicities_sum(f in proper_poly(2, 7, 5)) {
        let cd = critical_data(&f, DEFAULT_CLUSTER_TOL).unwrap();
        prop_assert_eq!(cd.total_multiplicity(), f.degree() - 1);
    }

    #[test]
    fn normalization_is_idempotent(f in proper_poly(2, 6, 5)) {
        let first = normalize_linear(&f).unwrap();
        prop_assert_eq!(first.reassemble(), f);
        let second = normalize_linear(&first.canonical).unwrap();
        prop_assert_eq!(&second.canonical, &first.canonical);
        prop_assert!(second.pre.is_identity() && second.post.is_identity());
    }

    #[test]
    fn decompositions_recompose(g in proper_poly(2, 3, 3), h in proper_poly(2, 3, 3)) {
        let f = g.compose(&h);
        let decs = right_components(&f);
        prop_assert!(!decs.is_empty());
        for d in &decs {
            prop_assert_eq!(d.compose(), f.clone());
        }
    }

    #[test]
    fn one_form_reduction_is_exact(f in proper_poly(2, 5, 4), p in bipoly(), q in bipoly()) {
        let omega = OneForm::new(p, q);
        let red = reduce_one_form(&omega, &f);
        prop_assert!(red.verify(&omega, &f));
    }

    #[test]
    fn transitive_pair_orbits(gens in prop::collection::vec(permutation(6), 1..=3)) {
        let action = PermAction::new(6, gens).unwrap();
        prop_assume!(action.is_transitive());
        let orbit = action.pair_orbit(0, 1);
        // every point leads the same number of ordered pairs
        prop_assert_eq!(orbit.len() % 6, 0);
        prop_assert!(orbit.len() <= 30);
        prop_assert_eq!(orbit.len() == 30, action.is_two_transitive());
        if action.is_two_transitive() {
            prop_assert!(action.is_primitive().unwrap());
        }
    }

    #[test]
    fn prime_degree_transitive_actions_are_primitive(gens in prop::collection::vec(permutation(7), 1..=3)) {
        let action = PermAction::new(7, gens).unwrap();
        if action.is_transitive() {
            prop_assert!(action.is_primitive().unwrap());
        }
    }

    #[test]
    fn cyclotomic_ring_matches_embedding(
        a in prop::collection::vec(-4i64..=4, 7),
        b in prop::collection::vec(-4i64..=4, 7),
        c in prop::collection::vec(-4i64..=4, 7),
    ) {
        let (a, b, c) = (
            CycloElement::from_coeffs(7, a).unwrap(),
            CycloElement::from_coeffs(7, b).unwrap(),
            CycloElement::from_coeffs(7, c).unwrap(),
        );
        let lhs = &a * &(&b + &c);
        let rhs = &(&a * &b) + &(&a * &c);
        prop_assert!(lhs.equals(&rhs).unwrap());
        prop_assert!((lhs.to_complex() - a.to_complex() * (b.to_complex() + c.to_complex())).norm() < 1e-9);
        prop_assert_eq!(lhs.is_zero().unwrap(), lhs.to_complex().norm() < 1e-9);
    }
}

/// Fiber labels grouped by the value of `h`.
fn level_sets(fiber: &[num_complex::Complex64], h: &RatPoly) -> BlockSystem {
    let values: Vec<_> = fiber.iter().map(|&x| h.eval_c(x)).collect();
    let scale = values.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match blocks
            .iter_mut()
            .find(|b| (values[b[0]] - v).norm() <= 1e-7 * scale)
        {
            Some(b) => b.push(i),
            None => blocks.push(vec![i]),
        }
    }
    BlockSystem::new(blocks).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn small_loops_follow_multiplicities(f in proper_poly(2, 6, 4)) {
        let cd = critical_data(&f, DEFAULT_CLUSTER_TOL).unwrap();
        let m = tracker::compute_monodromy(&f, &Default::default()).unwrap();
        let n = m.degree();
        prop_assert_eq!(m.riemann_hurwitz_sum(), n - 1);
        prop_assert_eq!(m.big.permutation.cycle_count(), 1);
        prop_assert_eq!(m.small_loop_product(), m.big.permutation.clone());
        for (pos, value) in m.basis.critical_values.iter().enumerate() {
            let i = cd
                .critical_values
                .iter()
                .position(|v| (v.value - value).norm() < 1e-9 * (1.0 + value.norm()))
                .unwrap();
            let mut expected: Vec<usize> = cd.multiplicities_at(i).iter().map(|k| k + 1).collect();
            expected.sort_unstable_by(|a, b| b.cmp(a));
            let mut got: Vec<usize> = m.small[pos].permutation.cycle_type().into_iter().filter(|&c| c > 1).collect();
            got.sort_unstable_by(|a, b| b.cmp(a));
            prop_assert_eq!(got, expected);
        }
        let reversed = track_loop(&CPoly::from(&f), &m.basis.small_loops[0].reversed(), &Default::default()).unwrap();
        prop_assert_eq!(reversed.permutation, m.small[0].permutation.inverse());
    }

    #[test]
    fn imprimitive_iff_decomposable(g in proper_poly(2, 3, 3), h in proper_poly(2, 3, 2)) {
        let f = g.compose(&h);
        let c = classify(&f, &Default::default()).unwrap();
        let MonodromyClass::Imprimitive(blocks) = c.class else {
            return Err(TestCaseError::fail(format!("{f} classified as {}", c.class.tag())));
        };
        prop_assert!(blocks.is_invariant_under(&c.generators));
        let m = tracker::compute_monodromy(&f, &Default::default()).unwrap();
        for d in right_components(&f) {
            let partition = level_sets(&m.fiber, &d.h);
            prop_assert!(partition.is_invariant_under(&m.generators()), "h = {}", d.h);
        }
    }

    #[test]
    fn span_verdict_only_decomposes_for_decomposable(f in proper_poly(3, 5, 3), i in 0usize..3, j in 0usize..3) {
        prop_assume!(i != j);
        let decomposable = !right_components(&f).is_empty();
        match span_test(&f, SimpleCycle::new(i, j).unwrap(), &Default::default()).unwrap() {
            SpanResult::FullSpan { rank, .. } => prop_assert_eq!(rank, f.degree() - 1),
            SpanResult::Decomposes { decomposition, .. } => {
                prop_assert!(decomposable);
                prop_assert_eq!(decomposition.compose(), f);
            }
        }
    }
}

#[test]
fn chebyshev_composition() {
    for m in 1..=4 {
        for n in 1..=4 {
            let lhs = chebyshev(m).unwrap().compose(&chebyshev(n).unwrap());
            assert_eq!(lhs, chebyshev(m * n).unwrap(), "T_{m} ∘ T_{n}");
        }
    }
}

#[test]
fn exceptional_models_are_recognized() {
    for p in [3, 5, 7, 11] {
        assert_eq!(
            recognize_exceptional(&chebyshev(p).unwrap()).unwrap().kind,
            ExceptionalKind::ChebyshevEquiv
        );
        let power = RatPoly::monomial(rat(1), p);
        assert_eq!(
            recognize_exceptional(&power).unwrap().kind,
            ExceptionalKind::PowerEquiv
        );
    }
}

#[test]
fn swap_squares_are_trivial_mod_two() {
    for n in 2..=6 {
        for i in 1..n {
            for sign in [1, -1] {
                let s = swap_matrix(n, i, sign);
                let sq = linalg::mat_mul(&s, &s);
                assert_eq!(matrix_mod2(&sq), matrix_mod2(&linalg::identity(n)));
                assert_ne!(sq, linalg::identity(n));
            }
        }
    }
}

#[test]
fn generic_term_breaks_hyper_center() {
    // f = h + h² with h = x²; ω = y·2h·h′ dx
    let f: RatPoly = "0,0,1,0,1".parse().unwrap();
    let center = OneForm::y_times("0,0,0,4".parse().unwrap());
    let report = hyperlat::hyper_center_test(&f, &center, &rat(0)).unwrap();
    assert!(
        matches!(report.verdict, HyperCenter::Decomposes { .. }),
        "{}",
        report.tag()
    );
    for k in [2usize, 4] {
        let perturbed = center.add(&OneForm::y_times(RatPoly::monomial(rat(1), k)));
        let report = hyperlat::hyper_center_test(&f, &perturbed, &rat(0)).unwrap();
        assert_eq!(report.tag(), "NoTangentialCenter", "y x^{k} dx");
    }
}
