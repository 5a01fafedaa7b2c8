//! Property tests over random small spaces.

use ict_core::{
    apply_map, decompose, factored_map, hom_basis, hom_dimension, parse_space_spec, render_space_spec, rep_matrix,
    verify_decomposition, Basis, Group, GroupElement, Parity, SpaceSpec, Term, Weight,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_space(group: Group, max_dim: usize) -> impl Strategy<Value = SpaceSpec> {
    let weight = (0u32..6).prop_map(move |d| {
        if group == Group::SU2 {
            Weight::from_doubled(d)
        } else {
            Weight::integer(d / 2)
        }
    });
    let term = (prop::collection::vec(weight, 1..4), any::<bool>())
        .prop_map(|(f, odd)| Term::new(f, if odd { Parity::Odd } else { Parity::Even }));
    prop::collection::vec(term, 1..3)
        .prop_map(move |ts| SpaceSpec::new(group, ts).unwrap())
        .prop_filter("small", move |s| s.dim() <= max_dim)
}

fn arb_group() -> impl Strategy<Value = Group> {
    prop_oneof![Just(Group::O3), Just(Group::SO3), Just(Group::SU2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decompositions_verify((g, s) in arb_group().prop_flat_map(|g| (Just(g), arb_space(g, 150)))) {
        let basis = Basis::default_for(g);
        let projs = decompose(&s, None, false, basis).unwrap();
        for (t, ps) in projs.iter().enumerate() {
            let cols: usize = ps.iter().map(|p| p.weight.dim()).sum();
            prop_assert_eq!(cols, s.terms()[t].dim());
            let opts = ict_core::decomp::VerifyOptions { samples: 4, ..Default::default() };
            let r = verify_decomposition(&s, ps, &opts).unwrap();
            prop_assert!(r.passed, "{:?}", r);
        }
    }

    #[test]
    fn hom_dimension_is_symmetric_and_counted(
        (a, b) in arb_group().prop_flat_map(|g| (arb_space(g, 100), arb_space(g, 100)))
    ) {
        let ab = hom_dimension(&a, &b).unwrap();
        prop_assert_eq!(ab, hom_dimension(&b, &a).unwrap());
        prop_assert_eq!(hom_basis(&a, &b).unwrap().len() as u64, ab);
        let f = factored_map(&a, &b, Basis::default_for(a.group())).unwrap();
        prop_assert_eq!(f.n_coefficients() as u64, ab);
    }

    #[test]
    fn factored_maps_are_equivariant(
        a in arb_space(Group::O3, 80),
        b in arb_space(Group::O3, 80),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = factored_map(&a, &b, Basis::Cartesian).unwrap();
        let vals: Vec<f64> = (0..f.n_coefficients()).map(|k| (k as f64 * 0.7 + 0.3).sin()).collect();
        f.set_mix_flat(&vals).unwrap();
        let g = GroupElement::random(Group::O3, &mut rng, seed % 2 == 1);
        let v = DVector::from_fn(a.dim(), |i, _| ((i * 31 + 7) as f64).cos());
        let ra = rep_matrix::<f64>(&a, &g, Basis::Cartesian).unwrap();
        let rb = rep_matrix::<f64>(&b, &g, Basis::Cartesian).unwrap();
        let lhs = apply_map(&f, &(ra * &v)).unwrap();
        let rhs = rb * apply_map(&f, &v).unwrap();
        prop_assert!((lhs - rhs).amax() < 1e-9 * v.norm());
    }

    #[test]
    fn render_parse_round_trip((g, s) in arb_group().prop_flat_map(|g| (Just(g), arb_space(g, 10_000)))) {
        let text = render_space_spec(&s);
        prop_assert_eq!(parse_space_spec(&text, g).unwrap(), s);
    }
}
