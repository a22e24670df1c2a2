//! Randomized invariants across the public API.

use anisum::opnorms::{operator_norm, LinearOperator};
use anisum::seqnorms::{
    aniso_norm, psi_apply, strong_norm, weak_norm, EstimatorConfig, FunctionalFamily,
    SequenceFamily,
};
use anisum::spaces::{Functional, NormKind, Space, Vector};
use proptest::prelude::*;

fn kind(i: usize) -> NormKind {
    [
        NormKind::Lp(1.0),
        NormKind::Lp(1.5),
        NormKind::Lp(2.0),
        NormKind::Lp(3.0),
        NormKind::Inf,
    ][i % 5]
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, cols), rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn psi_compose_matches_pointwise_psi(
        (d, c, k) in (1usize..=3, 1usize..=3, 1usize..=3),
        kinds in (0usize..5, 0usize..5),
        seed in proptest::collection::vec(-1.0f64..1.0, 27),
        s in prop_oneof![Just(1.0), Just(2.0), Just(3.0)],
    ) {
        let dom = Space::new(d, kind(kinds.0)).unwrap();
        let cod = Space::new(c, kind(kinds.1)).unwrap();
        let m: Vec<Vec<f64>> = (0..c).map(|i| seed[i * d..(i + 1) * d].to_vec()).collect();
        let t = LinearOperator::new(dom, cod.clone(), m).unwrap();
        let atoms: Vec<Functional> = (0..k).map(|j| Functional(seed[9 + j * c..9 + (j + 1) * c].to_vec())).collect();
        let fam = FunctionalFamily::new(cod, atoms, 1.0).unwrap();
        let composed = t.psi_compose(&fam, s).unwrap();
        let u = Vector(seed[18..18 + d].to_vec());
        let direct = composed.apply(&u).unwrap();
        let (values, norm) = psi_apply(&fam, &t.apply(&u).unwrap(), s).unwrap();
        for (a, b) in direct.0.iter().zip(&values) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let n2 = composed.codomain().norm(&direct).unwrap();
        prop_assert!((n2 - norm).abs() <= 1e-12 * (1.0 + norm));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chain_holds(
        d in 1usize..=3,
        k in 0usize..5,
        rows in matrix(3, 3),
        m in 1usize..=3,
    ) {
        let space = Space::new(d, kind(k)).unwrap();
        let rows: Vec<Vec<f64>> = rows.into_iter().take(m).map(|r| r[..d].to_vec()).collect();
        let seq = SequenceFamily::from_rows(space, rows).unwrap();
        let cfg = EstimatorConfig::default().with_restarts(8);
        let w = weak_norm(&seq, 1.0, &cfg).unwrap().value;
        let a = aniso_norm(&seq, 2.0, 1.0, 2.0, &cfg).unwrap().value;
        let st = strong_norm(&seq, 1.0).unwrap().value;
        prop_assert!(w <= a + 1e-9);
        prop_assert!(a <= st * (1.0 + 1e-9));
    }

    #[test]
    fn operator_norm_is_submultiplicative(
        a in matrix(2, 3),
        b in matrix(3, 2),
        kinds in (0usize..2, 0usize..5, 0usize..2),
    ) {
        // Vertex domains keep both factors and the product exact.
        let vk = |i: usize| [NormKind::Lp(1.0), NormKind::Inf][i];
        let x = Space::new(2, vk(kinds.0)).unwrap();
        let y = Space::new(3, vk(kinds.2)).unwrap();
        let z = Space::new(2, kind(kinds.1)).unwrap();
        let inner = LinearOperator::new(x, y.clone(), b).unwrap();
        let outer = LinearOperator::new(y, z, a).unwrap();
        let cfg = EstimatorConfig::default();
        let prod = operator_norm(&outer.compose(&inner).unwrap(), &cfg).unwrap();
        let no = operator_norm(&outer, &cfg).unwrap().value;
        let ni = operator_norm(&inner, &cfg).unwrap().value;
        prop_assert!(prod.is_exact());
        prop_assert!(prod.value <= no * ni * (1.0 + 1e-12) + 1e-15);
    }
}
