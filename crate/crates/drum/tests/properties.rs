use std::sync::Arc;

use drum::checks::{
    check_d_monotonicity, check_h, check_stability, cone_membership, dynamic_h, unique_recovery,
};
use drum::geometry::DemandGeometry;
use drum::io::{read_rho, write_rho};
use drum::model::{ChoiceUniverse, PathSpace, StochasticChoiceFunction};
use drum::repr::{catalog_h, Catalog, DrumModel};
use proptest::prelude::*;

fn normalized(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(normalized)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_points_pass_every_simple_check(nu in weights(9)) {
        let model = DrumModel::demand(DemandGeometry::simple(2)).unwrap();
        let space = Arc::new(model.full_space().unwrap());
        let a = model.dynamic(&space).unwrap();
        let rho = StochasticChoiceFunction::new(space.clone(), a.apply(&nu)).unwrap();
        prop_assert!(check_stability(&rho, 1e-9).passed);
        prop_assert!(check_d_monotonicity(&rho, model.universe(), 1e-9).passed);
        let h1 = catalog_h(Catalog::Simple).unwrap();
        let h = dynamic_h(&[h1.clone(), h1], &space).unwrap();
        prop_assert!(check_h(rho.probs(), &h, 1e-9).unwrap().passed);
        let rec = unique_recovery(&rho).unwrap();
        for (x, y) in rec.nu.iter().zip(&nu) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn product_weights_give_product_choice(p in weights(6), q in weights(6)) {
        let universe = ChoiceUniverse::binary_menus(&["x", "y", "z"], 2).unwrap();
        let model = DrumModel::random_utility(universe).unwrap();
        let space = model.full_space().unwrap();
        let a = model.dynamic(&space).unwrap();
        let nu: Vec<f64> = p.iter().flat_map(|x| q.iter().map(move |y| x * y)).collect();
        let rho = a.apply(&nu);
        let s1 = model.statics()[0].apply(&p);
        let s2 = model.statics()[1].apply(&q);
        for row in 0..space.len() {
            let (mp, cp) = space.row(row);
            let expected = s1[space.static_row(0, mp[0], cp[0])] * s2[space.static_row(1, mp[1], cp[1])];
            prop_assert!((rho[row] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn cone_fit_is_zero_on_model_points(nu in weights(36)) {
        let universe = ChoiceUniverse::binary_menus(&["x", "y", "z"], 2).unwrap();
        let model = DrumModel::random_utility(universe).unwrap();
        let space = Arc::new(model.full_space().unwrap());
        let a = model.dynamic(&space).unwrap();
        let rho = StochasticChoiceFunction::new(space, a.apply(&nu)).unwrap();
        let fit = cone_membership(&rho, &a).unwrap();
        prop_assert!(fit.distance < 1e-9, "distance {}", fit.distance);
    }

    #[test]
    fn choice_csv_round_trips(counts in prop::collection::vec(0u64..50, 16)) {
        prop_assume!(counts.chunks(4).all(|c| c.iter().sum::<u64>() > 0));
        let sizes = vec![vec![2, 2], vec![2, 2]];
        let space = Arc::new(PathSpace::full(sizes.clone()).unwrap());
        let rho = StochasticChoiceFunction::from_counts(space, counts.clone()).unwrap();
        let back = read_rho(write_rho(&rho).as_bytes(), sizes).unwrap();
        prop_assert_eq!(back.counts().unwrap(), &counts[..]);
        for (x, y) in back.probs().iter().zip(rho.probs()) {
            prop_assert!((x - y).abs() < 1e-15);
        }
    }
}
