use proptest::prelude::*;

use streamcover::generate::{generate_instance, GeneratorKind};
use streamcover::model::verify_cover;
use streamcover::offline::{exact_cover, greedy_cover, ProjectedInstance};
use streamcover::oracle::brute_force_optimal;
use streamcover::{SetRecord, SetSystem};

fn whole(sys: &SetSystem) -> ProjectedInstance {
    ProjectedInstance::new((0..sys.n()).collect(), sys.records().iter().map(|r| (r.id, r.elements.clone())))
}

fn system(n: u32, sets: Vec<Vec<u32>>) -> SetSystem {
    let records = sets.into_iter().enumerate().map(|(i, e)| SetRecord { id: i as u32, elements: e }).collect();
    SetSystem::new(n, records, false).unwrap()
}

/// A feasible system: a random family plus singletons for anything uncovered.
fn feasible_system() -> impl Strategy<Value = SetSystem> {
    (2u32..=16).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::btree_set(0..n, 1..=n as usize), 1..=14).prop_map(move |sets| {
            let mut sets: Vec<Vec<u32>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
            for e in 0..n {
                if !sets.iter().any(|s| s.contains(&e)) {
                    sets.push(vec![e]);
                }
            }
            sets.truncate(26);
            system(n, sets)
        })
    })
    .prop_filter("feasible", |s| s.is_feasible())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_matches_oracle(sys in feasible_system()) {
        let oracle = brute_force_optimal(&sys).unwrap();
        let exact = exact_cover(&whole(&sys), None).unwrap();
        prop_assert_eq!(exact.len(), oracle.opt_size);
        prop_assert!(verify_cover(&sys, &exact).unwrap());
        prop_assert!(verify_cover(&sys, &oracle.witness).unwrap());
        prop_assert_eq!(oracle.witness.len(), oracle.opt_size);
    }

    #[test]
    fn greedy_is_valid_and_bounded(sys in feasible_system()) {
        let opt = brute_force_optimal(&sys).unwrap().opt_size;
        let greedy = greedy_cover(&whole(&sys)).unwrap();
        prop_assert!(verify_cover(&sys, &greedy).unwrap());
        let h: f64 = (1..=sys.n()).map(|i| 1.0 / i as f64).sum();
        prop_assert!(greedy.len() as f64 <= h * opt as f64 + 1e-9);
    }

    #[test]
    fn budget_boundary(sys in feasible_system()) {
        let opt = brute_force_optimal(&sys).unwrap().opt_size;
        prop_assert_eq!(exact_cover(&whole(&sys), Some(opt)).unwrap().len(), opt);
        if opt > 0 {
            prop_assert!(exact_cover(&whole(&sys), Some(opt - 1)).is_err());
        }
    }

    #[test]
    fn adding_a_set_never_hurts(sys in feasible_system(), extra in prop::collection::btree_set(0u32..16, 1..8)) {
        let before = brute_force_optimal(&sys).unwrap().opt_size;
        let mut sets: Vec<Vec<u32>> = sys.records().iter().map(|r| r.elements.clone()).collect();
        if sets.len() < 26 {
            sets.push(extra.into_iter().filter(|&e| e < sys.n()).collect());
            if sets.last().unwrap().is_empty() {
                sets.pop();
            }
            let after = brute_force_optimal(&system(sys.n(), sets)).unwrap().opt_size;
            prop_assert!(after <= before);
        }
    }
}

#[test]
fn disjoint_partition_optimum() {
    for k in 1..=6u32 {
        let sets: Vec<Vec<u32>> = (0..k).map(|b| (b * 3..b * 3 + 3).collect()).collect();
        let sys = system(3 * k, sets);
        assert_eq!(brute_force_optimal(&sys).unwrap().opt_size, k as usize);
        assert_eq!(exact_cover(&whole(&sys), None).unwrap().len(), k as usize);
    }
}

#[test]
fn planted_generator_hits_planted_optimum() {
    for (opt, n) in [(2, 20), (3, 30), (4, 40)] {
        let g = generate_instance(GeneratorKind::PlantedCover { opt_size: opt }, n, 20, 7).unwrap();
        assert_eq!(brute_force_optimal(&g.system).unwrap().opt_size, opt as usize);
        assert!(verify_cover(&g.system, g.planted.as_ref().unwrap()).unwrap());
    }
}
