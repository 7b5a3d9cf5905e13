use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use streamcover::generate::{generate_instance, GeneratorKind};
use streamcover::io::save_instance;
use streamcover::iter_cover::{run_iteration, solve, solve_traced, GuessState};
use streamcover::model::verify_cover;
use streamcover::oracle::brute_force_optimal;
use streamcover::stream::{PassStream, SpaceLedger};
use streamcover::{Error, OfflineMode, SetRecord, SetSystem, SolveParams};

fn run(sys: &SetSystem, p: &SolveParams) -> streamcover::Cover {
    solve(&mut PassStream::from_system(sys), p, &mut SpaceLedger::new()).unwrap()
}

#[test]
fn planted_four_of_256() {
    let g = generate_instance(GeneratorKind::PlantedCover { opt_size: 4 }, 256, 64, 1).unwrap();
    let p = SolveParams { delta: 0.5, seed: 1, ..Default::default() };
    let c = run(&g.system, &p);
    assert!(verify_cover(&g.system, &c.chosen).unwrap());
    assert_eq!(c.stats.passes, 4);
    assert!(c.len() <= 16 * 4, "size {}", c.len());
}

#[test]
fn random_instances_with_greedy_are_valid() {
    let mut done = 0;
    for seed in 0..400u64 {
        if done == 100 {
            break;
        }
        let n = 20 + (seed * 37 % 181) as u32;
        let m = 20 + (seed * 53 % 181) as u32;
        let g = generate_instance(GeneratorKind::UniformRandom { density: 0.05 }, n, m, seed).unwrap();
        if !g.system.is_feasible() {
            continue;
        }
        let p = SolveParams { delta: 0.5, seed, offline: OfflineMode::Greedy, ..Default::default() };
        let c = run(&g.system, &p);
        assert!(verify_cover(&g.system, &c.chosen).unwrap(), "seed {seed}");
        done += 1;
    }
    assert_eq!(done, 100);
}

#[test]
fn huge_sets_go_through_the_size_test() {
    let records = (0..5).map(|id| SetRecord { id, elements: (0..30).collect() }).collect();
    let sys = SetSystem::new(30, records, false).unwrap();
    let mut stream = PassStream::from_system(&sys);
    let mut ledger = SpaceLedger::new();
    let mut g = GuessState::new(1, 30, &mut ledger).unwrap();
    let p = SolveParams { delta: 1.0, ..Default::default() };
    run_iteration(&mut g, &mut stream, &p, &mut ChaCha8Rng::seed_from_u64(0), &mut ledger).unwrap();
    assert_eq!(g.cover(), &[0]);
    assert_eq!(g.trace().size_test_picks, vec![1]);
    assert_eq!(g.trace().offline_picks, vec![0]);
    assert_eq!(g.uncovered_len(), 0);
}

#[test]
fn full_sample_with_k_equal_n_takes_every_hitting_set() {
    // |sample|/k = 1, so the size test accepts any set that still hits the leftover
    for seed in 0..20u64 {
        let g = generate_instance(GeneratorKind::Sparse { s_cap: 3 }, 16, 20, seed).unwrap();
        if !g.system.is_feasible() {
            continue;
        }
        let mut stream = PassStream::from_system(&g.system);
        let mut ledger = SpaceLedger::new();
        let mut st = GuessState::new(16, 16, &mut ledger).unwrap();
        let p = SolveParams { delta: 1.0, ..Default::default() };
        run_iteration(&mut st, &mut stream, &p, &mut ChaCha8Rng::seed_from_u64(seed), &mut ledger).unwrap();
        assert_eq!(st.trace().sample_sizes, vec![16]);
        assert_eq!(st.trace().offline_picks, vec![0]);
        let mut left: Vec<bool> = vec![true; 16];
        let first_fit: Vec<u32> = g
            .system
            .records()
            .iter()
            .filter(|r| {
                let hit = r.elements.iter().any(|&e| left[e as usize]);
                r.elements.iter().for_each(|&e| left[e as usize] = false);
                hit
            })
            .map(|r| r.id)
            .collect();
        assert_eq!(st.cover(), first_fit.as_slice(), "seed {seed}");
        assert!(verify_cover(&g.system, st.cover()).unwrap());
    }
}

#[test]
fn small_sets_reach_the_optimum_through_the_budgeted_solve() {
    // the exact solve over a full sample loses nothing once k ≥ OPT
    for seed in 0..20u64 {
        let g = generate_instance(GeneratorKind::Sparse { s_cap: 3 }, 16, 20, seed).unwrap();
        if !g.system.is_feasible() {
            continue;
        }
        let opt = brute_force_optimal(&g.system).unwrap().opt_size;
        let p = SolveParams { delta: 1.0, seed, ..Default::default() };
        let r = solve_traced(&mut PassStream::from_system(&g.system), &p, &mut SpaceLedger::new()).unwrap();
        assert!(r.cover.len() >= opt);
        assert!(r.cover.len() <= 2 * opt, "seed {seed}: {} vs {opt}", r.cover.len());
    }
}

#[test]
fn pass_count_is_exact() {
    let g = generate_instance(GeneratorKind::UniformRandom { density: 0.3 }, 50, 40, 3).unwrap();
    for (delta, iters) in [(1.0, 1), (0.5, 2), (0.4, 3), (1.0 / 3.0, 3), (0.25, 4), (0.1, 10)] {
        let c = run(&g.system, &SolveParams { delta, ..Default::default() });
        assert_eq!(c.stats.passes, 2 * iters, "delta {delta}");
    }
}

#[test]
fn space_within_declared_envelope() {
    const C_SPACE: f64 = 4.0;
    for (n, m) in [(64u32, 64u32), (128, 256), (256, 128), (512, 512)] {
        let g = generate_instance(GeneratorKind::PlantedCover { opt_size: 4 }, n, m, 2).unwrap();
        let mut l = SpaceLedger::new();
        solve(&mut PassStream::from_system(&g.system), &SolveParams::default(), &mut l).unwrap();
        let (nf, mf) = (n as f64, m as f64);
        let bound = C_SPACE * mf * nf.sqrt() * mf.log2() * nf.log2() * nf.log2();
        assert!((l.peak() as f64) <= bound, "n={n} m={m} peak={} bound={bound}", l.peak());
    }
}

#[test]
fn winner_is_the_smallest_successful_guess() {
    for seed in 0..10 {
        let g = generate_instance(GeneratorKind::PlantedCover { opt_size: 3 }, 90, 40, seed).unwrap();
        let r = solve_traced(&mut PassStream::from_system(&g.system), &SolveParams::default(), &mut SpaceLedger::new())
            .unwrap();
        let best = r.guesses.iter().filter(|t| t.success).map(|t| (t.cover_len, t.k)).min().unwrap();
        assert_eq!((r.cover.len(), r.cover.stats.guess_k), best);
        assert!(r.guesses.iter().filter(|t| t.success).all(|t| t.cover_len >= r.cover.len()));
    }
}

#[test]
fn file_streams_give_identical_covers() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate_instance(GeneratorKind::PlantedCover { opt_size: 4 }, 120, 50, 5).unwrap();
    let p = SolveParams { delta: 0.5, c: 0.05, seed: 3, ..Default::default() };
    let mem = run(&g.system, &p);
    for binary in [false, true] {
        let path = dir.path().join(if binary { "x.bin" } else { "x.ssc" });
        save_instance(&g.system, &path, binary).unwrap();
        let c = solve(&mut PassStream::open(&path).unwrap(), &p, &mut SpaceLedger::new()).unwrap();
        assert_eq!(c.chosen, mem.chosen);
        assert_eq!(c.stats, mem.stats);
    }
}

#[test]
fn infeasible_and_bad_params() {
    let sys = SetSystem::new(4, vec![SetRecord { id: 0, elements: vec![0, 1, 2] }], false).unwrap();
    let err = solve(&mut PassStream::from_system(&sys), &SolveParams::default(), &mut SpaceLedger::new());
    assert!(matches!(err, Err(Error::Infeasible(3))));
    let bad = SolveParams { delta: 0.0, ..Default::default() };
    assert!(matches!(solve(&mut PassStream::from_system(&sys), &bad, &mut SpaceLedger::new()), Err(Error::BadParams(_))));
}
