//! Recovering a hidden set family from a disjointness oracle.
//!
//! The oracle answers whether some hidden set misses a query entirely. A
//! random query `Q` of size `c1·⌈log m⌉` that gets a yes is expanded one
//! element at a time: `e` belongs to the recovered set iff `Q ∪ {e}` gets a
//! no, so the recovered set is the intersection of all hidden sets missing
//! `Q`. When exactly one hidden set misses `Q`, that set comes back intact.
//! Recovered sets are kept as an antichain of maximal sets.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub struct DisjointnessOracle {
    family: Vec<Vec<u32>>,
    n: u32,
    query_count: u64,
    error_rate: f64,
    noise: ChaCha8Rng,
}

impl DisjointnessOracle {
    /// A perfect oracle over `family`, a list of subsets of `0..n`.
    pub fn new(n: u32, family: Vec<Vec<u32>>) -> Result<Self> {
        Self::with_error(n, family, 0.0, 0)
    }

    /// Flips each answer independently with probability `error_rate`.
    pub fn with_error(n: u32, mut family: Vec<Vec<u32>>, error_rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(Error::BadParams(format!("error rate must be in [0,1], got {error_rate}")));
        }
        for s in &mut family {
            s.sort_unstable();
            s.dedup();
            if let Some(&e) = s.iter().find(|&&e| e >= n) {
                return Err(Error::BadParams(format!("element {e} outside 0..{n}")));
            }
        }
        Ok(DisjointnessOracle { family, n, query_count: 0, error_rate, noise: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn family(&self) -> &[Vec<u32>] {
        &self.family
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    /// Whether some hidden set is disjoint from `q` (given as a membership mask).
    pub fn query(&mut self, q: &[bool]) -> bool {
        self.query_count += 1;
        let truth = self.family.iter().any(|s| s.iter().all(|&e| !q[e as usize]));
        if self.error_rate > 0.0 && self.noise.gen_bool(self.error_rate) {
            !truth
        } else {
            truth
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryRun {
    pub recovered: Vec<Vec<u32>>,
    /// Random probes drawn, at most the budget.
    pub queries_used: u64,
    /// All oracle calls, expansions included.
    pub oracle_calls: u64,
    /// Recovered family equals the hidden one as a set of sets.
    pub success: bool,
}

/// `c1·⌈log2 m⌉`.
pub fn query_size(c1: u32, m: u32) -> u32 {
    c1 * m.max(1).next_power_of_two().trailing_zeros()
}

/// `m^(c1+3)·⌈log2 m⌉`, saturating.
pub fn default_budget(m: u32, c1: u32) -> u64 {
    (m as u64).saturating_pow(c1 + 3).saturating_mul(query_size(1, m).max(1) as u64)
}

pub fn recover_family<R: Rng + ?Sized>(
    oracle: &mut DisjointnessOracle,
    m: u32,
    c1: u32,
    budget: u64,
    rng: &mut R,
) -> Result<RecoveryRun> {
    let n = oracle.n();
    let s = query_size(c1, m);
    if s > n {
        return Err(Error::BadParams(format!("query size {s} exceeds n={n}")));
    }
    let start_calls = oracle.query_count();
    let mut recovered: Vec<Vec<u32>> = Vec::new();
    let mut mask = vec![false; n as usize];
    for _ in 0..budget {
        let q: Vec<usize> = index::sample(rng, n as usize, s as usize).into_vec();
        for &e in &q {
            mask[e] = true;
        }
        if oracle.query(&mask) {
            let mut r = Vec::new();
            for e in 0..n as usize {
                if mask[e] {
                    continue;
                }
                mask[e] = true;
                if !oracle.query(&mask) {
                    r.push(e as u32);
                }
                mask[e] = false;
            }
            insert_maximal(&mut recovered, r);
        }
        for &e in &q {
            mask[e] = false;
        }
    }
    recovered.sort();
    let success = same_family(&recovered, oracle.family());
    Ok(RecoveryRun { recovered, queries_used: budget, oracle_calls: oracle.query_count() - start_calls, success })
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.by_ref().any(|y| y == x))
}

/// Adds `r` unless it is contained in a stored set; drops stored subsets of `r`.
fn insert_maximal(family: &mut Vec<Vec<u32>>, r: Vec<u32>) {
    if family.iter().any(|s| is_subset(&r, s)) {
        return;
    }
    family.retain(|s| !is_subset(s, &r));
    family.push(r);
}

fn same_family(a: &[Vec<u32>], b: &[Vec<u32>]) -> bool {
    let norm = |f: &[Vec<u32>]| {
        let mut v = f.to_vec();
        v.sort();
        v.dedup();
        v
    };
    norm(a) == norm(b)
}

/// No member is contained in another (equal members count as contained).
pub fn is_intersecting(family: &[Vec<u32>]) -> bool {
    let sorted: Vec<Vec<u32>> = family
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    sorted
        .iter()
        .enumerate()
        .all(|(i, a)| sorted.iter().enumerate().all(|(j, b)| i == j || !is_subset(a, b)))
}

/// `m` subsets of `0..n`, each element present with probability 1/2.
pub fn random_family<R: Rng + ?Sized>(n: u32, m: u32, rng: &mut R) -> Vec<Vec<u32>> {
    (0..m).map(|_| (0..n).filter(|_| rng.gen_bool(0.5)).collect()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessStats {
    pub trials: u64,
    pub hits: u64,
}

impl UniquenessStats {
    pub fn frequency(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.hits as f64 / self.trials as f64
        }
    }
}

/// How often a random query of size `c·⌈log m⌉` misses exactly one set of a
/// fresh random family.
pub fn uniqueness_stats<R: Rng + ?Sized>(n: u32, m: u32, c: u32, trials: u64, rng: &mut R) -> Result<UniquenessStats> {
    let s = query_size(c, m);
    if s > n {
        return Err(Error::BadParams(format!("query size {s} exceeds n={n}")));
    }
    let mut hits = 0;
    let mut mask = vec![false; n as usize];
    for _ in 0..trials {
        let family = random_family(n, m, rng);
        let q = index::sample(rng, n as usize, s as usize).into_vec();
        for &e in &q {
            mask[e] = true;
        }
        let disjoint = family.iter().filter(|f| f.iter().all(|&e| !mask[e as usize])).count();
        if disjoint == 1 {
            hits += 1;
        }
        for &e in &q {
            mask[e] = false;
        }
    }
    Ok(UniquenessStats { trials, hits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn sizes() {
        assert_eq!(query_size(2, 8), 6);
        assert_eq!(query_size(2, 5), 6);
        assert_eq!(query_size(3, 1), 0);
        assert_eq!(default_budget(8, 2), 8u64.pow(5) * 3);
    }

    #[test]
    fn intersecting_examples() {
        assert!(is_intersecting(&[vec![1, 2], vec![2, 3]]));
        assert!(!is_intersecting(&[vec![1], vec![1, 2]]));
        assert!(!is_intersecting(&[vec![4], vec![4]]));
        assert!(is_intersecting(&[]));
    }

    #[test]
    fn empty_set_family() {
        let mut o = DisjointnessOracle::new(8, vec![vec![]]).unwrap();
        let r = recover_family(&mut o, 1, 2, 3, &mut rng(0)).unwrap();
        assert!(r.success);
        assert_eq!(r.recovered, vec![Vec::<u32>::new()]);
    }

    #[test]
    fn full_set_is_never_found() {
        let mut o = DisjointnessOracle::new(16, vec![(0..16).collect()]).unwrap();
        let r = recover_family(&mut o, 2, 2, 50, &mut rng(0)).unwrap();
        assert!(!r.success);
        assert!(r.recovered.is_empty());
        assert_eq!(r.oracle_calls, 50);
    }

    #[test]
    fn small_family_recovered() {
        let fam = vec![vec![0, 1, 2], vec![3, 4, 5], vec![1, 5, 6, 7]];
        let mut o = DisjointnessOracle::new(12, fam).unwrap();
        let r = recover_family(&mut o, 3, 1, 400, &mut rng(2)).unwrap();
        assert!(r.success, "{r:?}");
        assert!(is_intersecting(&r.recovered));
        assert!(r.queries_used <= 400);
    }

    #[test]
    fn pruning_keeps_maximal_sets() {
        let mut f = Vec::new();
        insert_maximal(&mut f, vec![1]);
        insert_maximal(&mut f, vec![1, 2]);
        insert_maximal(&mut f, vec![2]);
        insert_maximal(&mut f, vec![3]);
        insert_maximal(&mut f, vec![1, 2]);
        assert_eq!(f, vec![vec![1, 2], vec![3]]);
    }

    #[test]
    fn uniqueness_edge_cases() {
        let s = uniqueness_stats(10, 1, 2, 100, &mut rng(1)).unwrap();
        assert_eq!(s.frequency(), 1.0);
        assert!(uniqueness_stats(4, 8, 2, 10, &mut rng(1)).is_err());
        let s = uniqueness_stats(6, 8, 2, 200, &mut rng(1)).unwrap();
        // the query is all of [n]; only empty sets miss it
        assert!(s.frequency() < 0.2);
    }

    #[test]
    fn noisy_oracle_flips() {
        let mut o = DisjointnessOracle::with_error(4, vec![vec![0]], 1.0, 0).unwrap();
        assert!(!o.query(&[false; 4]));
        assert!(DisjointnessOracle::with_error(4, vec![vec![9]], 0.0, 0).is_err());
    }
}
