//! Brute-force optimum by enumerating sub-families in increasing size.
//!
//! Deliberately shares nothing with [`crate::offline`]: plain word-vector
//! unions and lexicographic combination enumeration, no pruning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SetId, SetSystem};

pub const MAX_ORACLE_SETS: u32 = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMethod {
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub opt_size: usize,
    pub witness: Vec<SetId>,
    pub method: OracleMethod,
}

pub fn brute_force_optimal(sys: &SetSystem) -> Result<OracleResult> {
    if sys.m() > MAX_ORACLE_SETS {
        return Err(Error::TooLarge(format!("oracle handles at most {MAX_ORACLE_SETS} sets, got {}", sys.m())));
    }
    let words = (sys.n() as usize).div_ceil(64);
    let masks: Vec<Vec<u64>> = sys
        .records()
        .iter()
        .map(|r| {
            let mut w = vec![0u64; words];
            for &e in &r.elements {
                w[e as usize / 64] |= 1 << (e % 64);
            }
            w
        })
        .collect();
    let mut full = vec![u64::MAX; words];
    if !sys.n().is_multiple_of(64) {
        full[words - 1] = (1u64 << (sys.n() % 64)) - 1;
    }
    let mut all = vec![0u64; words];
    for m in &masks {
        or_into(&mut all, m);
    }
    if all != full {
        let missing = (0..sys.n()).find(|&e| all[e as usize / 64] & (1 << (e % 64)) == 0).unwrap();
        return Err(Error::Infeasible(missing));
    }
    for size in 0..=masks.len() {
        // acc[d] holds the union of the first d picked sets
        let mut acc = vec![vec![0u64; words]; size + 1];
        let mut picked = Vec::with_capacity(size);
        if combos(&masks, &full, 0, &mut acc, &mut picked) {
            return Ok(OracleResult { opt_size: size, witness: picked, method: OracleMethod::Exhaustive });
        }
    }
    unreachable!("union of all sets is full")
}

fn or_into(acc: &mut [u64], m: &[u64]) {
    for (a, b) in acc.iter_mut().zip(m) {
        *a |= b;
    }
}

/// Lexicographic enumeration of the remaining `acc.len() - 1 - picked.len()`
/// indices from `from` on.
fn combos(masks: &[Vec<u64>], full: &[u64], from: usize, acc: &mut [Vec<u64>], picked: &mut Vec<SetId>) -> bool {
    let depth = picked.len();
    let left = acc.len() - 1 - depth;
    if left == 0 {
        return acc[depth] == full;
    }
    for i in from..=masks.len() - left {
        let (lo, hi) = acc.split_at_mut(depth + 1);
        hi[0].copy_from_slice(&lo[depth]);
        or_into(&mut hi[0], &masks[i]);
        picked.push(i as SetId);
        if combos(masks, full, i + 1, acc, picked) {
            return true;
        }
        picked.pop();
    }
    false
}
