//! Seeded instance generators.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ElementId, SetId, SetRecord, SetSystem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeneratorKind {
    /// Every element joins every set independently with probability `density`.
    UniformRandom { density: f64 },
    /// A balanced partition of the ground set into `opt_size` blocks is hidden
    /// among the sets; the remaining sets are no larger than the smallest block.
    PlantedCover { opt_size: u32 },
    /// Density-1/2 sets cut down to at most `s_cap` elements.
    Sparse { s_cap: u32 },
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub system: SetSystem,
    /// Ids of the planted cover, for `PlantedCover`.
    pub planted: Option<Vec<SetId>>,
}

/// Builds an instance deterministically from `seed`.
///
/// Generated sets are never empty: a set that comes out empty receives one
/// uniformly chosen element.
pub fn generate_instance(kind: GeneratorKind, n: u32, m: u32, seed: u64) -> Result<Generated> {
    if n == 0 || m == 0 {
        return Err(Error::BadParams("n and m must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sets, planted) = match kind {
        GeneratorKind::UniformRandom { density } => {
            if !(0.0..=1.0).contains(&density) {
                return Err(Error::BadParams(format!("density must be in [0,1], got {density}")));
            }
            ((0..m).map(|_| bernoulli_set(&mut rng, n, density)).collect(), None)
        }
        GeneratorKind::Sparse { s_cap } => {
            if s_cap == 0 {
                return Err(Error::BadParams("s_cap must be at least 1".into()));
            }
            let sets = (0..m)
                .map(|_| {
                    let mut s = bernoulli_set(&mut rng, n, 0.5);
                    if s.len() > s_cap as usize {
                        let keep = index::sample(&mut rng, s.len(), s_cap as usize);
                        let mut cut: Vec<_> = keep.iter().map(|i| s[i]).collect();
                        cut.sort_unstable();
                        s = cut;
                    }
                    s
                })
                .collect();
            (sets, None)
        }
        GeneratorKind::PlantedCover { opt_size } => {
            if opt_size == 0 || opt_size > m || opt_size > n {
                return Err(Error::BadParams(format!("planted cover needs 1 <= opt_size <= min(n, m); got {opt_size}")));
            }
            planted_sets(&mut rng, n, m, opt_size)
        }
    };
    let records = sets
        .into_iter()
        .enumerate()
        .map(|(i, elements)| SetRecord { id: i as SetId, elements })
        .collect();
    Ok(Generated { system: SetSystem::new(n, records, false)?, planted })
}

fn bernoulli_set(rng: &mut ChaCha8Rng, n: u32, density: f64) -> Vec<ElementId> {
    let mut s: Vec<ElementId> = (0..n).filter(|_| rng.gen_bool(density)).collect();
    if s.is_empty() {
        s.push(rng.gen_range(0..n));
    }
    s
}

fn planted_sets(rng: &mut ChaCha8Rng, n: u32, m: u32, opt: u32) -> (Vec<Vec<ElementId>>, Option<Vec<SetId>>) {
    let mut perm: Vec<ElementId> = (0..n).collect();
    perm.shuffle(rng);
    // balanced blocks: sizes differ by at most one
    let mut blocks = Vec::with_capacity(opt as usize);
    let (base, extra) = (n / opt, n % opt);
    let mut start = 0usize;
    for b in 0..opt {
        let len = (base + u32::from(b < extra)) as usize;
        let mut block = perm[start..start + len].to_vec();
        block.sort_unstable();
        blocks.push(block);
        start += len;
    }
    let noise_max = base.max(1);
    let positions = index::sample(rng, m as usize, opt as usize).into_vec();
    let mut sets = vec![Vec::new(); m as usize];
    for (block, &pos) in blocks.into_iter().zip(&positions) {
        sets[pos] = block;
    }
    for (i, s) in sets.iter_mut().enumerate() {
        if positions.contains(&i) {
            continue;
        }
        let size = rng.gen_range(1..=noise_max) as usize;
        let mut v: Vec<ElementId> = index::sample(rng, n as usize, size).iter().map(|e| e as ElementId).collect();
        v.sort_unstable();
        *s = v;
    }
    let mut planted: Vec<SetId> = positions.iter().map(|&p| p as SetId).collect();
    planted.sort_unstable();
    (sets, Some(planted))
}
