//! Streaming cover of points by discs.
//!
//! Per guess `k` and per iteration: pass A takes every disc that hits at
//! least `n/k` uncovered points; a sample of the remaining points is drawn;
//! pass B collects the distinct projections of discs hitting at most
//! `3|S|/k` sampled points; these are solved offline over the sample; pass C
//! replaces each chosen projection by the first disc whose projection
//! contains it. A final pass takes, for each point still uncovered, the
//! first disc containing it. Total passes: `3·⌈1/δ⌉ + 1`.

use serde::{Deserialize, Serialize};

use super::{points_in_disc, CanonicalBuilder, DiscStream, Point2};
use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::iter_cover::{guesses, substream};
use crate::model::{Cover, OfflineMode, RunStats, SetId, SolveParams};
use crate::offline::{exact_cover, greedy_cover, ProjectedInstance};
use crate::sampling::{draw_sample, geom_sample_size};
use crate::stream::SpaceLedger;

/// Pass A threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    /// `|D ∩ L|·k ≥ n` with the original point count.
    #[default]
    Full,
    /// `|D ∩ L|·k ≥ |L|` with the current leftover.
    Leftover,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeomOptions {
    pub threshold: Threshold,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeomTrace {
    pub k: u32,
    pub alive: bool,
    pub success: bool,
    pub cover_len: usize,
    pub pass_a_picks: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub canonical_sizes: Vec<usize>,
    pub skipped_deep: Vec<usize>,
    pub pass_c_picks: Vec<usize>,
    pub final_picks: usize,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct GeomReport {
    pub cover: Cover,
    pub guesses: Vec<GeomTrace>,
}

struct Guess {
    k: u32,
    sol: Vec<SetId>,
    in_sol: BitSet,
    leftover: BitSet,
    leftover_len: usize,
    alive: bool,
    charged: i64,
    sample: Vec<u32>,
    in_sample: BitSet,
    canon: Option<CanonicalBuilder>,
    /// Chosen projections not yet replaced by a disc.
    pending: Vec<Vec<u32>>,
    /// Units charged for this iteration only.
    local: i64,
    trace: GeomTrace,
}

impl Guess {
    fn charge(&mut self, ledger: &mut SpaceLedger, units: i64) -> Result<()> {
        ledger.charge(units)?;
        self.charged += units;
        Ok(())
    }

    fn pick(&mut self, id: SetId, proj: &[u32], ledger: &mut SpaceLedger) -> Result<()> {
        self.in_sol.insert(id as usize);
        self.sol.push(id);
        let mut removed = 0;
        for &p in proj {
            if self.leftover.remove(p as usize) {
                removed += 1;
            }
        }
        self.leftover_len -= removed;
        self.charge(ledger, 1 - removed as i64)
    }

    fn release_local(&mut self, ledger: &mut SpaceLedger) -> Result<()> {
        let units = std::mem::take(&mut self.local);
        self.sample.clear();
        self.pending.clear();
        self.canon = None;
        self.charge(ledger, -units)
    }

    fn kill(&mut self, ledger: &mut SpaceLedger, why: String) -> Result<()> {
        self.alive = false;
        self.trace.alive = false;
        self.trace.failure = Some(why);
        self.local = 0;
        let units = self.charged;
        self.charge(ledger, -units)
    }
}

/// Solves with the default options.
pub fn geom_solve(
    points: &[Point2],
    discs: &mut DiscStream,
    params: &SolveParams,
    ledger: &mut SpaceLedger,
) -> Result<Cover> {
    geom_solve_traced(points, discs, params, GeomOptions::default(), ledger).map(|r| r.cover)
}

pub fn geom_solve_traced(
    points: &[Point2],
    discs: &mut DiscStream,
    params: &SolveParams,
    opts: GeomOptions,
    ledger: &mut SpaceLedger,
) -> Result<GeomReport> {
    params.validate()?;
    let n = points.len() as u32;
    let m = discs.len() as u32;
    let start_passes = discs.pass_count();
    ledger.charge_ground(n as i64)?;
    let rho = params.offline.rho(n);

    let mut gs = Vec::new();
    for k in guesses(n) {
        let mut g = Guess {
            k,
            sol: Vec::new(),
            in_sol: BitSet::new(m as usize),
            leftover: BitSet::full(n as usize),
            leftover_len: n as usize,
            alive: true,
            charged: 0,
            sample: Vec::new(),
            in_sample: BitSet::new(n as usize),
            canon: None,
            pending: Vec::new(),
            local: 0,
            trace: GeomTrace { k, alive: true, ..Default::default() },
        };
        g.charge(ledger, n as i64 + 1)?;
        gs.push(g);
    }
    let mut capped = false;

    for it in 0..params.iterations() {
        // pass A: size test
        for g in gs.iter_mut().filter(|g| g.alive) {
            g.trace.pass_a_picks.push(0);
        }
        discs.scan(|d| {
            let proj = points_in_disc(points, d)?;
            for g in gs.iter_mut().filter(|g| g.alive && g.leftover_len > 0) {
                if g.in_sol.contains(d.id as usize) {
                    continue;
                }
                let hits = proj.iter().filter(|&&p| g.leftover.contains(p as usize)).count() as u64;
                let bar = match opts.threshold {
                    Threshold::Full => n as u64,
                    Threshold::Leftover => g.leftover_len as u64,
                };
                if hits > 0 && hits * g.k as u64 >= bar {
                    g.pick(d.id, &proj, ledger)?;
                    *g.trace.pass_a_picks.last_mut().unwrap() += 1;
                }
            }
            Ok(())
        })?;

        for (gi, g) in gs.iter_mut().enumerate().filter(|(_, g)| g.alive) {
            let want = geom_sample_size(rho, g.k, n.max(2), m.max(2), params.delta, params.c)?;
            let ground: Vec<u32> = g.leftover.iter().map(|p| p as u32).collect();
            capped |= !ground.is_empty() && want >= ground.len() as u64;
            let size = want.min(ground.len() as u64) as usize;
            let mut rng = substream(params.seed, gi, it);
            g.sample = draw_sample(&ground, size, &mut rng).elements;
            g.in_sample = BitSet::from_indices(n as usize, g.sample.iter().map(|&p| p as usize));
            let units = g.sample.len() as i64;
            g.charge(ledger, units)?;
            g.local += units;
            g.trace.sample_sizes.push(g.sample.len());
            // |proj|·k ≤ 3|S|
            g.canon = Some(CanonicalBuilder::new(3 * g.sample.len() / g.k as usize));
        }

        // pass B: canonical projections of shallow discs
        discs.scan(|d| {
            let proj = points_in_disc(points, d)?;
            for g in gs.iter_mut().filter(|g| g.alive && !g.sample.is_empty()) {
                let sub: Vec<u32> = proj.iter().copied().filter(|&p| g.in_sample.contains(p as usize)).collect();
                let units = g.canon.as_mut().unwrap().offer(sub, d.id, ledger)?;
                g.charged += units;
                g.local += units;
            }
            Ok(())
        })?;

        for g in gs.iter_mut().filter(|g| g.alive) {
            let fam = g.canon.take().map(CanonicalBuilder::finish).unwrap_or_default();
            g.trace.canonical_sizes.push(fam.entries.len());
            g.trace.skipped_deep.push(fam.skipped_deep);
            let mut coverable = BitSet::new(n as usize);
            for (proj, _) in &fam.entries {
                for &p in proj {
                    coverable.insert(p as usize);
                }
            }
            let universe: Vec<u32> = coverable.iter().map(|p| p as u32).collect();
            let inst = ProjectedInstance::new(
                universe,
                fam.entries.iter().enumerate().map(|(i, (proj, _))| (i as SetId, proj.clone())),
            );
            let chosen = match params.offline {
                OfflineMode::Exact => exact_cover(&inst, Some(g.k as usize)),
                OfflineMode::Greedy => greedy_cover(&inst),
            };
            match chosen {
                Ok(ids) => g.pending = ids.into_iter().map(|i| fam.entries[i as usize].0.clone()).collect(),
                Err(Error::BudgetExceeded(b)) => g.kill(ledger, format!("offline optimum exceeds budget {b}"))?,
                Err(e) => return Err(e),
            }
        }

        // pass C: replace chosen projections by superset discs
        for g in gs.iter_mut().filter(|g| g.alive) {
            g.trace.pass_c_picks.push(0);
        }
        discs.scan(|d| {
            let proj = points_in_disc(points, d)?;
            for g in gs.iter_mut().filter(|g| g.alive && !g.pending.is_empty()) {
                if g.in_sol.contains(d.id as usize) {
                    continue;
                }
                let before = g.pending.len();
                g.pending.retain(|r| !r.iter().all(|p| proj.binary_search(p).is_ok()));
                if g.pending.len() < before {
                    g.pick(d.id, &proj, ledger)?;
                    *g.trace.pass_c_picks.last_mut().unwrap() += 1;
                }
            }
            Ok(())
        })?;

        for g in gs.iter_mut().filter(|g| g.alive) {
            g.release_local(ledger)?;
        }
    }

    // final pass: one disc per remaining point
    discs.scan(|d| {
        let proj = points_in_disc(points, d)?;
        for g in gs.iter_mut().filter(|g| g.alive && g.leftover_len > 0) {
            if !g.in_sol.contains(d.id as usize) && proj.iter().any(|&p| g.leftover.contains(p as usize)) {
                g.pick(d.id, &proj, ledger)?;
                g.trace.final_picks += 1;
            }
        }
        Ok(())
    })?;

    for g in &mut gs {
        g.trace.success = g.alive && g.leftover_len == 0;
        g.trace.cover_len = g.sol.len();
    }
    let Some(winner) = gs.iter().filter(|g| g.trace.success).min_by_key(|g| (g.sol.len(), g.k)) else {
        let last = gs.iter().rev().find(|g| g.alive);
        return Err(match last.and_then(|g| g.leftover.first()) {
            Some(p) => Error::Infeasible(p as u32),
            None => Error::AllGuessesFailed,
        });
    };
    let stats = RunStats {
        passes: discs.pass_count() - start_passes,
        peak_space_units: ledger.peak(),
        ground_space_units: ledger.ground(),
        valid: true,
        guess_k: winner.k,
        seed: params.seed,
        sample_capped: capped,
    };
    let cover = Cover { chosen: winner.sol.clone(), stats };
    Ok(GeomReport { cover, guesses: gs.into_iter().map(|g| g.trace).collect() })
}
