//! Iterative sampling set cover over a pass-counted stream.
//!
//! Every guess `k ∈ {1, 2, 4, …, 2^⌈log n⌉}` of the optimum runs as its own
//! state machine, and all guesses are driven by the same physical scans. An
//! iteration of one guess:
//!
//! 1. sample the still-uncovered elements (`c·ρ·k·n^δ·log m·log n` of them,
//!    capped at the residual size);
//! 2. first pass: a set hitting at least `|sample|/k` leftover sampled
//!    elements joins the cover at once and removes what it hits from the
//!    leftover; any other set that hits the leftover has its projection
//!    stored;
//! 3. the offline solver covers the final leftover with the stored
//!    projections (exact solves use `k` as a budget);
//! 4. second pass: the full extents of all sets picked in this iteration are
//!    subtracted from the uncovered elements.
//!
//! After `⌈1/δ⌉` iterations a guess succeeds iff nothing is left uncovered,
//! and the smallest successful cover is returned (ties to the smaller `k`).
//! The run always makes exactly `2·⌈1/δ⌉` passes.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::model::{Cover, ElementId, OfflineMode, RunStats, SetId, SetRecord, SolveParams};
#[cfg(test)]
use crate::model::SetSystem;
use crate::offline::{exact_cover, greedy_cover, ProjectedInstance};
use crate::sampling::{draw_sample, iter_sample_size, Sample};
use crate::stream::{PassStream, SpaceLedger};

/// Powers of two from 1 up to the first one that is at least `n`.
pub fn guesses(n: u32) -> Vec<u32> {
    let top = n.max(1).next_power_of_two();
    std::iter::successors(Some(1u32), |&k| (k < top).then_some(k * 2)).collect()
}

/// Reproducible per-(guess, iteration) random stream derived from the master seed.
pub(crate) fn substream(seed: u64, guess_index: usize, iteration: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((guess_index as u64) << 32) | iteration as u64);
    rng
}

/// Per-guess record of what happened, for reporting and tests.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GuessTrace {
    pub k: u32,
    pub alive: bool,
    pub success: bool,
    pub cover_len: usize,
    /// Uncovered elements after each completed iteration.
    pub residual_after: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub size_test_picks: Vec<usize>,
    pub offline_picks: Vec<usize>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub cover: Cover,
    pub guesses: Vec<GuessTrace>,
}

/// State of one guess. `leftover ⊆ sample ⊆ uncovered` within an iteration.
pub struct GuessState {
    pub k: u32,
    sol: Vec<SetId>,
    in_sol: HashSet<SetId>,
    uncovered: BitSet,
    uncovered_len: usize,
    sample: Sample,
    leftover: BitSet,
    leftover_len: usize,
    projections: Vec<(SetId, Vec<ElementId>)>,
    projection_units: i64,
    picked_now: HashSet<SetId>,
    alive: bool,
    /// Units currently charged to the ledger on behalf of this guess.
    charged: i64,
    trace: GuessTrace,
}

impl GuessState {
    pub fn new(k: u32, n: u32, ledger: &mut SpaceLedger) -> Result<Self> {
        let mut g = GuessState {
            k,
            sol: Vec::new(),
            in_sol: HashSet::new(),
            uncovered: BitSet::full(n as usize),
            uncovered_len: n as usize,
            sample: Sample { elements: Vec::new(), source_size: 0 },
            leftover: BitSet::new(n as usize),
            leftover_len: 0,
            projections: Vec::new(),
            projection_units: 0,
            picked_now: HashSet::new(),
            alive: true,
            charged: 0,
            trace: GuessTrace { k, alive: true, ..Default::default() },
        };
        // uncovered set plus one slot of bookkeeping
        g.charge(ledger, n as i64 + 1)?;
        Ok(g)
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn uncovered_len(&self) -> usize {
        self.uncovered_len
    }

    pub fn cover(&self) -> &[SetId] {
        &self.sol
    }

    pub fn trace(&self) -> &GuessTrace {
        &self.trace
    }

    fn charge(&mut self, ledger: &mut SpaceLedger, units: i64) -> Result<()> {
        ledger.charge(units)?;
        self.charged += units;
        Ok(())
    }

    fn kill(&mut self, ledger: &mut SpaceLedger, why: String) -> Result<()> {
        self.alive = false;
        self.trace.alive = false;
        self.trace.failure = Some(why);
        let units = self.charged;
        self.charge(ledger, -units)
    }

    /// Draws this iteration's sample; returns whether the cap triggered.
    fn start_iteration(
        &mut self,
        n: u32,
        m: u32,
        params: &SolveParams,
        rng: &mut ChaCha8Rng,
        ledger: &mut SpaceLedger,
    ) -> Result<bool> {
        let rho = params.offline.rho(n);
        let want = iter_sample_size(rho, self.k, n.max(2), m.max(2), params.delta, params.c)?;
        let ground: Vec<ElementId> = self.uncovered.iter().map(|e| e as ElementId).collect();
        let capped = want >= ground.len() as u64;
        let size = want.min(ground.len() as u64) as usize;
        self.sample = draw_sample(&ground, size, rng);
        self.leftover = BitSet::from_indices(n as usize, self.sample.elements.iter().map(|&e| e as usize));
        self.leftover_len = self.sample.len();
        self.trace.sample_sizes.push(self.sample.len());
        self.trace.size_test_picks.push(0);
        let units = self.sample.len() as i64;
        self.charge(ledger, units)?;
        Ok(capped && !ground.is_empty())
    }

    /// Size test or projection storage for one arriving set.
    fn first_pass_record(&mut self, rec: &SetRecord, ledger: &mut SpaceLedger) -> Result<()> {
        if self.sample.is_empty() || self.leftover_len == 0 || self.in_sol.contains(&rec.id) {
            return Ok(());
        }
        let hits: Vec<ElementId> = rec.elements.iter().copied().filter(|&e| self.leftover.contains(e as usize)).collect();
        if hits.is_empty() {
            return Ok(());
        }
        if hits.len() as u64 * self.k as u64 >= self.sample.len() as u64 {
            for &e in &hits {
                self.leftover.remove(e as usize);
            }
            self.leftover_len -= hits.len();
            self.pick(rec.id, ledger)?;
            *self.trace.size_test_picks.last_mut().unwrap() += 1;
        } else {
            let units = hits.len() as i64 + 1;
            self.projections.push((rec.id, hits));
            self.projection_units += units;
            self.charge(ledger, units)?;
        }
        Ok(())
    }

    fn pick(&mut self, id: SetId, ledger: &mut SpaceLedger) -> Result<()> {
        if self.in_sol.insert(id) {
            self.sol.push(id);
            self.picked_now.insert(id);
            self.charge(ledger, 1)?;
        }
        Ok(())
    }

    /// Offline solve of the leftover. Budget overruns kill the guess;
    /// infeasibility is returned to the caller.
    fn solve_leftover(&mut self, mode: OfflineMode, ledger: &mut SpaceLedger) -> Result<()> {
        let universe: Vec<ElementId> = self.leftover.iter().map(|e| e as ElementId).collect();
        let inst = ProjectedInstance::new(universe, std::mem::take(&mut self.projections));
        let released = std::mem::take(&mut self.projection_units);
        let result = match mode {
            OfflineMode::Exact => exact_cover(&inst, Some(self.k as usize)),
            OfflineMode::Greedy => greedy_cover(&inst),
        };
        self.charge(ledger, -released)?;
        match result {
            Ok(ids) => {
                self.trace.offline_picks.push(ids.len());
                for id in ids {
                    self.pick(id, ledger)?;
                }
                let sample_units = self.sample.len() as i64;
                self.charge(ledger, -sample_units)?;
                Ok(())
            }
            Err(Error::BudgetExceeded(b)) => {
                self.trace.offline_picks.push(0);
                self.kill(ledger, format!("offline optimum exceeds budget {b}"))
            }
            Err(e) => Err(e),
        }
    }

    fn second_pass_record(&mut self, rec: &SetRecord, ledger: &mut SpaceLedger) -> Result<()> {
        if !self.picked_now.contains(&rec.id) {
            return Ok(());
        }
        let mut removed = 0i64;
        for &e in &rec.elements {
            if self.uncovered.remove(e as usize) {
                removed += 1;
            }
        }
        self.uncovered_len -= removed as usize;
        self.charge(ledger, -removed)
    }

    fn finish_iteration(&mut self) {
        self.picked_now.clear();
        self.trace.residual_after.push(self.uncovered_len);
    }
}

fn validate_stream(stream: &PassStream, params: &SolveParams) -> Result<()> {
    params.validate()?;
    if stream.in_pass() {
        return Err(Error::NestedPass);
    }
    Ok(())
}

/// Runs one iteration of a single guess with its own two passes.
pub fn run_iteration(
    state: &mut GuessState,
    stream: &mut PassStream,
    params: &SolveParams,
    rng: &mut ChaCha8Rng,
    ledger: &mut SpaceLedger,
) -> Result<()> {
    validate_stream(stream, params)?;
    if !state.alive {
        return Ok(());
    }
    let (n, m) = (stream.n(), stream.m());
    state.start_iteration(n, m, params, rng, ledger)?;
    stream.scan(|rec| state.first_pass_record(rec, ledger))?;
    state.solve_leftover(params.offline, ledger)?;
    stream.scan(|rec| if state.alive { state.second_pass_record(rec, ledger) } else { Ok(()) })?;
    if state.alive {
        state.finish_iteration();
    }
    Ok(())
}

/// Solves the streamed instance; see the module docs.
pub fn solve(stream: &mut PassStream, params: &SolveParams, ledger: &mut SpaceLedger) -> Result<Cover> {
    solve_traced(stream, params, ledger).map(|r| r.cover)
}

pub fn solve_traced(stream: &mut PassStream, params: &SolveParams, ledger: &mut SpaceLedger) -> Result<SolveReport> {
    validate_stream(stream, params)?;
    let (n, m) = (stream.n(), stream.m());
    let start_passes = stream.pass_count();
    ledger.charge_ground(n as i64)?;
    let mut states = guesses(n)
        .into_iter()
        .map(|k| GuessState::new(k, n, ledger))
        .collect::<Result<Vec<_>>>()?;
    let mut capped = false;

    for it in 0..params.iterations() {
        for (gi, g) in states.iter_mut().enumerate().filter(|(_, g)| g.alive) {
            let mut rng = substream(params.seed, gi, it);
            capped |= g.start_iteration(n, m, params, &mut rng, ledger)?;
        }
        stream.scan(|rec| {
            for g in states.iter_mut().filter(|g| g.alive) {
                g.first_pass_record(rec, ledger)?;
            }
            Ok(())
        })?;
        for g in states.iter_mut().filter(|g| g.alive) {
            g.solve_leftover(params.offline, ledger)?;
        }
        stream.scan(|rec| {
            for g in states.iter_mut().filter(|g| g.alive) {
                g.second_pass_record(rec, ledger)?;
            }
            Ok(())
        })?;
        for g in states.iter_mut().filter(|g| g.alive) {
            g.finish_iteration();
        }
    }

    for g in &mut states {
        g.trace.success = g.alive && g.uncovered_len == 0;
        g.trace.cover_len = g.sol.len();
    }
    let winner = states
        .iter()
        .filter(|g| g.trace.success)
        .min_by_key(|g| (g.sol.len(), g.k))
        .ok_or(Error::AllGuessesFailed)?;
    let stats = RunStats {
        passes: stream.pass_count() - start_passes,
        peak_space_units: ledger.peak(),
        ground_space_units: ledger.ground(),
        valid: true,
        guess_k: winner.k,
        seed: params.seed,
        sample_capped: capped,
    };
    let cover = Cover { chosen: winner.sol.clone(), stats };
    Ok(SolveReport { cover, guesses: states.iter().map(|g| g.trace.clone()).collect() })
}
