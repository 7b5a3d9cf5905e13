//! Set systems, covers and solver parameters.

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

pub type ElementId = u32;
pub type SetId = u32;

/// One member of the family: a set id and its sorted, duplicate-free elements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetRecord {
    pub id: SetId,
    pub elements: Vec<ElementId>,
}

impl SetRecord {
    /// Sorts and dedups `elements`; returns the record and the number of
    /// duplicates dropped.
    pub fn normalized(id: SetId, mut elements: Vec<ElementId>) -> (Self, usize) {
        let before = elements.len();
        elements.sort_unstable();
        elements.dedup();
        let dups = before - elements.len();
        (SetRecord { id, elements }, dups)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Ground set `0..n` plus a family of `m` sets in stream order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetSystem {
    n: u32,
    records: Vec<SetRecord>,
    feasible: bool,
    dup_warnings: usize,
}

impl SetSystem {
    /// Validates and builds a system. Set ids must be exactly `0..m` in order;
    /// element lists are normalized and duplicates counted.
    pub fn new(n: u32, records: Vec<SetRecord>, allow_empty: bool) -> Result<Self> {
        let mut out = Vec::with_capacity(records.len());
        let mut dup_warnings = 0;
        for (pos, r) in records.into_iter().enumerate() {
            if r.id as usize != pos {
                return Err(Error::BadParams(format!(
                    "set ids must be 0..m in order; found {} at position {pos}",
                    r.id
                )));
            }
            let (r, dups) = SetRecord::normalized(r.id, r.elements);
            dup_warnings += dups;
            if let Some(&e) = r.elements.last() {
                if e >= n {
                    return Err(Error::IdOutOfRange { set: r.id, element: e as u64, n });
                }
            } else if !allow_empty {
                return Err(Error::EmptySet(r.id));
            }
            out.push(r);
        }
        let feasible = uncovered_element(n, &out).is_none();
        Ok(SetSystem { n, records: out, feasible, dup_warnings })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.records.len() as u32
    }

    pub fn records(&self) -> &[SetRecord] {
        &self.records
    }

    pub fn record(&self, id: SetId) -> Option<&SetRecord> {
        self.records.get(id as usize)
    }

    /// Whether the union of all sets is the whole ground set.
    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// Smallest element contained in no set, if any.
    pub fn first_uncoverable(&self) -> Option<ElementId> {
        uncovered_element(self.n, &self.records)
    }

    /// Duplicate element occurrences removed while building the system.
    pub fn dup_warnings(&self) -> usize {
        self.dup_warnings
    }
}

fn uncovered_element(n: u32, records: &[SetRecord]) -> Option<ElementId> {
    let mut seen = BitSet::new(n as usize);
    for r in records {
        for &e in &r.elements {
            seen.insert(e as usize);
        }
    }
    (0..n).find(|&e| !seen.contains(e as usize))
}

/// True iff the chosen sets cover `0..n`.
pub fn verify_cover(sys: &SetSystem, chosen: &[SetId]) -> Result<bool> {
    let mut covered = BitSet::new(sys.n() as usize);
    for &id in chosen {
        let rec = sys.record(id).ok_or(Error::UnknownSetId(id))?;
        for &e in &rec.elements {
            covered.insert(e as usize);
        }
    }
    Ok(covered.count() == sys.n() as usize)
}

/// Which offline subroutine a solve uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OfflineMode {
    /// Branch-and-bound optimum (approximation factor 1).
    Exact,
    /// Max-coverage greedy (approximation factor ⌈ln n⌉).
    Greedy,
}

impl OfflineMode {
    /// Approximation factor fed into the sample-size formulas.
    pub fn rho(self, n: u32) -> u32 {
        match self {
            OfflineMode::Exact => 1,
            OfflineMode::Greedy => ((n as f64).ln().ceil() as u32).max(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    /// Pass/space trade-off in `(0, 1]`; the solver runs `⌈1/delta⌉` iterations.
    pub delta: f64,
    /// Sampling constant.
    pub c: f64,
    pub offline: OfflineMode,
    pub seed: u64,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams { delta: 0.5, c: 2.0, offline: OfflineMode::Exact, seed: 0 }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::BadParams(format!("delta must be in (0,1], got {}", self.delta)));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::BadParams(format!("sampling constant must be positive, got {}", self.c)));
        }
        Ok(())
    }

    /// `⌈1/delta⌉`, tolerant of `1/3`-style values that are not exact in binary.
    pub fn iterations(&self) -> u32 {
        ((1.0 / self.delta) - 1e-9).ceil().max(1.0) as u32
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Physical scans over the family.
    pub passes: u64,
    /// Highest ledger reading during the solve.
    pub peak_space_units: i64,
    /// Units charged for holding the ground set itself (included in the peak).
    pub ground_space_units: i64,
    pub valid: bool,
    /// Guess of the optimum whose cover was returned.
    pub guess_k: u32,
    pub seed: u64,
    /// Whether some iteration had its sample capped at the residual size.
    pub sample_capped: bool,
}

/// Chosen set ids, in pick order, plus the run that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub chosen: Vec<SetId>,
    pub stats: RunStats,
}

impl Cover {
    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }
}
