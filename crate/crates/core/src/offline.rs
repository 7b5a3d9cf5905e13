//! Offline set-cover subroutines over in-memory projected instances.

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::model::{ElementId, SetId};

/// A universe of sampled elements and the projections of stored sets onto it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProjectedInstance {
    universe: Vec<ElementId>,
    sets: Vec<(SetId, Vec<ElementId>)>,
}

impl ProjectedInstance {
    /// Projections are intersected with `universe`; sets whose projection ends
    /// up empty are dropped.
    pub fn new(mut universe: Vec<ElementId>, sets: impl IntoIterator<Item = (SetId, Vec<ElementId>)>) -> Self {
        universe.sort_unstable();
        universe.dedup();
        let sets = sets
            .into_iter()
            .filter_map(|(id, mut proj)| {
                proj.retain(|e| universe.binary_search(e).is_ok());
                proj.sort_unstable();
                proj.dedup();
                (!proj.is_empty()).then_some((id, proj))
            })
            .collect();
        ProjectedInstance { universe, sets }
    }

    pub fn universe(&self) -> &[ElementId] {
        &self.universe
    }

    pub fn sets(&self) -> &[(SetId, Vec<ElementId>)] {
        &self.sets
    }

    /// Total stored projection entries.
    pub fn stored_units(&self) -> usize {
        self.sets.iter().map(|(_, p)| p.len()).sum()
    }

    fn dense(&self) -> Dense {
        let u = self.universe.len();
        let sets = self
            .sets
            .iter()
            .map(|(id, proj)| {
                let bits = BitSet::from_indices(u, proj.iter().map(|e| self.universe.binary_search(e).unwrap()));
                (*id, bits)
            })
            .collect();
        Dense { universe: self.universe.clone(), sets }
    }
}

struct Dense {
    universe: Vec<ElementId>,
    sets: Vec<(SetId, BitSet)>,
}

impl Dense {
    fn check_feasible(&self) -> Result<()> {
        let mut covered = BitSet::new(self.universe.len());
        for (_, s) in &self.sets {
            for i in s.iter() {
                covered.insert(i);
            }
        }
        match (0..self.universe.len()).find(|&i| !covered.contains(i)) {
            Some(i) => Err(Error::Infeasible(self.universe[i])),
            None => Ok(()),
        }
    }

    fn greedy(&self) -> Result<Vec<SetId>> {
        let mut uncovered = BitSet::full(self.universe.len());
        let mut used = vec![false; self.sets.len()];
        let mut chosen = Vec::new();
        while let Some(first) = uncovered.first() {
            let mut best: Option<(usize, usize)> = None;
            for (i, (id, s)) in self.sets.iter().enumerate() {
                if used[i] {
                    continue;
                }
                let gain = s.intersection_count(&uncovered);
                let better = match best {
                    None => gain > 0,
                    Some((bi, bg)) => gain > bg || (gain == bg && *id < self.sets[bi].0),
                };
                if better {
                    best = Some((i, gain));
                }
            }
            let Some((i, _)) = best else {
                return Err(Error::Infeasible(self.universe[first]));
            };
            used[i] = true;
            uncovered.difference_with(&self.sets[i].1);
            chosen.push(self.sets[i].0);
        }
        Ok(chosen)
    }
}

/// Repeatedly takes the set covering the most uncovered elements, ties to
/// the smallest set id.
pub fn greedy_cover(inst: &ProjectedInstance) -> Result<Vec<SetId>> {
    inst.dense().greedy()
}

/// Minimum-cardinality cover by branch and bound.
///
/// Branches on the lowest uncovered element over the sets containing it and
/// prunes when `depth + ⌈uncovered / best_remaining_gain⌉` cannot beat the
/// incumbent. With `budget = Some(b)`, covers larger than `b` are never
/// returned and `BudgetExceeded` signals that the optimum exceeds `b`.
pub fn exact_cover(inst: &ProjectedInstance, budget: Option<usize>) -> Result<Vec<SetId>> {
    let dense = inst.dense();
    dense.check_feasible()?;
    if dense.universe.is_empty() {
        return Ok(Vec::new());
    }
    let sets = reduce_dominated(dense.sets);
    let reduced = Dense { universe: dense.universe, sets };
    let greedy = reduced.greedy()?;

    let mut search = Search::new(&reduced);
    match budget {
        Some(b) if greedy.len() > b => search.bound = b + 1,
        _ => {
            search.bound = greedy.len();
            search.best = Some(greedy);
        }
    }
    search.run(BitSet::full(reduced.universe.len()), &mut Vec::new());
    search.best.ok_or(Error::BudgetExceeded(budget.unwrap_or(0)))
}

/// Drops duplicate projections (keeping the smallest id) and projections
/// strictly contained in another; neither changes the optimum.
fn reduce_dominated(mut sets: Vec<(SetId, BitSet)>) -> Vec<(SetId, BitSet)> {
    sets.sort_by_key(|(id, _)| *id);
    let counts: Vec<usize> = sets.iter().map(|(_, s)| s.count()).collect();
    let mut keep = vec![true; sets.len()];
    for i in 0..sets.len() {
        for j in 0..sets.len() {
            if i == j || !keep[j] {
                continue;
            }
            let dominated = sets[i].1.is_subset(&sets[j].1) && (counts[i] < counts[j] || j < i);
            if dominated {
                keep[i] = false;
                break;
            }
        }
    }
    sets.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect()
}

struct Search<'a> {
    inst: &'a Dense,
    /// For each element, indices of the sets containing it.
    containing: Vec<Vec<usize>>,
    best: Option<Vec<SetId>>,
    /// Only covers strictly smaller than this are accepted.
    bound: usize,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Dense) -> Self {
        let mut containing = vec![Vec::new(); inst.universe.len()];
        for (i, (_, s)) in inst.sets.iter().enumerate() {
            for e in s.iter() {
                containing[e].push(i);
            }
        }
        Search { inst, containing, best: None, bound: usize::MAX }
    }

    fn run(&mut self, uncovered: BitSet, chosen: &mut Vec<usize>) {
        let Some(e) = uncovered.first() else {
            if chosen.len() < self.bound {
                self.bound = chosen.len();
                self.best = Some(chosen.iter().map(|&i| self.inst.sets[i].0).collect());
            }
            return;
        };
        let remaining = uncovered.count();
        let max_gain = self.inst.sets.iter().map(|(_, s)| s.intersection_count(&uncovered)).max().unwrap_or(0);
        if max_gain == 0 || chosen.len() + remaining.div_ceil(max_gain) >= self.bound {
            return;
        }
        let mut options: Vec<(usize, usize)> = self.containing[e]
            .iter()
            .map(|&i| (i, self.inst.sets[i].1.intersection_count(&uncovered)))
            .collect();
        options.sort_by(|a, b| b.1.cmp(&a.1).then(self.inst.sets[a.0].0.cmp(&self.inst.sets[b.0].0)));
        for (i, _) in options {
            if chosen.len() + 1 >= self.bound {
                return;
            }
            let mut next = uncovered.clone();
            next.difference_with(&self.inst.sets[i].1);
            chosen.push(i);
            self.run(next, chosen);
            chosen.pop();
        }
    }
}
