use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{CopySet, FacilityCopy};

/// What one iteration did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum UpdateEvent {
    /// Unbalanced step with small A: every unbalanced copy's facility forced.
    ForcedAll { a: f64, newly_forced: usize, removed_copies: usize },
    /// Unbalanced step with sampling. `z` is the net change of |F'| over Δ.
    Unbalanced {
        a: f64,
        heavy_removed: usize,
        newly_forced: usize,
        fictitious: usize,
        selected: usize,
        z: f64,
    },
    Balanced { eligible: usize, selected: usize },
    /// Fewer than Δ copies remain; no further graph can be built.
    Halted { copies: usize },
}

/// Copy multiset, forced facilities and the event log of one rounding run.
#[derive(Debug, Clone)]
pub struct RoundingState {
    pub copies: CopySet,
    pub forced: BTreeSet<usize>,
    /// Ids below this belong to the initial multiset.
    pub initial_ids: u64,
    pub iteration: usize,
    pub events: Vec<UpdateEvent>,
    /// Bounded-difference checks performed on unbalanced steps.
    pub kappa_checks: usize,
}

impl RoundingState {
    /// `units[i]` initial copies of facility i.
    pub fn new(units: &[u64], delta: usize) -> Result<Self> {
        let copies = CopySet::new(units, delta)?;
        let initial_ids = copies.next_id();
        Ok(RoundingState { copies, forced: BTreeSet::new(), initial_ids, iteration: 0, events: Vec::new(), kappa_checks: 0 })
    }

    pub fn delta(&self) -> usize {
        self.copies.delta
    }

    /// Removes the flagged copies and adds Δ fresh copies of each facility in
    /// `opened`. Returns (removed, added).
    pub(crate) fn replace(&mut self, removed: &[bool], opened: &BTreeSet<usize>) -> (usize, usize) {
        let before = self.copies.copies.len();
        let kept: Vec<FacilityCopy> =
            self.copies.copies.iter().zip(removed).filter(|(_, &r)| !r).map(|(c, _)| *c).collect();
        let removed_count = before - kept.len();
        self.copies.copies = kept;
        let delta = self.copies.delta;
        for &f in opened {
            for _ in 0..delta {
                let c = self.copies.fresh(f);
                self.copies.copies.push(c);
            }
        }
        (removed_count, opened.len() * delta)
    }

    /// ȳ over `n` facilities: copies/Δ, with forced facilities set to 1.
    pub fn ybar(&self, n: usize) -> Vec<f64> {
        let delta = self.copies.delta as f64;
        let mut y: Vec<f64> = self.copies.counts(n).iter().map(|&c| c as f64 / delta).collect();
        for &f in &self.forced {
            y[f] = 1.0;
        }
        y
    }
}
