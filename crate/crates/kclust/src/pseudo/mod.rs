//! Copy-based iterative rounding to `k + O(1)` open facilities.
//!
//! An opening that is a multiple of `1/Δ` becomes a multiset of copies, each
//! worth `1/Δ`. Every iteration runs an unbalanced or a balanced update with
//! probability 1/2; afterwards the residual opening is finished by a weighted
//! k-center rounding.

mod kcenter;
mod state;
mod update;

pub use kcenter::{audit_kcenter, kcenter_finish, KCenterInput, KCenterOutcome};
pub use state::{RoundingState, UpdateEvent};
pub use update::{balanced_selection, balanced_update, unbalanced_update, NodeKind, PlanNode, UnbalancedPlan};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_copy_graph, partition};
use crate::instance::Instance;
use crate::preprocess::ScaleConfig;
use crate::solution::IntegralSolution;

/// Runs `cfg.iterations` update steps (fewer if fewer than Δ copies remain)
/// and returns the residual opening with its covering radii.
pub fn iterate<R: Rng>(state: &mut RoundingState, inst: &Instance, cfg: &ScaleConfig, rng: &mut R) -> Result<KCenterInput> {
    let delta = state.delta();
    for _ in 0..cfg.iterations {
        if state.copies.len() < delta {
            state.events.push(UpdateEvent::Halted { copies: state.copies.len() });
            break;
        }
        let g = build_copy_graph(&state.copies.copies, inst, delta)?;
        let part = partition(&g);
        let event = if rng.gen::<bool>() {
            unbalanced_update(state, &g, &part, cfg, rng)?
        } else {
            balanced_update(state, &g, &part, cfg, rng)?
        };
        state.events.push(event);
        state.iteration += 1;
    }
    KCenterInput::new(inst, state.ybar(inst.n_facilities()))
}

/// Distance from each client to the farthest of its Δ nearest initial copies.
pub fn initial_cover_radius(inst: &Instance, units: &[u64], delta: usize) -> Result<Vec<f64>> {
    (0..inst.n_clients())
        .map(|j| {
            let mut have = 0u64;
            for i in inst.facilities_by_distance(j) {
                have += units[i];
                if have >= delta as u64 {
                    return Ok(inst.d_cf(j, i));
                }
            }
            Err(Error::Infeasible(format!("only {have} copies, fewer than delta = {delta}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientOutcome {
    pub cost: f64,
    pub distance: f64,
    /// Covering radius of the initial copies.
    pub initial_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoRun {
    pub k: usize,
    pub forced_count: usize,
    pub final_open_count: usize,
    /// `#forced + max(0, |ȳ|₁ − k)` with forced facilities counted as 1 in ȳ.
    pub budget_used: f64,
    pub within_budget: bool,
    pub iterations_run: usize,
    pub kappa_checks: usize,
    /// Net change over Δ of every sampled unbalanced step.
    pub z_values: Vec<f64>,
    pub events: Vec<UpdateEvent>,
    pub per_client: Vec<ClientOutcome>,
    /// Open facility entries of `inst`.
    pub solution: IntegralSolution,
}

/// Full copy-based rounding from a `1/Δ`-integral opening given as unit
/// counts. Asserts the k-center properties and that every client ends within
/// three times its initial covering radius.
pub fn pseudo_round<R: Rng>(inst: &Instance, units: &[u64], cfg: &ScaleConfig, rng: &mut R) -> Result<PseudoRun> {
    if units.len() != inst.n_facilities() {
        return Err(Error::Input(format!("{} unit counts for {} facilities", units.len(), inst.n_facilities())));
    }
    let delta = cfg.delta;
    if let Some(i) = units.iter().position(|&u| u > delta as u64) {
        return Err(Error::Input(format!("facility {i} has {} units, more than delta = {delta}", units[i])));
    }
    let radius0 = initial_cover_radius(inst, units, delta)?;
    let mut state = RoundingState::new(units, delta)?;
    let kc = iterate(&mut state, inst, cfg, rng)?;
    let out = kcenter_finish(&kc, inst)?;
    if let Some(v) = audit_kcenter(&kc, inst, &out).first() {
        return Err(Error::Invariant(format!("k-center rounding: {v}")));
    }

    let sol = out.solution;
    let mut per_client = Vec::with_capacity(inst.n_clients());
    for (j, &r0) in radius0.iter().enumerate() {
        let distance = inst.d_cf(j, sol.assignment[j]);
        if distance > 3.0 * r0 * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::Invariant(format!("client {j} connects at {distance} > 3 * initial radius {r0}")));
        }
        per_client.push(ClientOutcome { cost: inst.pow(distance), distance, initial_radius: r0 });
    }

    let k = inst.k();
    let budget_used = state.forced.len() as f64 + (kc.total() - k as f64).max(0.0);
    let z_values = state
        .events
        .iter()
        .filter_map(|e| match e {
            UpdateEvent::Unbalanced { z, heavy_removed, fictitious, selected, .. }
                if *heavy_removed + *fictitious + *selected > 0 || *z != 0.0 =>
            {
                Some(*z)
            }
            _ => None,
        })
        .collect();
    Ok(PseudoRun {
        k,
        forced_count: state.forced.len(),
        final_open_count: sol.open.len(),
        budget_used,
        within_budget: budget_used <= cfg.budget as f64 + 1e-9,
        iterations_run: state.iteration,
        kappa_checks: state.kappa_checks,
        z_values,
        events: state.events,
        per_client,
        solution: sol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, tag};

    fn line(points: &[f64], k: usize) -> Instance {
        let pts: Vec<Vec<f64>> = points.iter().map(|&v| vec![v]).collect();
        Instance::euclidean(&pts, &pts, k, 1.0).unwrap()
    }

    #[test]
    fn zero_iterations_keep_the_opening() {
        let inst = line(&[0.0, 1.0, 5.0], 2);
        let cfg = ScaleConfig::for_p(1.0).unwrap().with_delta(4).with_iterations(0);
        let mut state = RoundingState::new(&[2, 2, 4], 4).unwrap();
        let kc = iterate(&mut state, &inst, &cfg, &mut stream(0, tag::PSEUDO, 0)).unwrap();
        assert_eq!(kc.ybar, vec![0.5, 0.5, 1.0]);
        assert!(state.forced.is_empty());
    }

    #[test]
    fn integral_opening_stays_integral() {
        let inst = line(&[0.0, 1.0, 5.0, 9.0], 2);
        let cfg = ScaleConfig::for_p(1.0).unwrap().with_delta(4).with_iterations(50);
        for t in 0..20 {
            let mut state = RoundingState::new(&[4, 0, 4, 0], 4).unwrap();
            let kc = iterate(&mut state, &inst, &cfg, &mut stream(1, tag::PSEUDO, t)).unwrap();
            assert!(kc.ybar.iter().all(|&v| v == 0.0 || v == 1.0), "{:?}", kc.ybar);
        }
    }

    #[test]
    fn run_respects_backup_distance() {
        let inst = line(&[0.0, 1.0, 2.0, 6.0, 7.0, 12.0], 2);
        let cfg = ScaleConfig::for_p(1.0).unwrap().with_delta(4).with_force_threshold(0.0).with_iterations(30);
        for t in 0..50 {
            let run = pseudo_round(&inst, &[1, 2, 1, 2, 1, 1], &cfg, &mut stream(2, tag::PSEUDO, t)).unwrap();
            assert!(run.final_open_count >= 1);
            for c in &run.per_client {
                assert!(c.distance <= 3.0 * c.initial_radius + 1e-12);
            }
        }
    }
}
