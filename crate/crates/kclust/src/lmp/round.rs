use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_weighted, SourceOrder, WeightedGraph};
use crate::instance::Instance;
use crate::sample::sample_proportional;

/// Openings within this distance of 0 or 1 are snapped.
const SNAP: f64 = 1e-12;

/// Cap on redraws within a single conditional-sampling step.
const REDRAW_CAP: u64 = 10_000_000;

pub const NAIVE_ITERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SamplingMode {
    /// Draws only facilities whose selection can change the state and
    /// redraws when the coin flips change nothing.
    Conditional,
    /// Draws from all positive entries; iterations that change nothing are
    /// executed as-is, up to `NAIVE_ITERATION_CAP`.
    Naive,
}

#[derive(Debug, Clone, Copy)]
pub struct LmpOptions {
    pub mode: SamplingMode,
    /// Assert zero drift at every state.
    pub check_drift: bool,
    /// Keep a copy of y' after every iteration.
    pub record_states: bool,
}

impl Default for LmpOptions {
    fn default() -> Self {
        LmpOptions { mode: SamplingMode::Conditional, check_drift: false, record_states: false }
    }
}

/// One line of a trace dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpIteration {
    pub chosen: usize,
    /// Out-neighbors closed by their coin flips (sorted, may include `chosen`).
    pub removed: Vec<usize>,
    /// Discarded draws that would have changed nothing.
    pub redraws: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HappyRecord {
    pub facility: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmpRun {
    pub initial: Vec<f64>,
    pub trace: Vec<LmpIteration>,
    /// y' after each iteration when recording is on.
    pub states: Vec<Vec<f64>>,
    pub open: Vec<usize>,
    /// Per client, the facility of F_j that was selected first.
    pub happy: Vec<Option<HappyRecord>>,
    pub max_abs_drift: f64,
}

impl LmpRun {
    /// Happy cost where available, otherwise the nearest open facility.
    pub fn client_costs(&self, inst: &Instance) -> Vec<f64> {
        (0..inst.n_clients())
            .map(|j| match self.happy.get(j).copied().flatten() {
                Some(h) => h.cost,
                None => self.nearest_open_cost(inst, j),
            })
            .collect()
    }

    pub fn nearest_open_cost(&self, inst: &Instance, j: usize) -> f64 {
        self.open.iter().map(|&i| inst.cost(j, i)).fold(f64::INFINITY, f64::min)
    }
}

/// Rounds `y` to an integral opening; returns the open facilities.
pub fn lmp_round<R: Rng>(y: &[f64], order: &SourceOrder, rng: &mut R) -> Result<Vec<usize>> {
    let run = run_lmp(y, order, None, LmpOptions::default(), rng, |_, _| {})?;
    Ok(run.open)
}

/// `(1/|y'|₁) Σ_{i'} y'_{i'} (Σ_{i∈δ⁺(i')} (w/y'_{i'}) y'_i − 1)`.
pub fn expected_drift(g: &WeightedGraph, yprime: &[f64]) -> f64 {
    let total: f64 = yprime.iter().sum();
    let mut drift = 0.0;
    for (src, &ys) in yprime.iter().enumerate() {
        if ys <= 0.0 {
            continue;
        }
        let gain: f64 = g.out_edges[src].iter().map(|&(t, w)| w / ys * yprime[t]).sum();
        drift += ys * (gain - 1.0);
    }
    drift / total
}

/// Client sets used for happy-connection bookkeeping.
pub struct HappyTracking<'a> {
    pub inst: &'a Instance,
    /// F_j per client, as facility indices of `inst`.
    pub sets: &'a [Vec<usize>],
}

fn is_fractional(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

fn snap(y: &mut [f64]) {
    for v in y {
        if *v < SNAP {
            *v = 0.0;
        } else if *v > 1.0 - SNAP {
            *v = 1.0;
        }
    }
}

/// Iterative rounding with full bookkeeping. `observe` sees every state
/// (before the step) together with its neighborhood graph.
pub fn run_lmp<R, F>(
    y: &[f64],
    order: &SourceOrder,
    happy: Option<HappyTracking<'_>>,
    opts: LmpOptions,
    rng: &mut R,
    mut observe: F,
) -> Result<LmpRun>
where
    R: Rng,
    F: FnMut(&[f64], &WeightedGraph),
{
    let n = y.len();
    let mut cur = y.to_vec();
    snap(&mut cur);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut happy_rec: Vec<Option<HappyRecord>> = Vec::new();
    if let Some(h) = &happy {
        happy_rec = vec![None; h.sets.len()];
        for (j, set) in h.sets.iter().enumerate() {
            for &i in set {
                members[i].push(j);
            }
            if let Some(&i) = set.iter().find(|&&i| cur[i] == 1.0) {
                happy_rec[j] = Some(HappyRecord { facility: i, cost: h.inst.cost(j, i) });
            }
        }
    }

    let mut trace = Vec::new();
    let mut states = Vec::new();
    let mut max_abs_drift: f64 = 0.0;
    let mut naive_steps: u64 = 0;
    let mut weights = vec![0.0; n];
    let mut removed = Vec::new();

    while cur.iter().any(|&v| is_fractional(v)) {
        let g = build_weighted(&cur, order)?;
        observe(&cur, &g);
        if opts.check_drift {
            let d = expected_drift(&g, &cur);
            max_abs_drift = max_abs_drift.max(d.abs());
            if d.abs() > 1e-9 {
                return Err(Error::Invariant(format!("expected drift {d:e} at iteration {}", trace.len())));
            }
        }

        for i in 0..n {
            weights[i] = match opts.mode {
                SamplingMode::Naive => cur[i],
                SamplingMode::Conditional => {
                    if is_fractional(cur[i]) {
                        cur[i]
                    } else if cur[i] == 1.0 && g.out_edges[i].iter().any(|&(t, _)| is_fractional(cur[t])) {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
        let total: f64 = weights.iter().sum();

        let mut redraws = 0u64;
        let chosen = loop {
            let chosen = sample_proportional(&weights, total, rng);
            removed.clear();
            let yc = cur[chosen];
            for &(t, w) in &g.out_edges[chosen] {
                if rng.gen::<f64>() < w / yc {
                    removed.push(t);
                }
            }
            let useful = is_fractional(yc) || removed.iter().any(|&t| t != chosen && is_fractional(cur[t]));
            if useful || opts.mode == SamplingMode::Naive {
                break chosen;
            }
            redraws += 1;
            if redraws >= REDRAW_CAP {
                return Err(Error::Invariant(format!("conditional sampling made no progress in {REDRAW_CAP} draws")));
            }
        };
        if opts.mode == SamplingMode::Naive {
            naive_steps += 1;
            if naive_steps > NAIVE_ITERATION_CAP {
                return Err(Error::Size(format!("naive rounding exceeded {NAIVE_ITERATION_CAP} iterations")));
            }
        }

        for &t in &removed {
            cur[t] = 0.0;
        }
        cur[chosen] = 1.0;
        if let Some(h) = &happy {
            for &j in &members[chosen] {
                if happy_rec[j].is_none() {
                    happy_rec[j] = Some(HappyRecord { facility: chosen, cost: h.inst.cost(j, chosen) });
                }
            }
        }
        trace.push(LmpIteration { chosen, removed: removed.clone(), redraws });
        if opts.record_states {
            states.push(cur.clone());
        }
    }

    let open = (0..n).filter(|&i| cur[i] == 1.0).collect();
    Ok(LmpRun { initial: y.to_vec(), trace, states, open, happy: happy_rec, max_abs_drift })
}
