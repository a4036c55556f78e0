use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::metric::pow;

/// Largest facility count for which one step is enumerated exactly.
pub const ENUMERATION_LIMIT: usize = 8;

/// Progress of one client: alive part of F_j and the backup distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientState {
    pub alive: Vec<usize>,
    /// Distance to the closest integrally open facility, or infinity.
    pub backup: f64,
}

/// `(1 − mass)·b^p` with `0·∞ = 0`.
fn backup_term(mass_left: f64, b: f64, p: f64) -> f64 {
    if mass_left.abs() <= 1e-12 {
        0.0
    } else {
        mass_left * pow(b, p)
    }
}

/// `α Σ_{i∈S} y_i d_i^p + (1 − y(S)) b^p`; `dist[i]` is the distance from the
/// client to facility i.
pub fn potential_f(alive: &[usize], backup: f64, y: &[f64], dist: &[f64], alpha: f64, p: f64) -> f64 {
    let served: f64 = alive.iter().map(|&i| y[i] * pow(dist[i], p)).sum();
    let mass: f64 = alive.iter().map(|&i| y[i]).sum();
    alpha * served + backup_term(1.0 - mass, backup, p)
}

/// `(1+ε)(α/Δ Σ_{c∈S} d_c^p + (1 + 2ε^{c5} − |S|/Δ) b^p)` over a multiset of
/// copies given by their distances.
pub fn potential_f_new(copy_dists: &[f64], backup: f64, eps: f64, delta: usize, c5: u32, alpha: f64, p: f64) -> f64 {
    let d = delta as f64;
    let served: f64 = copy_dists.iter().map(|&x| pow(x, p)).sum();
    let coef = 1.0 + 2.0 * eps.powi(c5 as i32) - copy_dists.len() as f64 / d;
    let tail = if backup.is_infinite() && coef <= 1e-12 { 0.0 } else { coef * pow(backup, p) };
    (1.0 + eps) * (alpha / d * served + tail)
}

/// Exact expectation of the potential after one naive iteration (facility
/// drawn proportionally to `y'` over all of F) against its current value.
///
/// Returns `(lhs, rhs)`: the expected successor value and `f(S, b)`.
pub fn one_step_potential_check(
    state: &ClientState,
    g: &WeightedGraph,
    yprime: &[f64],
    dist: &[f64],
    alpha: f64,
    p: f64,
) -> Result<(f64, f64)> {
    if yprime.len() > ENUMERATION_LIMIT {
        return Err(Error::Size(format!(
            "{} facilities exceed the exact enumeration limit of {ENUMERATION_LIMIT}",
            yprime.len()
        )));
    }
    let rhs = potential_f(&state.alive, state.backup, yprime, dist, alpha, p);
    let total: f64 = yprime.iter().sum();
    let mut lhs = 0.0;
    for (chosen, &yc) in yprime.iter().enumerate() {
        if yc <= 0.0 {
            continue;
        }
        let pr_chosen = yc / total;
        if state.alive.contains(&chosen) {
            lhs += pr_chosen * pow(dist[chosen], p);
            continue;
        }
        let backup = state.backup.min(dist[chosen]);
        let coins: Vec<(usize, f64)> = g.out_edges[chosen]
            .iter()
            .filter(|(t, _)| state.alive.contains(t))
            .map(|&(t, w)| (t, (w / yc).min(1.0)))
            .collect();
        for mask in 0u32..(1 << coins.len()) {
            let mut pr = 1.0;
            let mut alive: Vec<usize> = Vec::with_capacity(state.alive.len());
            for (bit, &(_, q)) in coins.iter().enumerate() {
                pr *= if mask >> bit & 1 == 1 { q } else { 1.0 - q };
            }
            if pr == 0.0 {
                continue;
            }
            for &i in &state.alive {
                let gone = coins.iter().enumerate().any(|(bit, &(t, _))| t == i && mask >> bit & 1 == 1);
                if !gone {
                    alive.push(i);
                }
            }
            lhs += pr_chosen * pr * potential_f(&alive, backup, yprime, dist, alpha, p);
        }
    }
    Ok((lhs, rhs))
}
