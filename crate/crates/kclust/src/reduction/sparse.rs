use std::collections::HashSet;

use itertools::Itertools;
use serde::Serialize;

use super::oracle::{binomial, client_ball, facility_ball, XI};
use crate::cost::{integral_cost, open_set_cost};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::IntegralSolution;

/// Facility count above which the sparse-instance enumeration refuses to run.
pub const REDUCE_FACILITY_LIMIT: usize = 12;

/// Largest number of (D, V) pairs the sparse solver will try.
pub const PAIR_ENUMERATION_LIMIT: u128 = 1_000_000;

/// A facility subset of a parent instance, with the pair sequence that cut it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubInstance {
    /// Facility indices of the parent, ascending.
    pub facilities: Vec<usize>,
    /// `(i, i')` pairs whose strict balls `FBall(i, d(i, i'))` were removed.
    pub pairs: Vec<(usize, usize)>,
}

impl SubInstance {
    pub fn instance(&self, parent: &Instance) -> Result<Instance> {
        parent.with_facility_entries(&self.facilities)
    }

    /// Parent indices of facilities given in sub-instance indices.
    pub fn to_parent(&self, local: &[usize]) -> Vec<usize> {
        local.iter().map(|&i| self.facilities[i]).collect()
    }
}

/// All facility sets reachable by removing the strict balls of at most `t`
/// pairs `(i, i')`, where `i` is still present when its pair is applied and
/// `i'` is a present facility other than `i`. Sets are deduplicated; sets
/// with fewer than `k` facilities are dropped. The first output is the full
/// instance.
pub fn reduce_to_sparse(inst: &Instance, t: usize) -> Result<Vec<SubInstance>> {
    let n = inst.n_facilities();
    if n > REDUCE_FACILITY_LIMIT {
        return Err(Error::Size(format!("{n} facilities exceed the reduction limit {REDUCE_FACILITY_LIMIT}")));
    }
    let k = inst.k();
    // ball[i][o]: bitmask of FBall(i, d(i, o))
    let ball: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|o| {
                    let r = inst.d_ff(i, o);
                    (0..n).filter(|&f| inst.d_ff(i, f) < r).fold(0u64, |m, f| m | 1 << f)
                })
                .collect()
        })
        .collect();
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut seen: HashSet<u64> = HashSet::new();
    seen.insert(full);
    let mut out = vec![(full, Vec::new())];
    let mut frontier = vec![0usize];
    for _ in 0..t.min(n) {
        let mut next = Vec::new();
        for &idx in &frontier {
            let (mask, pairs) = out[idx].clone();
            for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
                for o in (0..n).filter(|&o| o != i && mask >> o & 1 == 1) {
                    let reduced = mask & !ball[i][o];
                    if reduced != mask && seen.insert(reduced) {
                        let mut seq = pairs.clone();
                        seq.push((i, o));
                        out.push((reduced, seq));
                        next.push(out.len() - 1);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out
        .into_iter()
        .filter(|(mask, _)| mask.count_ones() as usize >= k)
        .map(|(mask, pairs)| SubInstance { facilities: (0..n).filter(|&f| mask >> f & 1 == 1).collect(), pairs })
        .collect())
}

/// Pseudo-solution: an open set that may exceed k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoSolution {
    pub open: Vec<usize>,
    pub cost: f64,
}

impl PseudoSolution {
    pub fn new(inst: &Instance, open: &[usize]) -> Result<Self> {
        let mut open = open.to_vec();
        open.sort_unstable();
        open.dedup();
        if open.is_empty() {
            return Err(Error::Input("pseudo-solution is empty".into()));
        }
        if let Some(&bad) = open.iter().find(|&&i| i >= inst.n_facilities()) {
            return Err(Error::Input(format!("pseudo-solution opens missing facility {bad}")));
        }
        let cost = open_set_cost(inst, &open);
        Ok(PseudoSolution { open, cost })
    }

    pub fn surplus(&self, k: usize) -> usize {
        self.open.len().saturating_sub(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionConfig {
    pub xi: f64,
    pub delta: f64,
    /// Bound on |V| in the enumeration (`|V| < t`).
    pub t: u64,
    /// Additive surplus of the pseudo-solution.
    pub c: usize,
    /// Density threshold A, normally `opt/t`.
    pub sparsity: f64,
}

impl ReductionConfig {
    pub fn new(delta: f64, t: u64, c: usize, sparsity: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0 / 6.0) {
            return Err(Error::Config(format!("delta = {delta} must lie in (0, 1/6)")));
        }
        if t == 0 {
            return Err(Error::Config("t must be positive".into()));
        }
        if !(sparsity >= 0.0) {
            return Err(Error::Config(format!("sparsity threshold {sparsity} must be nonnegative")));
        }
        Ok(ReductionConfig { xi: XI, delta, t, c, sparsity })
    }

    fn spread(&self, p: f64) -> f64 {
        (2.0 / (self.delta * self.xi)).powf(p)
    }

    /// Drop allowance `B = 2(A + cost(T)/t)(2/(δξ))^p`.
    pub fn drop_allowance(&self, cost_t: f64, p: f64) -> f64 {
        2.0 * (self.sparsity + cost_t / self.t as f64) * self.spread(p)
    }

    /// `max(cost(T) + cB, ((ξ+δ)/(ξ−δ))^p · opt)`.
    pub fn cost_bound(&self, cost_t: f64, opt: f64, p: f64) -> f64 {
        let ratio = ((self.xi + self.delta) / (self.xi - self.delta)).powf(p);
        (cost_t + self.c as f64 * self.drop_allowance(cost_t, p)).max(ratio * opt)
    }

    /// `t ≥ 2c(2/(δξ))^p`.
    pub fn meets_size_precondition(&self, p: f64) -> bool {
        self.t as f64 >= 2.0 * self.c as f64 * self.spread(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseOutcome {
    pub solution: IntegralSolution,
    /// Facilities removed by the greedy phase.
    pub dropped: Vec<usize>,
    /// Whether the (D, V) enumeration ran.
    pub enumerated: bool,
}

struct Anchor {
    facility: usize,
    candidates: Vec<usize>,
    clients: Vec<usize>,
}

/// Greedy drops while some drop costs at most B, then, if more than k
/// facilities remain, the best `V ∪ {f_i : i ∈ D}` over all `D ⊆ T'`,
/// `V ⊆ F` with `|D| + |V| = k` and `|V| < t`.
pub fn solve_sparse(inst: &Instance, pseudo: &PseudoSolution, cfg: &ReductionConfig) -> Result<SparseOutcome> {
    let k = inst.k();
    if pseudo.open.len() < k {
        return Err(Error::Input(format!("pseudo-solution opens {} < k = {k} facilities", pseudo.open.len())));
    }
    let b = cfg.drop_allowance(pseudo.cost, inst.p());
    let mut cur = pseudo.open.clone();
    let mut cur_cost = pseudo.cost;
    let mut dropped = Vec::new();
    while cur.len() > k {
        let mut best: Option<(f64, usize)> = None;
        for pos in 0..cur.len() {
            let rest: Vec<usize> = cur.iter().enumerate().filter(|&(q, _)| q != pos).map(|(_, &i)| i).collect();
            let c = open_set_cost(inst, &rest);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, pos));
            }
        }
        let (c, pos) = best.expect("nonempty");
        if c > cur_cost + b {
            break;
        }
        dropped.push(cur.remove(pos));
        cur_cost = c;
    }
    if cur.len() == k {
        return Ok(SparseOutcome { solution: integral_cost(inst, &cur)?, dropped, enumerated: false });
    }

    let n = inst.n_facilities();
    let mut total: u128 = 0;
    for d in 0..=cur.len().min(k) {
        let v = k - d;
        if (v as u64) < cfg.t {
            total += binomial(cur.len(), d) * binomial(n, v);
        }
    }
    if total > PAIR_ENUMERATION_LIMIT {
        return Err(Error::Size(format!("{total} (D, V) pairs exceed the limit {PAIR_ENUMERATION_LIMIT}")));
    }

    let anchors: Vec<Anchor> = cur
        .iter()
        .map(|&i| {
            let l = cur.iter().filter(|&&o| o != i).map(|&o| inst.d_ff(i, o)).fold(f64::INFINITY, f64::min);
            if l == 0.0 {
                Anchor { facility: i, candidates: vec![i], clients: Vec::new() }
            } else {
                Anchor { facility: i, candidates: facility_ball(inst, i, cfg.delta * l), clients: client_ball(inst, i, cfg.xi * l) }
            }
        })
        .collect();

    let mut best: Option<(f64, Vec<usize>)> = None;
    for d in 0..=cur.len().min(k) {
        let v = k - d;
        if (v as u64) >= cfg.t {
            continue;
        }
        for vset in (0..n).combinations(v) {
            for dset in (0..anchors.len()).combinations(d) {
                let mut s = vset.clone();
                for &a in &dset {
                    s.push(best_replacement(inst, &anchors[a], &vset));
                }
                let c = open_set_cost(inst, &s);
                if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                    best = Some((c, s));
                }
            }
        }
    }
    let (_, open) = best.ok_or_else(|| Error::Invariant("no (D, V) pair was enumerated".into()))?;
    Ok(SparseOutcome { solution: integral_cost(inst, &open)?, dropped, enumerated: true })
}

fn best_replacement(inst: &Instance, anchor: &Anchor, vset: &[usize]) -> usize {
    if anchor.candidates.len() == 1 {
        return anchor.candidates[0];
    }
    let to_v: Vec<f64> = anchor
        .clients
        .iter()
        .map(|&j| vset.iter().map(|&o| inst.cost(j, o)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut best = (f64::INFINITY, anchor.facility);
    for &f in &anchor.candidates {
        let c: f64 = anchor.clients.iter().zip(&to_v).map(|(&j, &dv)| inst.cost(j, f).min(dv)).sum();
        if c < best.0 || (c == best.0 && f < best.1) {
            best = (c, f);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64], k: usize, p: f64) -> Instance {
        let pts: Vec<Vec<f64>> = points.iter().map(|&v| vec![v]).collect();
        Instance::euclidean(&pts, &pts, k, p).unwrap()
    }

    #[test]
    fn zero_depth_returns_the_original() {
        let inst = line(&[0.0, 1.0, 4.0], 1, 1.0);
        let subs = reduce_to_sparse(&inst, 0).unwrap();
        assert_eq!(subs, vec![SubInstance { facilities: vec![0, 1, 2], pairs: vec![] }]);
    }

    #[test]
    fn one_pair_removes_a_strict_ball() {
        let inst = line(&[0.0, 1.0, 4.0], 1, 1.0);
        let subs = reduce_to_sparse(&inst, 1).unwrap();
        // pair (2, 0): ball of radius 4 around 4.0 removes 1.0 and 4.0
        assert!(subs.iter().any(|s| s.facilities == vec![0]));
        assert!(subs.iter().all(|s| s.facilities.iter().all(|&f| f < 3)));
        let distinct: HashSet<_> = subs.iter().map(|s| s.facilities.clone()).collect();
        assert_eq!(distinct.len(), subs.len());
    }

    #[test]
    fn exactly_k_is_returned_unchanged() {
        let inst = line(&[0.0, 1.0, 4.0], 2, 1.0);
        let t = PseudoSolution::new(&inst, &[0, 2]).unwrap();
        let cfg = ReductionConfig::new(0.1, 10, 0, 0.0).unwrap();
        let out = solve_sparse(&inst, &t, &cfg).unwrap();
        assert_eq!(out.solution.open, vec![0, 2]);
        assert!(!out.enumerated);
    }

    #[test]
    fn redundant_facility_is_dropped() {
        let inst = line(&[0.0, 0.5, 10.0], 2, 1.0);
        let t = PseudoSolution::new(&inst, &[0, 1, 2]).unwrap();
        let cfg = ReductionConfig::new(0.1, 1000, 1, 1.0).unwrap();
        let out = solve_sparse(&inst, &t, &cfg).unwrap();
        assert_eq!(out.solution.open.len(), 2);
        assert!(out.solution.total_cost <= t.cost + cfg.drop_allowance(t.cost, 1.0));
    }

    #[test]
    fn rejects_short_pseudo_solution() {
        let inst = line(&[0.0, 1.0, 4.0], 2, 1.0);
        let t = PseudoSolution::new(&inst, &[0]).unwrap();
        let cfg = ReductionConfig::new(0.1, 10, 0, 0.0).unwrap();
        assert!(matches!(solve_sparse(&inst, &t, &cfg), Err(Error::Input(_))));
    }

    #[test]
    fn delta_range_enforced() {
        assert!(ReductionConfig::new(1.0 / 6.0, 3, 1, 0.0).is_err());
        assert!(ReductionConfig::new(0.0, 3, 1, 0.0).is_err());
    }
}
