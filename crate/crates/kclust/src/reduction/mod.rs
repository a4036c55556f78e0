//! From pseudo-solutions with `k + c` open facilities to true solutions,
//! plus the exhaustive optimum used as an oracle.

mod oracle;
mod sparse;

pub use oracle::{
    binomial, brute_force_opt, client_ball, distance_to_set, facility_ball, is_dense, is_sparse, BRUTE_FORCE_LIMIT, XI,
};
pub use sparse::{
    reduce_to_sparse, solve_sparse, PseudoSolution, ReductionConfig, SparseOutcome, SubInstance, PAIR_ENUMERATION_LIMIT,
    REDUCE_FACILITY_LIMIT,
};

use serde::Serialize;

use crate::cost::integral_cost;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::IntegralSolution;

/// Largest `δ < 1/6` with `((ξ+δ)/(ξ−δ))^p ≤ α`.
pub fn reduction_delta(alpha: f64, p: f64) -> f64 {
    let r = alpha.powf(1.0 / p);
    let delta = XI * (r - 1.0) / (r + 1.0);
    delta.min(1.0 / 6.0 - 1e-12)
}

/// `t = ⌈(2/(δξ))^p · 4αc/ε⌉`.
pub fn reduction_depth(alpha: f64, p: f64, c: usize, eps: f64) -> u64 {
    let delta = reduction_delta(alpha, p);
    ((2.0 / (delta * XI)).powf(p) * 4.0 * alpha * c as f64 / eps - 1e-9).ceil().max(1.0) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionOutcome {
    pub solution: IntegralSolution,
    pub delta: f64,
    pub t: u64,
    /// Sub-instances examined.
    pub candidates: usize,
    /// Index of the winning sub-instance, `None` when the input already had k facilities.
    pub winner: Option<usize>,
}

/// Turns a pseudo-solution into one with at most k facilities.
///
/// Every sub-instance from `reduce_to_sparse` gets a pseudo-solution from
/// `solver` (indices local to the sub-instance) which is then repaired by
/// `solve_sparse` with density threshold `opt_estimate / t`; the cheapest
/// result wins. A pseudo-solution that already fits in k is returned as is.
pub fn pseudo_to_true<S>(
    inst: &Instance,
    pseudo: &PseudoSolution,
    alpha: f64,
    eps: f64,
    opt_estimate: f64,
    mut solver: S,
) -> Result<ReductionOutcome>
where
    S: FnMut(&Instance, &SubInstance) -> Result<Vec<usize>>,
{
    if !(alpha >= 1.0 && eps > 0.0) {
        return Err(Error::Config(format!("need alpha >= 1 and eps > 0, got {alpha}, {eps}")));
    }
    let k = inst.k();
    let delta = reduction_delta(alpha, inst.p());
    let c = pseudo.surplus(k);
    if c == 0 {
        return Ok(ReductionOutcome {
            solution: integral_cost(inst, &pseudo.open)?,
            delta,
            t: 0,
            candidates: 0,
            winner: None,
        });
    }
    let t = reduction_depth(alpha, inst.p(), c, eps);
    let depth = usize::try_from(t).unwrap_or(usize::MAX);
    let subs = reduce_to_sparse(inst, depth)?;
    let mut best: Option<(IntegralSolution, usize)> = None;
    for (idx, sub) in subs.iter().enumerate() {
        let local = sub.instance(inst)?;
        let open = solver(&local, sub)?;
        let local_pseudo = PseudoSolution::new(&local, &open)?;
        let chosen = if local_pseudo.open.len() <= k {
            local_pseudo.open.clone()
        } else {
            let cfg = ReductionConfig::new(delta, t, local_pseudo.surplus(k), opt_estimate / t as f64)?;
            solve_sparse(&local, &local_pseudo, &cfg)?.solution.open
        };
        let sol = integral_cost(inst, &sub.to_parent(&chosen))?;
        if best.as_ref().is_none_or(|(b, _)| sol.total_cost < b.total_cost) {
            best = Some((sol, idx));
        }
    }
    let (solution, winner) = best.ok_or_else(|| Error::Infeasible("no sub-instance keeps k facilities".into()))?;
    Ok(ReductionOutcome { solution, delta, t, candidates: subs.len(), winner: Some(winner) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_for_median_with_alpha_two() {
        assert!((reduction_delta(2.0, 1.0) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn delta_is_clamped() {
        assert!(reduction_delta(100.0, 1.0) < 1.0 / 6.0);
    }

    #[test]
    fn fitting_pseudo_solution_is_kept() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let inst = Instance::euclidean(&pts, &pts, 1, 1.0).unwrap();
        let t = PseudoSolution::new(&inst, &[1]).unwrap();
        let out = pseudo_to_true(&inst, &t, 2.0, 0.25, 2.0, |_, _| unreachable!()).unwrap();
        assert_eq!(out.solution.open, vec![1]);
        assert_eq!(out.winner, None);
    }

    #[test]
    fn oracle_solver_recovers_the_optimum() {
        let pts = vec![vec![0.0], vec![1.0], vec![5.0], vec![6.0], vec![20.0]];
        let inst = Instance::euclidean(&pts, &pts, 2, 1.0).unwrap();
        let opt = brute_force_opt(&inst).unwrap();
        let t = PseudoSolution::new(&inst, &[0, 2, 4]).unwrap();
        let out = pseudo_to_true(&inst, &t, 2.0, 0.25, opt.total_cost, |local, _| {
            let mut s = brute_force_opt(local)?.open;
            s.push((s[0] + 1) % local.n_facilities());
            Ok(s)
        })
        .unwrap();
        assert!(out.solution.open.len() <= 2);
        assert!(out.solution.total_cost <= 2.25 * opt.total_cost + 1e-9);
    }
}
