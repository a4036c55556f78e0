use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::cost::client_costs;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::FractionalSolution;

pub const DEFAULT_ACCURACY: f64 = 1e-7;

/// Entries this close to 0 or 1 are snapped.
const SNAP: f64 = 1e-12;

/// Solves the standard relaxation
///
/// ```text
/// min  Σ d^p(i,j) x_ij
/// s.t. Σ_i y_i <= k,  Σ_i x_ij = 1,  0 <= x_ij <= y_i <= 1
/// ```
///
/// and projects the solver output onto the feasible region. If the projection
/// moves the objective by more than `accuracy` (relative) the solve is
/// reported as failed.
pub fn solve_relaxation(inst: &Instance, accuracy: f64) -> Result<FractionalSolution> {
    if !(accuracy > 0.0) {
        return Err(Error::Config(format!("LP accuracy must be positive, got {accuracy}")));
    }
    let (nc, nf) = (inst.n_clients(), inst.n_facilities());
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let y: Vec<_> = (0..nf).map(|_| pb.add_var(0.0, (0.0, 1.0))).collect();
    let x: Vec<Vec<_>> = (0..nc)
        .map(|j| (0..nf).map(|i| pb.add_var(inst.cost(j, i), (0.0, 1.0))).collect())
        .collect();
    let budget: Vec<_> = y.iter().map(|&v| (v, 1.0)).collect();
    pb.add_constraint(budget.as_slice(), ComparisonOp::Le, inst.k() as f64);
    for row in &x {
        let cover: Vec<_> = row.iter().map(|&v| (v, 1.0)).collect();
        pb.add_constraint(cover.as_slice(), ComparisonOp::Eq, 1.0);
    }
    for row in &x {
        for (i, &v) in row.iter().enumerate() {
            pb.add_constraint([(v, 1.0), (y[i], -1.0)], ComparisonOp::Le, 0.0);
        }
    }
    let raw = pb.solve().map_err(|e| Error::Solver { message: e.to_string(), residual: f64::NAN })?;
    let raw_objective = raw.objective();
    let raw_y: Vec<f64> = y.iter().map(|&v| raw[v]).collect();
    let raw_x: Vec<Vec<f64>> = x.iter().map(|row| row.iter().map(|&v| raw[v]).collect()).collect();

    let (sol, residual) = repair(inst, raw_y, raw_x)?;
    let objective: f64 = client_costs(inst, &sol).iter().sum();
    let gap = (objective - raw_objective).abs() / raw_objective.abs().max(1e-12);
    if gap > accuracy && (objective - raw_objective).abs() > 1e-12 {
        return Err(Error::Solver {
            message: format!("repair moved objective from {raw_objective} to {objective}"),
            residual,
        });
    }
    Ok(sol)
}

/// Clip `y` into [0,1] under the budget, clip `x` into [0, y_i], then bring
/// each row back to sum 1. Returns the largest single adjustment.
pub fn repair(inst: &Instance, mut y: Vec<f64>, x: Vec<Vec<f64>>) -> Result<(FractionalSolution, f64)> {
    let mut residual: f64 = 0.0;
    for v in &mut y {
        let c = v.clamp(0.0, 1.0);
        let c = if c < SNAP {
            0.0
        } else if c > 1.0 - SNAP {
            1.0
        } else {
            c
        };
        residual = residual.max((c - *v).abs());
        *v = c;
    }
    let total: f64 = y.iter().sum();
    let k = inst.k() as f64;
    if total > k {
        let scale = k / total;
        for v in &mut y {
            residual = residual.max(*v * (1.0 - scale));
            *v *= scale;
        }
    }
    let mut rows = Vec::with_capacity(x.len());
    for (j, raw_row) in x.into_iter().enumerate() {
        let mut row: Vec<f64> = raw_row
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let c = v.clamp(0.0, y[i]);
                let c = if c < SNAP { 0.0 } else { c };
                residual = residual.max((c - v).abs());
                c
            })
            .collect();
        let sum: f64 = row.iter().sum();
        if sum > 1.0 {
            for v in &mut row {
                *v /= sum;
            }
            residual = residual.max(sum - 1.0);
        } else if sum < 1.0 {
            let mut missing = 1.0 - sum;
            residual = residual.max(missing);
            for i in inst.facilities_by_distance(j) {
                if missing <= 0.0 {
                    break;
                }
                let add = (y[i] - row[i]).max(0.0).min(missing);
                row[i] += add;
                missing -= add;
            }
            if missing > 1e-9 {
                return Err(Error::Solver {
                    message: format!("client {j} cannot be covered: opening short by {missing}"),
                    residual,
                });
            }
        }
        rows.push(row.iter().enumerate().filter(|e| *e.1 > 0.0).map(|(i, &v)| (i, v)).collect());
    }
    Ok((FractionalSolution { y, x: rows }, residual))
}
