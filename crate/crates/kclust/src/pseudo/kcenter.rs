use serde::Serialize;

use crate::cost::integral_cost;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::IntegralSolution;

const MASS_TOL: f64 = 1e-9;

/// Residual opening plus each client's covering radius: the least `r` with
/// `ȳ(ball(j, r)) ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KCenterInput {
    pub ybar: Vec<f64>,
    pub radius: Vec<f64>,
}

impl KCenterInput {
    pub fn new(inst: &Instance, ybar: Vec<f64>) -> Result<Self> {
        let radius = (0..inst.n_clients())
            .map(|j| {
                let mut mass = 0.0;
                for i in inst.facilities_by_distance(j) {
                    if ybar[i] <= 0.0 {
                        continue;
                    }
                    mass += ybar[i];
                    if mass >= 1.0 - MASS_TOL {
                        return Ok(inst.d_cf(j, i));
                    }
                }
                Err(Error::Infeasible(format!("client {j} sees total opening {mass} < 1")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(KCenterInput { ybar, radius })
    }

    pub fn total(&self) -> f64 {
        self.ybar.iter().sum()
    }

    fn is_integral_open(&self, i: usize) -> bool {
        self.ybar[i] >= 1.0 - MASS_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KCenterOutcome {
    pub solution: IntegralSolution,
    /// Clients picked by the filtering pass, in selection order.
    pub selected: Vec<usize>,
}

/// Opens every integral facility, then filters the uncovered clients by
/// ascending radius, keeping a client when its ball cannot meet the ball
/// of any kept client, and opens the nearest positive facility in each kept
/// ball. Every client ends within three times its radius.
pub fn kcenter_finish(kc: &KCenterInput, inst: &Instance) -> Result<KCenterOutcome> {
    let mut open: Vec<usize> = (0..inst.n_facilities()).filter(|&i| kc.is_integral_open(i)).collect();
    let mut uncovered: Vec<usize> = (0..inst.n_clients())
        .filter(|&j| !open.iter().any(|&i| inst.d_cf(j, i) <= kc.radius[j]))
        .collect();
    uncovered.sort_by(|&a, &b| kc.radius[a].total_cmp(&kc.radius[b]).then(a.cmp(&b)));

    let mut selected: Vec<usize> = Vec::new();
    for j in uncovered {
        if selected.iter().all(|&s| inst.d_cc(j, s) > kc.radius[j] + kc.radius[s]) {
            let facility = (0..inst.n_facilities())
                .filter(|&i| kc.ybar[i] > 0.0 && inst.d_cf(j, i) <= kc.radius[j])
                .min_by(|&a, &b| inst.d_cf(j, a).total_cmp(&inst.d_cf(j, b)).then(a.cmp(&b)))
                .ok_or_else(|| Error::Invariant(format!("client {j} has no positive facility within its radius")))?;
            open.push(facility);
            selected.push(j);
        }
    }
    open.sort_unstable();
    open.dedup();
    let solution = integral_cost(inst, &open)?;
    Ok(KCenterOutcome { solution, selected })
}

/// Checks the three output properties and the disjointness of the kept
/// balls; returns violations.
pub fn audit_kcenter(kc: &KCenterInput, inst: &Instance, out: &KCenterOutcome) -> Vec<String> {
    let mut bad = Vec::new();
    let open = &out.solution.open;
    let bound = (kc.total() - MASS_TOL).ceil().max(0.0) as usize;
    if open.len() > bound {
        bad.push(format!("{} facilities open, more than ceil(|ybar|) = {bound}", open.len()));
    }
    for i in (0..inst.n_facilities()).filter(|&i| kc.is_integral_open(i)) {
        if open.binary_search(&i).is_err() {
            bad.push(format!("integral facility {i} was not opened"));
        }
    }
    for j in 0..inst.n_clients() {
        let d = inst.d_cf(j, out.solution.assignment[j]);
        if d > 3.0 * kc.radius[j] * (1.0 + 1e-12) + 1e-12 {
            bad.push(format!("client {j} connects at {d} > 3 * {}", kc.radius[j]));
        }
    }
    let balls: Vec<Vec<usize>> = out
        .selected
        .iter()
        .map(|&j| {
            (0..inst.n_facilities())
                .filter(|&i| kc.ybar[i] > 0.0 && !kc.is_integral_open(i) && inst.d_cf(j, i) <= kc.radius[j])
                .collect()
        })
        .collect();
    for (x, b) in balls.iter().enumerate() {
        let mass: f64 = b.iter().map(|&i| kc.ybar[i]).sum();
        if mass < 1.0 - MASS_TOL {
            bad.push(format!("kept client {} has ball mass {mass}", out.selected[x]));
        }
        for c in &balls[x + 1..] {
            if b.iter().any(|i| c.contains(i)) {
                bad.push(format!("kept client {} shares a facility with a later one", out.selected[x]));
            }
        }
    }
    let fractional: f64 = (0..inst.n_facilities()).filter(|&i| !kc.is_integral_open(i)).map(|i| kc.ybar[i]).sum();
    if out.selected.len() as f64 > (fractional + MASS_TOL).floor() {
        bad.push(format!("{} kept clients exceed residual mass {fractional}", out.selected.len()));
    }
    bad
}
