use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Absolute slack for LP feasibility checks.
pub const FEAS_TOL: f64 = 1e-9;

/// Opening vector `y` and sparse assignment `x` (per client, sorted by facility).
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    pub y: Vec<f64>,
    pub x: Vec<Vec<(usize, f64)>>,
}

impl FractionalSolution {
    /// Integral solution opening `open`, each client fully on its nearest.
    pub fn from_open_set(inst: &Instance, open: &[usize]) -> Result<Self> {
        let integral = crate::cost::integral_cost(inst, open)?;
        let mut y = vec![0.0; inst.n_facilities()];
        for &i in &integral.open {
            y[i] = 1.0;
        }
        let x = integral.assignment.iter().map(|&i| vec![(i, 1.0)]).collect();
        Ok(FractionalSolution { y, x })
    }

    pub fn total_opening(&self) -> f64 {
        self.y.iter().sum()
    }

    pub fn x_value(&self, j: usize, i: usize) -> f64 {
        self.x[j].iter().find(|(f, _)| *f == i).map_or(0.0, |e| e.1)
    }

    /// Checks every LP constraint; the error names the first violated one.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let nf = inst.n_facilities();
        if self.y.len() != nf {
            return Err(Error::Validation(format!("y has length {}, instance has {nf} facilities", self.y.len())));
        }
        if self.x.len() != inst.n_clients() {
            return Err(Error::Validation(format!(
                "x has {} client rows, instance has {} clients",
                self.x.len(),
                inst.n_clients()
            )));
        }
        for (i, &v) in self.y.iter().enumerate() {
            if !(-FEAS_TOL..=1.0 + FEAS_TOL).contains(&v) {
                return Err(Error::Validation(format!("0 <= y[{i}] <= 1 violated: y[{i}] = {v}")));
            }
        }
        let total = self.total_opening();
        if total > inst.k() as f64 + FEAS_TOL {
            return Err(Error::Validation(format!("sum(y) <= k violated: {total} > {}", inst.k())));
        }
        for (j, row) in self.x.iter().enumerate() {
            let mut sum = 0.0;
            for &(i, v) in row {
                if i >= nf {
                    return Err(Error::Validation(format!("x[{i},{j}] refers to a missing facility")));
                }
                if v < -FEAS_TOL {
                    return Err(Error::Validation(format!("x[{i},{j}] >= 0 violated: {v}")));
                }
                if v > self.y[i] + FEAS_TOL {
                    return Err(Error::Validation(format!("x[{i},{j}] <= y[{i}] violated: {v} > {}", self.y[i])));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > FEAS_TOL {
                return Err(Error::Validation(format!("sum_i x[i,{j}] = 1 violated: {sum}")));
            }
        }
        Ok(())
    }

    pub fn to_dump(&self, objective: f64) -> SolutionDump {
        let mut x = Vec::new();
        for (j, row) in self.x.iter().enumerate() {
            for &(i, v) in row {
                x.push((i, j, v));
            }
        }
        SolutionDump { y: self.y.clone(), x, objective }
    }

    pub fn from_dump(dump: &SolutionDump, n_clients: usize) -> Result<Self> {
        let mut x = vec![Vec::new(); n_clients];
        for &(i, j, v) in &dump.x {
            if j >= n_clients {
                return Err(Error::Input(format!("dump entry refers to client {j} of {n_clients}")));
            }
            x[j].push((i, v));
        }
        for row in &mut x {
            row.sort_by_key(|e| e.0);
        }
        Ok(FractionalSolution { y: dump.y.clone(), x })
    }
}

/// Serialized form: `{"y": [...], "x": [[i, j, v], ...], "objective": real}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolutionDump {
    pub y: Vec<f64>,
    pub x: Vec<(usize, usize, f64)>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralSolution {
    /// Sorted, deduplicated.
    pub open: Vec<usize>,
    pub assignment: Vec<usize>,
    pub total_cost: f64,
}
