use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::{FractionalSolution, IntegralSolution};

/// `Σ d^p(i,j) x_ij`; validates the solution first.
pub fn fractional_cost(inst: &Instance, sol: &FractionalSolution) -> Result<f64> {
    sol.validate(inst)?;
    Ok(client_costs(inst, sol).iter().sum())
}

/// Per-client `Σ_i d^p(i,j) x_ij`, no validation.
pub fn client_costs(inst: &Instance, sol: &FractionalSolution) -> Vec<f64> {
    sol.x
        .iter()
        .enumerate()
        .map(|(j, row)| row.iter().map(|&(i, v)| v * inst.cost(j, i)).sum())
        .collect()
}

/// Cheapest way to serve client `j` with one unit of mass from `ybar`,
/// filling greedily by ascending distance.
pub fn cost_under_opening(inst: &Instance, j: usize, ybar: &[f64]) -> Result<f64> {
    let total: f64 = ybar.iter().sum();
    if total < 1.0 - 1e-9 {
        return Err(Error::Infeasible(format!("total opening {total} < 1")));
    }
    let mut remaining = 1.0;
    let mut cost = 0.0;
    for i in inst.facilities_by_distance(j) {
        if remaining <= 0.0 {
            break;
        }
        let take = ybar[i].max(0.0).min(remaining);
        cost += take * inst.cost(j, i);
        remaining -= take;
    }
    Ok(cost)
}

/// Nearest open facility for client `j`; ties go to the lowest index.
pub fn nearest_open(inst: &Instance, j: usize, open: &[usize]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &i in open {
        let d = inst.d_cf(j, i);
        match best {
            Some((bi, bd)) if d > bd || (d == bd && i > bi) => {}
            _ => best = Some((i, d)),
        }
    }
    best
}

pub fn integral_cost(inst: &Instance, open: &[usize]) -> Result<IntegralSolution> {
    if open.is_empty() {
        return Err(Error::Input("open facility set is empty".into()));
    }
    if let Some(&bad) = open.iter().find(|&&i| i >= inst.n_facilities()) {
        return Err(Error::Input(format!("open facility {bad} does not exist")));
    }
    let mut open = open.to_vec();
    open.sort_unstable();
    open.dedup();
    let mut assignment = Vec::with_capacity(inst.n_clients());
    let mut total_cost = 0.0;
    for j in 0..inst.n_clients() {
        let (i, d) = nearest_open(inst, j, &open).expect("nonempty");
        assignment.push(i);
        total_cost += inst.pow(d);
    }
    Ok(IntegralSolution { open, assignment, total_cost })
}

/// Cost of `open` without building the assignment.
pub fn open_set_cost(inst: &Instance, open: &[usize]) -> f64 {
    (0..inst.n_clients())
        .map(|j| open.iter().map(|&i| inst.cost(j, i)).fold(f64::INFINITY, f64::min))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(clients: &[f64], facilities: &[f64], k: usize, p: f64) -> Instance {
        let c: Vec<Vec<f64>> = clients.iter().map(|&v| vec![v]).collect();
        let f: Vec<Vec<f64>> = facilities.iter().map(|&v| vec![v]).collect();
        Instance::euclidean(&c, &f, k, p).unwrap()
    }

    #[test]
    fn fractional_cost_examples() {
        let one = line(&[0.0], &[1.0], 1, 2.0);
        let sol = FractionalSolution { y: vec![1.0], x: vec![vec![(0, 1.0)]] };
        assert_eq!(fractional_cost(&one, &sol).unwrap(), 1.0);

        let two = line(&[0.0], &[1.0, 3.0], 1, 1.0);
        let sol = FractionalSolution { y: vec![0.5, 0.5], x: vec![vec![(0, 0.5), (1, 0.5)]] };
        assert_eq!(fractional_cost(&two, &sol).unwrap(), 2.0);

        let bad = FractionalSolution { y: vec![0.5, 0.5], x: vec![vec![(0, 0.5)]] };
        assert!(matches!(fractional_cost(&two, &bad), Err(Error::Validation(_))));
    }

    #[test]
    fn cost_under_opening_examples() {
        let one = line(&[0.0], &[2.0], 1, 2.0);
        assert_eq!(cost_under_opening(&one, 0, &[1.0]).unwrap(), 4.0);
        let two = line(&[0.0], &[1.0, 2.0], 1, 1.0);
        assert!((cost_under_opening(&two, 0, &[0.6, 0.6]).unwrap() - 1.4).abs() < 1e-12);
        assert!(matches!(cost_under_opening(&two, 0, &[0.3, 0.3]), Err(Error::Infeasible(_))));
    }

    #[test]
    fn integral_cost_examples() {
        let co = line(&[0.0, 5.0], &[0.0, 5.0], 2, 1.0);
        assert_eq!(integral_cost(&co, &[0, 1]).unwrap().total_cost, 0.0);
        let path = line(&[0.0, 1.0, 2.0], &[1.0], 1, 2.0);
        let sol = integral_cost(&path, &[0]).unwrap();
        assert_eq!(sol.total_cost, 2.0);
        assert_eq!(sol.assignment, vec![0, 0, 0]);
        assert!(matches!(integral_cost(&path, &[]), Err(Error::Input(_))));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let inst = line(&[0.0], &[1.0, -1.0], 2, 1.0);
        assert_eq!(integral_cost(&inst, &[1, 0]).unwrap().assignment, vec![0]);
    }

    #[test]
    fn integral_matches_fractional_on_integral_solutions() {
        let inst = line(&[0.0, 1.0, 4.0], &[0.5, 3.0, 6.0], 2, 2.0);
        let sol = FractionalSolution::from_open_set(&inst, &[0, 2]).unwrap();
        let a = fractional_cost(&inst, &sol).unwrap();
        let b = integral_cost(&inst, &[0, 2]).unwrap().total_cost;
        assert!((a - b).abs() < 1e-12);
    }
}
