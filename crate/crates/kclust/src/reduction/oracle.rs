use itertools::Itertools;

use crate::cost::integral_cost;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::IntegralSolution;

/// Largest number of k-subsets the exhaustive search will visit.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact optimum over all k-subsets of facilities; on equal cost the
/// lexicographically first subset wins. With `k ≥ |F|` every facility opens.
pub fn brute_force_opt(inst: &Instance) -> Result<IntegralSolution> {
    let n = inst.n_facilities();
    if n == 0 {
        return Err(Error::Input("instance has no facilities".into()));
    }
    let k = inst.k().min(n);
    let count = binomial(n, k);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::Size(format!("C({n}, {k}) = {count} subsets exceed the limit {BRUTE_FORCE_LIMIT}")));
    }
    let costs: Vec<Vec<f64>> = (0..inst.n_clients()).map(|j| (0..n).map(|i| inst.cost(j, i)).collect()).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in (0..n).combinations(k) {
        let total: f64 = costs.iter().map(|row| subset.iter().map(|&i| row[i]).fold(f64::INFINITY, f64::min)).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, subset));
        }
    }
    let (_, open) = best.expect("at least one subset");
    integral_cost(inst, &open)
}

/// `d(i, opt)` over facility indices of `inst`.
pub fn distance_to_set(inst: &Instance, i: usize, set: &[usize]) -> f64 {
    set.iter().map(|&o| inst.d_ff(i, o)).fold(f64::INFINITY, f64::min)
}

/// Clients at distance strictly below `r` from facility `i`.
pub fn client_ball(inst: &Instance, i: usize, r: f64) -> Vec<usize> {
    (0..inst.n_clients()).filter(|&j| inst.d_cf(j, i) < r).collect()
}

/// Facilities at distance strictly below `r` from facility `i`.
pub fn facility_ball(inst: &Instance, i: usize, r: f64) -> Vec<usize> {
    (0..inst.n_facilities()).filter(|&f| inst.d_ff(i, f) < r).collect()
}

pub const XI: f64 = 1.0 / 3.0;

/// `((1−ξ)·d(i, opt))^p · |CBall(i, ξ·d(i, opt))| > a`.
pub fn is_dense(inst: &Instance, i: usize, a: f64, opt: &[usize]) -> bool {
    let d = distance_to_set(inst, i, opt);
    if d == 0.0 {
        return false;
    }
    let count = client_ball(inst, i, XI * d).len();
    inst.pow((1.0 - XI) * d) * count as f64 > a
}

/// No facility of `inst` is dense with respect to `opt` (indices of `inst`).
pub fn is_sparse(inst: &Instance, a: f64, opt: &[usize]) -> bool {
    (0..inst.n_facilities()).all(|i| !is_dense(inst, i, a, opt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_median() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let inst = Instance::euclidean(&pts, &pts, 1, 1.0).unwrap();
        let s = brute_force_opt(&inst).unwrap();
        assert_eq!(s.open, vec![1]);
        assert_eq!(s.total_cost, 2.0);
    }

    #[test]
    fn k_equal_to_f_opens_all() {
        let pts = vec![vec![0.0], vec![3.0], vec![7.0]];
        let inst = Instance::euclidean(&pts, &pts, 3, 2.0).unwrap();
        let s = brute_force_opt(&inst).unwrap();
        assert_eq!(s.open, vec![0, 1, 2]);
        assert_eq!(s.total_cost, 0.0);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn ties_take_the_first_subset() {
        let inst = Instance::euclidean(&[vec![0.0]], &[vec![1.0], vec![-1.0]], 1, 1.0).unwrap();
        assert_eq!(brute_force_opt(&inst).unwrap().open, vec![0]);
    }

    #[test]
    fn density_formula() {
        // facility 0 at distance 3 from the open facility 1, with m clients on top of it
        let m = 4;
        let mut clients = vec![vec![0.0]; m];
        clients.push(vec![3.0]);
        let inst = Instance::euclidean(&clients, &[vec![0.0], vec![3.0]], 1, 2.0).unwrap();
        // ((2/3)·3)^2 · 4 = 16
        assert!(is_dense(&inst, 0, 15.9, &[1]));
        assert!(!is_dense(&inst, 0, 16.0, &[1]));
        assert!(!is_dense(&inst, 1, 0.0, &[1]));
    }

    #[test]
    fn isolated_facility_is_sparse() {
        let inst = Instance::euclidean(&[vec![10.0]], &[vec![0.0], vec![10.0]], 1, 1.0).unwrap();
        assert!(!is_dense(&inst, 0, 0.0, &[1]));
    }
}
