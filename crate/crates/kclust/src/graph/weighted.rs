use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Remaining in-mass below this closes a node's source list.
const MASS_TOL: f64 = 1e-12;

/// For every facility, all facilities ordered as candidate sources: itself
/// first, then ascending (distance, index). Computed once per instance.
#[derive(Debug, Clone)]
pub struct SourceOrder {
    order: Vec<Vec<usize>>,
}

impl SourceOrder {
    pub fn new(inst: &Instance) -> Self {
        let n = inst.n_facilities();
        let order = (0..n)
            .map(|i| {
                let mut others: Vec<usize> = (0..n).filter(|&s| s != i).collect();
                others.sort_by(|&a, &b| inst.d_ff(i, a).total_cmp(&inst.d_ff(i, b)).then(a.cmp(&b)));
                let mut list = Vec::with_capacity(n);
                list.push(i);
                list.extend(others);
                list
            })
            .collect();
        SourceOrder { order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn sources(&self, i: usize) -> &[usize] {
        &self.order[i]
    }
}

/// Fractional neighborhood graph: every node with positive opening receives
/// exactly one unit of in-weight from its nearest open mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    /// Per target: (source, weight) in source order.
    pub in_edges: Vec<Vec<(usize, f64)>>,
    /// Per source: (target, weight) sorted by target.
    pub out_edges: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

impl WeightedGraph {
    pub fn node_count(&self) -> usize {
        self.in_edges.len()
    }

    pub fn out_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.out_edges[i]
    }

    /// Edge list sorted by (source, target).
    pub fn edge_list(&self) -> Vec<WeightedEdge> {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(source, outs)| {
                outs.iter().map(move |&(target, weight)| WeightedEdge { source, target, weight })
            })
            .collect()
    }
}

pub fn build_weighted(yprime: &[f64], order: &SourceOrder) -> Result<WeightedGraph> {
    let n = yprime.len();
    if order.len() != n {
        return Err(Error::Input(format!("opening vector has {n} entries, metric has {}", order.len())));
    }
    if let Some(i) = yprime.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Input(format!("y'[{i}] = {} outside [0,1]", yprime[i])));
    }
    let total: f64 = yprime.iter().sum();
    if total < 1.0 - 1e-9 {
        return Err(Error::Infeasible(format!("total opening {total} < 1")));
    }
    let mut in_edges = vec![Vec::new(); n];
    let mut out_edges = vec![Vec::new(); n];
    for i in 0..n {
        if yprime[i] <= 0.0 {
            continue;
        }
        let mut remaining = 1.0;
        for &s in order.sources(i) {
            if yprime[s] <= 0.0 {
                continue;
            }
            let w = yprime[s].min(remaining);
            in_edges[i].push((s, w));
            out_edges[s].push((i, w));
            remaining -= w;
            if remaining <= MASS_TOL {
                break;
            }
        }
        if remaining > 1e-9 {
            return Err(Error::Infeasible(format!("node {i} gathers only {} in-mass", 1.0 - remaining)));
        }
    }
    // targets were pushed in ascending order of i, so out lists are sorted
    Ok(WeightedGraph { in_edges, out_edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> Instance {
        let pts: Vec<Vec<f64>> = points.iter().map(|&v| vec![v]).collect();
        Instance::euclidean(&pts, &pts, 1, 1.0).unwrap()
    }

    #[test]
    fn single_open_facility_self_loop() {
        let inst = line(&[0.0]);
        let g = build_weighted(&[1.0], &SourceOrder::new(&inst)).unwrap();
        assert_eq!(g.in_edges[0], vec![(0, 1.0)]);
    }

    #[test]
    fn three_halves_on_a_line() {
        let inst = line(&[0.0, 1.0, 2.0]);
        let g = build_weighted(&[0.5, 0.5, 0.5], &SourceOrder::new(&inst)).unwrap();
        assert_eq!(g.in_edges[0], vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(g.in_edges[1], vec![(1, 0.5), (0, 0.5)]);
        assert_eq!(g.in_edges[2], vec![(2, 0.5), (1, 0.5)]);
        assert_eq!(g.out_edges[1], vec![(0, 0.5), (1, 0.5), (2, 0.5)]);
    }

    #[test]
    fn rejects_short_mass() {
        let inst = line(&[0.0, 1.0]);
        assert!(matches!(build_weighted(&[0.3, 0.3], &SourceOrder::new(&inst)), Err(Error::Infeasible(_))));
    }
}
