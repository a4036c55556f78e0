use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// One copy of a facility. Ids are unique across the whole run, so copies
/// created later never collide with the initial ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FacilityCopy {
    pub facility: usize,
    pub id: u64,
}

/// Multiset of facility copies with granularity `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CopySet {
    pub copies: Vec<FacilityCopy>,
    pub delta: usize,
    next_id: u64,
}

impl CopySet {
    /// `units[i]` copies of facility i (the opening `y''_i` times `delta`).
    pub fn new(units: &[u64], delta: usize) -> Result<Self> {
        if delta == 0 {
            return Err(Error::Config("delta must be positive".into()));
        }
        let mut set = CopySet { copies: Vec::new(), delta, next_id: 0 };
        for (facility, &u) in units.iter().enumerate() {
            for _ in 0..u {
                let c = set.fresh(facility);
                set.copies.push(c);
            }
        }
        Ok(set)
    }

    /// A copy with an id never used before in this set.
    pub fn fresh(&mut self, facility: usize) -> FacilityCopy {
        let c = FacilityCopy { facility, id: self.next_id };
        self.next_id += 1;
        c
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    /// Copies per facility over `n` facilities.
    pub fn counts(&self, n: usize) -> Vec<u64> {
        let mut counts = vec![0; n];
        for c in &self.copies {
            counts[c.facility] += 1;
        }
        counts
    }

    /// First id that `fresh` would hand out.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }
}

/// Unweighted neighborhood graph over copies; node ids index `CopySet::copies`.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyGraph {
    pub delta: usize,
    pub in_edges: Vec<Vec<usize>>,
    pub out_edges: Vec<Vec<usize>>,
}

impl CopyGraph {
    pub fn len(&self) -> usize {
        self.in_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_edges.is_empty()
    }

    pub fn out_degree(&self, c: usize) -> usize {
        self.out_edges[c].len()
    }

    /// `(Δ − deg⁺)` as an exact integer.
    pub fn imbalance_units(&self, c: usize) -> i64 {
        self.delta as i64 - self.out_edges[c].len() as i64
    }

    /// `(Δ − deg⁺)/Δ`.
    pub fn imbalance(&self, c: usize) -> f64 {
        self.imbalance_units(c) as f64 / self.delta as f64
    }

    /// (source, target) pairs sorted by source then target.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.out_edges.iter().enumerate().flat_map(|(s, outs)| outs.iter().map(move |&t| (s, t))).collect()
    }
}

/// Each copy receives edges from the Δ nearest copies, ordered by
/// (distance, own facility first, facility index, copy id). Every copy of a
/// facility therefore gets the same in-set, which contains all its siblings.
pub fn build_copy_graph(copies: &[FacilityCopy], inst: &Instance, delta: usize) -> Result<CopyGraph> {
    if copies.len() < delta {
        return Err(Error::Infeasible(format!("{} copies cannot supply in-degree {delta}", copies.len())));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (idx, c) in copies.iter().enumerate() {
        groups.entry(c.facility).or_default().push(idx);
    }
    for members in groups.values_mut() {
        members.sort_by_key(|&idx| copies[idx].id);
        if members.len() > delta {
            return Err(Error::Invariant(format!(
                "facility {} has {} copies, more than delta = {delta}",
                copies[members[0]].facility,
                members.len()
            )));
        }
    }
    let facilities: Vec<usize> = groups.keys().copied().collect();
    let mut in_edges = vec![Vec::new(); copies.len()];
    let mut out_edges = vec![Vec::new(); copies.len()];
    for &a in &facilities {
        let mut order: Vec<usize> = facilities.iter().copied().filter(|&b| b != a).collect();
        order.sort_by(|&x, &y| inst.d_ff(a, x).total_cmp(&inst.d_ff(a, y)).then(x.cmp(&y)));
        let mut sources = Vec::with_capacity(delta);
        'fill: for b in std::iter::once(a).chain(order) {
            for &idx in &groups[&b] {
                if sources.len() == delta {
                    break 'fill;
                }
                sources.push(idx);
            }
        }
        for &target in &groups[&a] {
            for &s in &sources {
                out_edges[s].push(target);
            }
            in_edges[target] = sources.clone();
        }
    }
    for outs in &mut out_edges {
        outs.sort_unstable();
    }
    Ok(CopyGraph { delta, in_edges, out_edges })
}

/// Copies split by imbalance sign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImbalancePartition {
    pub plus: Vec<usize>,
    pub zero: Vec<usize>,
    pub minus: Vec<usize>,
    /// `(1/Δ) Σ_{F⁺} imb`.
    pub a: f64,
}

pub fn partition(g: &CopyGraph) -> ImbalancePartition {
    let (mut plus, mut zero, mut minus) = (Vec::new(), Vec::new(), Vec::new());
    let mut surplus: i64 = 0;
    for c in 0..g.len() {
        let u = g.imbalance_units(c);
        match u.signum() {
            1 => {
                plus.push(c);
                surplus += u;
            }
            0 => zero.push(c),
            _ => minus.push(c),
        }
    }
    let delta = g.delta as f64;
    ImbalancePartition { plus, zero, minus, a: surplus as f64 / (delta * delta) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> Instance {
        let pts: Vec<Vec<f64>> = points.iter().map(|&v| vec![v]).collect();
        Instance::euclidean(&pts, &pts, 1, 1.0).unwrap()
    }

    #[test]
    fn delta_one_is_self_loops() {
        let inst = line(&[0.0, 1.0, 2.0]);
        let set = CopySet::new(&[1, 1, 1], 1).unwrap();
        let g = build_copy_graph(&set.copies, &inst, 1).unwrap();
        for c in 0..3 {
            assert_eq!(g.in_edges[c], vec![c]);
        }
    }

    #[test]
    fn two_a_copies_and_one_b() {
        let inst = line(&[0.0, 1.0]);
        let set = CopySet::new(&[2, 1], 2).unwrap();
        let g = build_copy_graph(&set.copies, &inst, 2).unwrap();
        assert_eq!(g.in_edges[0], vec![0, 1]);
        assert_eq!(g.in_edges[1], vec![0, 1]);
        assert_eq!(g.in_edges[2], vec![2, 0]);
        assert_eq!(g.imbalance_units(0), -1);
        assert_eq!(g.imbalance_units(1), 0);
        assert_eq!(g.imbalance_units(2), 1);
        let part = partition(&g);
        assert_eq!((part.plus.clone(), part.zero.clone(), part.minus.clone()), (vec![2], vec![1], vec![0]));
        assert!((part.a - 0.25).abs() < 1e-15);
    }

    #[test]
    fn too_few_copies() {
        let inst = line(&[0.0]);
        let set = CopySet::new(&[1], 2).unwrap();
        assert!(matches!(build_copy_graph(&set.copies, &inst, 2), Err(Error::Infeasible(_))));
    }

    #[test]
    fn fresh_ids_never_repeat() {
        let mut set = CopySet::new(&[2, 2], 4).unwrap();
        let a = set.fresh(0);
        let b = set.fresh(0);
        assert_ne!(a.id, b.id);
        assert!(set.copies.iter().all(|c| c.id < a.id));
    }
}
