use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::state::{RoundingState, UpdateEvent};
use crate::error::{Error, Result};
use crate::graph::{CopyGraph, ImbalancePartition};
use crate::preprocess::ScaleConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Plus(usize),
    Minus(usize),
    /// Positionless node pointing at every surviving copy of `facility`.
    Fictitious { facility: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanNode {
    pub kind: NodeKind,
    pub rate: f64,
    /// Out-neighbors in G', as copy indices.
    pub out: Vec<usize>,
}

/// The sampling graph G' of an unbalanced step after the heavy copies are
/// removed and fictitious nodes restore every in-degree to Δ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbalancedPlan {
    pub a: f64,
    /// Heavy negative copies (R), removed and forced before sampling.
    pub heavy: Vec<usize>,
    /// Real nodes in copy order, then fictitious nodes by facility.
    pub nodes: Vec<PlanNode>,
    pub fictitious: usize,
    delta: usize,
    facility_of: Vec<usize>,
}

impl UnbalancedPlan {
    pub fn new(state: &RoundingState, g: &CopyGraph, part: &ImbalancePartition, cfg: &ScaleConfig) -> Self {
        let n = g.len();
        let delta = g.delta;
        let facility_of: Vec<usize> = state.copies.copies.iter().map(|c| c.facility).collect();
        let threshold = part.a * cfg.eps_c3();
        let mut in_heavy = vec![false; n];
        let mut heavy = Vec::new();
        for &c in &part.minus {
            if g.imbalance(c).abs() >= threshold {
                in_heavy[c] = true;
                heavy.push(c);
            }
        }
        let mut is_plus = vec![false; n];
        for &c in &part.plus {
            is_plus[c] = true;
        }
        let mut is_minus = vec![false; n];
        for &c in &part.minus {
            is_minus[c] = true;
        }

        let mut nodes = Vec::new();
        for c in 0..n {
            let kind = if is_plus[c] {
                NodeKind::Plus(c)
            } else if is_minus[c] && !in_heavy[c] {
                NodeKind::Minus(c)
            } else {
                continue;
            };
            let rate = if is_plus[c] { cfg.plus_rate() } else { cfg.minus_rate() };
            let out = g.out_edges[c].iter().copied().filter(|&t| !in_heavy[t]).collect();
            nodes.push(PlanNode { kind, rate, out });
        }

        // Copies of one facility share their in-set, so the deficit is per facility.
        let mut survivors: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for c in (0..n).filter(|&c| !in_heavy[c]) {
            survivors.entry(facility_of[c]).or_default().push(c);
        }
        let mut fictitious = 0;
        for (&facility, members) in &survivors {
            let indeg = g.in_edges[members[0]].iter().filter(|&&s| !in_heavy[s]).count();
            for _ in indeg..delta {
                nodes.push(PlanNode { kind: NodeKind::Fictitious { facility }, rate: cfg.minus_rate(), out: members.clone() });
                fictitious += 1;
            }
        }
        UnbalancedPlan { a: part.a, heavy, nodes, fictitious, delta, facility_of }
    }

    /// In-degree of every surviving copy in G' must be exactly Δ.
    pub fn audit_in_degrees(&self, g: &CopyGraph) -> Result<()> {
        let n = g.len();
        let mut in_heavy = vec![false; n];
        for &c in &self.heavy {
            in_heavy[c] = true;
        }
        let mut indeg = vec![0usize; n];
        for c in 0..n {
            if in_heavy[c] {
                continue;
            }
            indeg[c] = g.in_edges[c].iter().filter(|&&s| !in_heavy[s]).count();
        }
        for node in &self.nodes {
            if let NodeKind::Fictitious { .. } = node.kind {
                for &t in &node.out {
                    indeg[t] += 1;
                }
            }
        }
        for c in (0..n).filter(|&c| !in_heavy[c]) {
            if indeg[c] != self.delta {
                return Err(Error::Invariant(format!("copy {c} has in-degree {} in G', expected {}", indeg[c], self.delta)));
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<bool> {
        self.nodes.iter().map(|node| rng.gen::<f64>() < node.rate).collect()
    }

    fn facility(&self, node: &PlanNode) -> Option<usize> {
        match node.kind {
            NodeKind::Plus(c) | NodeKind::Minus(c) => Some(self.facility_of[c]),
            NodeKind::Fictitious { .. } => None,
        }
    }

    /// Removed copies and opened facilities for a selection.
    fn effect(&self, selected: &[bool]) -> (Vec<bool>, BTreeSet<usize>) {
        let mut removed = vec![false; self.facility_of.len()];
        let mut opened = BTreeSet::new();
        for (node, _) in self.nodes.iter().zip(selected).filter(|(_, &s)| s) {
            for &t in &node.out {
                removed[t] = true;
            }
            if let Some(f) = self.facility(node) {
                opened.insert(f);
            }
        }
        (removed, opened)
    }

    /// Net change of |F'| over Δ caused by the selection (heavy removal excluded).
    pub fn z(&self, selected: &[bool]) -> f64 {
        let (removed, opened) = self.effect(selected);
        let gone = removed.iter().filter(|&&r| r).count();
        (opened.len() as f64 * self.delta as f64 - gone as f64) / self.delta as f64
    }

    /// Bounded-difference constant of one coordinate.
    pub fn kappa(&self, node: usize) -> f64 {
        let nd = &self.nodes[node];
        let delta = self.delta as f64;
        match nd.kind {
            NodeKind::Fictitious { .. } => nd.out.len() as f64 / delta,
            _ => ((delta - nd.out.len() as f64) / delta).abs().max(1.0),
        }
    }

    /// `(|Z(X) − Z(X with coordinate flipped)|, κ)`.
    pub fn difference(&self, selected: &[bool], node: usize) -> (f64, f64) {
        let mut flipped = selected.to_vec();
        flipped[node] = !flipped[node];
        ((self.z(selected) - self.z(&flipped)).abs(), self.kappa(node))
    }
}

/// One unbalanced step. Small A forces every unbalanced copy's facility
/// open; otherwise heavy copies are forced and the rest is sampled on G'.
/// On the sampling branch one random coordinate is audited against its
/// bounded-difference constant.
pub fn unbalanced_update<R: Rng>(
    state: &mut RoundingState,
    g: &CopyGraph,
    part: &ImbalancePartition,
    cfg: &ScaleConfig,
    rng: &mut R,
) -> Result<UpdateEvent> {
    check_partition(g, part)?;
    if part.plus.is_empty() && part.minus.is_empty() {
        return Ok(UpdateEvent::Unbalanced { a: 0.0, heavy_removed: 0, newly_forced: 0, fictitious: 0, selected: 0, z: 0.0 });
    }
    if part.a <= cfg.force_threshold {
        let mut removed = vec![false; g.len()];
        let before = state.forced.len();
        for &c in part.plus.iter().chain(&part.minus) {
            removed[c] = true;
            state.forced.insert(state.copies.copies[c].facility);
        }
        let newly_forced = state.forced.len() - before;
        let (removed_copies, _) = state.replace(&removed, &BTreeSet::new());
        return Ok(UpdateEvent::ForcedAll { a: part.a, newly_forced, removed_copies });
    }

    let plan = UnbalancedPlan::new(state, g, part, cfg);
    plan.audit_in_degrees(g)?;
    let selected = plan.sample(rng);
    if !plan.nodes.is_empty() {
        let k = rng.gen_range(0..plan.nodes.len());
        let (diff, kappa) = plan.difference(&selected, k);
        if diff > kappa + 1e-12 {
            return Err(Error::Invariant(format!("bounded difference: coordinate {k} moves Z by {diff} > kappa {kappa}")));
        }
        state.kappa_checks += 1;
    }
    let z = plan.z(&selected);

    let before = state.forced.len();
    for &c in &plan.heavy {
        state.forced.insert(plan.facility_of[c]);
    }
    let newly_forced = state.forced.len() - before;
    let (mut removed, opened) = plan.effect(&selected);
    let by_selection = removed.iter().filter(|&&r| r).count();
    for &c in &plan.heavy {
        removed[c] = true;
    }
    let size_before = state.copies.len() - plan.heavy.len();
    state.replace(&removed, &opened);
    let net = state.copies.len() as f64 - size_before as f64;
    if (net - z * plan.delta as f64).abs() > 1e-9 {
        return Err(Error::Invariant(format!("unbalanced step changed |F'| by {net}, expected {}", z * plan.delta as f64)));
    }
    debug_assert!(by_selection <= size_before);
    Ok(UpdateEvent::Unbalanced {
        a: part.a,
        heavy_removed: plan.heavy.len(),
        newly_forced,
        fictitious: plan.fictitious,
        selected: selected.iter().filter(|&&s| s).count(),
        z,
    })
}

/// Conflict-free selection from F⁰: copies are scanned in random order and
/// each one whose out-set is still untouched joins with the minus rate.
/// Returns (eligible count, selected copies).
pub fn balanced_selection<R: Rng>(
    g: &CopyGraph,
    part: &ImbalancePartition,
    cfg: &ScaleConfig,
    rng: &mut R,
) -> (usize, Vec<usize>) {
    let mut order = part.zero.clone();
    order.shuffle(rng);
    let mut taken = vec![false; g.len()];
    let mut eligible = 0;
    let mut selected = Vec::new();
    let rate = cfg.minus_rate();
    for c in order {
        if g.out_edges[c].iter().any(|&t| taken[t]) {
            continue;
        }
        eligible += 1;
        if rng.gen::<f64>() < rate {
            for &t in &g.out_edges[c] {
                taken[t] = true;
            }
            selected.push(c);
        }
    }
    (eligible, selected)
}

/// One balanced step; |F'| is unchanged and that is asserted.
pub fn balanced_update<R: Rng>(
    state: &mut RoundingState,
    g: &CopyGraph,
    part: &ImbalancePartition,
    cfg: &ScaleConfig,
    rng: &mut R,
) -> Result<UpdateEvent> {
    let (eligible, selected) = balanced_selection(g, part, cfg, rng);
    let mut removed = vec![false; g.len()];
    let mut opened = BTreeSet::new();
    for &c in &selected {
        for &t in &g.out_edges[c] {
            removed[t] = true;
        }
        opened.insert(state.copies.copies[c].facility);
    }
    let before = state.copies.len();
    let (gone, added) = state.replace(&removed, &opened);
    if gone != added || state.copies.len() != before {
        return Err(Error::Invariant(format!("balanced step removed {gone} copies but added {added}")));
    }
    Ok(UpdateEvent::Balanced { eligible, selected: selected.len() })
}

fn check_partition(g: &CopyGraph, part: &ImbalancePartition) -> Result<()> {
    let plus: i64 = part.plus.iter().map(|&c| g.imbalance_units(c)).sum();
    let minus: i64 = part.minus.iter().map(|&c| -g.imbalance_units(c)).sum();
    if plus != minus {
        return Err(Error::Invariant(format!("imbalance surplus {plus} differs from deficit {minus}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_copy_graph, partition};
    use crate::instance::Instance;
    use crate::rng::{stream, tag};

    fn line(points: &[f64]) -> Instance {
        let pts: Vec<Vec<f64>> = points.iter().map(|&v| vec![v]).collect();
        Instance::euclidean(&pts, &pts, 1, 1.0).unwrap()
    }

    fn setup(units: &[u64], delta: usize, points: &[f64]) -> (Instance, RoundingState, CopyGraph, ImbalancePartition) {
        let inst = line(points);
        let state = RoundingState::new(units, delta).unwrap();
        let g = build_copy_graph(&state.copies.copies, &inst, delta).unwrap();
        let part = partition(&g);
        (inst, state, g, part)
    }

    #[test]
    fn balanced_graph_is_a_noop_for_unbalanced_step() {
        let (_, mut state, g, part) = setup(&[4], 4, &[0.0]);
        assert!(part.plus.is_empty() && part.minus.is_empty());
        let ev = unbalanced_update(&mut state, &g, &part, &ScaleConfig::for_p(1.0).unwrap(), &mut stream(0, tag::PSEUDO, 0))
            .unwrap();
        assert!(matches!(ev, UpdateEvent::Unbalanced { selected: 0, .. }));
        assert_eq!(state.copies.len(), 4);
        assert!(state.forced.is_empty());
    }

    #[test]
    fn small_a_forces_everything_unbalanced() {
        let (_, mut state, g, part) = setup(&[2, 1], 2, &[0.0, 1.0]);
        let cfg = ScaleConfig::for_p(1.0).unwrap();
        let ev = unbalanced_update(&mut state, &g, &part, &cfg, &mut stream(0, tag::PSEUDO, 0)).unwrap();
        assert!(matches!(ev, UpdateEvent::ForcedAll { newly_forced: 2, removed_copies: 2, .. }));
        assert_eq!(state.forced.iter().copied().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(state.copies.len(), 1);
    }

    #[test]
    fn heavy_copy_gets_fictitious_replacements() {
        // Facility 0 with 3 copies feeds the single copies of 1 and 2.
        let (_, state, g, part) = setup(&[3, 1, 1], 4, &[0.0, 1.0, 2.0]);
        let cfg = ScaleConfig::for_p(1.0).unwrap().with_force_threshold(0.0);
        let plan = UnbalancedPlan::new(&state, &g, &part, &cfg);
        assert!(!plan.heavy.is_empty());
        assert!(plan.fictitious > 0);
        plan.audit_in_degrees(&g).unwrap();
        // hand count: removed in-edges of survivors equal fictitious out-edges
        let lost: usize = (0..g.len())
            .filter(|c| !plan.heavy.contains(c))
            .map(|c| g.in_edges[c].iter().filter(|s| plan.heavy.contains(s)).count())
            .sum();
        let fict_edges: usize =
            plan.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Fictitious { .. })).map(|n| n.out.len()).sum();
        assert_eq!(lost, fict_edges);
    }

    #[test]
    fn balanced_selection_is_conflict_free() {
        let (_, _, g, part) = setup(&[2, 2, 2], 2, &[0.0, 10.0, 20.0]);
        let cfg = ScaleConfig::for_p(1.0).unwrap().with_delta(2).with_sample_scale(0.9);
        for t in 0..200 {
            let (_, sel) = balanced_selection(&g, &part, &cfg, &mut stream(4, tag::PSEUDO, t));
            for (x, &a) in sel.iter().enumerate() {
                for &b in &sel[x + 1..] {
                    assert!(g.out_edges[a].iter().all(|t| !g.out_edges[b].contains(t)));
                }
            }
        }
    }

    #[test]
    fn balanced_update_keeps_size() {
        let (inst, mut state, _, _) = setup(&[2, 2, 2], 2, &[0.0, 10.0, 20.0]);
        let cfg = ScaleConfig::for_p(1.0).unwrap().with_delta(2).with_sample_scale(0.9);
        let mut rng = stream(5, tag::PSEUDO, 0);
        for _ in 0..100 {
            let g = build_copy_graph(&state.copies.copies, &inst, 2).unwrap();
            let part = partition(&g);
            balanced_update(&mut state, &g, &part, &cfg, &mut rng).unwrap();
            assert_eq!(state.copies.len(), 6);
        }
    }
}
