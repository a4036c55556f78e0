use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::FractionalSolution;

/// Values closer than this are treated as the same cut point.
const CUT_TOL: f64 = 1e-12;

/// Provenance of split facility entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitMap {
    /// Split entry -> original facility.
    pub original: Vec<usize>,
    /// Split entry -> its part of the original opening.
    pub share: Vec<f64>,
}

impl SplitMap {
    pub fn identity(y: &[f64]) -> Self {
        SplitMap { original: (0..y.len()).collect(), share: y.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    /// Maps a set of split entries to the sorted set of their originals.
    pub fn to_original(&self, entries: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = entries.iter().map(|&e| self.original[e]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Composes `self` (original -> mid) with `next` (mid -> final).
    pub fn then(&self, next: &SplitMap) -> SplitMap {
        SplitMap { original: next.original.iter().map(|&m| self.original[m]).collect(), share: next.share.clone() }
    }
}

/// Facility pieces produced by cutting each facility's opening at given
/// points. `ends[i]` lists the cumulative right ends of facility i's pieces.
struct Pieces {
    entries: Vec<usize>,
    share: Vec<f64>,
    first: Vec<usize>,
    ends: Vec<Vec<f64>>,
}

fn cut(y: &[f64], cuts: &[Vec<f64>]) -> Pieces {
    let mut entries = Vec::new();
    let mut share = Vec::new();
    let mut first = Vec::with_capacity(y.len());
    let mut ends = Vec::with_capacity(y.len());
    for (i, &yi) in y.iter().enumerate() {
        first.push(entries.len());
        let mut pts: Vec<f64> = cuts[i].iter().copied().filter(|&v| v > CUT_TOL && v < yi - CUT_TOL).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= CUT_TOL);
        pts.push(yi);
        let mut prev = 0.0;
        for &e in &pts {
            entries.push(i);
            share.push(e - prev);
            prev = e;
        }
        ends.push(pts);
    }
    Pieces { entries, share, first, ends }
}

impl Pieces {
    /// Split entries of facility `i` that together carry mass `v`.
    fn prefix(&self, i: usize, v: f64) -> impl Iterator<Item = usize> + '_ {
        let count = self.ends[i].iter().take_while(|&&e| e <= v + CUT_TOL).count();
        self.first[i]..self.first[i] + count
    }
}

/// Splits facilities so every assignment is all-or-nothing: afterwards each
/// `x_ij` is either 0 or the full opening of its split entry.
pub fn split_for_all_or_nothing(
    inst: &Instance,
    sol: &FractionalSolution,
) -> Result<(Instance, FractionalSolution, SplitMap)> {
    let mut cuts = vec![Vec::new(); inst.n_facilities()];
    for row in &sol.x {
        for &(i, v) in row {
            cuts[i].push(v);
        }
    }
    let pieces = cut(&sol.y, &cuts);
    let split_inst = inst.with_facility_entries(&pieces.entries)?;
    let x = sol
        .x
        .iter()
        .map(|row| {
            let mut out: Vec<(usize, f64)> = Vec::new();
            for &(i, v) in row {
                if v > CUT_TOL {
                    out.extend(pieces.prefix(i, v).map(|e| (e, pieces.share[e])));
                }
            }
            out.sort_by_key(|e| e.0);
            out
        })
        .collect();
    let split = FractionalSolution { y: pieces.share.clone(), x };
    let map = SplitMap { original: pieces.entries, share: pieces.share };
    Ok((split_inst, split, map))
}

/// Per-client nearest unit of opening mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestMassSet {
    /// Split entries of F_j in ascending (distance, index) order.
    pub sets: Vec<Vec<usize>>,
    /// Largest distance within F_j.
    pub d_max: Vec<f64>,
    /// `Σ_{i∈F_j} y_i d(i,j)`.
    pub d_av: Vec<f64>,
}

impl NearestMassSet {
    pub fn d_av(&self, j: usize) -> f64 {
        self.d_av[j]
    }

    pub fn d_max(&self, j: usize) -> f64 {
        self.d_max[j]
    }

    /// `Σ_{i∈F_j} y_i d^p(i,j)`, the client's cost under `y`.
    pub fn cost(&self, inst: &Instance, y: &[f64], j: usize) -> f64 {
        self.sets[j].iter().map(|&i| y[i] * inst.cost(j, i)).sum()
    }
}

/// Result of carving out each client's nearest unit of mass.
#[derive(Debug, Clone)]
pub struct NearestMassSplit {
    pub instance: Instance,
    pub y: Vec<f64>,
    pub map: SplitMap,
    pub sets: NearestMassSet,
}

impl NearestMassSplit {
    /// The assignment `x_ij = y_i` on F_j as a fractional solution.
    pub fn assignment(&self) -> FractionalSolution {
        let x = self
            .sets
            .sets
            .iter()
            .map(|set| {
                let mut row: Vec<(usize, f64)> = set.iter().map(|&i| (i, self.y[i])).collect();
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        FractionalSolution { y: self.y.clone(), x }
    }
}

/// Computes F_j for every client, splitting boundary facilities so that F_j
/// carries mass exactly 1.
pub fn nearest_mass_sets(inst: &Instance, y: &[f64]) -> Result<NearestMassSplit> {
    let total: f64 = y.iter().sum();
    if total < 1.0 - 1e-9 {
        return Err(Error::Infeasible(format!("total opening {total} < 1")));
    }
    let mut takes: Vec<Vec<(usize, f64)>> = Vec::with_capacity(inst.n_clients());
    let mut cuts = vec![Vec::new(); inst.n_facilities()];
    for j in 0..inst.n_clients() {
        let mut remaining = 1.0;
        let mut take = Vec::new();
        for i in inst.facilities_by_distance(j) {
            if remaining <= CUT_TOL {
                break;
            }
            if y[i] <= 0.0 {
                continue;
            }
            let v = y[i].min(remaining);
            take.push((i, v));
            cuts[i].push(v);
            remaining -= v;
        }
        takes.push(take);
    }
    let pieces = cut(y, &cuts);
    let instance = inst.with_facility_entries(&pieces.entries)?;
    let mut sets = Vec::with_capacity(takes.len());
    let mut d_max = Vec::with_capacity(takes.len());
    let mut d_av = Vec::with_capacity(takes.len());
    for (j, take) in takes.iter().enumerate() {
        let set: Vec<usize> = take.iter().flat_map(|&(i, v)| pieces.prefix(i, v)).collect();
        d_max.push(set.iter().map(|&e| instance.d_cf(j, e)).fold(0.0, f64::max));
        d_av.push(set.iter().map(|&e| pieces.share[e] * instance.d_cf(j, e)).sum());
        sets.push(set);
    }
    let map = SplitMap { original: pieces.entries, share: pieces.share.clone() };
    Ok(NearestMassSplit { instance, y: pieces.share, map, sets: NearestMassSet { sets, d_max, d_av } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{client_costs, cost_under_opening};

    fn line(clients: &[f64], facilities: &[f64], k: usize, p: f64) -> Instance {
        let c: Vec<Vec<f64>> = clients.iter().map(|&v| vec![v]).collect();
        let f: Vec<Vec<f64>> = facilities.iter().map(|&v| vec![v]).collect();
        Instance::euclidean(&c, &f, k, p).unwrap()
    }

    #[test]
    fn all_or_nothing_identity() {
        let inst = line(&[0.0, 2.0], &[0.0, 2.0], 2, 1.0);
        let sol = FractionalSolution { y: vec![1.0, 1.0], x: vec![vec![(0, 1.0)], vec![(1, 1.0)]] };
        let (_, split, map) = split_for_all_or_nothing(&inst, &sol).unwrap();
        assert_eq!(split, sol);
        assert_eq!(map, SplitMap::identity(&sol.y));
    }

    #[test]
    fn partial_assignment_is_split() {
        let inst = line(&[0.0, 1.0], &[0.5, 9.0], 2, 1.0);
        let sol = FractionalSolution { y: vec![1.0, 0.6], x: vec![vec![(0, 0.4), (1, 0.6)], vec![(0, 1.0)]] };
        sol.validate(&inst).unwrap();
        let (sinst, split, map) = split_for_all_or_nothing(&inst, &sol).unwrap();
        split.validate(&sinst).unwrap();
        assert_eq!(map.original, vec![0, 0, 1]);
        for row in &split.x {
            for &(e, v) in row {
                assert_eq!(v, split.y[e]);
            }
        }
        let before = client_costs(&inst, &sol);
        let after = client_costs(&sinst, &split);
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((map.share[0] + map.share[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_mass_greedy_prefix() {
        let inst = line(&[0.0], &[1.0, 2.0], 2, 1.0);
        let nm = nearest_mass_sets(&inst, &[0.7, 0.7]).unwrap();
        assert_eq!(nm.sets.sets[0].len(), 2);
        let shares: Vec<f64> = nm.sets.sets[0].iter().map(|&e| nm.y[e]).collect();
        assert!((shares[0] - 0.7).abs() < 1e-12 && (shares[1] - 0.3).abs() < 1e-12);
        assert_eq!(nm.sets.d_max(0), 2.0);
        assert!((nm.sets.d_av(0) - 1.3).abs() < 1e-12);
        assert!(cost_under_opening(&inst, 0, &[0.7, 0.7]).unwrap() - nm.sets.cost(&nm.instance, &nm.y, 0) < 1e-12);
    }

    #[test]
    fn nearest_mass_single_open_facility() {
        let inst = line(&[0.0, 3.0], &[1.0, 2.0], 1, 1.0);
        let nm = nearest_mass_sets(&inst, &[0.0, 1.0]).unwrap();
        for set in &nm.sets.sets {
            assert_eq!(nm.map.to_original(set), vec![1]);
        }
        assert!(matches!(nearest_mass_sets(&inst, &[0.2, 0.2]), Err(Error::Infeasible(_))));
    }
}
