use rand::Rng;
use serde::Serialize;

use super::config::ScaleConfig;
use crate::instance::Instance;
use crate::lp::NearestMassSet;
use crate::sample::sample_proportional;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClientType {
    /// `d_max <= factor · d_av`.
    Concentrated,
    /// Not concentrated; representative's ball is its whole F_j.
    FullBall,
    /// Not concentrated; representative's ball was cut by a neighbor.
    CutBall,
}

impl ClientType {
    pub fn number(self) -> u8 {
        match self {
            ClientType::Concentrated => 1,
            ClientType::FullBall => 2,
            ClientType::CutBall => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterResult {
    /// Representatives in selection order.
    pub representatives: Vec<usize>,
    /// Client -> its representative.
    pub rep_of: Vec<usize>,
    /// Per representative (same order): facility entries of its ball.
    pub balls: Vec<Vec<usize>>,
    /// Whether the ball is the representative's full F_j.
    pub ball_is_full: Vec<bool>,
    /// Per representative: the core around it.
    pub cores: Vec<Vec<usize>>,
    pub types: Vec<ClientType>,
    /// Entries dropped from a ball because an earlier representative already
    /// claimed them (only possible on exact distance ties).
    pub tie_conflicts: usize,
}

impl FilterResult {
    pub fn rep_position(&self, j: usize) -> Option<usize> {
        self.representatives.iter().position(|&r| r == j)
    }
}

/// Greedy filtering by ascending `d_av`, then balls, cores and client types.
///
/// `inst`, `y` and `nm` live on the split facility entries produced by
/// `nearest_mass_sets`.
pub fn filter(inst: &Instance, y: &[f64], nm: &NearestMassSet, cfg: &ScaleConfig) -> FilterResult {
    let nc = inst.n_clients();
    let factor = cfg.filter_factor();
    let mut order: Vec<usize> = (0..nc).collect();
    order.sort_by(|&a, &b| nm.d_av(a).total_cmp(&nm.d_av(b)).then(a.cmp(&b)));

    let mut rep_of = vec![usize::MAX; nc];
    let mut representatives = Vec::new();
    for &cand in &order {
        if rep_of[cand] != usize::MAX {
            continue;
        }
        representatives.push(cand);
        for j in 0..nc {
            if rep_of[j] == usize::MAX && inst.d_cc(j, cand) <= (factor - 2.0) * nm.d_av(j) {
                rep_of[j] = cand;
            }
        }
        rep_of[cand] = cand;
    }

    let mut owner = vec![usize::MAX; inst.n_facilities()];
    let mut balls = Vec::with_capacity(representatives.len());
    let mut ball_is_full = Vec::with_capacity(representatives.len());
    let mut cores = Vec::with_capacity(representatives.len());
    let mut tie_conflicts = 0;
    for (pos, &j) in representatives.iter().enumerate() {
        let nearest = representatives
            .iter()
            .filter(|&&o| o != j)
            .map(|&o| inst.d_cc(j, o))
            .fold(f64::INFINITY, f64::min);
        let radius = nearest / 2.0;
        let full = radius >= nm.d_max(j);
        let candidates: Vec<usize> = if full {
            nm.sets[j].clone()
        } else {
            (0..inst.n_facilities()).filter(|&i| y[i] > 0.0 && inst.d_cf(j, i) < radius).collect()
        };
        let mut ball = Vec::with_capacity(candidates.len());
        for i in candidates {
            if owner[i] == usize::MAX {
                owner[i] = pos;
                ball.push(i);
            } else {
                tie_conflicts += 1;
            }
        }
        ball.sort_unstable();
        let core_radius = cfg.epsilon * nm.d_max(j);
        let core: Vec<usize> = ball.iter().copied().filter(|&i| inst.d_cf(j, i) <= core_radius).collect();
        balls.push(ball);
        ball_is_full.push(full);
        cores.push(core);
    }

    let types = (0..nc)
        .map(|j| {
            if nm.d_max(j) <= factor * nm.d_av(j) {
                ClientType::Concentrated
            } else {
                let pos = representatives.iter().position(|&r| r == rep_of[j]).expect("representative");
                if ball_is_full[pos] {
                    ClientType::FullBall
                } else {
                    ClientType::CutBall
                }
            }
        })
        .collect();

    FilterResult { representatives, rep_of, balls, ball_is_full, cores, types, tie_conflicts }
}

/// Moves each core's mass onto one facility drawn proportionally to `y`.
pub fn consolidate_cores<R: Rng>(y: &[f64], filt: &FilterResult, rng: &mut R) -> Vec<f64> {
    let mut out = y.to_vec();
    for core in &filt.cores {
        let weights: Vec<f64> = core.iter().map(|&i| y[i]).collect();
        let mass: f64 = weights.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        let winner = core[sample_proportional(&weights, mass, rng)];
        for &i in core {
            out[i] = 0.0;
        }
        out[winner] = mass.min(1.0);
    }
    out
}

/// Deterministic checks of the filtering guarantees; returns violations.
pub fn audit_filter(inst: &Instance, y: &[f64], nm: &NearestMassSet, filt: &FilterResult, cfg: &ScaleConfig) -> Vec<String> {
    let mut bad = Vec::new();
    let factor = cfg.filter_factor();
    let eps = cfg.epsilon;
    let mut seen = vec![false; inst.n_facilities()];
    for (pos, ball) in filt.balls.iter().enumerate() {
        for &i in ball {
            if seen[i] {
                bad.push(format!("facility entry {i} lies in two balls"));
            }
            seen[i] = true;
        }
        let mass: f64 = ball.iter().map(|&i| y[i]).sum();
        if mass > 1.0 + 1e-9 || mass <= 1.0 / (2.0 - eps) {
            bad.push(format!("ball {pos} has mass {mass} outside (1/(2-eps), 1]"));
        }
        if !filt.cores[pos].iter().all(|i| ball.contains(i)) {
            bad.push(format!("core {pos} is not inside its ball"));
        }
    }
    for j in 0..inst.n_clients() {
        let r = filt.rep_of[j];
        if nm.d_av(r) > nm.d_av(j) + 1e-12 {
            bad.push(format!("client {j}: representative has larger d_av"));
        }
        let d = inst.d_cc(j, r);
        if d > (factor - 2.0) * nm.d_av(j) * (1.0 + 1e-12) {
            bad.push(format!("client {j}: representative too far ({d})"));
        }
        if filt.types[j] != ClientType::Concentrated && d > 4.0 * nm.d_av(j) * (1.0 + 1e-9) + 1e-12 {
            bad.push(format!("client {j}: d(j, rep) = {d} > 4 d_av = {}", 4.0 * nm.d_av(j)));
        }
    }
    // Heavy cores next to cut balls.
    for (pos1, &j1) in filt.representatives.iter().enumerate() {
        if filt.ball_is_full[pos1] {
            continue;
        }
        let Some((pos2, &j2)) = filt
            .representatives
            .iter()
            .enumerate()
            .filter(|(_, &o)| o != j1)
            .min_by(|a, b| inst.d_cc(j1, *a.1).total_cmp(&inst.d_cc(j1, *b.1)).then(a.1.cmp(b.1)))
        else {
            continue;
        };
        if nm.d_max(j2) >= eps * nm.d_max(j1) {
            let core_mass: f64 = filt.cores[pos2].iter().map(|&i| y[i]).sum();
            let need = 1.0 - 4.0 * eps.powf(cfg.p + 1.0);
            if core_mass < need - 1e-9 {
                bad.push(format!("core of representative {j2} has mass {core_mass} < {need}"));
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::nearest_mass_sets;
    use crate::rng::{stream, tag};

    fn cfg() -> ScaleConfig {
        ScaleConfig::new(1.0, 0.25).unwrap()
    }

    #[test]
    fn single_client_keeps_full_ball() {
        let inst = Instance::euclidean(&[vec![0.0]], &[vec![1.0], vec![2.0]], 1, 1.0).unwrap();
        let nm = nearest_mass_sets(&inst, &[0.5, 0.5]).unwrap();
        let f = filter(&nm.instance, &nm.y, &nm.sets, &cfg());
        assert_eq!(f.representatives, vec![0]);
        assert!(f.ball_is_full[0]);
        assert_eq!(f.balls[0], nm.sets.sets[0]);
        assert!(audit_filter(&nm.instance, &nm.y, &nm.sets, &f, &cfg()).is_empty());
    }

    #[test]
    fn twin_clients_and_an_isolated_one() {
        let clients = vec![vec![0.0], vec![0.1], vec![1000.0]];
        let facilities = vec![vec![-0.5], vec![0.6], vec![1000.0]];
        let inst = Instance::euclidean(&clients, &facilities, 2, 1.0).unwrap();
        let nm = nearest_mass_sets(&inst, &[0.5, 0.5, 1.0]).unwrap();
        let f = filter(&nm.instance, &nm.y, &nm.sets, &cfg());
        assert_eq!(f.representatives.len(), 2);
        assert_eq!(f.rep_of[0], f.rep_of[1]);
        assert!(audit_filter(&nm.instance, &nm.y, &nm.sets, &f, &cfg()).is_empty());
        assert!(f.balls[0].iter().all(|i| !f.balls[1].contains(i)));
    }

    #[test]
    fn concentrated_type_by_definition() {
        let inst = Instance::euclidean(&[vec![0.0]], &[vec![1.0], vec![2.0]], 1, 1.0).unwrap();
        let nm = nearest_mass_sets(&inst, &[0.5, 0.5]).unwrap();
        let f = filter(&nm.instance, &nm.y, &nm.sets, &cfg());
        // d_max = 2 <= 256 * 1.5
        assert_eq!(f.types[0], ClientType::Concentrated);
    }

    #[test]
    fn core_mass_moves_to_one_facility() {
        let filt = FilterResult {
            representatives: vec![0],
            rep_of: vec![0],
            balls: vec![vec![0, 1]],
            ball_is_full: vec![true],
            cores: vec![vec![0, 1]],
            types: vec![ClientType::Concentrated],
            tie_conflicts: 0,
        };
        let mut first = 0;
        let n = 4000;
        for t in 0..n {
            let out = consolidate_cores(&[0.3, 0.1, 0.6], &filt, &mut stream(5, tag::CORES, t));
            assert!((out[0] + out[1] - 0.4).abs() < 1e-12);
            assert!(out[0] == 0.0 || out[1] == 0.0);
            assert_eq!(out[2], 0.6);
            if out[0] > 0.0 {
                first += 1;
            }
        }
        let frac = first as f64 / n as f64;
        let se = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((frac - 0.75).abs() < 4.0 * se, "{frac}");
    }
}
