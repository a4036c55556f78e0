//! Property suites: certificate sweeps, Monte Carlo checks of the rounding
//! guarantees, structural audits and oracle comparisons.
//!
//! Every check is a pure function of its parameters and seed. The `verify`
//! command runs them with the default sizes; the acceptance target pins its
//! own.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::generate::{generate_instance, GeneratorSpec};
use super::pipeline::{pseudo_pipeline, run_pipeline, ExperimentConfig};
use super::stats::StatSummary;
use crate::cost::open_set_cost;
use crate::error::{Error, Result};
use crate::graph::{build_copy_graph, build_weighted, partition, SourceOrder};
use crate::instance::Instance;
use crate::lmp::{
    expected_drift, general_alpha, one_step_potential_check, run_lmp, verify_eq1, verify_euclid_pair, ClientState,
    HappyTracking, LmpOptions, Neighborhood, PairForm, SamplingMode, EUCLIDEAN_MEANS_ALPHA,
};
use crate::lp::{nearest_mass_sets, solve_relaxation, DEFAULT_ACCURACY};
use crate::preprocess::{pipage_round, ScaleConfig};
use crate::pseudo::{balanced_selection, NodeKind, RoundingState, UnbalancedPlan};
use crate::reduction::{
    brute_force_opt, is_sparse, pseudo_to_true, reduce_to_sparse, reduction_delta, reduction_depth, solve_sparse,
    PseudoSolution, ReductionConfig,
};
use crate::rng::{derive_seed, stream, tag};
use crate::solution::FractionalSolution;

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: u64,
    pub violations: u64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn counted(name: &str, samples: u64, violations: u64, detail: String) -> Self {
        CheckResult { name: name.into(), samples, violations, passed: violations == 0 && samples > 0, detail }
    }

    /// Rate check: `violations` may be nonzero as long as their share stays within `allowed`.
    fn rated(name: &str, samples: u64, violations: u64, allowed: f64, detail: String) -> Self {
        let passed = samples > 0 && violations as f64 <= allowed * samples as f64 + 1e-9;
        CheckResult { name: name.into(), samples, violations, passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Stream for sample `i` of a check.
fn rng_for(seed: u64, i: u64) -> rand_chacha::ChaCha8Rng {
    stream(seed, tag::VERIFY, i)
}

/// Positive weights rescaled to total `mass`, each capped at 1.
pub fn random_opening<R: Rng>(n: usize, mass: f64, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| (v * mass / s).min(1.0)).collect()
}

/// `|mean − target| ≤ 4·stderr`, exact when the sample has no spread.
fn within_four_stderr(s: &StatSummary, target: f64) -> bool {
    (s.mean - target).abs() <= 4.0 * s.stderr + 1e-12
}

// ---------------------------------------------------------------- certificates

fn neighborhood_from(inst: &Instance, client: usize, facilities: &[usize], y: Vec<f64>) -> Neighborhood {
    Neighborhood {
        to_client: facilities.iter().map(|&i| inst.d_cf(client, i)).collect(),
        between: facilities.iter().map(|&a| facilities.iter().map(|&b| inst.d_ff(a, b)).collect()).collect(),
        y,
    }
}

/// The opening-weighted certificate on random metrics: Euclidean point sets
/// in dimensions 1 to 4 and shortest-path metrics of random graphs.
pub fn check_eq1_random(p: f64, samples: u64, seed: u64) -> CheckResult {
    let alpha = general_alpha(p);
    let bad: Vec<u64> = (0..samples)
        .into_par_iter()
        .filter(|&s| {
            let mut rng = rng_for(seed, s);
            let m = rng.gen_range(1..=6usize);
            let inst = if s % 2 == 0 {
                let spec = GeneratorSpec::Euclidean {
                    n_clients: 1,
                    n_facilities: m,
                    dim: rng.gen_range(1..=4),
                    seed: rng.gen(),
                };
                generate_instance(&spec, 1, p).expect("valid generator")
            } else {
                let spec = GeneratorSpec::GraphMetric { n: m + 1, edge_density: rng.gen_range(0.0..1.0), seed: rng.gen() };
                let full = generate_instance(&spec, 1, p).expect("valid generator");
                let metric = full.shared_metric();
                Instance::from_shared(metric, vec![0], (1..=m).collect(), 1, p).expect("valid instance")
            };
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..1.0)).collect();
            let facilities: Vec<usize> = (0..m).collect();
            !verify_eq1(&neighborhood_from(&inst, 0, &facilities, y), p, alpha)
        })
        .collect();
    CheckResult::counted(
        &format!("eq1 random p={p}"),
        samples,
        bad.len() as u64,
        format!("alpha = {alpha}; first failing samples {:?}", &bad[..bad.len().min(5)]),
    )
}

/// Collinear configurations with the client at 0: two or three facilities at
/// grid positions in [−2, 2] with openings from a grid in (0, 1].
pub fn check_eq1_collinear(p: f64, alpha: f64) -> CheckResult {
    let positions: Vec<f64> = (0..=16).map(|v| -2.0 + 0.25 * v as f64).collect();
    let weights = [0.1, 0.25, 0.5, 0.75, 1.0];
    let mut samples = 0u64;
    let mut bad = 0u64;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut eval = |pts: &[f64], y: &[f64]| {
        let nb = Neighborhood {
            to_client: pts.iter().map(|x| x.abs()).collect(),
            between: pts.iter().map(|a| pts.iter().map(|b| (a - b).abs()).collect()).collect(),
            y: y.to_vec(),
        };
        let (lhs, rhs) = crate::lmp::eq1_sides(&nb, p, alpha);
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
        samples += 1;
        if !verify_eq1(&nb, p, alpha) {
            bad += 1;
        }
    };
    for (a, &xa) in positions.iter().enumerate() {
        for &xb in &positions[a..] {
            for &ya in &weights {
                for &yb in &weights {
                    eval(&[xa, xb], &[ya, yb]);
                }
            }
        }
    }
    for (a, &xa) in positions.iter().enumerate().step_by(2) {
        for (b, &xb) in positions.iter().enumerate().skip(a).step_by(2) {
            for &xc in positions.iter().skip(b).step_by(2) {
                for &ya in &weights[..3] {
                    for &yb in &weights[..3] {
                        for &yc in &weights[..3] {
                            eval(&[xa, xb, xc], &[ya, yb, yc]);
                        }
                    }
                }
            }
        }
    }
    CheckResult::counted(
        &format!("eq1 collinear p={p} alpha={alpha}"),
        samples,
        bad,
        format!("largest lhs/rhs {worst:.6}"),
    )
}

/// Pairwise Euclidean certificates with the client at the origin, in
/// dimensions 2 to 10. Some pairs are parallel, some contain a zero vector.
pub fn check_euclid_pairs(samples: u64, seed: u64) -> Vec<CheckResult> {
    let cases = [("euclid exact alpha=11/3", EUCLIDEAN_MEANS_ALPHA, PairForm::Exact), ("euclid relaxed alpha=4", 4.0, PairForm::Relaxed)];
    cases
        .iter()
        .map(|&(name, alpha, form)| {
            let bad = (0..samples)
                .into_par_iter()
                .filter(|&s| {
                    let mut rng = rng_for(seed, s);
                    let dim = rng.gen_range(2..=10usize);
                    let scale_a = 10f64.powf(rng.gen_range(-2.0..2.0));
                    let scale_b = 10f64.powf(rng.gen_range(-2.0..2.0));
                    let vi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0) * scale_a).collect();
                    let vj: Vec<f64> = match s % 10 {
                        0 => vec![0.0; dim],
                        1 => vi.iter().map(|x| x * rng.gen_range(-2.0..2.0)).collect(),
                        _ => (0..dim).map(|_| rng.gen_range(-1.0..1.0) * scale_b).collect(),
                    };
                    !verify_euclid_pair(&vi, &vj, alpha, form)
                })
                .count() as u64;
            CheckResult::counted(name, samples, bad, String::new())
        })
        .collect()
}

// ---------------------------------------------------------------- LMP rounding

fn small_instance(idx: u64, seed: u64, max_facilities: usize, p: f64) -> Instance {
    let mut rng = rng_for(seed, idx);
    let nf = rng.gen_range(2..=max_facilities);
    let spec = if idx.is_multiple_of(2) {
        GeneratorSpec::Euclidean { n_clients: rng.gen_range(1..=8), n_facilities: nf, dim: 2, seed: rng.gen() }
    } else {
        GeneratorSpec::GraphMetric { n: nf, edge_density: 0.3, seed: rng.gen() }
    };
    generate_instance(&spec, 1, p).expect("valid generator")
}

/// Zero expected drift at reachable states: random openings on
/// `instances` random instances, traced until `states` states are seen.
pub fn check_drift(instances: u64, states: u64, seed: u64) -> CheckResult {
    let per = states.div_ceil(instances.max(1));
    let results: Vec<(u64, u64, f64)> = (0..instances)
        .into_par_iter()
        .map(|idx| {
            let inst = small_instance(idx, seed, 12, 1.0);
            let order = SourceOrder::new(&inst);
            let mut rng = rng_for(derive_seed(seed, 1, idx), 0);
            let (mut seen, mut bad, mut worst) = (0u64, 0u64, 0f64);
            while seen < per {
                let mass = rng.gen_range(1.0..=inst.n_facilities() as f64 * 0.8).max(1.0);
                let y = random_opening(inst.n_facilities(), mass, &mut rng);
                let run = run_lmp(&y, &order, None, LmpOptions::default(), &mut rng, |cur, g| {
                    if seen < per {
                        let d = expected_drift(g, cur);
                        worst = worst.max(d.abs());
                        seen += 1;
                        if d.abs() > 1e-9 {
                            bad += 1;
                        }
                    }
                });
                if run.is_err() {
                    bad += 1;
                    seen += 1;
                }
            }
            (seen, bad, worst)
        })
        .collect();
    let seen = results.iter().map(|r| r.0).sum();
    let bad = results.iter().map(|r| r.1).sum();
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    CheckResult::counted("lmp drift", seen, bad, format!("{instances} instances; largest |drift| {worst:e}"))
}

/// One-step potential monotonicity on states reached by naive runs. A
/// client's nearest facilities carry mass exactly 1; the other openings are
/// random.
pub fn check_potential(p: f64, states: u64, seed: u64) -> CheckResult {
    let alpha = general_alpha(p);
    let mut seen = 0u64;
    let mut bad = 0u64;
    let mut worst = f64::NEG_INFINITY;
    let mut idx = 0u64;
    while seen < states {
        let mut rng = rng_for(seed, idx);
        let inst = small_instance(idx, derive_seed(seed, 2, 0), 6, p);
        idx += 1;
        let j = rng.gen_range(0..inst.n_clients());
        let near = inst.facilities_by_distance(j);
        let m = rng.gen_range(2..=near.len());
        let mut y = vec![0.0; inst.n_facilities()];
        let fj = &near[..m];
        let share = random_opening(m, 1.0, &mut rng);
        let s: f64 = share.iter().sum();
        for (&i, v) in fj.iter().zip(&share) {
            y[i] = v / s;
        }
        for &i in &near[m..] {
            y[i] = rng.gen_range(0.05..0.95);
        }
        let dist: Vec<f64> = (0..inst.n_facilities()).map(|i| inst.d_cf(j, i)).collect();
        let order = SourceOrder::new(&inst);
        let opts = LmpOptions { mode: SamplingMode::Naive, check_drift: false, record_states: true };
        let Ok(run) = run_lmp(&y, &order, None, opts, &mut rng, |_, _| {}) else {
            bad += 1;
            seen += 1;
            continue;
        };
        let mut state = ClientState { alive: fj.to_vec(), backup: f64::INFINITY };
        let mut cur = y.clone();
        for (t, it) in run.trace.iter().enumerate() {
            if seen >= states {
                break;
            }
            if !cur.iter().any(|&v| v > 0.0 && v < 1.0) {
                break;
            }
            let g = build_weighted(&cur, &order).expect("valid state");
            match one_step_potential_check(&state, &g, &cur, &dist, alpha, p) {
                Ok((lhs, rhs)) => {
                    if rhs > 0.0 {
                        worst = worst.max(lhs / rhs);
                    }
                    if lhs > rhs + 1e-9 {
                        bad += 1;
                    }
                }
                Err(_) => bad += 1,
            }
            seen += 1;
            if state.alive.contains(&it.chosen) {
                break;
            }
            state.backup = state.backup.min(dist[it.chosen]);
            state.alive.retain(|i| !it.removed.contains(i));
            cur = run.states[t].clone();
        }
    }
    CheckResult::counted(
        &format!("lmp potential p={p}"),
        seen,
        bad,
        format!("alpha = {alpha}; {idx} instances; largest lhs/rhs {worst:.6}"),
    )
}

/// Mean number of opened facilities against `|y|₁` over `trials` runs.
pub fn check_lmp_open(inst: &Instance, y: &[f64], trials: u64, seed: u64) -> Result<CheckResult> {
    let order = SourceOrder::new(inst);
    let counts: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_lmp(y, &order, None, LmpOptions::default(), &mut stream(seed, tag::LMP, t), |_, _| {})
                .map(|r| r.open.len() as f64)
        })
        .collect::<Result<_>>()?;
    let s = StatSummary::from_values("open", &counts);
    let target: f64 = y.iter().sum();
    let ok = within_four_stderr(&s, target);
    Ok(CheckResult::counted(
        "lmp open count",
        trials,
        u64::from(!ok),
        format!("|y|₁ = {target:.6}, mean {:.6}, stderr {:.6}, |diff|/stderr {:.2}", s.mean, s.stderr, (s.mean - target).abs() / s.stderr.max(1e-300)),
    ))
}

/// Per-client mean connection cost against `alpha · factor` times the
/// client's fractional cost on its nearest unit of mass.
pub fn check_lmp_cost(inst: &Instance, y: &[f64], alpha: f64, factor: f64, trials: u64, seed: u64) -> Result<CheckResult> {
    let nm = nearest_mass_sets(inst, y)?;
    let order = SourceOrder::new(&nm.instance);
    let n = inst.n_clients();
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let happy = HappyTracking { inst: &nm.instance, sets: &nm.sets.sets };
            run_lmp(&nm.y, &order, Some(happy), LmpOptions::default(), &mut stream(seed, tag::LMP, t), |_, _| {})
                .map(|r| r.client_costs(&nm.instance))
        })
        .collect::<Result<_>>()?;
    let mut bad = 0u64;
    let mut worst = 0f64;
    for j in 0..n {
        let mean = per_trial.iter().map(|c| c[j]).sum::<f64>() / trials as f64;
        let frac = nm.sets.cost(&nm.instance, &nm.y, j);
        if frac > 0.0 {
            worst = worst.max(mean / frac);
        }
        if mean > alpha * frac * factor + 1e-12 {
            bad += 1;
        }
    }
    Ok(CheckResult::counted(
        &format!("lmp cost alpha={alpha:.4} p={}", inst.p()),
        trials,
        bad,
        format!("{n} clients; largest mean/fractional {worst:.4} against {:.4}", alpha * factor),
    ))
}

/// 20-facility instances used by the open-count and cost sweeps, each with
/// a random fractional opening of mass 4.
pub fn lmp_suite(p: f64, euclidean: bool, seed: u64) -> (Instance, Vec<f64>) {
    let spec = if euclidean {
        GeneratorSpec::Euclidean { n_clients: 30, n_facilities: 20, dim: 2, seed }
    } else {
        GeneratorSpec::GraphMetric { n: 20, edge_density: 0.2, seed }
    };
    let inst = generate_instance(&spec, 4, p).expect("valid generator");
    let y = random_opening(20, 4.0, &mut rng_for(seed, u64::MAX));
    (inst, y)
}

// ---------------------------------------------------------------- pipage

fn random_laminar<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut family = Vec::new();
    let mut start = 0;
    while start < n {
        let len = rng.gen_range(1..=(n - start).min(5));
        let block: Vec<usize> = idx[start..start + len].to_vec();
        if len > 2 && rng.gen::<bool>() {
            family.push(block[..len / 2].to_vec());
        }
        family.push(block);
        start += len;
    }
    family
}

/// Every set of a random laminar family (and the whole ground set) keeps its
/// sum within the floor and ceiling of its scaled value, in every run.
pub fn check_pipage_quantization(runs: u64, seed: u64) -> CheckResult {
    let bad = (0..runs)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = rng_for(seed, r);
            let n = 10;
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let family = random_laminar(n, &mut rng);
            let g = [0.25, 0.125, 0.0625][(r % 3) as usize];
            let Ok(out) = pipage_round(&y, &family, g, &mut rng) else { return true };
            let mut all = family.clone();
            all.push((0..n).collect());
            let sums_ok = all.iter().all(|s| {
                let before: f64 = s.iter().map(|&i| y[i]).sum::<f64>() / g;
                let after = s.iter().map(|&i| out.units[i]).sum::<u64>() as f64;
                after >= before.floor() - 1e-9 && after <= before.ceil() + 1e-9
            });
            let grid_ok = out.y.iter().zip(&out.units).all(|(&v, &u)| (v - u as f64 * g).abs() <= 1e-12);
            !(sums_ok && grid_ok)
        })
        .count() as u64;
    CheckResult::counted("pipage quantization", runs, bad, "granularities 1/4, 1/8, 1/16".into())
}

/// Marginals and within-set covariances of one fixed pipage input.
pub fn check_pipage_moments(trials: u64, seed: u64) -> Result<Vec<CheckResult>> {
    let y = [0.13, 0.29, 0.41, 0.07, 0.33, 0.52, 0.61, 0.18, 0.95, 0.44];
    let family = vec![vec![0, 1, 2], vec![0, 1, 2, 3, 4], vec![5, 6], vec![7, 8, 9]];
    let g = 0.125;
    let outs: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| pipage_round(&y, &family, g, &mut stream(seed, tag::PIPAGE, t)).map(|o| o.y))
        .collect::<Result<_>>()?;
    let col = |i: usize| -> Vec<f64> { outs.iter().map(|o| o[i]).collect() };
    let mut bad_marg = 0;
    let mut worst_marg = 0f64;
    let means: Vec<f64> = (0..y.len())
        .map(|i| {
            let s = StatSummary::from_values("y", &col(i));
            if !within_four_stderr(&s, y[i]) {
                bad_marg += 1;
            }
            worst_marg = worst_marg.max((s.mean - y[i]).abs() / s.stderr.max(1e-300));
            s.mean
        })
        .collect();
    let mut pairs = 0;
    let mut bad_cov = 0;
    let mut worst_cov = f64::NEG_INFINITY;
    for set in &family {
        for (x, &a) in set.iter().enumerate() {
            for &b in &set[x + 1..] {
                let prods: Vec<f64> = outs.iter().map(|o| (o[a] - means[a]) * (o[b] - means[b])).collect();
                let s = StatSummary::from_values("cov", &prods);
                pairs += 1;
                worst_cov = worst_cov.max(s.mean / s.stderr.max(1e-300));
                if s.mean > 4.0 * s.stderr + 1e-12 {
                    bad_cov += 1;
                }
            }
        }
    }
    Ok(vec![
        CheckResult::counted(
            "pipage marginals",
            trials,
            bad_marg,
            format!("{} entries; largest |mean − y|/stderr {worst_marg:.2}", y.len()),
        ),
        CheckResult::counted(
            "pipage covariances",
            trials,
            bad_cov,
            format!("{pairs} pairs within sets; largest cov/stderr {worst_cov:.2}"),
        ),
    ])
}

// ---------------------------------------------------------------- copy rounding

/// Instances of the pseudo-rounding sweeps: the first `count` instances,
/// in a fixed scan over random graph metrics, uniform Euclidean points and
/// planar clusters (10 to 12 facilities, k from 2 to 4), whose LP optimum is
/// fractional. Integral LP optima are skipped since they round trivially.
pub const STANDARD_SUITE_SIZE: usize = 20;

pub fn standard_suite(p: f64, count: usize) -> Result<Vec<(Instance, FractionalSolution)>> {
    let mut out = Vec::new();
    for s in 0..10_000u64 {
        let k = 2 + (s % 3) as usize;
        let specs = [
            GeneratorSpec::GraphMetric { n: 10, edge_density: 0.2, seed: s },
            GeneratorSpec::Euclidean { n_clients: 15, n_facilities: 10, dim: 2, seed: s },
            GeneratorSpec::Clustered { centers: 4, spread: 1.5, seed: s, points_per_center: 3 },
        ];
        for spec in &specs {
            let inst = generate_instance(spec, k, p)?;
            let lp = solve_relaxation(&inst, DEFAULT_ACCURACY)?;
            if has_fractional(&lp.y) {
                out.push((inst, lp));
                if out.len() == count {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

fn has_fractional(y: &[f64]) -> bool {
    y.iter().any(|&v| v > 1e-6 && v < 1.0 - 1e-6)
}

#[derive(Debug, Clone, Default)]
struct PseudoTally {
    runs: u64,
    failures: Vec<String>,
    within: u64,
    budget_used: Vec<f64>,
    balanced_steps: u64,
    kappa_checks: u64,
    far_clients: u64,
    z_values: Vec<f64>,
}

impl PseudoTally {
    fn merge(mut self, o: PseudoTally) -> PseudoTally {
        self.runs += o.runs;
        self.failures.extend(o.failures);
        self.within += o.within;
        self.budget_used.extend(o.budget_used);
        self.balanced_steps += o.balanced_steps;
        self.kappa_checks += o.kappa_checks;
        self.far_clients += o.far_clients;
        self.z_values.extend(o.z_values);
        self
    }
}

fn pseudo_runs(suite: &[(Instance, FractionalSolution)], scale: &ScaleConfig, runs: u64, seed: u64) -> PseudoTally {
    let tallies: Vec<PseudoTally> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let (inst, lp) = &suite[(r as usize) % suite.len()];
            let mut t = PseudoTally { runs: 1, ..PseudoTally::default() };
            match pseudo_pipeline(inst, lp, scale, derive_seed(seed, 3, r), 0) {
                Ok((run, _)) => {
                    t.within = u64::from(run.within_budget);
                    t.budget_used.push(run.budget_used);
                    t.kappa_checks = run.kappa_checks as u64;
                    t.balanced_steps =
                        run.events.iter().filter(|e| matches!(e, crate::pseudo::UpdateEvent::Balanced { .. })).count() as u64;
                    t.far_clients = run.per_client.iter().filter(|c| c.distance > 3.0 * c.initial_radius * (1.0 + 1e-9) + 1e-12).count() as u64;
                    t.z_values = run.z_values.clone();
                }
                Err(e) => t.failures.push(format!("run {r}: {e}")),
            }
            t
        })
        .collect();
    tallies.into_iter().fold(PseudoTally::default(), PseudoTally::merge)
}

/// Structural audits and the open-count budget of the copy rounding.
///
/// `runs` seeded runs at default surrogate scale cycle over the standard
/// suites for p = 1 and 2. Separately, runs with the force threshold at 0
/// take the sampling branch until `kappa_target` bounded-difference audits
/// have been executed; their net increases feed the tail check.
pub fn check_pseudo(runs: u64, kappa_target: u64, budget_rate: f64, z_tail_rate: f64, seed: u64) -> Result<Vec<CheckResult>> {
    let mut main = PseudoTally::default();
    let mut sampled = PseudoTally::default();
    for (pi, p) in [1.0, 2.0].into_iter().enumerate() {
        let suite = standard_suite(p, STANDARD_SUITE_SIZE)?;
        let scale = ScaleConfig::for_p(p)?;
        let share = runs / 2 + if pi == 0 { runs % 2 } else { 0 };
        main = main.merge(pseudo_runs(&suite, &scale, share, derive_seed(seed, 10, pi as u64)));

        let sampling = scale.clone().with_force_threshold(0.0);
        let mut round = 0;
        while sampled.kappa_checks < kappa_target * (pi as u64 + 1) / 2 && round < 64 {
            sampled = sampled.merge(pseudo_runs(&suite, &sampling, 20, derive_seed(seed, 20 + pi as u64, round)));
            round += 1;
        }
    }
    let structural = main.failures.len() + sampled.failures.len();
    let first_failure = main.failures.iter().chain(&sampled.failures).next().cloned().unwrap_or_default();
    let rate = main.within as f64 / main.runs.max(1) as f64;
    let mut tenths = std::collections::BTreeMap::new();
    for &b in &main.budget_used {
        *tenths.entry((b * 10.0).round() as i64).or_insert(0u64) += 1;
    }
    let histogram = tenths.iter().map(|(t, n)| format!("{:.1}: {n}", *t as f64 / 10.0)).collect::<Vec<_>>().join(", ");
    let z_cap = ScaleConfig::for_p(1.0)?.z_cap;
    let exceed = sampled.z_values.iter().filter(|&&z| z > z_cap).count();
    let exceed_rate = exceed as f64 / sampled.z_values.len().max(1) as f64;
    Ok(vec![
        CheckResult::counted(
            "pseudo structure",
            main.runs + sampled.runs,
            structural as u64,
            format!(
                "balanced steps {} (|F'| unchanged in each); sampling-branch runs {}; {first_failure}",
                main.balanced_steps + sampled.balanced_steps,
                sampled.runs
            ),
        ),
        CheckResult::counted(
            "pseudo bounded differences",
            sampled.kappa_checks,
            u64::from(sampled.kappa_checks < kappa_target),
            format!("{} audited coordinates, target {kappa_target}; each checked exactly in-run", sampled.kappa_checks),
        ),
        CheckResult::counted(
            "pseudo backup distance",
            main.runs + sampled.runs,
            main.far_clients + sampled.far_clients,
            "every client within 3 times its initial cover radius".into(),
        ),
        CheckResult::rated(
            "pseudo budget",
            main.runs,
            main.runs - main.within,
            1.0 - budget_rate,
            format!(
                "held in {}/{} runs ({:.1}%, need {:.0}%); budget used (value: runs) {histogram}",
                main.within,
                main.runs,
                100.0 * rate,
                100.0 * budget_rate,
            ),
        ),
        CheckResult::rated(
            "pseudo net-increase tail",
            sampled.z_values.len() as u64,
            exceed as u64,
            z_tail_rate,
            format!("Z above cap in {exceed}/{} sampling steps ({:.1}%)", sampled.z_values.len(), 100.0 * exceed_rate),
        ),
    ])
}

/// Selection marginals of one update step, coin included: sampled copies of
/// F⁺ (resp. F⁻ and fictitious) at `L/Δ` (resp. `(1+ε^{c5})L/Δ`), F⁰ copies
/// within `[(1−ε^{c5})(1+ε^{c5})L/Δ, (1+ε^{c5})L/Δ]`, and pairs below
/// `2((1+ε^{c5})L)²/Δ²`. Uses a small `L·Δ²` so conflicts are rare.
pub fn check_copy_marginals(trials: u64, seed: u64) -> Result<CheckResult> {
    let p = 1.0;
    let scale = ScaleConfig::for_p(p)?.with_delta(4).with_granularity(0.25).with_sample_scale(0.05).with_force_threshold(0.0);
    let spec = GeneratorSpec::GraphMetric { n: 10, edge_density: 0.2, seed: 28 };
    let inst = generate_instance(&spec, 3, p)?;
    let lp = solve_relaxation(&inst, DEFAULT_ACCURACY)?;
    let pre = crate::preprocess::preprocess(&inst, &lp.y, &scale, &mut stream(seed, tag::PIPAGE, 0))?;
    let split = &pre.split.instance;
    let state = RoundingState::new(&pre.rounded.units, scale.delta)?;
    let g = build_copy_graph(&state.copies.copies, split, scale.delta)?;
    let part = partition(&g);
    let plan = UnbalancedPlan::new(&state, &g, &part, &scale);
    let n = g.len();
    // node index of each real copy in the plan
    let mut node_of = vec![None; n];
    for (x, node) in plan.nodes.iter().enumerate() {
        if let NodeKind::Plus(c) | NodeKind::Minus(c) = node.kind {
            node_of[c] = Some(x);
        }
    }
    let hits: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, tag::PSEUDO, t);
            let mut chosen = vec![false; n];
            if rng.gen::<bool>() {
                let sel = plan.sample(&mut rng);
                for (c, slot) in node_of.iter().enumerate() {
                    if let Some(x) = *slot {
                        chosen[c] = sel[x];
                    }
                }
            } else {
                for c in balanced_selection(&g, &part, &scale, &mut rng).1 {
                    chosen[c] = true;
                }
            }
            chosen
        })
        .collect();
    let l = scale.sample_scale;
    let d = scale.delta as f64;
    let e5 = scale.eps_c5();
    let heavy: BTreeSet<usize> = plan.heavy.iter().copied().collect();
    let mut bad = 0u64;
    let mut checked = 0u64;
    for c in 0..n {
        if heavy.contains(&c) {
            continue;
        }
        let col: Vec<f64> = hits.iter().map(|h| f64::from(u8::from(h[c]))).collect();
        let s = StatSummary::from_values("hit", &col);
        let (lo, hi) = if part.zero.contains(&c) {
            ((1.0 - e5) * (1.0 + e5) * l / d, (1.0 + e5) * l / d)
        } else if part.plus.contains(&c) {
            (l / d, l / d)
        } else {
            ((1.0 + e5) * l / d, (1.0 + e5) * l / d)
        };
        checked += 1;
        if s.mean < lo - 4.0 * s.stderr || s.mean > hi + 4.0 * s.stderr {
            bad += 1;
        }
    }
    let pair_cap = 2.0 * ((1.0 + e5) * l).powi(2) / (d * d);
    let mut rng = rng_for(seed, 0);
    let mut pairs = 0u64;
    for _ in 0..200 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a == b || heavy.contains(&a) || heavy.contains(&b) {
            continue;
        }
        let col: Vec<f64> = hits.iter().map(|h| f64::from(u8::from(h[a] && h[b]))).collect();
        let s = StatSummary::from_values("pair", &col);
        pairs += 1;
        if s.mean > pair_cap + 4.0 * s.stderr {
            bad += 1;
        }
    }
    Ok(CheckResult::counted(
        "pseudo selection marginals",
        trials,
        bad,
        format!(
            "{checked} copies (F+ {}, F0 {}, F- {}), {pairs} pairs, L = {l}, delta = {}",
            part.plus.len(),
            part.zero.len(),
            part.minus.len(),
            scale.delta
        ),
    ))
}

// ---------------------------------------------------------------- reduction

/// Small instances for the reduction: at most 8 facilities, at most 12
/// clients, k ≤ 3, and a surplus c ∈ {1, 2}.
pub fn reduction_suite(count: u64, seed: u64) -> Vec<(Instance, usize)> {
    (0..count)
        .map(|idx| {
            let mut rng = rng_for(derive_seed(seed, 4, 0), idx);
            let p = if idx % 2 == 0 { 1.0 } else { 2.0 };
            let c = 1 + (idx % 4 >= 2) as usize;
            let nf = rng.gen_range(5..=8usize);
            let k = rng.gen_range(1..=3usize).min(nf - c);
            let spec = if idx % 3 == 0 {
                GeneratorSpec::GraphMetric { n: nf, edge_density: 0.3, seed: rng.gen() }
            } else {
                GeneratorSpec::Euclidean { n_clients: rng.gen_range(6..=12), n_facilities: nf, dim: 2, seed: rng.gen() }
            };
            (generate_instance(&spec, k, p).expect("valid generator"), c)
        })
        .collect()
}

/// Optimum plus the first `c` facilities outside it.
fn padded_optimum(inst: &Instance, c: usize) -> Result<Vec<usize>> {
    let mut open = brute_force_opt(inst)?.open;
    let extra: Vec<usize> = (0..inst.n_facilities()).filter(|i| !open.contains(i)).take(c).collect();
    open.extend(extra);
    open.sort_unstable();
    Ok(open)
}

/// A random set of `k + c` facilities costing at most `alpha·opt`, or the
/// padded optimum when 64 draws find none. Stands in for a pseudo-solver
/// with factor `alpha`.
fn random_pseudo<R: Rng>(inst: &Instance, c: usize, alpha: f64, rng: &mut R) -> Result<Vec<usize>> {
    let opt = brute_force_opt(inst)?.total_cost;
    let size = (inst.k() + c).min(inst.n_facilities());
    let all: Vec<usize> = (0..inst.n_facilities()).collect();
    for _ in 0..64 {
        let mut open: Vec<usize> = all.choose_multiple(rng, size).copied().collect();
        open.sort_unstable();
        if open_set_cost(inst, &open) <= alpha * opt {
            return Ok(open);
        }
    }
    padded_optimum(inst, c)
}

/// Witness found, bound checks, bound violations, end-to-end ok, cost/opt.
type ReductionTally = (bool, u64, u64, bool, f64);

/// Oracle checks of the reduction on `count` instances: the enumeration
/// contains a sparse sub-instance keeping an optimum, the sparse solver
/// meets its cost bound on every such sub-instance, and the full reduction
/// ends within `(α + ε)·opt`. Pseudo-solutions are random `α`-approximate
/// sets with `c` extra facilities.
pub fn check_reduction(count: u64, eps: f64, seed: u64) -> Result<Vec<CheckResult>> {
    let suite = reduction_suite(count, seed);
    let per: Vec<Result<ReductionTally>> = suite
        .par_iter()
        .enumerate()
        .map(|(idx, (inst, c))| {
            let mut rng = rng_for(derive_seed(seed, 6, 0), idx as u64);
            let p = inst.p();
            let alpha = general_alpha(p);
            let opt = brute_force_opt(inst)?;
            let t = reduction_depth(alpha, p, *c, eps);
            let delta = reduction_delta(alpha, p);
            let a = opt.total_cost / t as f64;
            let subs = reduce_to_sparse(inst, usize::try_from(t).unwrap_or(usize::MAX))?;
            let mut witness = false;
            let (mut bound_checks, mut bound_bad) = (0u64, 0u64);
            for sub in &subs {
                if !opt.open.iter().all(|i| sub.facilities.contains(i)) {
                    continue;
                }
                let local = sub.instance(inst)?;
                let local_opt: Vec<usize> =
                    opt.open.iter().map(|i| sub.facilities.iter().position(|f| f == i).expect("kept")).collect();
                if !is_sparse(&local, a, &local_opt) {
                    continue;
                }
                witness = true;
                let t_local = PseudoSolution::new(&local, &random_pseudo(&local, *c, alpha, &mut rng)?)?;
                let surplus = t_local.surplus(inst.k());
                if surplus == 0 {
                    continue;
                }
                let cfg = ReductionConfig::new(delta, t, surplus, a)?;
                let out = solve_sparse(&local, &t_local, &cfg)?;
                bound_checks += 1;
                if out.solution.total_cost > cfg.cost_bound(t_local.cost, opt.total_cost, p) * (1.0 + 1e-12) + 1e-12 {
                    bound_bad += 1;
                }
            }
            let pseudo = PseudoSolution::new(inst, &random_pseudo(inst, *c, alpha, &mut rng)?)?;
            let out =
                pseudo_to_true(inst, &pseudo, alpha, eps, opt.total_cost, |local, _| random_pseudo(local, *c, alpha, &mut rng))?;
            let ratio = if opt.total_cost > 0.0 { out.solution.total_cost / opt.total_cost } else { 1.0 };
            let ok = out.solution.open.len() <= inst.k() && out.solution.total_cost <= (alpha + eps) * opt.total_cost + 1e-9;
            Ok((witness, bound_checks, bound_bad, ok, ratio))
        })
        .collect();
    let per: Vec<ReductionTally> = per.into_iter().collect::<Result<_>>()?;
    let missing = per.iter().filter(|r| !r.0).count() as u64;
    let checks: u64 = per.iter().map(|r| r.1).sum();
    let bound_bad: u64 = per.iter().map(|r| r.2).sum();
    let over = per.iter().filter(|r| !r.3).count() as u64;
    let worst = per.iter().map(|r| r.4).fold(0.0, f64::max);
    Ok(vec![
        CheckResult::counted("reduction sparse witness", count, missing, "oracle scan of the enumerated sub-instances".into()),
        CheckResult::counted("reduction sparse bound", checks, bound_bad, format!("over {count} instances")),
        CheckResult::counted(
            "reduction end to end",
            count,
            over,
            format!("eps = {eps}; largest cost/opt {worst:.4}"),
        ),
    ])
}

// ---------------------------------------------------------------- pipeline

/// Brute-forceable instances for the end-to-end check, with and without
/// fractional LP optima.
pub fn end_to_end_suite(p: f64) -> Vec<Instance> {
    let specs: Vec<(GeneratorSpec, usize)> = vec![
        (GeneratorSpec::GraphMetric { n: 8, edge_density: 0.3, seed: 44 }, 2),
        (GeneratorSpec::GraphMetric { n: 8, edge_density: 0.3, seed: 55 }, 2),
        (GeneratorSpec::GraphMetric { n: 8, edge_density: 0.3, seed: 74 }, 2),
        (GeneratorSpec::GraphMetric { n: 8, edge_density: 0.3, seed: 40 }, 4),
        (GeneratorSpec::Euclidean { n_clients: 12, n_facilities: 8, dim: 3, seed: 48 }, 2),
        (GeneratorSpec::Euclidean { n_clients: 12, n_facilities: 8, dim: 2, seed: 1 }, 3),
        (GeneratorSpec::Line { n: 8 }, 3),
    ];
    specs.into_iter().map(|(s, k)| generate_instance(&s, k, p).expect("valid generator")).collect()
}

/// Best ratio against the oracle over `runs` seeded pipeline runs per
/// instance is at most `α + slack`.
pub fn check_end_to_end(p: f64, runs: usize, slack: f64, seed: u64) -> Result<CheckResult> {
    let alpha = general_alpha(p);
    let mut bad = 0u64;
    let mut lines = Vec::new();
    let suite = end_to_end_suite(p);
    for (idx, inst) in suite.iter().enumerate() {
        let mut cfg = ExperimentConfig::new(p)?;
        cfg.trials = runs;
        cfg.seed = derive_seed(seed, 5, idx as u64);
        cfg.run_lmp = false;
        let rep = run_pipeline(inst, &cfg)?;
        let ratios: Vec<f64> = rep.records.iter().map(|r| r.ratio_oracle.unwrap_or(f64::INFINITY)).collect();
        let opens: Vec<String> = rep
            .records
            .iter()
            .map(|r| format!("{}->{}", r.pseudo_open.map_or("-".into(), |v| v.to_string()), r.final_open.map_or("-".into(), |v| v.to_string())))
            .collect();
        let best = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        if !(best <= alpha + slack) {
            bad += 1;
        }
        let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
        lines.push(format!("#{idx} ratios [{}] open [{}]", shown.join(" "), opens.join(" ")));
    }
    Ok(CheckResult::counted(
        &format!("end to end p={p}"),
        (suite.len() * runs) as u64,
        bad,
        format!("alpha + {slack} = {}; {}", alpha + slack, lines.join("; ")),
    ))
}

// ---------------------------------------------------------------- selector

/// Options parsed from a selector such as `eq1,p=1,samples=100`.
#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub p: Option<f64>,
    pub samples: Option<u64>,
    pub seed: u64,
}

pub const SUITES: [&str; 10] =
    ["eq1", "euclid", "pipage", "drift", "potential", "lmp-open", "lmp-cost", "pseudo", "reduction", "e2e"];

/// Runs the suites named in `selector` (comma separated; `all` selects every
/// suite). Tokens of the form `key=value` set `p`, `samples` or `seed`.
pub fn verify_suite(selector: &str) -> Result<VerifyReport> {
    let mut opts = VerifyOptions::default();
    let mut names: Vec<&str> = Vec::new();
    for token in selector.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((key, value)) = token.split_once('=') {
            let bad = || Error::Config(format!("bad selector option `{token}`"));
            match key {
                "p" => opts.p = Some(value.parse().map_err(|_| bad())?),
                "samples" => opts.samples = Some(value.parse().map_err(|_| bad())?),
                "seed" => opts.seed = value.parse().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
        } else if token == "all" {
            names.extend(SUITES);
        } else if SUITES.contains(&token) {
            names.push(token);
        } else {
            return Err(Error::Config(format!("unknown suite `{token}`; known: all, {}", SUITES.join(", "))));
        }
    }
    if names.is_empty() {
        names.extend(SUITES);
    }
    let mut seen = BTreeSet::new();
    names.retain(|n| seen.insert(*n));
    let mut checks = Vec::new();
    for name in names {
        run_named(name, &opts, &mut checks)?;
    }
    Ok(VerifyReport { checks })
}

fn run_named(name: &str, o: &VerifyOptions, out: &mut Vec<CheckResult>) -> Result<()> {
    let ps = |default: &[f64]| -> Vec<f64> { o.p.map_or_else(|| default.to_vec(), |p| vec![p]) };
    let n = |default: u64| o.samples.unwrap_or(default);
    let seed = o.seed;
    match name {
        "eq1" => {
            for p in ps(&[1.0, 2.0, 3.0]) {
                out.push(check_eq1_random(p, n(10_000), seed));
                out.push(check_eq1_collinear(p, general_alpha(p)));
            }
        }
        "euclid" => out.extend(check_euclid_pairs(n(100_000), seed)),
        "pipage" => {
            out.push(check_pipage_quantization(n(10_000), seed));
            out.extend(check_pipage_moments(n(50_000), seed)?);
        }
        "drift" => out.push(check_drift(50, n(1_000), seed)),
        "potential" => {
            for p in ps(&[1.0, 2.0]) {
                out.push(check_potential(p, n(100), seed));
            }
        }
        "lmp-open" => {
            for euclidean in [true, false] {
                let (inst, y) = lmp_suite(1.0, euclidean, seed);
                out.push(check_lmp_open(&inst, &y, n(20_000), seed)?);
            }
        }
        "lmp-cost" => {
            for p in ps(&[1.0, 2.0]) {
                let (inst, y) = lmp_suite(p, false, seed);
                out.push(check_lmp_cost(&inst, &y, general_alpha(p), 1.02, n(20_000), seed)?);
                if p == 2.0 {
                    let (inst, y) = lmp_suite(p, true, seed);
                    out.push(check_lmp_cost(&inst, &y, EUCLIDEAN_MEANS_ALPHA, 1.02, n(20_000), seed)?);
                }
            }
        }
        "pseudo" => {
            out.extend(check_pseudo(n(1_000), 1_000, 0.9, 0.1, seed)?);
            out.push(check_copy_marginals(n(50_000), seed)?);
        }
        "reduction" => out.extend(check_reduction(n(50), 0.25, seed)?),
        "e2e" => {
            for p in ps(&[1.0, 2.0]) {
                out.push(check_end_to_end(p, 5, 0.5, seed)?);
            }
        }
        _ => unreachable!("suite names are validated"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_parsing() {
        assert!(verify_suite("eq1,p=1,samples=50").unwrap().passed());
        assert!(matches!(verify_suite("nonsense"), Err(Error::Config(_))));
        assert!(matches!(verify_suite("eq1,q=3"), Err(Error::Config(_))));
    }

    #[test]
    fn small_sweeps_pass() {
        let r = verify_suite("euclid,drift,samples=200").unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert_eq!(r.checks.len(), 3);
    }

    #[test]
    fn random_opening_is_capped() {
        let y = random_opening(5, 4.0, &mut rng_for(0, 0));
        assert!(y.iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!(y.iter().sum::<f64>() <= 4.0 + 1e-9);
    }
}
