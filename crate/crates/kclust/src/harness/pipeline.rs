use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::stats::StatSummary;
use crate::cost::open_set_cost;
use crate::error::{Error, Result, StageExt};
use crate::graph::SourceOrder;
use crate::instance::Instance;
use crate::lmp::{general_alpha, run_lmp, HappyTracking, LmpOptions};
use crate::lp::{nearest_mass_sets, solve_relaxation, DEFAULT_ACCURACY};
use crate::preprocess::{preprocess, ScaleConfig, TheoreticalScale};
use crate::pseudo::{pseudo_round, PseudoRun};
use crate::reduction::{
    binomial, brute_force_opt, pseudo_to_true, PseudoSolution, BRUTE_FORCE_LIMIT, REDUCE_FACILITY_LIMIT,
};
use crate::rng::{derive_seed, stream, tag, trial_seed};
use crate::solution::FractionalSolution;

/// The oracle is skipped when subsets × clients exceeds this.
const ORACLE_WORK_LIMIT: u128 = 50_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub seed: u64,
    pub scale: ScaleConfig,
    /// Target factor for the reduction; defaults to `(3^p + 1)/2`.
    pub alpha: f64,
    pub reduction_eps: f64,
    pub run_lmp: bool,
    pub run_reduction: bool,
    pub lp_accuracy: f64,
}

impl ExperimentConfig {
    pub fn new(p: f64) -> Result<Self> {
        Ok(ExperimentConfig {
            trials: 1,
            seed: 0,
            scale: ScaleConfig::for_p(p)?,
            alpha: general_alpha(p),
            reduction_eps: 0.25,
            run_lmp: true,
            run_reduction: true,
            lp_accuracy: DEFAULT_ACCURACY,
        })
    }

    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if (self.scale.p - inst.p()).abs() > 0.0 {
            return Err(Error::Config(format!("scale config is for p = {} but the instance has p = {}", self.scale.p, inst.p())));
        }
        if inst.k() == 0 || inst.k() > inst.n_facilities() {
            return Err(Error::Config(format!("k = {} must lie in [1, {}]", inst.k(), inst.n_facilities())));
        }
        self.scale.validate()
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub lp_objective: f64,
    pub lmp_open: Option<usize>,
    pub lmp_cost: Option<f64>,
    pub pseudo_open: Option<usize>,
    pub forced: Option<usize>,
    pub budget_used: Option<f64>,
    pub within_budget: Option<bool>,
    pub final_open: Option<usize>,
    pub final_cost: Option<f64>,
    pub ratio_lp: Option<f64>,
    pub ratio_oracle: Option<f64>,
    /// `none`, `enumeration` or `greedy-trim`.
    pub reduction: String,
    pub error: Option<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub clients: usize,
    pub facilities: usize,
    pub k: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub instance: InstanceSummary,
    pub config: ExperimentConfig,
    pub theory: TheoreticalScale,
    pub lp_objective: f64,
    pub oracle_opt: Option<f64>,
    /// `oracle` when the optimum is exact, `lp` when the LP bound stands in
    /// for it in the reduction's density threshold.
    pub opt_source: String,
    pub failed_trials: usize,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<StatSummary>,
}

impl PipelineReport {
    /// Exit code of the first failed trial, 0 when none failed.
    pub fn exit_code(&self) -> i32 {
        self.records.iter().map(|r| r.exit_code).find(|&c| c != 0).unwrap_or(0)
    }
}

/// Pseudo-solution of one instance: LP, preprocessing and copy rounding.
/// Returns the run and its open set in facility indices of `inst`.
pub fn pseudo_pipeline(
    inst: &Instance,
    lp: &FractionalSolution,
    scale: &ScaleConfig,
    seed: u64,
    trial: u64,
) -> Result<(PseudoRun, Vec<usize>)> {
    let pre = preprocess(inst, &lp.y, scale, &mut stream(seed, tag::PIPAGE, trial)).stage("preprocess")?;
    let run = pseudo_round(&pre.split.instance, &pre.rounded.units, scale, &mut stream(seed, tag::PSEUDO, trial))
        .stage("pseudo-round")?;
    let open = pre.split.map.to_original(&run.solution.open);
    Ok((run, open))
}

/// Drops the facility whose removal costs least until `k` remain.
pub fn trim_to_k(inst: &Instance, open: &[usize]) -> Vec<usize> {
    let mut cur = open.to_vec();
    while cur.len() > inst.k() {
        let pos = (0..cur.len())
            .map(|pos| {
                let rest: Vec<usize> = cur.iter().enumerate().filter(|&(q, _)| q != pos).map(|(_, &i)| i).collect();
                (open_set_cost(inst, &rest), pos)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("nonempty")
            .1;
        cur.remove(pos);
    }
    cur
}

fn oracle_feasible(inst: &Instance) -> bool {
    let n = inst.n_facilities();
    let subsets = binomial(n, inst.k().min(n));
    subsets <= BRUTE_FORCE_LIMIT && subsets * inst.n_clients() as u128 <= ORACLE_WORK_LIMIT
}

fn ratio(cost: f64, base: f64) -> f64 {
    if base > 0.0 {
        cost / base
    } else if cost <= 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

struct Shared<'a> {
    inst: &'a Instance,
    cfg: &'a ExperimentConfig,
    lp: &'a FractionalSolution,
    lp_objective: f64,
    opt: Option<f64>,
}

fn run_trial(sh: &Shared<'_>, trial: usize) -> TrialRecord {
    let seed = trial_seed(sh.cfg.seed, trial as u64);
    let mut rec = TrialRecord {
        trial,
        seed,
        lp_objective: sh.lp_objective,
        lmp_open: None,
        lmp_cost: None,
        pseudo_open: None,
        forced: None,
        budget_used: None,
        within_budget: None,
        final_open: None,
        final_cost: None,
        ratio_lp: None,
        ratio_oracle: None,
        reduction: "none".into(),
        error: None,
        exit_code: 0,
    };
    if let Err(e) = fill_trial(sh, seed, &mut rec) {
        rec.exit_code = e.exit_code();
        rec.error = Some(e.to_string());
    }
    rec
}

fn fill_trial(sh: &Shared<'_>, seed: u64, rec: &mut TrialRecord) -> Result<()> {
    let inst = sh.inst;
    let k = inst.k();
    if sh.cfg.run_lmp {
        let nm = nearest_mass_sets(inst, &sh.lp.y).stage("lmp")?;
        let order = SourceOrder::new(&nm.instance);
        let happy = HappyTracking { inst: &nm.instance, sets: &nm.sets.sets };
        let opts = LmpOptions { check_drift: true, ..LmpOptions::default() };
        let run = run_lmp(&nm.y, &order, Some(happy), opts, &mut stream(seed, tag::LMP, 0), |_, _| {}).stage("lmp")?;
        let open = nm.map.to_original(&run.open);
        rec.lmp_open = Some(open.len());
        rec.lmp_cost = Some(open_set_cost(inst, &open));
    }

    let (run, open) = pseudo_pipeline(inst, sh.lp, &sh.cfg.scale, seed, 0)?;
    rec.pseudo_open = Some(open.len());
    rec.forced = Some(run.forced_count);
    rec.budget_used = Some(run.budget_used);
    rec.within_budget = Some(run.within_budget);

    let final_open = if open.len() <= k {
        open
    } else if sh.cfg.run_reduction && inst.n_facilities() <= REDUCE_FACILITY_LIMIT {
        rec.reduction = "enumeration".into();
        let pseudo = PseudoSolution::new(inst, &open)?;
        let estimate = sh.opt.unwrap_or(sh.lp_objective);
        let mut calls = 0u64;
        let scale = &sh.cfg.scale;
        let acc = sh.cfg.lp_accuracy;
        let out = pseudo_to_true(inst, &pseudo, sh.cfg.alpha, sh.cfg.reduction_eps, estimate, |local, _| {
            calls += 1;
            let lp = solve_relaxation(local, acc)?;
            let (_, open) = pseudo_pipeline(local, &lp, scale, derive_seed(seed, tag::REDUCTION, calls), 0)?;
            Ok(open)
        })
        .stage("reduction")?;
        out.solution.open
    } else {
        rec.reduction = "greedy-trim".into();
        trim_to_k(inst, &open)
    };
    let cost = open_set_cost(inst, &final_open);
    rec.final_open = Some(final_open.len());
    rec.final_cost = Some(cost);
    rec.ratio_lp = Some(ratio(cost, sh.lp_objective));
    rec.ratio_oracle = sh.opt.map(|o| ratio(cost, o));
    Ok(())
}

/// LP, LMP, preprocessing, copy rounding and reduction over `cfg.trials`
/// seeded trials. The report depends only on the instance, the config and
/// the base seed.
pub fn run_pipeline(inst: &Instance, cfg: &ExperimentConfig) -> Result<PipelineReport> {
    cfg.validate(inst)?;
    let lp = solve_relaxation(inst, cfg.lp_accuracy).stage("lp")?;
    let lp_objective = crate::cost::fractional_cost(inst, &lp).stage("lp")?;
    let opt = if oracle_feasible(inst) { Some(brute_force_opt(inst).stage("oracle")?.total_cost) } else { None };
    let sh = Shared { inst, cfg, lp: &lp, lp_objective, opt };
    let mut records: Vec<TrialRecord> = (0..cfg.trials).into_par_iter().map(|t| run_trial(&sh, t)).collect();
    records.sort_by_key(|r| r.trial);

    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let col = |f: &dyn Fn(&TrialRecord) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let mut summaries = vec![
        StatSummary::from_values("lp_objective", &[lp_objective]),
        StatSummary::from_values("lmp_open", &col(&|r| r.lmp_open.map(|v| v as f64))),
        StatSummary::from_values("lmp_cost", &col(&|r| r.lmp_cost)),
        StatSummary::from_values("pseudo_open", &col(&|r| r.pseudo_open.map(|v| v as f64))),
        StatSummary::from_values("forced", &col(&|r| r.forced.map(|v| v as f64))),
        StatSummary::from_values("budget_used", &col(&|r| r.budget_used)),
        StatSummary::from_values("final_open", &col(&|r| r.final_open.map(|v| v as f64))),
        StatSummary::from_values("final_cost", &col(&|r| r.final_cost)),
        StatSummary::from_values("ratio_lp", &col(&|r| r.ratio_lp)),
    ];
    if opt.is_some() {
        summaries.push(StatSummary::from_values("ratio_oracle", &col(&|r| r.ratio_oracle)));
    }
    if !cfg.run_lmp {
        summaries.retain(|s| !s.metric.starts_with("lmp_"));
    }
    Ok(PipelineReport {
        instance: InstanceSummary { clients: inst.n_clients(), facilities: inst.n_facilities(), k: inst.k(), p: inst.p() },
        config: cfg.clone(),
        theory: cfg.scale.theory(),
        lp_objective,
        oracle_opt: opt,
        opt_source: if opt.is_some() { "oracle".into() } else { "lp".into() },
        failed_trials: records.len() - ok.len(),
        records,
        summaries,
    })
}

pub fn write_records_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate::{generate_instance, GeneratorSpec};

    #[test]
    fn k_equal_to_f_is_optimal() {
        let inst = generate_instance(&GeneratorSpec::Line { n: 4 }, 4, 1.0).unwrap();
        let mut cfg = ExperimentConfig::new(1.0).unwrap();
        cfg.trials = 3;
        let rep = run_pipeline(&inst, &cfg).unwrap();
        assert_eq!(rep.failed_trials, 0, "{:?}", rep.records);
        for r in &rep.records {
            assert_eq!(r.ratio_oracle, Some(1.0));
        }
    }

    #[test]
    fn reruns_are_identical() {
        let spec = GeneratorSpec::Euclidean { n_clients: 8, n_facilities: 6, dim: 2, seed: 3 };
        let inst = generate_instance(&spec, 2, 1.0).unwrap();
        let mut cfg = ExperimentConfig::new(1.0).unwrap();
        cfg.trials = 4;
        cfg.seed = 9;
        let a = serde_json::to_string(&run_pipeline(&inst, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_pipeline(&inst, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_one_row_per_trial() {
        let inst = generate_instance(&GeneratorSpec::Line { n: 5 }, 2, 1.0).unwrap();
        let mut cfg = ExperimentConfig::new(1.0).unwrap();
        cfg.trials = 3;
        let rep = run_pipeline(&inst, &cfg).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&rep.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("trial,seed,lp_objective"));
    }
}
