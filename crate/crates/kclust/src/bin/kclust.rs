use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kclust::cost::{fractional_cost, integral_cost, open_set_cost};
use kclust::error::{Error, Result, StageExt};
use kclust::graph::SourceOrder;
use kclust::harness::{
    generate_instance, pseudo_pipeline, run_pipeline, verify_suite, write_records_csv, ExperimentConfig, GeneratorSpec,
    StatSummary,
};
use kclust::instance::Instance;
use kclust::lmp::{general_alpha, run_lmp, HappyTracking, LmpOptions};
use kclust::lp::{nearest_mass_sets, solve_relaxation, DEFAULT_ACCURACY};
use kclust::preprocess::ScaleConfig;
use kclust::pseudo::PseudoRun;
use kclust::reduction::{brute_force_opt, pseudo_to_true, PseudoSolution};
use kclust::rng::{derive_seed, stream, tag, trial_seed};

#[derive(Parser)]
#[command(name = "kclust", version, about = "LP rounding for k-median and k-means style clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the LP relaxation and print the fractional solution.
    SolveLp(Common),
    /// Round the LP optimum with the LMP iterative rounding.
    Lmp {
        #[command(flatten)]
        common: Common,
        /// Write the first trial's iterations as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Preprocess and round to k + O(1) open facilities.
    Round(Common),
    /// Turn a set of more than k open facilities into one with at most k.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Comma-separated facility indices of the pseudo-solution.
        #[arg(long, value_delimiter = ',', required = true)]
        open: Vec<usize>,
        /// Approximation factor of the pseudo-solution; defaults to (3^p + 1)/2.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// LP, LMP, rounding and reduction over several seeded trials.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Accuracy loss allowed by the reduction.
        #[arg(long, default_value_t = 0.25)]
        reduction_eps: f64,
        #[arg(long)]
        no_lmp: bool,
        /// Trim greedily instead of running the reduction.
        #[arg(long)]
        no_reduction: bool,
    },
    /// Run property suites, e.g. `eq1,p=1` or `all`.
    Verify {
        #[arg(default_value = "all")]
        selector: String,
        /// Write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an instance, e.g. `euclidean:clients=20,facilities=10,dim=2,seed=7`.
    Gen {
        spec: GeneratorSpec,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Instance file (JSON).
    #[arg(long, conflicts_with = "gen")]
    instance: Option<PathBuf>,
    /// Generator spec used instead of an instance file.
    #[arg(long)]
    gen: Option<GeneratorSpec>,
    /// Overrides the instance's k.
    #[arg(long)]
    k: Option<usize>,
    /// Overrides the instance's p.
    #[arg(long)]
    p: Option<f64>,
    /// Accuracy parameter: the scale epsilon for rounding, the loss for `reduce`.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (or directory for `pipeline`); standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scale: ScaleOverrides,
}

#[derive(Args, Clone, Default)]
struct ScaleOverrides {
    #[arg(long)]
    scale_delta: Option<usize>,
    #[arg(long)]
    scale_sample: Option<f64>,
    #[arg(long)]
    scale_iterations: Option<usize>,
    #[arg(long)]
    scale_force_threshold: Option<f64>,
    #[arg(long)]
    scale_budget: Option<usize>,
    #[arg(long)]
    scale_z_cap: Option<f64>,
    #[arg(long)]
    scale_granularity: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<Instance> {
        let inst = match (&self.instance, &self.gen) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
                Instance::from_json(&text)?
            }
            (None, Some(spec)) => generate_instance(spec, self.k.unwrap_or(1), self.p.unwrap_or(1.0))?,
            _ => return Err(Error::Config("give either --instance or --gen".into())),
        };
        let inst = match self.k {
            Some(k) if k != inst.k() => inst.with_k(k)?,
            _ => inst,
        };
        match self.p {
            Some(p) if p != inst.p() => inst.with_p(p),
            _ => Ok(inst),
        }
    }

    fn scale(&self, p: f64) -> Result<ScaleConfig> {
        let mut cfg = match self.eps {
            Some(e) => ScaleConfig::new(p, e)?,
            None => ScaleConfig::for_p(p)?,
        };
        let s = &self.scale;
        if let Some(v) = s.scale_delta {
            cfg = cfg.with_delta(v);
        }
        if let Some(v) = s.scale_sample {
            cfg = cfg.with_sample_scale(v);
        }
        if let Some(v) = s.scale_iterations {
            cfg = cfg.with_iterations(v);
        }
        if let Some(v) = s.scale_force_threshold {
            cfg = cfg.with_force_threshold(v);
        }
        if let Some(v) = s.scale_budget {
            cfg = cfg.with_budget(v);
        }
        if let Some(v) = s.scale_z_cap {
            cfg = cfg.with_z_cap(v);
        }
        if let Some(v) = s.scale_granularity {
            cfg = cfg.with_granularity(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit_text(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => emit_text(&text)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct LmpTrial {
    seed: u64,
    open: Vec<usize>,
    cost: f64,
    /// Sum of happy-connection costs.
    happy_cost: f64,
}

#[derive(Serialize)]
struct LmpReport {
    lp_objective: f64,
    lp_mass: f64,
    trials: Vec<LmpTrial>,
    open_count: StatSummary,
    cost: StatSummary,
}

/// Run report of one rounding trial. `per_client` rows are
/// `[cost, distance, initial covering radius]`.
#[derive(Serialize)]
struct RoundReport {
    seed: u64,
    config: ScaleConfig,
    forced_count: usize,
    final_open_count: usize,
    k: usize,
    per_client: Vec<[f64; 3]>,
    lp_objective: f64,
    open: Vec<usize>,
    cost: f64,
    budget_used: f64,
    within_budget: bool,
}

impl RoundReport {
    fn new(seed: u64, config: &ScaleConfig, lp_objective: f64, run: PseudoRun, open: Vec<usize>, cost: f64) -> Self {
        RoundReport {
            seed,
            config: config.clone(),
            forced_count: run.forced_count,
            final_open_count: run.final_open_count,
            k: run.k,
            per_client: run.per_client.iter().map(|c| [c.cost, c.distance, c.initial_radius]).collect(),
            lp_objective,
            open,
            cost,
            budget_used: run.budget_used,
            within_budget: run.within_budget,
        }
    }
}

#[derive(Serialize)]
struct ReduceReport {
    input_open: Vec<usize>,
    input_cost: f64,
    alpha: f64,
    eps: f64,
    opt_estimate: f64,
    opt_source: &'static str,
    delta: f64,
    t: u64,
    candidates: usize,
    open: Vec<usize>,
    cost: f64,
}

/// Runs one verb; the returned code is the process exit status.
fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::SolveLp(c) => {
            let inst = c.load()?;
            let lp = solve_relaxation(&inst, DEFAULT_ACCURACY).stage("lp")?;
            let objective = fractional_cost(&inst, &lp)?;
            emit(&lp.to_dump(objective), c.out.as_deref())?;
            Ok(0)
        }
        Command::Lmp { common: c, trace } => {
            let inst = c.load()?;
            let lp = solve_relaxation(&inst, DEFAULT_ACCURACY).stage("lp")?;
            let nm = nearest_mass_sets(&inst, &lp.y).stage("lmp")?;
            let order = SourceOrder::new(&nm.instance);
            let mut trials = Vec::with_capacity(c.trials);
            for t in 0..c.trials {
                let seed = trial_seed(c.seed, t as u64);
                let happy = HappyTracking { inst: &nm.instance, sets: &nm.sets.sets };
                let opts = LmpOptions { check_drift: true, ..LmpOptions::default() };
                let run = run_lmp(&nm.y, &order, Some(happy), opts, &mut stream(seed, tag::LMP, 0), |_, _| {}).stage("lmp")?;
                let mut open = nm.map.to_original(&run.open);
                open.sort_unstable();
                open.dedup();
                if let (0, Some(path)) = (t, &trace) {
                    let mut w = BufWriter::new(File::create(path)?);
                    for it in &run.trace {
                        serde_json::to_writer(&mut w, it)?;
                        writeln!(w)?;
                    }
                    w.flush()?;
                }
                let happy_cost = run.client_costs(&nm.instance).iter().sum();
                trials.push(LmpTrial { seed, cost: open_set_cost(&inst, &open), open, happy_cost });
            }
            let counts: Vec<f64> = trials.iter().map(|t| t.open.len() as f64).collect();
            let costs: Vec<f64> = trials.iter().map(|t| t.cost).collect();
            let report = LmpReport {
                lp_objective: fractional_cost(&inst, &lp)?,
                lp_mass: lp.total_opening(),
                open_count: StatSummary::from_values("open_count", &counts),
                cost: StatSummary::from_values("cost", &costs),
                trials,
            };
            emit(&report, c.out.as_deref())?;
            Ok(0)
        }
        Command::Round(c) => {
            let inst = c.load()?;
            let scale = c.scale(inst.p())?;
            let lp = solve_relaxation(&inst, DEFAULT_ACCURACY).stage("lp")?;
            let lp_objective = fractional_cost(&inst, &lp)?;
            let mut trials = Vec::with_capacity(c.trials);
            for t in 0..c.trials {
                let seed = trial_seed(c.seed, t as u64);
                let (run, open) = pseudo_pipeline(&inst, &lp, &scale, seed, 0)?;
                trials.push(RoundReport::new(seed, &scale, lp_objective, run, open.clone(), open_set_cost(&inst, &open)));
            }
            // one trial prints a bare report, several print an array
            match trials.as_slice() {
                [one] => emit(one, c.out.as_deref())?,
                _ => emit(&trials, c.out.as_deref())?,
            }
            Ok(0)
        }
        Command::Reduce { common: c, open, alpha } => {
            let inst = c.load()?;
            let scale = c.scale(inst.p())?;
            let alpha = alpha.unwrap_or_else(|| general_alpha(inst.p()));
            let eps = c.eps.unwrap_or(0.25);
            let pseudo = PseudoSolution::new(&inst, &open)?;
            let (estimate, source) = match brute_force_opt(&inst) {
                Ok(opt) => (opt.total_cost, "oracle"),
                Err(Error::Size(_)) => (fractional_cost(&inst, &solve_relaxation(&inst, DEFAULT_ACCURACY)?)?, "lp"),
                Err(e) => return Err(e),
            };
            let mut calls = 0u64;
            let out = pseudo_to_true(&inst, &pseudo, alpha, eps, estimate, |local, _| {
                calls += 1;
                let lp = solve_relaxation(local, DEFAULT_ACCURACY)?;
                Ok(pseudo_pipeline(local, &lp, &scale, derive_seed(c.seed, tag::REDUCTION, calls), 0)?.1)
            })
            .stage("reduction")?;
            let report = ReduceReport {
                input_cost: integral_cost(&inst, &pseudo.open)?.total_cost,
                input_open: pseudo.open,
                alpha,
                eps,
                opt_estimate: estimate,
                opt_source: source,
                delta: out.delta,
                t: out.t,
                candidates: out.candidates,
                cost: out.solution.total_cost,
                open: out.solution.open,
            };
            emit(&report, c.out.as_deref())?;
            Ok(0)
        }
        Command::Pipeline { common: c, reduction_eps, no_lmp, no_reduction } => {
            let inst = c.load()?;
            let mut cfg = ExperimentConfig::new(inst.p())?;
            cfg.trials = c.trials;
            cfg.seed = c.seed;
            cfg.scale = c.scale(inst.p())?;
            cfg.reduction_eps = reduction_eps;
            cfg.run_lmp = !no_lmp;
            cfg.run_reduction = !no_reduction;
            let report = run_pipeline(&inst, &cfg)?;
            match &c.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    write_records_csv(&report.records, BufWriter::new(File::create(dir.join("records.csv"))?))?;
                    emit(&report, Some(&dir.join("summary.json")))?;
                }
                None => emit(&report, None)?,
            }
            if report.failed_trials > 0 {
                eprintln!("{} of {} trials failed", report.failed_trials, report.records.len());
            }
            Ok(report.exit_code())
        }
        Command::Verify { selector, out } => {
            let report = verify_suite(&selector)?;
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("[{mark}] {} (samples {}, violations {}) {}", c.name, c.samples, c.violations, c.detail);
            }
            if let Some(path) = out {
                emit(&report, Some(&path))?;
            }
            if report.passed() {
                Ok(0)
            } else {
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                Err(Error::Invariant(format!("{failed} of {} checks failed", report.checks.len())))
            }
        }
        Command::Gen { spec, k, p, out } => {
            let inst = generate_instance(&spec, k, p)?;
            let text = inst.to_json()?;
            match out {
                Some(path) => std::fs::write(path, text + "\n")?,
                None => emit_text(&text)?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
