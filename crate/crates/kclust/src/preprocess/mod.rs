//! Filtering, core consolidation and pipage rounding to a `g`-integral opening.

mod config;
mod filter;
mod pipage;

pub use config::{default_epsilon, ScaleConfig, TheoreticalScale, DEFAULT_BUDGET, DEFAULT_DELTA, DEFAULT_ITERATIONS};
pub use filter::{audit_filter, consolidate_cores, filter, ClientType, FilterResult};
pub use pipage::{pipage_round, PipageOutcome};

use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{nearest_mass_sets, NearestMassSplit};

/// Output of the whole preprocessing chain, on split facility entries.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub split: NearestMassSplit,
    pub filter: FilterResult,
    /// After core consolidation.
    pub consolidated: Vec<f64>,
    pub rounded: PipageOutcome,
}

/// Nearest-mass split, filtering, core consolidation and pipage rounding with
/// granularity `cfg.granularity`. Filtering guarantees are audited and any
/// violation is reported as an invariant error.
pub fn preprocess<R: Rng>(inst: &Instance, y: &[f64], cfg: &ScaleConfig, rng: &mut R) -> Result<Preprocessed> {
    let split = nearest_mass_sets(inst, y)?;
    let filt = filter(&split.instance, &split.y, &split.sets, cfg);
    let violations = audit_filter(&split.instance, &split.y, &split.sets, &filt, cfg);
    if let Some(first) = violations.first() {
        return Err(Error::Invariant(format!("filtering: {first} ({} violations)", violations.len())));
    }
    let consolidated = consolidate_cores(&split.y, &filt, rng);
    let rounded = pipage_round(&consolidated, &filt.balls, cfg.granularity, rng)?;
    Ok(Preprocessed { split, filter: filt, consolidated, rounded })
}
