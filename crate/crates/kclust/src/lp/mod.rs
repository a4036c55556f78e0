//! LP relaxation, facility splitting and nearest-mass sets.

mod relax;
mod split;

pub use relax::{repair, solve_relaxation, DEFAULT_ACCURACY};
pub use split::{nearest_mass_sets, split_for_all_or_nothing, NearestMassSet, NearestMassSplit, SplitMap};
