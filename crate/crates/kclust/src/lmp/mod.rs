//! Iterative LMP rounding and its analysis helpers.

mod certificate;
mod potential;
mod round;

pub use certificate::{eq1_sides, euclid_pair_sides, verify_eq1, verify_euclid_pair, Neighborhood, PairForm};
pub use potential::{one_step_potential_check, potential_f, potential_f_new, ClientState, ENUMERATION_LIMIT};
pub use round::{
    expected_drift, lmp_round, run_lmp, HappyRecord, HappyTracking, LmpIteration, LmpOptions, LmpRun,
    SamplingMode, NAIVE_ITERATION_CAP,
};

/// `(3^p + 1)/2`, the factor certified in every metric.
pub fn general_alpha(p: f64) -> f64 {
    (3f64.powf(p) + 1.0) / 2.0
}

pub const EUCLIDEAN_MEANS_ALPHA: f64 = 11.0 / 3.0;
