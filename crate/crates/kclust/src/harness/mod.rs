//! Instance generators, experiment orchestration, statistics and the
//! property suites behind the `verify` command.

mod generate;
mod pipeline;
mod stats;
mod verify;

pub use generate::{generate_instance, GeneratorSpec, DEFAULT_POINTS_PER_CENTER};
pub use pipeline::{
    pseudo_pipeline, run_pipeline, trim_to_k, write_records_csv, ExperimentConfig, InstanceSummary, PipelineReport,
    TrialRecord,
};
pub use stats::{Running, StatSummary};
pub use verify::{
    check_copy_marginals, check_drift, check_end_to_end, check_eq1_collinear, check_eq1_random, check_euclid_pairs,
    check_lmp_cost, check_lmp_open, check_pipage_moments, check_pipage_quantization, check_potential, check_pseudo,
    check_reduction, end_to_end_suite, lmp_suite, random_opening, reduction_suite, standard_suite, verify_suite, STANDARD_SUITE_SIZE,
    CheckResult, VerifyOptions, VerifyReport, SUITES,
};
