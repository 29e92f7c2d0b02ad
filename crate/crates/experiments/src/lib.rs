//! Cross-approximation studies on Bochner snapshot matrices.
//!
//! [`bvp`] builds the sine-coefficient snapshot matrix of a two-parameter
//! boundary-value problem, [`runs`] compares ABCD, its cross
//! post-processing, random crosses and HOSVD over many seeds, and
//! [`report`] aggregates the results into a CSV file.

pub mod bvp;
pub mod report;
pub mod runs;

pub use bvp::{build_bvp_matrix, linspace, sine_coefficient, BvpConfig, Space};
pub use report::{emit_report, median, percentile, read_report, ReportRow, RunRecord, RunReport};
pub use runs::{
    hosvd_error_curve, run_abcdx, run_comparison, AbcdxStudy, ComparisonOptions, HosvdBaseline, ALGO_ABCD,
    ALGO_ABCDX, ALGO_ABCD_CROSS, ALGO_HOSVD, ALGO_RANDOM_CROSS, DEFAULT_CROSS_RTOL, DEFAULT_HOSVD_RTOL, PRNG_NAME,
};

/// Seeds `base, base + 1, …` for `count` runs.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base.wrapping_add(k)).collect()
}
