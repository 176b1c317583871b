//! Monte Carlo experiments on p-random sets.

pub mod growth;
pub mod lines;
pub mod pc;
pub mod sample;
pub mod stats;

pub use growth::{
    column_fill_holds, growth_construction, two_row_fill_holds, GrowthConfig, GrowthGeometry,
    GrowthReport, GrowthStageReport,
};
pub use lines::{no_empty_line_check, LineCheck};
pub use pc::{
    check_coupling, default_tolerance, estimate_pc, normalize, scaling_sweep, sweep_csv,
    PcEstimate, Probe, SweepRow, DEFAULT_TRIALS_PER_PROBE,
};
pub use sample::{random_torus_set, sample_percolation, RunManifest, TrialPlan};
pub use stats::{wilson, Frequency};
