//! Sweeps, fits and derived studies. Everything here is driven by an
//! [`ExperimentSpec`] and writes CSV plus JSON.

pub mod config;
pub mod fit;
pub mod studies;
pub mod sweep;

pub use config::{ExperimentSpec, Grids, Solver};
pub use fit::{fit_power_law, fit_scaling_exponent, FitResult, FIT_FLOOR};
pub use studies::{
    compare_ara_qa, gap_maps, norm_traces, pgs_heatmap, tts, tts_from_sweep, tts_scan, Comparison, Heatmap, NormTraces,
    TtsScan,
};
pub use sweep::{fit_rows, read_rows, run_sweep, write_sweep, Fits, Metrics, SweepOutcome, SweepRow};
