//! Experiment drivers behind the `mimo-dos` command line.
//!
//! Each `cmd_*` validates its [`ExperimentConfig`], computes everything, and
//! returns a [`CommandOutput`]. Files are only written by
//! [`CommandOutput::commit`], each one atomically, so a failed command leaves
//! no partial output behind.

mod commands;
mod config;
mod output;

pub use commands::{
    build_distribution, cmd_dump_dist, cmd_solve, cmd_sweep_snr, cmd_sweep_threshold, cmd_verify, default_thresholds,
    ks_check, lambert_w, printed_mrc_deviation, printed_oc_deviation, self_test, sidecar_path, SolveRecord,
    VerifyCheck, DEFAULT_SWEEP_POINTS, KS_LIMIT, VERIFY_CHECKS,
};
pub use config::{DistSelector, ExperimentConfig, ProtocolSelection, Sweep};
pub use output::{write_atomic, CommandOutput};
