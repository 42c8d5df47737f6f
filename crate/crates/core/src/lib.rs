//! Distributed opportunistic scheduling (DOS) for 2×2 MIMO ad-hoc networks.
//!
//! Links contend for the channel in one or two contention groups. A link that
//! wins a contention learns its instantaneous rate and only transmits when the
//! rate clears a threshold chosen by optimal stopping; otherwise it yields the
//! channel and contention resumes. Three protocols are covered:
//!
//! - **TG-CSIT**: two contention groups, full CSI at the transmitter. A lone
//!   winner eigen-beamforms two streams; two winners share the channel and
//!   treat each other's signal as Gaussian noise.
//! - **TG-CSIR**: two groups, CSI at the receiver only. One stream per link,
//!   combined with MRC (alone) or optimal combining (two winners).
//! - **SG-CSIT**: a single contention group, single-link eigen-beamforming.
//!
//! Module map:
//!
//! - [`channel`]: Rayleigh channel draws and per-realization rates.
//! - [`distribution`]: tabulated rate CDFs/PDFs, tail and truncated-mean queries.
//! - [`contention`]: group-based contention, success probabilities.
//! - [`threshold`]: the fixed-point solver for the maximal rate of return.
//! - [`sim`]: renewal-reward Monte Carlo of the three protocols.
//! - [`experiments`]: configuration, sweeps and CSV/JSON output used by the CLI.

// `!(x > 0.0)` is how NaN inputs are rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod contention;
pub mod distribution;
pub mod error;
pub mod experiments;
pub mod numfmt;
pub mod rng;
pub mod sim;
pub mod threshold;

pub use error::{Error, Result};
