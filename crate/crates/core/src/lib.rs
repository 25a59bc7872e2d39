//! Delay-constrained power minimization for multi-IRS aided uplink video IoT.
//!
//! The crate models an uplink system in which `K` devices stream video bits to
//! a single-antenna base station, helped by `M` intelligent reflecting
//! surfaces (IRS) with `N = N_x * N_y` discrete-phase elements each. A
//! drift-plus-penalty controller turns the long-term problem (minimize average
//! total power subject to average queuing delay bounds) into a per-slot
//! problem, which is solved by alternating between a closed-form power
//! allocation and a fractional-programming design of the IRS phases.
//!
//! Module map:
//!
//! - [`config`]: scenario parameters, file loading, dotted overrides.
//! - [`geometry`]: BS / IRS / device placement.
//! - [`channel`]: Rician fading with UPA steering vectors, cascaded channels.
//! - [`queueing`]: real and virtual queues, Little's-law delay, slot weights.
//! - [`power`]: closed-form per-device power control.
//! - [`irs_fp`]: Lagrange-dual + quadratic transform, discrete coordinate sweep.
//! - [`solver`]: per-slot alternating solver and the exhaustive oracle.
//! - [`simulator`]: slot loop, baselines, Monte Carlo batches, sweeps.
//! - [`cli`]: the `irsopt` command-line front end.

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod irs_fp;
pub mod oracle;
pub mod power;
pub mod queueing;
pub mod simulator;
pub mod solver;
pub mod units;

pub use num_complex::Complex64;

pub use crate::channel::{ChannelModel, ChannelParams, ChannelSlot};
pub use crate::config::{ScenarioConfig, SolverSettings};
pub use crate::error::{Error, Result};
pub use crate::irs_fp::PhaseVector;
pub use crate::queueing::NetworkState;
pub use crate::simulator::{ControllerKind, RunMetrics};
pub use crate::solver::SlotDecision;
