//! System-level Monte Carlo simulator for downlink distributed MIMO in an
//! indoor factory hall.
//!
//! The simulator drops single-antenna actuators (ACs) uniformly in a
//! rectangular hall served by `J` access points (APs) sharing `M_TOT`
//! antennas and one downlink power budget. Each Monte Carlo drop generates
//! an industrial channel (log-distance path loss with distance-dependent
//! LOS probability, log-normal shadowing, Rayleigh fading), optionally
//! estimates it from uplink pilots, builds MRT/ZF/CZF beamformers under
//! single-AP or joint transmission, allocates power (equal split or
//! max-min via the dominant eigenvector of an augmented gain matrix),
//! samples Bernoulli impulsive noise, and evaluates the true per-AC SINR.
//! Pooled samples feed tail-quantile statistics, chiefly the SINR value
//! exceeded with 99.999% probability.
//!
//! Module map:
//! - [`scenario`]: hall geometry, AP deployments, radio budgets, config I/O
//! - [`channel`]: large-scale gains and Rayleigh fading
//! - [`noise`]: thermal and impulsive noise
//! - [`csi`]: MMSE channel estimation from uplink pilots
//! - [`beamforming`]: AC-AP association and MRT/ZF/CZF precoders
//! - [`power`]: equal and max-min power allocation with a bisection oracle
//! - [`metrics`]: SINR evaluation and tail quantiles
//! - [`engine`]: deterministic parallel campaign runner and sweeps
//! - [`cli`]: command-line front end and result files

pub mod beamforming;
pub mod channel;
pub mod cli;
pub mod csi;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod noise;
pub mod power;
pub mod rng;
pub mod scenario;
pub mod units;

pub use error::Error;
