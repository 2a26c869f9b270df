//! Link-level Monte Carlo simulator for the detectability of 5G NR downlink
//! synchronization by a passive eavesdropper.
//!
//! The crate compares the standard always-on grid-of-beams SSB broadcast with
//! an on-demand SSB that is eigenbeamformed from uplink channel estimates and
//! sent only from the sector with the strongest uplink RSRP.
//!
//! Module map:
//! - [`sync_signals`]: PSS/SSS sequences, SSB resource grid, Case B burst schedule.
//! - [`ofdm`]: numerology, OFDM modulation and demodulation.
//! - [`channel`]: array geometry, clustered ray channel, path loss, reciprocity.
//! - [`beamforming`]: uplink pilot reception, LS estimation, covariance,
//!   eigen-precoder, grid-of-beams codebook, sector selection.
//! - [`detection`]: energy detector, PSS/SSS correlators, ROC construction.
//! - [`scenario`]: drops, link budgets, trial synthesis, campaigns.
//! - [`io`]: JSON config, CSV/SVG/manifest emission.

pub mod beamforming;
pub mod channel;
pub mod detection;
pub mod error;
pub mod io;
pub mod ofdm;
pub mod rng;
pub mod scenario;
pub mod selftest;
pub mod sync_signals;

pub use error::{Error, Result};

pub type Cf64 = num_complex::Complex64;

/// Engine version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
