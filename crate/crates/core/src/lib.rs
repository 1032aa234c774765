//! Downlink system-level simulator for heterogeneous 4G/5G/6G networks.
//!
//! The pipeline for one snapshot is strictly staged:
//!
//! 1. [`scenario`] builds the multi-layer topology and drops user terminals,
//! 2. [`channel`] samples large- and small-scale propagation per link,
//! 3. [`assoc`] runs SSB initial access, priority reselection and CSI-RS
//!    beam refinement,
//! 4. [`sched`] allocates PRBs per serving beam from data-derived demand,
//! 5. [`link`] evaluates per-PRB SINR, effective SINR and throughput,
//! 6. [`power`] estimates per-radio and network power.
//!
//! [`engine`] ties the stages together over Monte-Carlo snapshots and writes
//! the CSV/JSON reports.

pub mod antenna;
pub mod assoc;
pub mod channel;
pub mod engine;
pub mod error;
pub mod link;
pub mod par;
pub mod power;
pub mod rng;
pub mod scenario;
pub mod sched;

pub use error::{Error, Result, Stage};
