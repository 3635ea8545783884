//! Link-level simulation of zero-interval modulation and sampling (ZIMS)
//! virtual full-duplex OFDM.
//!
//! Two half-duplex transceivers exchange OFDM symbols simultaneously in the
//! same band. Each one inserts a zero-interval into every transmit symbol
//! period, which opens a self-interference-free window in which the desired
//! signal from the other side can be sampled. The samples form a non-uniform
//! (Vandermonde-structured) linear system in the transmit symbols; SVD
//! precoding/decoding turns it into parallel subchannels.
//!
//! The crate is organised along the signal path:
//!
//! * [`frame_timing`] — symbol-period structure, SI-free / candidate
//!   intervals, sampling instants;
//! * [`channel`] — block-fading multipath channels and their frequency-domain
//!   matrices;
//! * [`linksim`] — sampling matrices, equivalent channels, one-block
//!   simulation, and an independent time-domain oracle;
//! * [`restore`] — SVD precoding/decoding, detectors, per-subchannel SNR and
//!   QPSK error rates;
//! * [`metrics`] — capacities for ZIMS and the half-duplex / SIC-based
//!   full-duplex / on-off duplex baselines, SINR gains, and the
//!   zero-interval-fraction search;
//! * [`runner`] — reproducible Monte-Carlo experiment sweeps with CSV output.

pub mod channel;
pub mod frame_timing;
pub mod linksim;
pub mod metrics;
pub mod restore;
pub mod runner;

pub use channel::{ChannelSet, ChannelSpec, MultipathChannel, PathTap};
pub use frame_timing::{DelayExtrema, FrameTiming, Interval, User, ValidationReport};
pub use linksim::{EquivalentChannel, SampleBlock, SamplingMatrix, SymbolBlock};
pub use restore::{Constellation, ParallelChannels};
pub use runner::{ExperimentConfig, ResultTable};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex<f64>;
