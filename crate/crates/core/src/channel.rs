//! Block-fading multipath channels for the four link directions and their
//! frequency-domain matrices.
//!
//! A channel set holds one tap list per (from-user, to-user, tx-antenna,
//! rx-antenna) tuple and is immutable for the duration of a block. Channel
//! gains at the subcarrier frequencies follow from the tap sum
//! `H(f) = Σ_l a_l exp(-j 2π f τ_l)`.

use crate::frame_timing::{DelayExtrema, FrameTiming, User};
use crate::C64;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("per-link variance must be strictly positive")]
    NonPositiveVariance,
    #[error("path count must be at least 1")]
    NoPaths,
    #[error("delay spread bound must be non-negative and finite")]
    BadDelayBound,
    #[error("antenna counts must be at least 1")]
    NoAntennas,
    #[error("no channel for link ({from:?} -> {to:?}, tx {tx}, rx {rx})")]
    MissingLink { from: User, to: User, tx: usize, rx: usize },
}

/// One propagation path: complex amplitude gain and delay in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTap {
    pub amp: C64,
    pub delay: f64,
}

/// Tap list for one (from, to, tx-antenna, rx-antenna) link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathChannel {
    pub from_user: User,
    pub to_user: User,
    /// 0-based transmit antenna index at `from_user`.
    pub tx_antenna: usize,
    /// 0-based receive antenna index at `to_user`.
    pub rx_antenna: usize,
    pub paths: Vec<PathTap>,
}

impl MultipathChannel {
    /// Frequency-domain gain `Σ_l a_l exp(-j 2π f τ_l)`.
    pub fn freq_gain(&self, f: f64) -> C64 {
        self.paths
            .iter()
            .map(|p| p.amp * C64::from_polar(1.0, -TAU * f * p.delay))
            .sum()
    }

    /// Smallest and largest path delay.
    pub fn delay_extrema(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.paths {
            lo = lo.min(p.delay);
            hi = hi.max(p.delay);
        }
        (lo, hi)
    }
}

/// Statistical description of a channel set to draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Per-subcarrier gain variance of the self-interference links.
    pub variance_si: f64,
    /// Per-subcarrier gain variance of the two cross links.
    pub variance_desired: f64,
    /// Paths per link; the link variance is split equally across them.
    pub paths_per_link: usize,
    /// Upper bound on path delays; delays are drawn uniformly in [0, bound].
    pub delay_spread_bound: f64,
    /// Transmit antennas per user.
    pub k_tx: [usize; 2],
    /// Receive antennas per user.
    pub k_rx: [usize; 2],
}

impl ChannelSpec {
    /// Single-antenna spec with the given variances.
    pub fn siso(variance_si: f64, variance_desired: f64, paths: usize, bound: f64) -> Self {
        ChannelSpec {
            variance_si,
            variance_desired,
            paths_per_link: paths,
            delay_spread_bound: bound,
            k_tx: [1, 1],
            k_rx: [1, 1],
        }
    }

    /// Symmetric MIMO spec with `k` antennas on both sides of both users.
    pub fn mimo(variance_si: f64, variance_desired: f64, paths: usize, bound: f64, k: usize) -> Self {
        ChannelSpec { k_tx: [k, k], k_rx: [k, k], ..Self::siso(variance_si, variance_desired, paths, bound) }
    }
}

/// Complete set of channels for one fading block, indexed by
/// (from, to, tx-antenna, rx-antenna).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub k_tx: [usize; 2],
    pub k_rx: [usize; 2],
    channels: Vec<MultipathChannel>,
}

impl ChannelSet {
    /// Assembles a set from explicit links; every (from, to, p, q) tuple
    /// must be present exactly once.
    pub fn from_links(
        k_tx: [usize; 2],
        k_rx: [usize; 2],
        links: Vec<MultipathChannel>,
    ) -> Result<Self, ChannelError> {
        if k_tx.iter().chain(k_rx.iter()).any(|&k| k == 0) {
            return Err(ChannelError::NoAntennas);
        }
        let mut ordered = Vec::with_capacity(links.len());
        for from in [User::U1, User::U2] {
            for to in [User::U1, User::U2] {
                for p in 0..k_tx[from.index()] {
                    for q in 0..k_rx[to.index()] {
                        let ch = links
                            .iter()
                            .find(|c| {
                                c.from_user == from
                                    && c.to_user == to
                                    && c.tx_antenna == p
                                    && c.rx_antenna == q
                            })
                            .ok_or(ChannelError::MissingLink { from, to, tx: p, rx: q })?;
                        if ch.paths.is_empty() {
                            return Err(ChannelError::NoPaths);
                        }
                        ordered.push(ch.clone());
                    }
                }
            }
        }
        Ok(ChannelSet { k_tx, k_rx, channels: ordered })
    }

    /// The link from antenna `p` of `from` to antenna `q` of `to` (0-based).
    pub fn link(&self, from: User, to: User, p: usize, q: usize) -> &MultipathChannel {
        let mut idx = 0;
        for fu in [User::U1, User::U2] {
            for tu in [User::U1, User::U2] {
                let block = self.k_tx[fu.index()] * self.k_rx[tu.index()];
                if fu == from && tu == to {
                    assert!(p < self.k_tx[fu.index()] && q < self.k_rx[tu.index()]);
                    return &self.channels[idx + p * self.k_rx[tu.index()] + q];
                }
                idx += block;
            }
        }
        unreachable!()
    }

    pub fn links(&self) -> impl Iterator<Item = &MultipathChannel> {
        self.channels.iter()
    }

    /// Delay extrema over each of the four link directions, aggregated over
    /// antennas and paths.
    pub fn delay_extrema(&self) -> DelayExtrema {
        let pair = |from: User, to: User| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in 0..self.k_tx[from.index()] {
                for q in 0..self.k_rx[to.index()] {
                    let (l, h) = self.link(from, to, p, q).delay_extrema();
                    lo = lo.min(l);
                    hi = hi.max(h);
                }
            }
            (lo, hi)
        };
        DelayExtrema::new(
            pair(User::U1, User::U1),
            pair(User::U2, User::U2),
            pair(User::U1, User::U2),
            pair(User::U2, User::U1),
        )
        .expect("delays from a channel set are consistent")
    }

    /// Serializes the set to a structured text record (JSON).
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel set serializes")
    }

    /// Parses a set from its structured text record.
    pub fn from_text(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Draws a block-fading channel set.
///
/// Path amplitudes are circularly-symmetric complex Gaussian with variance
/// `link variance / paths_per_link`, so the per-subcarrier gain variance
/// equals the configured link variance for any path count. Delays are
/// uniform in `[0, delay_spread_bound]`. Deterministic for a fixed RNG.
pub fn draw_channel_set<R: Rng>(spec: &ChannelSpec, rng: &mut R) -> Result<ChannelSet, ChannelError> {
    if spec.variance_si <= 0.0 || spec.variance_desired <= 0.0 {
        return Err(ChannelError::NonPositiveVariance);
    }
    if spec.paths_per_link == 0 {
        return Err(ChannelError::NoPaths);
    }
    if !(spec.delay_spread_bound >= 0.0) || !spec.delay_spread_bound.is_finite() {
        return Err(ChannelError::BadDelayBound);
    }
    if spec.k_tx.iter().chain(spec.k_rx.iter()).any(|&k| k == 0) {
        return Err(ChannelError::NoAntennas);
    }
    let mut links = Vec::new();
    for from in [User::U1, User::U2] {
        for to in [User::U1, User::U2] {
            let var = if from == to { spec.variance_si } else { spec.variance_desired };
            let amp_sigma = (var / spec.paths_per_link as f64 / 2.0).sqrt();
            for p in 0..spec.k_tx[from.index()] {
                for q in 0..spec.k_rx[to.index()] {
                    let paths = (0..spec.paths_per_link)
                        .map(|_| {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            PathTap {
                                amp: C64::new(re * amp_sigma, im * amp_sigma),
                                delay: rng.random::<f64>() * spec.delay_spread_bound,
                            }
                        })
                        .collect();
                    links.push(MultipathChannel {
                        from_user: from,
                        to_user: to,
                        tx_antenna: p,
                        rx_antenna: q,
                        paths,
                    });
                }
            }
        }
    }
    ChannelSet::from_links(spec.k_tx, spec.k_rx, links)
}

/// Frequency-domain gains of one link at every subcarrier, ordered
/// n = -N+1 ..= N.
pub fn subcarrier_gains(ch: &MultipathChannel, timing: &FrameTiming, f_c: f64) -> Vec<C64> {
    timing.subcarrier_offsets().map(|n| ch.freq_gain(timing.subcarrier_freq(f_c, n))).collect()
}

/// Diagonal 2N x 2N frequency-domain channel matrix of one link, subcarriers
/// ordered n = -N+1 ..= N.
pub fn freq_channel_matrix(ch: &MultipathChannel, timing: &FrameTiming, f_c: f64) -> DMatrix<C64> {
    let two_n = timing.two_n();
    let gains = subcarrier_gains(ch, timing, f_c);
    DMatrix::from_fn(two_n, two_n, |i, j| if i == j { gains[i] } else { C64::new(0.0, 0.0) })
}

/// Block matrix of per-antenna-pair diagonal channel matrices for the link
/// `from -> to`: block row q, block column p holds the (p, q) pair's
/// diagonal. Dimensions (2N * K_rx) x (2N * K_tx).
pub fn mimo_channel_matrix(
    cs: &ChannelSet,
    from: User,
    to: User,
    timing: &FrameTiming,
    f_c: f64,
) -> DMatrix<C64> {
    let two_n = timing.two_n();
    let k_t = cs.k_tx[from.index()];
    let k_r = cs.k_rx[to.index()];
    let mut h = DMatrix::zeros(two_n * k_r, two_n * k_t);
    for q in 0..k_r {
        for p in 0..k_t {
            let block = freq_channel_matrix(cs.link(from, to, p, q), timing, f_c);
            h.view_mut((q * two_n, p * two_n), (two_n, two_n)).copy_from(&block);
        }
    }
    h
}
