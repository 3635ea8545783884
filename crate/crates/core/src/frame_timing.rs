//! Frame structure of the ZIMS waveform and the interval algebra derived
//! from channel delay extrema.
//!
//! A symbol period consists of a data interval `T_D = 1/Δf`, a rise and a
//! fall transition of length `δ` each, and a zero-interval `T_Z` during
//! which the transmit chain is off. User 1 places its data interval before
//! the zero-interval, user 2 after it, so that each side's zero-interval
//! overlaps the other side's data. The functions here compute, for each
//! symbol index, where the self-interference-free window lies and which
//! sub-window (the candidate interval) is safe to sample.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the two transceivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum User {
    U1,
    U2,
}

impl User {
    /// 0 for `U1`, 1 for `U2`.
    pub fn index(self) -> usize {
        match self {
            User::U1 => 0,
            User::U2 => 1,
        }
    }

    /// The opposite transceiver.
    pub fn other(self) -> User {
        match self {
            User::U1 => User::U2,
            User::U2 => User::U1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("timing parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("timing parameter `{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("subcarrier half-count N must be at least 1")]
    NoSubcarriers,
    #[error("sample count G = {g} must be at least 2N = {two_n}")]
    TooFewSamples { g: usize, two_n: usize },
    #[error("zero-interval fraction {alpha} leaves no room for a zero-interval")]
    AlphaTooSmall { alpha: f64 },
    #[error("symbol index {m} out of range (block has {m_blocks} symbol periods)")]
    SymbolIndexOutOfRange { m: usize, m_blocks: usize },
    #[error("delay extrema are inconsistent: {0}")]
    BadDelays(&'static str),
    #[error("candidate interval is empty; sampling instants are undefined")]
    EmptyInterval,
}

/// All timing scalars of one ZIMS frame configuration.
///
/// Derived fields are kept alongside the free parameters so that the exact
/// identities `t_data = 1/delta_f`, `t_symbol = t_data + 2 t_trans + t_zero`
/// and `alpha = (t_zero + 2 t_trans) / t_data` hold by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTiming {
    /// Subcarrier bandwidth Δf in Hz.
    pub delta_f: f64,
    /// Half the subcarrier count; subcarriers number 2N.
    pub n_half: usize,
    /// Data interval T_D = 1/Δf in seconds.
    pub t_data: f64,
    /// Zero-interval T_Z in seconds.
    pub t_zero: f64,
    /// Transition bound δ in seconds (both rise and fall).
    pub t_trans: f64,
    /// Symbol period T_S = T_D + 2δ + T_Z in seconds.
    pub t_symbol: f64,
    /// Symbol periods per block.
    pub m_blocks: usize,
    /// Samples taken in each candidate interval.
    pub g_samples: usize,
    /// Overhead ratio (T_Z + 2δ) / T_D.
    pub alpha: f64,
}

impl FrameTiming {
    /// Builds a timing configuration from the free parameters.
    pub fn new(
        delta_f: f64,
        n_half: usize,
        t_zero: f64,
        t_trans: f64,
        m_blocks: usize,
        g_samples: usize,
    ) -> Result<Self, TimingError> {
        for (v, name) in [(delta_f, "delta_f"), (t_zero, "t_zero"), (t_trans, "t_trans")] {
            if !v.is_finite() {
                return Err(TimingError::NonFinite(name));
            }
            if v <= 0.0 {
                return Err(TimingError::NonPositive(name));
            }
        }
        if n_half < 1 {
            return Err(TimingError::NoSubcarriers);
        }
        if m_blocks < 1 {
            return Err(TimingError::NonPositive("m_blocks"));
        }
        if g_samples < 2 * n_half {
            return Err(TimingError::TooFewSamples { g: g_samples, two_n: 2 * n_half });
        }
        let t_data = 1.0 / delta_f;
        let t_symbol = t_data + 2.0 * t_trans + t_zero;
        let alpha = (t_zero + 2.0 * t_trans) / t_data;
        Ok(FrameTiming {
            delta_f,
            n_half,
            t_data,
            t_zero,
            t_trans,
            t_symbol,
            m_blocks,
            g_samples,
            alpha,
        })
    }

    /// Builds a timing configuration from the overhead ratio α instead of
    /// T_Z, solving `t_zero = α t_data − 2 t_trans`.
    pub fn from_alpha(
        delta_f: f64,
        n_half: usize,
        alpha: f64,
        t_trans: f64,
        m_blocks: usize,
        g_samples: usize,
    ) -> Result<Self, TimingError> {
        if !alpha.is_finite() {
            return Err(TimingError::NonFinite("alpha"));
        }
        let t_data = 1.0 / delta_f;
        let t_zero = alpha * t_data - 2.0 * t_trans;
        if t_zero <= 0.0 {
            return Err(TimingError::AlphaTooSmall { alpha });
        }
        Self::new(delta_f, n_half, t_zero, t_trans, m_blocks, g_samples)
    }

    /// Subcarrier count 2N.
    pub fn two_n(&self) -> usize {
        2 * self.n_half
    }

    /// Subcarrier index offsets n = −N+1 ..= N in matrix column order.
    pub fn subcarrier_offsets(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n_half as i64;
        (-n + 1)..=n
    }

    /// Frequency of subcarrier offset `n` around a centre frequency.
    pub fn subcarrier_freq(&self, f_c: f64, n: i64) -> f64 {
        f_c + n as f64 * self.delta_f
    }

    fn check_symbol_index(&self, m: usize) -> Result<(), TimingError> {
        if m >= self.m_blocks {
            return Err(TimingError::SymbolIndexOutOfRange { m, m_blocks: self.m_blocks });
        }
        Ok(())
    }
}

/// Per-link delay extrema plus the global delay spread.
///
/// `fwd` is the link from U1 to U2, `bwd` from U2 to U1; `si_1`/`si_2` are
/// the self-interference links of U1 and U2. `tau_spread` is the difference
/// between the largest and smallest delay over the entire channel set, so it
/// bounds every per-link spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayExtrema {
    pub tau_max_si_1: f64,
    pub tau_min_si_1: f64,
    pub tau_max_si_2: f64,
    pub tau_min_si_2: f64,
    pub tau_max_fwd: f64,
    pub tau_min_fwd: f64,
    pub tau_max_bwd: f64,
    pub tau_min_bwd: f64,
    pub tau_spread: f64,
}

impl DelayExtrema {
    /// Builds extrema from per-link (min, max) pairs, computing the spread.
    pub fn new(
        si_1: (f64, f64),
        si_2: (f64, f64),
        fwd: (f64, f64),
        bwd: (f64, f64),
    ) -> Result<Self, TimingError> {
        let pairs = [si_1, si_2, fwd, bwd];
        for &(lo, hi) in &pairs {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(TimingError::NonFinite("delay"));
            }
            if lo < 0.0 {
                return Err(TimingError::BadDelays("delays must be non-negative"));
            }
            if hi < lo {
                return Err(TimingError::BadDelays("per-link max below min"));
            }
        }
        let global_max = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let global_min = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        Ok(DelayExtrema {
            tau_min_si_1: si_1.0,
            tau_max_si_1: si_1.1,
            tau_min_si_2: si_2.0,
            tau_max_si_2: si_2.1,
            tau_min_fwd: fwd.0,
            tau_max_fwd: fwd.1,
            tau_min_bwd: bwd.0,
            tau_max_bwd: bwd.1,
            tau_spread: global_max - global_min,
        })
    }

    /// All delays zero.
    pub fn zero() -> Self {
        DelayExtrema::new((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)).unwrap()
    }

    /// Extrema of the self-interference link of `user`.
    pub fn si(&self, user: User) -> (f64, f64) {
        match user {
            User::U1 => (self.tau_min_si_1, self.tau_max_si_1),
            User::U2 => (self.tau_min_si_2, self.tau_max_si_2),
        }
    }

    /// Extrema of the cross link arriving at `user`.
    pub fn desired(&self, user: User) -> (f64, f64) {
        match user {
            // U1 receives from U2 over the backward link.
            User::U1 => (self.tau_min_bwd, self.tau_max_bwd),
            User::U2 => (self.tau_min_fwd, self.tau_max_fwd),
        }
    }

    /// Returns a copy with every delay shifted by `c` (spread unchanged).
    pub fn shifted(&self, c: f64) -> Self {
        DelayExtrema {
            tau_max_si_1: self.tau_max_si_1 + c,
            tau_min_si_1: self.tau_min_si_1 + c,
            tau_max_si_2: self.tau_max_si_2 + c,
            tau_min_si_2: self.tau_min_si_2 + c,
            tau_max_fwd: self.tau_max_fwd + c,
            tau_min_fwd: self.tau_min_fwd + c,
            tau_max_bwd: self.tau_max_bwd + c,
            tau_min_bwd: self.tau_min_bwd + c,
            tau_spread: self.tau_spread,
        }
    }

    fn all_finite(&self) -> bool {
        [
            self.tau_max_si_1,
            self.tau_min_si_1,
            self.tau_max_si_2,
            self.tau_min_si_2,
            self.tau_max_fwd,
            self.tau_min_fwd,
            self.tau_max_bwd,
            self.tau_min_bwd,
            self.tau_spread,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Half-open time interval `[lo, hi)`. Emptiness (`hi <= lo`) is a value,
/// not an error, so infeasible configurations remain observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// A valid interval has `hi > lo`.
    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    /// Signed length `hi - lo`; non-positive for empty intervals.
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Whether `self` is contained in `other` (empty intervals contain trivially).
    pub fn contained_in(&self, other: &Interval) -> bool {
        self.is_empty() || (self.lo >= other.lo && self.hi <= other.hi)
    }
}

/// One timing condition with its signed margin in seconds.
#[derive(Debug, Clone, Serialize)]
pub struct TimingCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Positive margin means the strict inequality holds with that much room.
    pub margin: f64,
}

/// Outcome of [`validate_timing`]: one entry per condition plus the overall verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<TimingCheck>,
    pub pass: bool,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<28} {}  margin {:+.3e} s",
                c.name,
                if c.pass { "pass" } else { "FAIL" },
                c.margin
            )?;
        }
        write!(f, "overall: {}", if self.pass { "pass" } else { "FAIL" })
    }
}

/// Checks every timing condition against the delay extrema.
///
/// The conditions are strict inequalities; each check reports its signed
/// margin. Overall pass requires all of them. Non-finite inputs are a hard
/// error rather than a failed report.
pub fn validate_timing(t: &FrameTiming, d: &DelayExtrema) -> Result<ValidationReport, TimingError> {
    if ![t.delta_f, t.t_data, t.t_zero, t.t_trans, t.t_symbol, t.alpha]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(TimingError::NonFinite("frame timing"));
    }
    if !d.all_finite() {
        return Err(TimingError::NonFinite("delay extrema"));
    }
    let tau = d.tau_spread;
    let two_delta = 2.0 * t.t_trans;
    let mut checks = Vec::with_capacity(5);
    let mut push = |name: &'static str, margin: f64| {
        checks.push(TimingCheck { name, pass: margin > 0.0, margin });
    };
    push("data_interval_vs_overhead", t.t_data - (t.t_zero + two_delta));
    push("zero_interval_vs_spread", t.t_zero - tau);
    push("data_interval_vs_spread", t.t_data - tau);
    push("candidate_interval_exists", t.t_zero - (two_delta + tau));
    push(
        "zero_interval_window",
        (t.t_zero - (tau + two_delta)).min((t.t_data - two_delta) - t.t_zero),
    );
    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { checks, pass })
}

/// The m-th self-interference-free interval of `user` (0-based m).
///
/// The window opens while the user's own transmitter is silent, shifted by
/// its self-interference delay extrema.
pub fn si_free_interval(
    t: &FrameTiming,
    d: &DelayExtrema,
    user: User,
    m: usize,
) -> Result<Interval, TimingError> {
    t.check_symbol_index(m)?;
    if !d.all_finite() {
        return Err(TimingError::NonFinite("delay extrema"));
    }
    let m = m as f64;
    let (tau_min, tau_max) = d.si(user);
    Ok(match user {
        User::U1 => Interval::new(
            (m + 1.0) * t.t_symbol - t.t_zero + tau_max,
            (m + 1.0) * t.t_symbol + tau_min,
        ),
        User::U2 => Interval::new(
            m * t.t_symbol + tau_max,
            m * t.t_symbol + t.t_zero + tau_min,
        ),
    })
}

/// The m-th interval in which the desired signal arriving at `user` carries
/// data-interval content.
pub fn desired_data_interval(
    t: &FrameTiming,
    d: &DelayExtrema,
    user: User,
    m: usize,
) -> Result<Interval, TimingError> {
    t.check_symbol_index(m)?;
    let m = m as f64;
    let (tau_min, tau_max) = d.desired(user);
    Ok(match user {
        // U2 transmits data late in its period; U1 listens near the end of its own.
        User::U1 => Interval::new(
            m * t.t_symbol + t.t_zero + t.t_trans + tau_min,
            (m + 1.0) * t.t_symbol - t.t_trans + tau_max,
        ),
        User::U2 => Interval::new(
            m * t.t_symbol + t.t_trans + tau_min,
            m * t.t_symbol + t.t_trans + t.t_data + tau_max,
        ),
    })
}

/// The m-th candidate interval of `user`: the SI-free window padded by the
/// receive transition on both sides, intersected with the desired-signal
/// data interval.
///
/// An infeasible configuration yields an empty interval (queryable via
/// [`Interval::is_empty`]), never an error.
pub fn candidate_interval(
    t: &FrameTiming,
    d: &DelayExtrema,
    user: User,
    m: usize,
) -> Result<Interval, TimingError> {
    let si = si_free_interval(t, d, user, m)?;
    let data = desired_data_interval(t, d, user, m)?;
    let lo = (si.lo + t.t_trans).max(data.lo);
    let hi = (si.hi - t.t_trans).min(data.hi);
    Ok(Interval::new(lo, hi))
}

/// The G sampling instants inside a candidate interval:
/// `t_v = lo + length * v / G` for `v = 1..=G`, strictly increasing and all
/// within `(lo, hi]`.
pub fn sampling_times(t: &FrameTiming, ci: &Interval) -> Result<Vec<f64>, TimingError> {
    if ci.is_empty() {
        return Err(TimingError::EmptyInterval);
    }
    let g = t.g_samples;
    let len = ci.length();
    Ok((1..=g).map(|v| ci.lo + len * v as f64 / g as f64).collect())
}

/// Uniform sampling instants covering one full data interval, as used by the
/// uniformly-sampled baselines: `offset + T_D * v / G` for `v = 1..=G`.
pub fn uniform_sampling_times(t: &FrameTiming, offset: f64) -> Vec<f64> {
    let g = t.g_samples;
    (1..=g).map(|v| offset + t.t_data * v as f64 / g as f64).collect()
}
