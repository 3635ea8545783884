//! Oversampled time-domain synthesis of the receive signal, used as an
//! independent cross-check of the matrix-domain model.
//!
//! The transmit waveform of each user is built piecewise (data tones,
//! rise/fall transitions, zero-interval) on a fine uniform grid, passed
//! through the multipath taps by evaluating the delayed waveform with
//! band-limited interpolation, and read out at the candidate-interval
//! sampling instants. Both the self-interference term and the desired term
//! are summed, so the result only matches `V H X` if the interval algebra
//! actually keeps transitions, SI and neighbouring symbols out of the
//! candidate window.

use super::{LinksimError, SymbolBlock};
use crate::frame_timing::{FrameTiming, User};
use crate::ChannelSet;
use crate::C64;
use nalgebra::DVector;
use std::f64::consts::{PI, TAU};

/// Shape of the rise/fall transitions: a window that multiplies the data
/// waveform while the RF switch settles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionShape {
    Linear,
    RaisedCosine,
}

impl TransitionShape {
    /// Window value on the rise, u in [0, 1].
    fn rise(self, u: f64) -> f64 {
        match self {
            TransitionShape::Linear => u,
            TransitionShape::RaisedCosine => 0.5 * (1.0 - (PI * u).cos()),
        }
    }
}

/// Parameters of the oracle synthesis.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Centre frequency used for the tone grid. Tests use a scaled-down
    /// carrier (see [`default_carrier`]); only unit-modulus phases depend
    /// on it.
    pub f_c: f64,
    /// Grid rate as a multiple of the occupied band 2N * Δf.
    pub oversample: usize,
    pub shape: TransitionShape,
    /// Interpolation kernel half-width in grid samples.
    pub kernel_half_width: usize,
    /// Kaiser window parameter of the interpolation kernel.
    pub kaiser_beta: f64,
}

impl OracleConfig {
    pub fn new(f_c: f64) -> Self {
        OracleConfig {
            f_c,
            oversample: 32,
            shape: TransitionShape::Linear,
            kernel_half_width: 32,
            kaiser_beta: 12.0,
        }
    }
}

/// A scaled-down carrier that keeps the tone grid cheap to oversample: the
/// band then occupies [3NΔf, 5NΔf], well inside the grid's Nyquist range.
pub fn default_carrier(timing: &FrameTiming) -> f64 {
    4.0 * timing.n_half as f64 * timing.delta_f
}

/// Modified Bessel function I0 by its power series.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// One user's transmit waveform per antenna, sampled on a uniform grid.
struct GriddedWaveform {
    t0: f64,
    dt: f64,
    /// samples[antenna][grid index]
    samples: Vec<Vec<C64>>,
}

impl GriddedWaveform {
    /// Band-limited interpolation (Kaiser-windowed sinc) at time `t`.
    fn interpolate(&self, antenna: usize, t: f64, half: usize, beta: f64) -> C64 {
        let s = &self.samples[antenna];
        let pos = (t - self.t0) / self.dt;
        let k0 = pos.floor() as i64;
        let i0_beta = bessel_i0(beta);
        let mut acc = C64::new(0.0, 0.0);
        for k in (k0 - half as i64 + 1)..=(k0 + half as i64) {
            if k < 0 || k as usize >= s.len() {
                continue;
            }
            let u = pos - k as f64;
            let sinc = if u.abs() < 1e-12 { 1.0 } else { (PI * u).sin() / (PI * u) };
            let w = u / half as f64;
            let win = if w.abs() >= 1.0 {
                0.0
            } else {
                bessel_i0(beta * (1.0 - w * w).sqrt()) / i0_beta
            };
            acc += s[k as usize] * (sinc * win);
        }
        acc
    }
}

/// Evaluates the continuous-time transmit signal of `user` at time `t`,
/// piece by piece. Symbols outside the block are silence.
fn transmit_signal(
    timing: &FrameTiming,
    user: User,
    block: &SymbolBlock,
    antenna: usize,
    f_c: f64,
    shape: TransitionShape,
    t: f64,
) -> C64 {
    let ts = timing.t_symbol;
    let m = (t / ts).floor();
    if m < 0.0 || m >= timing.m_blocks as f64 {
        return C64::new(0.0, 0.0);
    }
    let local = t - m * ts;
    let delta = timing.t_trans;
    let td = timing.t_data;
    let tz = timing.t_zero;
    let window = match user {
        User::U1 => {
            // rise, data, fall, zero
            if local < delta {
                shape.rise(local / delta)
            } else if local < delta + td {
                1.0
            } else if local < 2.0 * delta + td {
                1.0 - shape.rise((local - delta - td) / delta)
            } else {
                0.0
            }
        }
        User::U2 => {
            // zero, rise, data, fall
            if local < tz {
                0.0
            } else if local < tz + delta {
                shape.rise((local - tz) / delta)
            } else if local < ts - delta {
                1.0
            } else {
                1.0 - shape.rise((local - (ts - delta)) / delta)
            }
        }
    };
    if window == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let sym = &block.symbols[m as usize];
    let two_n = sym.len() / block.k_tx;
    let mut tones = C64::new(0.0, 0.0);
    for (j, n) in timing.subcarrier_offsets().enumerate() {
        let f = timing.subcarrier_freq(f_c, n);
        tones += sym[antenna * two_n + j] * C64::from_polar(1.0, TAU * f * t);
    }
    tones * window
}

fn grid_waveform(
    timing: &FrameTiming,
    user: User,
    block: &SymbolBlock,
    cfg: &OracleConfig,
) -> GriddedWaveform {
    let rate = cfg.oversample as f64 * timing.two_n() as f64 * timing.delta_f;
    let dt = 1.0 / rate;
    let t0 = -timing.t_symbol;
    let t1 = (timing.m_blocks as f64 + 1.0) * timing.t_symbol;
    let len = ((t1 - t0) / dt).ceil() as usize;
    let samples = (0..block.k_tx)
        .map(|p| {
            (0..len)
                .map(|k| {
                    let t = t0 + k as f64 * dt;
                    transmit_signal(timing, user, block, p, cfg.f_c, cfg.shape, t)
                })
                .collect()
        })
        .collect();
    GriddedWaveform { t0, dt, samples }
}

/// Synthesizes the receive signal of `rx_user` at the given instants by
/// time-domain superposition of the delayed transmit waveforms of both
/// users (desired + self-interference), one vector per receive antenna.
///
/// `x1` and `x2` are the transmit blocks of users 1 and 2. The instants are
/// typically the candidate-interval sampling times of (`rx_user`, m).
pub fn time_domain_samples(
    timing: &FrameTiming,
    channels: &ChannelSet,
    x1: &SymbolBlock,
    x2: &SymbolBlock,
    rx_user: User,
    times: &[f64],
    cfg: &OracleConfig,
) -> Result<Vec<DVector<C64>>, LinksimError> {
    if x1.user != User::U1 || x2.user != User::U2 {
        return Err(LinksimError::Dimension("blocks must be (user 1, user 2)".into()));
    }
    if cfg.oversample < 8 {
        return Err(LinksimError::Dimension(format!(
            "oversample factor {} below the minimum of 8",
            cfg.oversample
        )));
    }
    let span_lo = -timing.t_symbol;
    let span_hi = (timing.m_blocks as f64 + 1.0) * timing.t_symbol;
    let tau_hi = channels
        .links()
        .flat_map(|c| c.paths.iter().map(|p| p.delay))
        .fold(0.0, f64::max);
    for &t in times {
        if t - tau_hi < span_lo || t > span_hi {
            return Err(LinksimError::Dimension(format!(
                "instant {t} outside the simulated span"
            )));
        }
    }
    let grids = [grid_waveform(timing, User::U1, x1, cfg), grid_waveform(timing, User::U2, x2, cfg)];
    let k_rx = channels.k_rx[rx_user.index()];
    let mut out = Vec::with_capacity(k_rx);
    for q in 0..k_rx {
        let mut y = DVector::zeros(times.len());
        for src in [User::U1, User::U2] {
            let grid = &grids[src.index()];
            for p in 0..channels.k_tx[src.index()] {
                let link = channels.link(src, rx_user, p, q);
                for tap in &link.paths {
                    for (i, &t) in times.iter().enumerate() {
                        y[i] += tap.amp
                            * grid.interpolate(
                                p,
                                t - tap.delay,
                                cfg.kernel_half_width,
                                cfg.kaiser_beta,
                            );
                    }
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}
