//! Capacities, baseline comparisons and the zero-interval-fraction search.
//!
//! All capacities use the same sampled-signal convention: noise of variance
//! `σ0²` per complex sample, so a matched receiver enjoys the full
//! processing gain of its sample count. The ZIMS capacity evaluates the
//! log-det of the candidate-interval equivalent channel at symbol rate
//! `Δf/(1+α)`; the baselines evaluate uniformly sampled equivalents at
//! their own rates and overheads:
//!
//! * half-duplex OFDM — cyclic prefix overhead `T_D/(T_D + cp)` and a 1/2
//!   time split between the directions;
//! * full-duplex with imperfect cancellation — residual self-interference
//!   raises the per-sample noise floor to `σ0² + ξ P̄`;
//! * on-off duplexing repaired by coding — duty cycle 1/2 times code rate
//!   1/2 on the perfectly cancelled full-duplex capacity.
//!
//! The SINR comparison follows the per-subchannel average convention: the
//! ZIMS side uses the λ of its equivalent channel, the conventional-FD side
//! plain per-subchannel channel power gains with the residual-interference
//! term in the denominator.

use crate::linksim::EquivalentChannel;
use crate::frame_timing::FrameTiming;
use crate::C64;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("noise variance must be strictly positive")]
    NonPositiveNoise,
    #[error("allocation length {got} does not match channel columns {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("need the same number of equivalent channels in both directions")]
    MismatchedBlocks,
    #[error("power allocations must be non-negative and sum to at most the budget")]
    BadAllocation,
    #[error("SIC residual fraction must lie in [0, 1]")]
    BadSicParam,
    #[error("feasible range for the zero-interval fraction is empty")]
    EmptyFeasibleRange,
    #[error("search tolerance must be strictly positive")]
    BadTolerance,
}

/// Exact dBm to watts conversion.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Exact watts to dBm conversion.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// A transmit power budget with its per-subcarrier allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBudget {
    /// Total budget in watts.
    pub p_bar: f64,
    /// Per-entry allocation in watts; sums to at most `p_bar`.
    pub allocations: Vec<f64>,
}

impl PowerBudget {
    /// Splits `p_bar` equally over `n` entries.
    pub fn equal(p_bar: f64, n: usize) -> Result<Self, MetricsError> {
        if !(p_bar > 0.0) || n == 0 {
            return Err(MetricsError::BadAllocation);
        }
        Ok(PowerBudget { p_bar, allocations: vec![p_bar / n as f64; n] })
    }

    /// Equal split of a budget given in dBm.
    pub fn equal_from_dbm(p_bar_dbm: f64, n: usize) -> Result<Self, MetricsError> {
        Self::equal(dbm_to_watts(p_bar_dbm), n)
    }

    /// Explicit allocation; checks non-negativity and the budget sum.
    pub fn with_allocations(p_bar: f64, allocations: Vec<f64>) -> Result<Self, MetricsError> {
        if allocations.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(MetricsError::BadAllocation);
        }
        let sum: f64 = allocations.iter().sum();
        if sum > p_bar * (1.0 + 1e-12) {
            return Err(MetricsError::BadAllocation);
        }
        Ok(PowerBudget { p_bar, allocations })
    }
}

/// Residual self-interference fraction of a cancellation-based full-duplex
/// baseline, `0 ≤ ξ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicParam {
    pub xi: f64,
}

impl SicParam {
    pub fn new(xi: f64) -> Result<Self, MetricsError> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(MetricsError::BadSicParam);
        }
        Ok(SicParam { xi })
    }

    /// ξ from its dB value (must be ≤ 0 dB).
    pub fn from_db(db: f64) -> Result<Self, MetricsError> {
        Self::new(10f64.powf(db / 10.0))
    }

    /// Perfect cancellation.
    pub fn perfect() -> Self {
        SicParam { xi: 0.0 }
    }
}

/// `log2 det(I + A diag(p) A^H / σ²)` through the squared singular values of
/// `A diag(sqrt(p))`, obtained as eigenvalues of the Gram matrix.
pub fn logdet_capacity_bits(
    a: &DMatrix<C64>,
    allocations: &[f64],
    sigma0_sq: f64,
) -> Result<f64, MetricsError> {
    if sigma0_sq <= 0.0 {
        return Err(MetricsError::NonPositiveNoise);
    }
    if allocations.len() != a.ncols() {
        return Err(MetricsError::Dimension { got: allocations.len(), expected: a.ncols() });
    }
    if allocations.iter().any(|&p| p < 0.0) {
        return Err(MetricsError::BadAllocation);
    }
    let mut scaled = a.clone();
    for (c, &p) in allocations.iter().enumerate() {
        let s = C64::new(p.sqrt(), 0.0);
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= s;
        }
    }
    let gram = scaled.adjoint() * &scaled;
    let eig = nalgebra::linalg::SymmetricEigen::new(gram);
    Ok(eig
        .eigenvalues
        .iter()
        .map(|&l| (1.0 + l.max(0.0) / sigma0_sq).log2())
        .sum())
}

/// Squared singular values of `a` (eigenvalues of its Gram matrix),
/// descending, clamped at zero.
pub fn squared_singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    let gram = a.adjoint() * a;
    let eig = nalgebra::linalg::SymmetricEigen::new(gram);
    let mut lam: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    lam.sort_by(|x, y| y.partial_cmp(x).unwrap());
    lam
}

/// `Σ_k log2(1 + p λ_k / σ²)` for an equal per-entry allocation `p`; agrees
/// with [`logdet_capacity_bits`] on uniform allocations.
pub fn logdet_equal_power_bits(
    lambdas: &[f64],
    p: f64,
    sigma0_sq: f64,
) -> Result<f64, MetricsError> {
    if sigma0_sq <= 0.0 {
        return Err(MetricsError::NonPositiveNoise);
    }
    if p < 0.0 {
        return Err(MetricsError::BadAllocation);
    }
    Ok(lambdas.iter().map(|&l| (1.0 + p * l / sigma0_sq).log2()).sum())
}

fn sum_capacity(
    eqs_fwd: &[EquivalentChannel],
    alloc_fwd: &[f64],
    eqs_bwd: &[EquivalentChannel],
    alloc_bwd: &[f64],
    sigma0_sq: f64,
    rate: f64,
) -> Result<f64, MetricsError> {
    if eqs_fwd.len() != eqs_bwd.len() || eqs_fwd.is_empty() {
        return Err(MetricsError::MismatchedBlocks);
    }
    let m = eqs_fwd.len() as f64;
    let mut acc = 0.0;
    for (f, b) in eqs_fwd.iter().zip(eqs_bwd) {
        acc += logdet_capacity_bits(&f.product, alloc_fwd, sigma0_sq)?;
        acc += logdet_capacity_bits(&b.product, alloc_bwd, sigma0_sq)?;
    }
    Ok(rate * acc / m)
}

/// Sum capacity of the single-antenna ZIMS link in bit/s:
/// `Δf/((1+α)M) Σ_m [logdet fwd + logdet bwd]`, where each log-det is taken
/// over the candidate-interval equivalent channel of that symbol period.
pub fn capacity_zims_siso(
    eqs_fwd: &[EquivalentChannel],
    alloc_fwd: &[f64],
    eqs_bwd: &[EquivalentChannel],
    alloc_bwd: &[f64],
    sigma0_sq: f64,
    timing: &FrameTiming,
) -> Result<f64, MetricsError> {
    let rate = timing.delta_f / (1.0 + timing.alpha);
    sum_capacity(eqs_fwd, alloc_fwd, eqs_bwd, alloc_bwd, sigma0_sq, rate)
}

/// MIMO analogue of [`capacity_zims_siso`] on stacked equivalent channels;
/// reduces to the SISO value for single antennas.
pub fn capacity_zims_mimo(
    eqs_fwd: &[EquivalentChannel],
    alloc_fwd: &[f64],
    eqs_bwd: &[EquivalentChannel],
    alloc_bwd: &[f64],
    sigma0_sq: f64,
    timing: &FrameTiming,
) -> Result<f64, MetricsError> {
    capacity_zims_siso(eqs_fwd, alloc_fwd, eqs_bwd, alloc_bwd, sigma0_sq, timing)
}

/// Half-duplex OFDM baseline in bit/s: per-direction OFDM capacity with a
/// cyclic-prefix overhead factor `T_D/(T_D + cp_len)`, halved for the time
/// split, summed over both directions. The per-subcarrier SNR carries the
/// 2N-sample processing gain of the shared sampled-signal convention.
pub fn capacity_ofdm_hd(
    h_fwd: &DMatrix<C64>,
    alloc_fwd: &[f64],
    h_bwd: &DMatrix<C64>,
    alloc_bwd: &[f64],
    sigma0_sq: f64,
    timing: &FrameTiming,
    cp_len: f64,
) -> Result<f64, MetricsError> {
    if sigma0_sq <= 0.0 {
        return Err(MetricsError::NonPositiveNoise);
    }
    let two_n = timing.two_n();
    for (h, a) in [(h_fwd, alloc_fwd), (h_bwd, alloc_bwd)] {
        if h.nrows() != two_n || h.ncols() != two_n {
            return Err(MetricsError::Dimension { got: h.nrows(), expected: two_n });
        }
        if a.len() != two_n {
            return Err(MetricsError::Dimension { got: a.len(), expected: two_n });
        }
    }
    let gain = two_n as f64;
    let direction = |h: &DMatrix<C64>, alloc: &[f64]| -> f64 {
        (0..two_n)
            .map(|n| (1.0 + alloc[n] * gain * h[(n, n)].norm_sqr() / sigma0_sq).log2())
            .sum()
    };
    let overhead = timing.t_data / (timing.t_data + cp_len);
    Ok(0.5 * timing.delta_f * overhead * (direction(h_fwd, alloc_fwd) + direction(h_bwd, alloc_bwd)))
}

/// Capacity of a cancellation-based full-duplex baseline in bit/s. Both
/// directions run continuously on uniformly sampled equivalents; the
/// residual self-interference `ξ P̄` of the receiver's own transmitter adds
/// to its noise floor. `p_bar` holds the budgets of (user 1, user 2).
pub fn capacity_fd_sic(
    eq_fwd: &EquivalentChannel,
    alloc_fwd: &[f64],
    eq_bwd: &EquivalentChannel,
    alloc_bwd: &[f64],
    p_bar: [f64; 2],
    sic: SicParam,
    sigma0_sq: f64,
    timing: &FrameTiming,
) -> Result<f64, MetricsError> {
    if sigma0_sq <= 0.0 {
        return Err(MetricsError::NonPositiveNoise);
    }
    // forward direction is received by user 2, so user 2's own residual applies
    let noise_fwd = sigma0_sq + sic.xi * p_bar[1];
    let noise_bwd = sigma0_sq + sic.xi * p_bar[0];
    let c_fwd = logdet_capacity_bits(&eq_fwd.product, alloc_fwd, noise_fwd)?;
    let c_bwd = logdet_capacity_bits(&eq_bwd.product, alloc_bwd, noise_bwd)?;
    Ok(timing.delta_f * (c_fwd + c_bwd))
}

/// On-off duplexing baseline in bit/s: duty cycle 1/2 times code rate 1/2 on
/// the perfectly cancelled full-duplex capacity.
pub fn capacity_rodd(
    eq_fwd: &EquivalentChannel,
    alloc_fwd: &[f64],
    eq_bwd: &EquivalentChannel,
    alloc_bwd: &[f64],
    sigma0_sq: f64,
    timing: &FrameTiming,
) -> Result<f64, MetricsError> {
    let full = capacity_fd_sic(
        eq_fwd,
        alloc_fwd,
        eq_bwd,
        alloc_bwd,
        [0.0, 0.0],
        SicParam::perfect(),
        sigma0_sq,
        timing,
    )?;
    Ok(0.5 * 0.5 * full)
}

/// ZIMS-side average subchannel SNR: `Σ_k p_k λ_k / (K σ0²)`.
pub fn sinr_zims(pc: &crate::restore::ParallelChannels) -> Result<f64, MetricsError> {
    if pc.noise_variance <= 0.0 {
        return Err(MetricsError::NonPositiveNoise);
    }
    let k = pc.lambdas.len() as f64;
    let num: f64 = pc.lambdas.iter().zip(&pc.allocations).map(|(&l, &p)| p * l).sum();
    Ok(num / (k * pc.noise_variance))
}

/// Conventional-FD average subchannel SINR with residual self-interference:
/// `Σ_k p_k g_k / (K σ0² + ξ Σ_k p_k)`, with `g_k` the per-subchannel
/// channel power gains.
pub fn sinr_fd_sic(
    gains: &[f64],
    allocations: &[f64],
    sic: SicParam,
    sigma0_sq: f64,
) -> Result<f64, MetricsError> {
    if sigma0_sq <= 0.0 {
        return Err(MetricsError::NonPositiveNoise);
    }
    if gains.len() != allocations.len() || gains.is_empty() {
        return Err(MetricsError::Dimension { got: allocations.len(), expected: gains.len() });
    }
    let k = gains.len() as f64;
    let num: f64 = gains.iter().zip(allocations).map(|(&g, &p)| p * g).sum();
    let residual: f64 = sic.xi * allocations.iter().sum::<f64>();
    Ok(num / (k * sigma0_sq + residual))
}

/// SINR gain in dB.
pub fn sinr_gain_db(gamma_zims: f64, gamma_fd: f64) -> f64 {
    10.0 * gamma_zims.log10() - 10.0 * gamma_fd.log10()
}

/// Feasible open range of the zero-interval fraction for a given data
/// interval, transition bound and delay spread; the upper end is the
/// full-separation point α = 1.
pub fn feasible_alpha_range(t_data: f64, t_trans: f64, tau_spread: f64) -> (f64, f64) {
    ((tau_spread + 4.0 * t_trans) / t_data, 1.0)
}

/// Golden-section search for the maximum of a unimodal objective over the
/// intersection of `range` and `feasible`. Terminates when the bracket is
/// below `tol`; returns the best fraction and its objective value.
///
/// The objective is typically a fixed-seed Monte-Carlo mean, so the search
/// sees a deterministic function.
pub fn optimize_alpha<F: Fn(f64) -> f64>(
    objective: F,
    range: (f64, f64),
    feasible: (f64, f64),
    tol: f64,
) -> Result<(f64, f64), MetricsError> {
    if !(tol > 0.0) {
        return Err(MetricsError::BadTolerance);
    }
    let mut a = range.0.max(feasible.0);
    let mut b = range.1.min(feasible.1);
    if !(b > a) {
        return Err(MetricsError::EmptyFeasibleRange);
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while b - a > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = objective(x2);
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}
