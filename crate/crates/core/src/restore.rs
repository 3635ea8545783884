//! Symbol restoration from candidate-interval samples.
//!
//! With the SVD `V H = U S W^H`, precoding the transmit vector by `W` and
//! decoding the samples by `U^H` turns the link into parallel subchannels
//! `y_k = sqrt(λ_k) x_k + z_k`. Nearest-point detection, ZF and MMSE
//! estimators, per-subchannel SNR and the QPSK bit error rate live here.

use crate::linksim::EquivalentChannel;
use crate::C64;
use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

/// Subchannels whose λ falls below this fraction of the largest are treated
/// as unusable and excluded from error-rate averaging.
pub const LAMBDA_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum RestoreError {
    #[error("vector length {got} does not match the equivalent channel ({expected})")]
    Dimension { got: usize, expected: usize },
    #[error("subchannel is unusable (vanishing singular value)")]
    UnusableSubchannel,
    #[error("equivalent channel is rank-deficient; zero-forcing is undefined")]
    RankDeficient,
    #[error("SNR must be non-negative")]
    NegativeSnr,
    #[error("noise variance must be strictly positive")]
    NonPositiveNoise,
    #[error("power allocation entries must be strictly positive")]
    NonPositivePower,
}

/// A named constellation with unit average power.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub name: &'static str,
    pub points: Vec<C64>,
    pub bits_per_symbol: usize,
}

impl Constellation {
    /// Gray-mapped QPSK: bit 0 selects the real sign, bit 1 the imaginary
    /// sign, points scaled to unit average power.
    pub fn qpsk() -> Self {
        let s = 1.0 / 2f64.sqrt();
        let points = (0..4)
            .map(|i| {
                let re = if i & 1 == 0 { s } else { -s };
                let im = if i & 2 == 0 { s } else { -s };
                C64::new(re, im)
            })
            .collect();
        Constellation { name: "qpsk", points, bits_per_symbol: 2 }
    }

    /// Index of the nearest point; ties break to the lowest index.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Bits of point `index`, LSB first.
    pub fn bits(&self, index: usize) -> Vec<u8> {
        (0..self.bits_per_symbol).map(|b| ((index >> b) & 1) as u8).collect()
    }

    /// Hamming distance between the bit labels of two points.
    pub fn bit_errors(&self, a: usize, b: usize) -> usize {
        (a ^ b).count_ones() as usize
    }
}

/// The parallel subchannels of one equivalent channel: squared singular
/// values, the per-subchannel power allocation and the noise variance.
#[derive(Debug, Clone)]
pub struct ParallelChannels {
    /// λ_k, descending.
    pub lambdas: Vec<f64>,
    pub allocations: Vec<f64>,
    pub noise_variance: f64,
}

impl ParallelChannels {
    pub fn new(lambdas: Vec<f64>, allocations: Vec<f64>, noise_variance: f64) -> Self {
        assert_eq!(lambdas.len(), allocations.len());
        ParallelChannels { lambdas, allocations, noise_variance }
    }

    /// Equal power split of `p_bar` over the subchannels of `eq`.
    pub fn equal_power(eq: &EquivalentChannel, p_bar: f64, noise_variance: f64) -> Self {
        let lambdas = eq.lambdas();
        let n = lambdas.len();
        ParallelChannels { lambdas, allocations: vec![p_bar / n as f64; n], noise_variance }
    }

    /// Which subchannels clear the λ floor.
    pub fn usable(&self) -> Vec<bool> {
        let max = self.lambdas.first().copied().unwrap_or(0.0);
        self.lambdas.iter().map(|&l| l > LAMBDA_FLOOR * max).collect()
    }
}

/// Precoding: maps the coded vector through the right singular vectors,
/// `x = W x_tilde`. Power-preserving since W is unitary.
pub fn svd_precode(eq: &EquivalentChannel, x_tilde: &DVector<C64>) -> Result<DVector<C64>, RestoreError> {
    if x_tilde.len() != eq.right.ncols() {
        return Err(RestoreError::Dimension { got: x_tilde.len(), expected: eq.right.ncols() });
    }
    Ok(&eq.right * x_tilde)
}

/// Decoding: projects the samples onto the left singular vectors,
/// `y_tilde = U^H y`, one entry per subchannel.
pub fn svd_decode(eq: &EquivalentChannel, y: &DVector<C64>) -> Result<DVector<C64>, RestoreError> {
    if y.len() != eq.left.nrows() {
        return Err(RestoreError::Dimension { got: y.len(), expected: eq.left.nrows() });
    }
    Ok(eq.left.adjoint() * y)
}

/// Nearest-constellation decision on one subchannel: `argmin |y/sqrt(λ) - x|²`.
pub fn detect_nearest(
    y_tilde: C64,
    lambda: f64,
    constellation: &Constellation,
) -> Result<usize, RestoreError> {
    if lambda <= 0.0 {
        return Err(RestoreError::UnusableSubchannel);
    }
    Ok(constellation.nearest(y_tilde / lambda.sqrt()))
}

/// Zero-forcing estimate (pre-slicing): least-squares solution through the
/// pseudoinverse. Errors if the channel is numerically rank-deficient.
pub fn zf_estimate(eq: &EquivalentChannel, y: &DVector<C64>) -> Result<DVector<C64>, RestoreError> {
    if y.len() != eq.product.nrows() {
        return Err(RestoreError::Dimension { got: y.len(), expected: eq.product.nrows() });
    }
    if eq.numerical_rank(1e-10) < eq.product.ncols() {
        return Err(RestoreError::RankDeficient);
    }
    let proj = eq.left.adjoint() * y;
    let scaled = DVector::from_fn(proj.len(), |k, _| proj[k] / eq.singular_values[k]);
    Ok(&eq.right * scaled)
}

/// Zero-forcing detection: estimate then slice per entry.
pub fn zf_detect(
    eq: &EquivalentChannel,
    y: &DVector<C64>,
    constellation: &Constellation,
) -> Result<Vec<usize>, RestoreError> {
    let est = zf_estimate(eq, y)?;
    Ok(est.iter().map(|&z| constellation.nearest(z)).collect())
}

/// MMSE estimate (pre-slicing) with the per-entry power allocation as prior:
/// `x_hat = (A^H A + σ² diag(1/p))^{-1} A^H y`. Defined at any rank.
pub fn mmse_estimate(
    eq: &EquivalentChannel,
    y: &DVector<C64>,
    sigma0_sq: f64,
    allocations: &[f64],
) -> Result<DVector<C64>, RestoreError> {
    let cols = eq.product.ncols();
    if y.len() != eq.product.nrows() {
        return Err(RestoreError::Dimension { got: y.len(), expected: eq.product.nrows() });
    }
    if allocations.len() != cols {
        return Err(RestoreError::Dimension { got: allocations.len(), expected: cols });
    }
    if sigma0_sq <= 0.0 {
        return Err(RestoreError::NonPositiveNoise);
    }
    if allocations.iter().any(|&p| p <= 0.0) {
        return Err(RestoreError::NonPositivePower);
    }
    let mut m = eq.product.adjoint() * &eq.product;
    for k in 0..cols {
        m[(k, k)] += C64::new(sigma0_sq / allocations[k], 0.0);
    }
    let chol = Cholesky::new(m).ok_or(RestoreError::RankDeficient)?;
    let rhs = eq.product.adjoint() * y;
    Ok(chol.solve(&rhs))
}

/// MMSE detection: estimate then slice per entry.
pub fn mmse_detect(
    eq: &EquivalentChannel,
    y: &DVector<C64>,
    sigma0_sq: f64,
    allocations: &[f64],
    constellation: &Constellation,
) -> Result<Vec<usize>, RestoreError> {
    let est = mmse_estimate(eq, y, sigma0_sq, allocations)?;
    Ok(est.iter().map(|&z| constellation.nearest(z)).collect())
}

/// Ordered successive-cancellation variant of the MMSE detector: at each
/// round the entry with the best post-detection SINR is sliced and its
/// contribution removed from the samples. Symbols are assumed drawn from
/// `constellation` scaled by the square root of their allocation.
pub fn mmse_sic_detect(
    eq: &EquivalentChannel,
    y: &DVector<C64>,
    sigma0_sq: f64,
    allocations: &[f64],
    constellation: &Constellation,
) -> Result<Vec<usize>, RestoreError> {
    let cols = eq.product.ncols();
    if y.len() != eq.product.nrows() {
        return Err(RestoreError::Dimension { got: y.len(), expected: eq.product.nrows() });
    }
    if allocations.len() != cols {
        return Err(RestoreError::Dimension { got: allocations.len(), expected: cols });
    }
    if sigma0_sq <= 0.0 {
        return Err(RestoreError::NonPositiveNoise);
    }
    if allocations.iter().any(|&p| p <= 0.0) {
        return Err(RestoreError::NonPositivePower);
    }
    let mut residual = y.clone();
    let mut remaining: Vec<usize> = (0..cols).collect();
    let mut decided = vec![0usize; cols];
    while !remaining.is_empty() {
        let a = DMatrix::from_fn(eq.product.nrows(), remaining.len(), |r, c| {
            eq.product[(r, remaining[c])]
        });
        let mut m = a.adjoint() * &a;
        for (c, &k) in remaining.iter().enumerate() {
            m[(c, c)] += C64::new(sigma0_sq / allocations[k], 0.0);
        }
        let chol = Cholesky::new(m).ok_or(RestoreError::RankDeficient)?;
        // post-detection SINR of entry c is p_c / (σ² [M^{-1}]_cc) − 1;
        // picking the max is equivalent to minimising the diagonal weighted
        // by the prior
        let inv = chol.inverse();
        let best = (0..remaining.len())
            .min_by(|&i, &j| {
                let a_i = inv[(i, i)].re / allocations[remaining[i]];
                let a_j = inv[(j, j)].re / allocations[remaining[j]];
                a_i.partial_cmp(&a_j).unwrap()
            })
            .expect("non-empty");
        let est = chol.solve(&(a.adjoint() * &residual));
        let k = remaining[best];
        let scale = allocations[k].sqrt();
        let idx = constellation.nearest(est[best] / scale);
        decided[k] = idx;
        let point = constellation.points[idx] * scale;
        for r in 0..residual.len() {
            residual[r] -= eq.product[(r, k)] * point;
        }
        remaining.remove(best);
    }
    Ok(decided)
}

/// Per-subchannel SNR `γ_k = p_k λ_k / σ²`.
pub fn snr_per_subchannel(pc: &ParallelChannels) -> Result<Vec<f64>, RestoreError> {
    if pc.noise_variance <= 0.0 {
        return Err(RestoreError::NonPositiveNoise);
    }
    Ok(pc
        .lambdas
        .iter()
        .zip(&pc.allocations)
        .map(|(&l, &p)| p * l / pc.noise_variance)
        .collect())
}

/// Gaussian tail probability Q(x) via the complementary error function.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / 2f64.sqrt())
}

/// QPSK bit error rate `Q(sqrt(γ))` for a Gray-mapped constellation.
pub fn qpsk_ber(gamma: f64) -> Result<f64, RestoreError> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(RestoreError::NegativeSnr);
    }
    Ok(q_function(gamma.sqrt()))
}
