//! Per-experiment sweep logic.
//!
//! `grid` enumerates the output cells of an experiment in a fixed order and
//! `trial` computes one Monte-Carlo trial's value for every cell in that
//! same order. All grid points of a trial share one channel draw (common
//! random numbers), which makes monotonicity comparisons across a grid
//! exact per trial and shrinks the variance of ratios.

use super::{ExperimentConfig, ExperimentId, RunnerError, CARRIER_HZ};
use crate::channel::{draw_channel_set, freq_channel_matrix, subcarrier_gains, ChannelSet, ChannelSpec};
use crate::frame_timing::{FrameTiming, User};
use crate::linksim::{candidate_sampling_matrix, equivalent_channel_siso, simulate_block, SymbolBlock};
use crate::metrics::{
    dbm_to_watts, logdet_equal_power_bits, sinr_fd_sic, sinr_gain_db, sinr_zims,
    watts_to_dbm, SicParam,
};
use crate::restore::{detect_nearest, q_function, svd_decode, svd_precode, Constellation, ParallelChannels};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One output cell: the sweep coordinates and the metric it carries.
#[derive(Debug, Clone)]
pub(crate) struct Cell {
    pub alpha: Option<f64>,
    pub p_bar_dbm: Option<f64>,
    pub two_n: usize,
    pub k_tx: usize,
    pub k_rx: usize,
    pub xi_db: Option<f64>,
    pub metric: &'static str,
}

impl Cell {
    fn new(cfg: &ExperimentConfig, metric: &'static str) -> Self {
        Cell {
            alpha: None,
            p_bar_dbm: None,
            two_n: cfg.two_n,
            k_tx: cfg.k_tx,
            k_rx: cfg.k_rx,
            xi_db: None,
            metric,
        }
    }
}

/// The cells of an experiment, in the exact order `trial` fills them.
pub(crate) fn grid(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    match cfg.experiment {
        ExperimentId::Fig3 | ExperimentId::Custom => {
            for &alpha in &cfg.alpha_grid {
                for &p in &cfg.p_bar_dbm_grid {
                    for metric in ["capacity_zims_bps", "capacity_gain_hd"] {
                        cells.push(Cell {
                            alpha: Some(alpha),
                            p_bar_dbm: Some(p),
                            ..Cell::new(cfg, metric)
                        });
                    }
                }
            }
            for &p in &cfg.p_bar_dbm_grid {
                cells.push(Cell {
                    p_bar_dbm: Some(p),
                    ..Cell::new(cfg, "capacity_ofdm_hd_bps")
                });
            }
        }
        ExperimentId::Fig4 => {
            let p = cfg.p_bar_dbm_grid[0];
            for &two_n in &cfg.two_n_grid {
                for &alpha in &cfg.alpha_grid {
                    for metric in ["capacity_zims_bps", "capacity_gain_hd"] {
                        cells.push(Cell {
                            alpha: Some(alpha),
                            p_bar_dbm: Some(p),
                            two_n,
                            ..Cell::new(cfg, metric)
                        });
                    }
                }
                cells.push(Cell {
                    p_bar_dbm: Some(p),
                    two_n,
                    ..Cell::new(cfg, "capacity_ofdm_hd_bps")
                });
            }
        }
        ExperimentId::Fig5 => {
            let p = cfg.p_bar_dbm_grid[0];
            for &k in &cfg.antenna_grid {
                for &alpha in &cfg.alpha_grid {
                    cells.push(Cell {
                        alpha: Some(alpha),
                        p_bar_dbm: Some(p),
                        k_tx: k,
                        k_rx: k,
                        ..Cell::new(cfg, "capacity_zims_bps")
                    });
                }
            }
        }
        ExperimentId::Fig6 => {
            for &alpha in &cfg.alpha_grid {
                for &snr in &cfg.snr_db_grid {
                    let p_bar = watts_to_dbm(10f64.powf(snr / 10.0) * cfg.sigma0_sq());
                    for metric in ["ber_empirical", "ber_analytic", "ber_bits"] {
                        cells.push(Cell {
                            alpha: Some(alpha),
                            p_bar_dbm: Some(p_bar),
                            ..Cell::new(cfg, metric)
                        });
                    }
                }
            }
        }
        ExperimentId::Fig7 => {
            let alpha = cfg.alpha_grid[0];
            for &xi in &cfg.xi_db_grid {
                for &p in &cfg.p_bar_dbm_grid {
                    cells.push(Cell {
                        alpha: Some(alpha),
                        p_bar_dbm: Some(p),
                        xi_db: Some(xi),
                        ..Cell::new(cfg, "sinr_gain_db")
                    });
                }
            }
            for &p in &cfg.p_bar_dbm_grid {
                cells.push(Cell {
                    alpha: Some(alpha),
                    p_bar_dbm: Some(p),
                    ..Cell::new(cfg, "sinr_zims_db")
                });
            }
        }
        ExperimentId::Fig8 => {
            let alpha = cfg.alpha_grid[0];
            for &xi in &cfg.xi_db_grid {
                for &p in &cfg.p_bar_dbm_grid {
                    cells.push(Cell {
                        alpha: Some(alpha),
                        p_bar_dbm: Some(p),
                        xi_db: Some(xi),
                        ..Cell::new(cfg, "capacity_gain_fd_sic")
                    });
                }
            }
        }
        ExperimentId::Fig9 => {
            for &alpha in &cfg.alpha_grid {
                for &p in &cfg.p_bar_dbm_grid {
                    for metric in ["capacity_zims_bps", "ordering_ok"] {
                        cells.push(Cell {
                            alpha: Some(alpha),
                            p_bar_dbm: Some(p),
                            ..Cell::new(cfg, metric)
                        });
                    }
                }
            }
            for &p in &cfg.p_bar_dbm_grid {
                for metric in ["capacity_fd_perfect_bps", "capacity_rodd_bps"] {
                    cells.push(Cell { p_bar_dbm: Some(p), ..Cell::new(cfg, metric) });
                }
            }
        }
    }
    cells
}

/// Runs one trial with its derived seed; values align with [`grid`].
pub(crate) fn trial(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<f64>, RunnerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match cfg.experiment {
        ExperimentId::Fig3 | ExperimentId::Custom => trial_capacity_gain(cfg, &mut rng),
        ExperimentId::Fig4 => trial_subcarrier_sweep(cfg, &mut rng),
        ExperimentId::Fig5 => trial_antenna_sweep(cfg, &mut rng),
        ExperimentId::Fig6 => trial_ber(cfg, &mut rng),
        ExperimentId::Fig7 => trial_sinr_gain(cfg, &mut rng),
        ExperimentId::Fig8 => trial_capacity_gain_fd(cfg, &mut rng),
        ExperimentId::Fig9 => trial_ordering(cfg, &mut rng),
    }
}

// ---------------------------------------------------------------------------
// shared pieces
// ---------------------------------------------------------------------------

/// Per-link subcarrier gains indexed [tx antenna][rx antenna][subcarrier].
fn link_gains(
    cs: &ChannelSet,
    from: User,
    to: User,
    timing: &FrameTiming,
) -> Vec<Vec<Vec<C64>>> {
    (0..cs.k_tx[from.index()])
        .map(|p| {
            (0..cs.k_rx[to.index()])
                .map(|q| subcarrier_gains(cs.link(from, to, p, q), timing, CARRIER_HZ))
                .collect()
        })
        .collect()
}

/// Gram matrix `V^H V` of the candidate-interval sampling matrix of
/// (`user`, symbol 0). The instants are equispaced inside the interval, so
/// the Gram is Toeplitz with geometric-series entries
/// `K(d) = exp(j 2π Δf d lo) Σ_v exp(j 2π Δf d len v / G)`; the carrier
/// cancels exactly.
fn candidate_gram(
    timing: &FrameTiming,
    cs: &ChannelSet,
    user: User,
) -> Result<DMatrix<C64>, RunnerError> {
    let extrema = cs.delay_extrema();
    let ci = crate::frame_timing::candidate_interval(timing, &extrema, user, 0)?;
    if ci.is_empty() {
        return Err(crate::frame_timing::TimingError::EmptyInterval.into());
    }
    let two_n = timing.two_n();
    let g = timing.g_samples as f64;
    let step = std::f64::consts::TAU * timing.delta_f * ci.length() / g;
    let lo = std::f64::consts::TAU * timing.delta_f * ci.lo;
    let kernel: Vec<C64> = (-(two_n as i64 - 1)..=(two_n as i64 - 1))
        .map(|d| {
            let phi = step * d as f64;
            let half = phi / 2.0;
            // Dirichlet kernel sum over v = 1..=G
            let sum = if half.sin().abs() < 1e-12 {
                C64::new(g, 0.0)
            } else {
                C64::from_polar((g * half).sin() / half.sin(), half * (g + 1.0))
            };
            sum * C64::from_polar(1.0, lo * d as f64)
        })
        .collect();
    Ok(DMatrix::from_fn(two_n, two_n, |i, j| kernel[(j as i64 - i as i64 + two_n as i64 - 1) as usize]))
}

fn hermitian_lambdas(gram: DMatrix<C64>) -> Vec<f64> {
    let eig = nalgebra::linalg::SymmetricEigen::new(gram);
    let mut lam: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    lam.sort_by(|a, b| b.partial_cmp(a).unwrap());
    lam
}

/// Squared singular values of `blockdiag(V,..,V) * H_mimo` computed from the
/// sampling Gram matrix and the per-pair diagonal gains: block (p, p') of
/// the product Gram is `Σ_q diag(g_pq)^H K diag(g_p'q)`.
fn sampled_mimo_lambdas(k_gram: &DMatrix<C64>, gains: &[Vec<Vec<C64>>]) -> Vec<f64> {
    let k_t = gains.len();
    let k_r = gains[0].len();
    let two_n = k_gram.nrows();
    let mut gram = DMatrix::<C64>::zeros(two_n * k_t, two_n * k_t);
    for p in 0..k_t {
        for pp in 0..k_t {
            for q in 0..k_r {
                let gp = &gains[p][q];
                let gpp = &gains[pp][q];
                for i in 0..two_n {
                    let gi = gp[i].conj();
                    for j in 0..two_n {
                        gram[(p * two_n + i, pp * two_n + j)] += gi * k_gram[(i, j)] * gpp[j];
                    }
                }
            }
        }
    }
    hermitian_lambdas(gram)
}

/// Squared singular values of the uniformly sampled equivalent channel:
/// orthogonal columns decouple the Gram per subcarrier into K x K blocks,
/// each scaled by the processing gain.
fn uniform_mimo_lambdas(gains: &[Vec<Vec<C64>>], processing_gain: f64) -> Vec<f64> {
    let k_t = gains.len();
    let k_r = gains[0].len();
    let two_n = gains[0][0].len();
    let mut out = Vec::with_capacity(two_n * k_t);
    for n in 0..two_n {
        let b = DMatrix::<C64>::from_fn(k_r, k_t, |q, p| gains[p][q][n]);
        let lam = hermitian_lambdas(b.adjoint() * &b);
        out.extend(lam.into_iter().map(|l| processing_gain * l));
    }
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

struct DirectionalLambdas {
    /// λ of the candidate-interval equivalent, forward (received by U2).
    ci_fwd: Vec<f64>,
    /// λ of the candidate-interval equivalent, backward (received by U1).
    ci_bwd: Vec<f64>,
}

fn candidate_lambdas_both(
    timing: &FrameTiming,
    cs: &ChannelSet,
    gains_fwd: &[Vec<Vec<C64>>],
    gains_bwd: &[Vec<Vec<C64>>],
) -> Result<DirectionalLambdas, RunnerError> {
    let k1 = candidate_gram(timing, cs, User::U1)?;
    let k2 = candidate_gram(timing, cs, User::U2)?;
    Ok(DirectionalLambdas {
        ci_fwd: sampled_mimo_lambdas(&k2, gains_fwd),
        ci_bwd: sampled_mimo_lambdas(&k1, gains_bwd),
    })
}

// ---------------------------------------------------------------------------
// fig3 / custom: capacity gain over half-duplex OFDM
// ---------------------------------------------------------------------------

fn trial_capacity_gain(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, RunnerError> {
    let sigma = cfg.sigma0_sq();
    let two_n = cfg.two_n;
    let tau = cfg.scaled_tau(two_n);
    let spec = ChannelSpec {
        variance_si: cfg.variance_si,
        variance_desired: cfg.variance_desired,
        paths_per_link: cfg.paths_per_link,
        delay_spread_bound: tau,
        k_tx: [cfg.k_tx, cfg.k_tx],
        k_rx: [cfg.k_rx, cfg.k_rx],
    };
    let cs = draw_channel_set(&spec, rng)?;
    let t0 = cfg.timing(two_n, cfg.alpha_grid[0])?;
    let gains_fwd = link_gains(&cs, User::U1, User::U2, &t0);
    let gains_bwd = link_gains(&cs, User::U2, User::U1, &t0);
    // half-duplex baseline is independent of the zero-interval fraction
    let lam_hd_fwd = uniform_mimo_lambdas(&gains_fwd, two_n as f64);
    let lam_hd_bwd = uniform_mimo_lambdas(&gains_bwd, two_n as f64);
    let overhead = t0.t_data / (t0.t_data + 2.0 * tau);
    let entries = two_n * cfg.k_tx;
    let hd: Vec<f64> = cfg
        .p_bar_dbm_grid
        .iter()
        .map(|&dbm| {
            let p = dbm_to_watts(dbm) / entries as f64;
            Ok(0.5 * t0.delta_f
                * overhead
                * (logdet_equal_power_bits(&lam_hd_fwd, p, sigma)?
                    + logdet_equal_power_bits(&lam_hd_bwd, p, sigma)?))
        })
        .collect::<Result<_, RunnerError>>()?;
    let mut vals = Vec::new();
    for &alpha in &cfg.alpha_grid {
        let t = cfg.timing(two_n, alpha)?;
        let lams = candidate_lambdas_both(&t, &cs, &gains_fwd, &gains_bwd)?;
        let rate = t.delta_f / (1.0 + t.alpha);
        for (pi, &dbm) in cfg.p_bar_dbm_grid.iter().enumerate() {
            let p = dbm_to_watts(dbm) / entries as f64;
            let c_z = rate
                * (logdet_equal_power_bits(&lams.ci_fwd, p, sigma)?
                    + logdet_equal_power_bits(&lams.ci_bwd, p, sigma)?);
            vals.push(c_z);
            vals.push(c_z / hd[pi]);
        }
    }
    vals.extend_from_slice(&hd);
    Ok(vals)
}

// ---------------------------------------------------------------------------
// fig4: capacity gain vs subcarrier count
// ---------------------------------------------------------------------------

fn trial_subcarrier_sweep(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, RunnerError> {
    let mut vals = Vec::new();
    for &two_n in &cfg.two_n_grid {
        let mut sub = cfg.clone();
        sub.two_n = two_n;
        sub.two_n_grid = vec![];
        sub.p_bar_dbm_grid = vec![cfg.p_bar_dbm_grid[0]];
        vals.extend(trial_capacity_gain(&sub, rng)?);
    }
    Ok(vals)
}

// ---------------------------------------------------------------------------
// fig5: capacity vs antenna count
// ---------------------------------------------------------------------------

fn trial_antenna_sweep(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, RunnerError> {
    let sigma = cfg.sigma0_sq();
    let two_n = cfg.two_n;
    let tau = cfg.scaled_tau(two_n);
    let p_bar = dbm_to_watts(cfg.p_bar_dbm_grid[0]);
    let mut vals = Vec::new();
    for &k in &cfg.antenna_grid {
        let spec = ChannelSpec {
            variance_si: cfg.variance_si,
            variance_desired: cfg.variance_desired,
            paths_per_link: cfg.paths_per_link,
            delay_spread_bound: tau,
            k_tx: [k, k],
            k_rx: [k, k],
        };
        let cs = draw_channel_set(&spec, rng)?;
        let t0 = cfg.timing(two_n, cfg.alpha_grid[0])?;
        let gains_fwd = link_gains(&cs, User::U1, User::U2, &t0);
        let gains_bwd = link_gains(&cs, User::U2, User::U1, &t0);
        for &alpha in &cfg.alpha_grid {
            let t = cfg.timing(two_n, alpha)?;
            let lams = candidate_lambdas_both(&t, &cs, &gains_fwd, &gains_bwd)?;
            let p = p_bar / (two_n * k) as f64;
            let rate = t.delta_f / (1.0 + t.alpha);
            let c_z = rate
                * (logdet_equal_power_bits(&lams.ci_fwd, p, sigma)?
                    + logdet_equal_power_bits(&lams.ci_bwd, p, sigma)?);
            vals.push(c_z);
        }
    }
    Ok(vals)
}

// ---------------------------------------------------------------------------
// fig6: QPSK bit error rate over the SVD subchannels
// ---------------------------------------------------------------------------

fn trial_ber(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, RunnerError> {
    let sigma = cfg.sigma0_sq();
    let two_n = cfg.two_n;
    let tau = cfg.scaled_tau(two_n);
    let spec = ChannelSpec::siso(cfg.variance_si, cfg.variance_desired, cfg.paths_per_link, tau);
    let cs = draw_channel_set(&spec, rng)?;
    let d = cs.delay_extrema();
    let constellation = Constellation::qpsk();
    let mut vals = Vec::new();
    for &alpha in &cfg.alpha_grid {
        let t = cfg.timing(two_n, alpha)?;
        let v = candidate_sampling_matrix(&t, &d, User::U1, 0, CARRIER_HZ)?;
        let h = freq_channel_matrix(cs.link(User::U2, User::U1, 0, 0), &t, CARRIER_HZ);
        let eq = equivalent_channel_siso(&v, &h)?;
        let lambdas = eq.lambdas();
        for &snr_db in &cfg.snr_db_grid {
            let p_bar = 10f64.powf(snr_db / 10.0) * sigma;
            let p = p_bar / two_n as f64;
            let pc = ParallelChannels::new(lambdas.clone(), vec![p; two_n], sigma);
            let usable = pc.usable();
            let n_usable = usable.iter().filter(|&&u| u).count().max(1);
            let analytic = lambdas
                .iter()
                .zip(&usable)
                .filter(|(_, &u)| u)
                .map(|(&l, _)| q_function((p * l / sigma).sqrt()))
                .sum::<f64>()
                / n_usable as f64;
            // one transmitted vector per trial and SNR point
            let idx: Vec<usize> =
                (0..two_n).map(|_| rng.random_range(0..constellation.points.len())).collect();
            let x_tilde = DVector::from_fn(two_n, |k, _| {
                constellation.points[idx[k]] * C64::new(p.sqrt(), 0.0)
            });
            let x = svd_precode(&eq, &x_tilde)?;
            let block = SymbolBlock::from_vectors(User::U2, 1, vec![x]);
            let y = simulate_block(&eq, &block, sigma, rng)?;
            let y_tilde = svd_decode(&eq, &y.samples[0])?;
            let mut bit_errors = 0usize;
            for k in 0..two_n {
                if !usable[k] {
                    continue;
                }
                let detected = detect_nearest(y_tilde[k], lambdas[k] * p, &constellation)?;
                bit_errors += constellation.bit_errors(detected, idx[k]);
            }
            let bits = (constellation.bits_per_symbol * n_usable) as f64;
            vals.push(bit_errors as f64 / bits);
            vals.push(analytic);
            vals.push(bits);
        }
    }
    Ok(vals)
}

// ---------------------------------------------------------------------------
// fig7: SINR gain over cancellation-based full-duplex
// ---------------------------------------------------------------------------

fn trial_sinr_gain(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, RunnerError> {
    let sigma = cfg.sigma0_sq();
    let two_n = cfg.two_n;
    let tau = cfg.scaled_tau(two_n);
    let spec = ChannelSpec {
        variance_si: cfg.variance_si,
        variance_desired: cfg.variance_desired,
        paths_per_link: cfg.paths_per_link,
        delay_spread_bound: tau,
        k_tx: [cfg.k_tx, cfg.k_tx],
        k_rx: [cfg.k_rx, cfg.k_rx],
    };
    let cs = draw_channel_set(&spec, rng)?;
    let alpha = cfg.alpha_grid[0];
    let t = cfg.timing(two_n, alpha)?;
    let gains_bwd = link_gains(&cs, User::U2, User::U1, &t);
    let k1 = candidate_gram(&t, &cs, User::U1)?;
    let lambdas = sampled_mimo_lambdas(&k1, &gains_bwd);
    let count = lambdas.len();
    // per-subchannel power gains of the conventional-FD comparison
    let htilde: Vec<f64> = (0..count)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (re * re + im * im) / 2.0 * cfg.variance_desired
        })
        .collect();
    let mut vals = Vec::new();
    let mut zims_db = Vec::new();
    for &dbm in &cfg.p_bar_dbm_grid {
        let p = dbm_to_watts(dbm) / count as f64;
        let pc = ParallelChannels::new(lambdas.clone(), vec![p; count], sigma);
        zims_db.push(10.0 * sinr_zims(&pc)?.log10());
    }
    for &xi_db in &cfg.xi_db_grid {
        let sic = SicParam::from_db(xi_db)?;
        for &dbm in &cfg.p_bar_dbm_grid {
            let p = dbm_to_watts(dbm) / count as f64;
            let pc = ParallelChannels::new(lambdas.clone(), vec![p; count], sigma);
            let gz = sinr_zims(&pc)?;
            let gc = sinr_fd_sic(&htilde, &pc.allocations, sic, sigma)?;
            vals.push(sinr_gain_db(gz, gc));
        }
    }
    vals.extend(zims_db);
    Ok(vals)
}

// ---------------------------------------------------------------------------
// fig8: capacity gain over cancellation-based full-duplex
// ---------------------------------------------------------------------------

fn trial_capacity_gain_fd(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, RunnerError> {
    let sigma = cfg.sigma0_sq();
    let two_n = cfg.two_n;
    let tau = cfg.scaled_tau(two_n);
    let spec = ChannelSpec {
        variance_si: cfg.variance_si,
        variance_desired: cfg.variance_desired,
        paths_per_link: cfg.paths_per_link,
        delay_spread_bound: tau,
        k_tx: [cfg.k_tx, cfg.k_tx],
        k_rx: [cfg.k_rx, cfg.k_rx],
    };
    let cs = draw_channel_set(&spec, rng)?;
    let alpha = cfg.alpha_grid[0];
    let t = cfg.timing(two_n, alpha)?;
    let gains_fwd = link_gains(&cs, User::U1, User::U2, &t);
    let gains_bwd = link_gains(&cs, User::U2, User::U1, &t);
    let lams = candidate_lambdas_both(&t, &cs, &gains_fwd, &gains_bwd)?;
    let lam_u_fwd = uniform_mimo_lambdas(&gains_fwd, two_n as f64);
    let lam_u_bwd = uniform_mimo_lambdas(&gains_bwd, two_n as f64);
    let entries = two_n * cfg.k_tx;
    let rate = t.delta_f / (1.0 + t.alpha);
    let mut vals = Vec::new();
    for &xi_db in &cfg.xi_db_grid {
        let sic = SicParam::from_db(xi_db)?;
        for &dbm in &cfg.p_bar_dbm_grid {
            let p_bar = dbm_to_watts(dbm);
            let p = p_bar / entries as f64;
            let c_z = rate
                * (logdet_equal_power_bits(&lams.ci_fwd, p, sigma)?
                    + logdet_equal_power_bits(&lams.ci_bwd, p, sigma)?);
            let noise = sigma + sic.xi * p_bar;
            let c_fd = t.delta_f
                * (logdet_equal_power_bits(&lam_u_fwd, p, noise)?
                    + logdet_equal_power_bits(&lam_u_bwd, p, noise)?);
            vals.push(c_z / c_fd);
        }
    }
    Ok(vals)
}

// ---------------------------------------------------------------------------
// fig9: ordering against ideal full-duplex and coded on-off duplexing
// ---------------------------------------------------------------------------

fn trial_ordering(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, RunnerError> {
    let sigma = cfg.sigma0_sq();
    let two_n = cfg.two_n;
    let tau = cfg.scaled_tau(two_n);
    let spec = ChannelSpec {
        variance_si: cfg.variance_si,
        variance_desired: cfg.variance_desired,
        paths_per_link: cfg.paths_per_link,
        delay_spread_bound: tau,
        k_tx: [cfg.k_tx, cfg.k_tx],
        k_rx: [cfg.k_rx, cfg.k_rx],
    };
    let cs = draw_channel_set(&spec, rng)?;
    let t0 = cfg.timing(two_n, cfg.alpha_grid[0])?;
    let gains_fwd = link_gains(&cs, User::U1, User::U2, &t0);
    let gains_bwd = link_gains(&cs, User::U2, User::U1, &t0);
    let lam_u_fwd = uniform_mimo_lambdas(&gains_fwd, two_n as f64);
    let lam_u_bwd = uniform_mimo_lambdas(&gains_bwd, two_n as f64);
    let entries = two_n * cfg.k_tx;
    let fd_perfect: Vec<f64> = cfg
        .p_bar_dbm_grid
        .iter()
        .map(|&dbm| {
            let p = dbm_to_watts(dbm) / entries as f64;
            Ok(t0.delta_f
                * (logdet_equal_power_bits(&lam_u_fwd, p, sigma)?
                    + logdet_equal_power_bits(&lam_u_bwd, p, sigma)?))
        })
        .collect::<Result<_, RunnerError>>()?;
    let mut vals = Vec::new();
    for &alpha in &cfg.alpha_grid {
        let t = cfg.timing(two_n, alpha)?;
        let lams = candidate_lambdas_both(&t, &cs, &gains_fwd, &gains_bwd)?;
        let rate = t.delta_f / (1.0 + t.alpha);
        for (pi, &dbm) in cfg.p_bar_dbm_grid.iter().enumerate() {
            let p = dbm_to_watts(dbm) / entries as f64;
            let c_z = rate
                * (logdet_equal_power_bits(&lams.ci_fwd, p, sigma)?
                    + logdet_equal_power_bits(&lams.ci_bwd, p, sigma)?);
            let c_fd = fd_perfect[pi];
            let c_rodd = 0.25 * c_fd;
            vals.push(c_z);
            vals.push(if c_rodd < c_z && c_z < c_fd { 1.0 } else { 0.0 });
        }
    }
    for &c_fd in &fd_perfect {
        vals.push(c_fd);
        vals.push(0.25 * c_fd);
    }
    Ok(vals)
}
