//! Ergodic group throughput of a pooled antenna array serving several
//! terminals at once, estimated by Monte Carlo over random channel draws.
//!
//! For an `M x K` channel matrix `H` (antennas by terminals) the group rate
//! in bits/s/Hz is `log2 det(I_K + rho_eff * H'H)` where the effective SNR
//! `rho_eff = rho / (1 + alpha * rho * k)` discounts the nominal SNR `rho`
//! by interference from `k` concurrent streams, weighted by the isolation
//! factor `alpha` (small alpha = well-isolated cells, alpha = 1 = worst
//! case).  Channel entries are unit-variance complex Gaussians, optionally
//! scaled per entry by the geometry's distance-decay law, and optionally
//! masked so each terminal keeps only antennas within the acceptance ratio
//! `mu` of its strongest.
//!
//! Every draw is addressed by (seed, trial, row, column) through the
//! counter-based generator, so a given trial's matrix is identical no matter
//! which grid cell, thread, or call order asks for it.  Sweeps exploit that:
//! one Gram product per trial serves every (alpha, snr) cell, and the same
//! draws back every cell, so per-trial comparisons across the grid are
//! paired rather than independently noisy.

use alloc::vec;
use alloc::vec::Vec;

use libm::{pow, sqrt};
use num_complex::Complex64;

use crate::dbm::{meets_threshold, received_power};
use crate::linalg::{log2_det_shifted_gram, CMatrix};
use crate::rng::{StreamDomain, StreamKey};
use crate::topology::Scenario;

/// Isolation factor at which the reference deployment (1000 pooled antennas,
/// 100 terminals, 10 dB) sustains 900 bits/s/Hz, frozen from the calibration
/// procedure in the README (`calibrate_alpha` at the default seed, 200
/// trials, bisection to 1e-6).
pub const ALPHA_STAR: f64 = 0.017576;

/// Whether terminals see the whole array or only antennas within their
/// acceptance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Every antenna serves every terminal (the classical upper bound).
    Full,
    /// Per terminal, keep antennas within `mu` of its strongest entry.
    Mu,
}

impl MaskMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskMode::Full => "full",
            MaskMode::Mu => "mu",
        }
    }
}

/// Per-entry channel statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    /// Independent unit-variance entries; geometry plays no role.
    Iid,
    /// Column-major per-entry variances (rows = antennas, cols = terminals),
    /// typically from [`cell_pathloss_variances`].
    Pathloss(Vec<f64>),
}

/// Entry variances for a concrete antenna/terminal group, following the
/// scenario's distance-decay law and normalized to an average of 1 so the
/// nominal SNR keeps the same meaning as in the iid model.
pub fn cell_pathloss_variances(s: &Scenario, antenna_ids: &[u32], ut_ids: &[u32]) -> Vec<f64> {
    let gamma = s.config.pathloss_exponent;
    let mut vars = Vec::with_capacity(antenna_ids.len() * ut_ids.len());
    for &ut in ut_ids {
        let u = s.ut(ut);
        for &a in antenna_ids {
            let d = u.position.distance_to(s.antenna(a).position);
            vars.push(received_power(d, gamma));
        }
    }
    let mean = vars.iter().sum::<f64>() / vars.len() as f64;
    for v in &mut vars {
        *v /= mean;
    }
    vars
}

/// Everything that pins down the channel ensemble of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    /// Antennas in the group.
    pub m: u32,
    /// Terminals served concurrently.
    pub k: u32,
    pub seed: u64,
    pub model: ChannelModel,
    pub mu: f64,
    pub mask_mode: MaskMode,
    /// Interfering streams charged against the effective SNR; normally the
    /// number of terminals.
    pub k_interferers: u32,
}

impl ChannelSpec {
    /// Unmasked iid ensemble, interference charged for all `k` streams.
    pub fn iid(m: u32, k: u32, seed: u64) -> Self {
        ChannelSpec {
            m,
            k,
            seed,
            model: ChannelModel::Iid,
            mu: 1.0,
            mask_mode: MaskMode::Full,
            k_interferers: k,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    pow(10.0, db / 10.0)
}

/// Nominal SNR discounted by alpha-weighted interference from `k` streams.
#[inline]
pub fn effective_snr(rho: f64, alpha: f64, k_interferers: u32) -> f64 {
    rho / (1.0 + alpha * rho * k_interferers as f64)
}

/// Draw the channel matrix for one trial.  Entry `(r, c)` depends only on
/// `(seed, trial, r, c)`, never on evaluation order.
pub fn draw_channel(spec: &ChannelSpec, trial: u32) -> CMatrix {
    let base = StreamKey::new(spec.seed, StreamDomain::Channel).fold(trial as u64);
    let m = spec.m as usize;
    let k = spec.k as usize;
    if let ChannelModel::Pathloss(vars) = &spec.model {
        assert_eq!(vars.len(), m * k, "variance table must match matrix shape");
    }
    CMatrix::from_fn(m, k, |r, c| {
        let (re, im) = base.fold(r as u64).fold(c as u64).complex_gaussian();
        let scale = match &spec.model {
            ChannelModel::Iid => 1.0,
            ChannelModel::Pathloss(vars) => sqrt(vars[c * m + r]),
        };
        Complex64::new(re * scale, im * scale)
    })
}

/// Column-major keep/drop mask from realized entry powers: per terminal,
/// keep antennas within `mu` of its strongest entry.
pub fn build_mask(h: &CMatrix, mu: f64) -> Vec<bool> {
    let powers: Vec<f64> = (0..h.cols)
        .flat_map(|c| h.col(c).iter().map(|z| z.norm_sqr()))
        .collect();
    build_mask_from_powers(&powers, h.rows, h.cols, mu)
}

/// Same rule applied to a precomputed power table (column-major), used when
/// the mask follows fixed geometry rather than per-draw fading.
pub fn build_mask_from_powers(powers: &[f64], rows: usize, cols: usize, mu: f64) -> Vec<bool> {
    assert_eq!(powers.len(), rows * cols);
    let mut mask = vec![false; rows * cols];
    for c in 0..cols {
        let col = &powers[c * rows..(c + 1) * rows];
        let max = col.iter().fold(0.0_f64, |a, &p| a.max(p));
        for (r, &p) in col.iter().enumerate() {
            mask[c * rows + r] = meets_threshold(p, max, mu);
        }
    }
    mask
}

/// Zero out dropped entries.
pub fn apply_mask(h: &CMatrix, mask: &[bool]) -> CMatrix {
    assert_eq!(mask.len(), h.rows * h.cols);
    CMatrix::from_fn(h.rows, h.cols, |r, c| {
        if mask[c * h.rows + r] {
            h.get(r, c)
        } else {
            Complex64::ZERO
        }
    })
}

/// Group rate of one realized channel, `log2 det(I + rho_eff * H'H)`.
///
/// The shifted Gram matrix is positive definite for any real channel and
/// non-negative effective SNR, so this only fails on non-finite inputs.
pub fn vc_capacity(h: &CMatrix, rho: f64, alpha: f64, k_interferers: u32) -> f64 {
    let rho_eff = effective_snr(rho, alpha, k_interferers);
    log2_det_shifted_gram(&h.gram(), rho_eff)
        .expect("shifted Gram matrix is positive definite for finite channels")
}

/// The channel realization a trial contributes to every grid cell: drawn
/// once, masked once.
pub fn trial_channel(spec: &ChannelSpec, trial: u32) -> CMatrix {
    let h = draw_channel(spec, trial);
    match spec.mask_mode {
        MaskMode::Full => h,
        MaskMode::Mu => {
            let mask = match &spec.model {
                ChannelModel::Iid => build_mask(&h, spec.mu),
                ChannelModel::Pathloss(vars) => {
                    build_mask_from_powers(vars, h.rows, h.cols, spec.mu)
                }
            };
            apply_mask(&h, &mask)
        }
    }
}

/// One mean capacity estimate with its Monte Carlo uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityPoint {
    pub snr_db: f64,
    pub alpha: f64,
    pub mu: f64,
    pub mask_mode: MaskMode,
    pub capacity_bps_hz: f64,
    /// Standard error of the mean (sample std over sqrt(trials); 0 for a
    /// single trial).
    pub std_error: f64,
    pub trials: u32,
    pub seed: u64,
}

/// A full (alpha, snr) grid sharing one channel ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub channel: ChannelSpec,
    pub snr_grid_db: Vec<f64>,
    pub alpha_list: Vec<f64>,
    pub trials: u32,
}

impl SweepSpec {
    /// Grid cells in output order: alpha-major, snr within.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut cells = Vec::with_capacity(self.alpha_list.len() * self.snr_grid_db.len());
        for &alpha in &self.alpha_list {
            for &snr in &self.snr_grid_db {
                cells.push((alpha, snr));
            }
        }
        cells
    }
}

/// Capacity of every grid cell under one trial's channel draw.  Pure in
/// `(spec, trial)`: safe to fan out over threads and reduce in trial order.
/// The Gram product is computed once and reshifted per cell.
pub fn sweep_trial(spec: &SweepSpec, trial: u32) -> Vec<f64> {
    let h = trial_channel(&spec.channel, trial);
    let g = h.gram();
    let k_int = spec.channel.k_interferers;
    spec.cells()
        .iter()
        .map(|&(alpha, snr_db)| {
            let rho_eff = effective_snr(db_to_linear(snr_db), alpha, k_int);
            log2_det_shifted_gram(&g, rho_eff)
                .expect("shifted Gram matrix is positive definite for finite channels")
        })
        .collect()
}

/// Reduce per-trial cell values (indexed `[trial][cell]`, trials ascending)
/// into the grid's capacity points.  Shared by the serial path and any
/// multi-threaded driver so both produce identical bytes.
pub fn assemble_sweep(spec: &SweepSpec, per_trial: &[Vec<f64>]) -> Vec<CapacityPoint> {
    let cells = spec.cells();
    assert_eq!(per_trial.len(), spec.trials as usize);
    let n = per_trial.len() as f64;
    cells
        .iter()
        .enumerate()
        .map(|(ci, &(alpha, snr_db))| {
            let mean = per_trial.iter().map(|t| t[ci]).sum::<f64>() / n;
            let std_error = if per_trial.len() < 2 {
                0.0
            } else {
                let ss = per_trial
                    .iter()
                    .map(|t| (t[ci] - mean) * (t[ci] - mean))
                    .sum::<f64>();
                sqrt(ss / (n - 1.0)) / sqrt(n)
            };
            CapacityPoint {
                snr_db,
                alpha,
                mu: spec.channel.mu,
                mask_mode: spec.channel.mask_mode,
                capacity_bps_hz: mean,
                std_error,
                trials: spec.trials,
                seed: spec.channel.seed,
            }
        })
        .collect()
}

/// Run the whole sweep serially.
pub fn sweep_curve(spec: &SweepSpec) -> Vec<CapacityPoint> {
    let per_trial: Vec<Vec<f64>> = (0..spec.trials).map(|t| sweep_trial(spec, t)).collect();
    assemble_sweep(spec, &per_trial)
}

/// Mean capacity of a single (alpha, snr) cell.
pub fn ergodic_capacity(
    channel: &ChannelSpec,
    snr_db: f64,
    alpha: f64,
    trials: u32,
) -> CapacityPoint {
    let spec = SweepSpec {
        channel: channel.clone(),
        snr_grid_db: vec![snr_db],
        alpha_list: vec![alpha],
        trials,
    };
    sweep_curve(&spec).pop().expect("one cell in, one point out")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub alpha_star: f64,
    pub achieved_bps_hz: f64,
    pub iterations: u32,
}

/// Find the isolation factor at which the ensemble's mean capacity hits a
/// target rate, by bisection over alpha in [0, 1].
///
/// Capacity is strictly decreasing in alpha (the effective SNR is), so
/// bisection converges unconditionally; the channel draws are cached as Gram
/// matrices up front, making each probe a cheap refactorization.  If even
/// the endpoints cannot bracket the target the nearest endpoint is returned
/// with zero iterations.
pub fn calibrate_alpha(
    channel: &ChannelSpec,
    snr_db: f64,
    target_bps_hz: f64,
    trials: u32,
    alpha_tol: f64,
) -> CalibrationResult {
    let rho = db_to_linear(snr_db);
    let grams: Vec<CMatrix> = (0..trials)
        .map(|t| trial_channel(channel, t).gram())
        .collect();
    let mean_capacity = |alpha: f64| -> f64 {
        let rho_eff = effective_snr(rho, alpha, channel.k_interferers);
        grams
            .iter()
            .map(|g| {
                log2_det_shifted_gram(g, rho_eff)
                    .expect("shifted Gram matrix is positive definite for finite channels")
            })
            .sum::<f64>()
            / trials as f64
    };

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if mean_capacity(hi) >= target_bps_hz {
        return CalibrationResult {
            alpha_star: hi,
            achieved_bps_hz: mean_capacity(hi),
            iterations: 0,
        };
    }
    if mean_capacity(lo) <= target_bps_hz {
        return CalibrationResult {
            alpha_star: lo,
            achieved_bps_hz: mean_capacity(lo),
            iterations: 0,
        };
    }
    let mut iterations = 0;
    while hi - lo > alpha_tol {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        if mean_capacity(mid) >= target_bps_hz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_star = 0.5 * (lo + hi);
    CalibrationResult {
        alpha_star,
        achieved_bps_hz: mean_capacity(alpha_star),
        iterations,
    }
}
