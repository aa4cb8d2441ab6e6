//! Bit error rate and outage Monte Carlo engines, Wilson intervals and
//! diversity-order slope fits.
//!
//! Each fading block draws from its own [`RngStream`] keyed by
//! `(seed, block index)` and the per-point counts are integer sums, so
//! results do not depend on the number of worker threads. Every strategy and
//! every sweep point reuses the same block indices, which pairs the
//! comparisons between strategies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    db_to_linear, draw_realization_with, link_snrs, ChannelRealization, LinkSnrs, SystemConfig,
};
use crate::error::{Error, Result};
use crate::numerics::{
    complex_gaussian, dominant_singular_pair, inner, sample_noise, CVector, RngStream, C64,
};
use crate::parallel::map_reduce;
use crate::receiver::{bpsk_symbol, detect_bpsk, mmse_filter, mrc_filter};
use crate::relaying::{
    equivalent_channel, equivalent_channel_with_filter, optimal_relay_filter, relay_gain,
};
use crate::selection::{
    fixed_antenna, select_direct, select_for_relay_filter, select_joint_mrc, select_mmse,
    SelectionDecision, Strategy,
};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = (center - half).clamp(0.0, 1.0).min(p);
    let hi = (center + half).clamp(0.0, 1.0).max(p);
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub strategy: Strategy,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerPoint {
    fn new(snr_db: f64, strategy: Strategy, trials: u64, bit_errors: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(bit_errors, trials);
        Self {
            snr_db,
            strategy,
            trials,
            bit_errors,
            ber: bit_errors as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub snr_db: f64,
    pub strategy: Strategy,
    pub gamma0: f64,
    pub trials: u64,
    pub outage_count: u64,
    pub p_out: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl OutagePoint {
    fn new(snr_db: f64, strategy: Strategy, gamma0: f64, trials: u64, outage_count: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(outage_count, trials);
        Self {
            snr_db,
            strategy,
            gamma0,
            trials,
            outage_count,
            p_out: outage_count as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BerOptions {
    /// Symbols sent over each fading block.
    pub symbols_per_block: u64,
    /// Stop a point once this many bit errors have been counted. The check
    /// runs between fixed-size batches, so it stays deterministic.
    pub early_stop_errors: Option<u64>,
}

impl Default for BerOptions {
    fn default() -> Self {
        Self {
            symbols_per_block: 1,
            early_stop_errors: None,
        }
    }
}

/// Blocks evaluated between early-stopping checks.
const BATCH_BLOCKS: u64 = 1 << 16;

/// How the relay forwards during one block.
#[derive(Debug, Clone)]
enum RelayPath {
    Silent,
    /// MRC at the relay with gain `alpha`, retransmitted through `column`.
    Forward {
        alpha: f64,
        column: CVector,
    },
}

/// Everything fixed for one block once the strategy has decided.
#[derive(Debug, Clone)]
struct BlockPlan {
    decision: SelectionDecision,
    relay: RelayPath,
    /// Destination filter over the stacked observation, or over the direct
    /// slot alone when the relay is silent.
    w: CVector,
}

/// Applies `strategy` to one realization.
///
/// A zero source-relay channel on the chosen antenna (probability zero under
/// Rayleigh fading) falls back to direct reception on that antenna.
fn plan_block(
    strategy: Strategy,
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    snrs: &LinkSnrs,
) -> Result<BlockPlan> {
    let decision = decide(strategy, cfg, ch, snrs)?;
    let i = decision.source_antenna;
    let direct = |decision: SelectionDecision| BlockPlan {
        w: CVector::from_vec(ch.h_sd.column(i).to_vec()),
        relay: RelayPath::Silent,
        decision,
    };
    if strategy == Strategy::DirectOnly || ch.h_sr.column_norm_sqr(i) == 0.0 {
        return Ok(direct(decision));
    }
    let (eq, column) = match strategy {
        Strategy::OptimalRelayFilter => {
            let filter = optimal_relay_filter(ch, i, cfg.snr)?;
            let column = filter.effective_column(ch);
            (equivalent_channel_with_filter(cfg, ch, &filter)?, column)
        }
        _ => {
            let k = decision.relay_antenna.unwrap_or(0);
            let column = CVector::from_vec(ch.h_rd.column(k).to_vec());
            (equivalent_channel(cfg, ch, i, k)?, column)
        }
    };
    let filter = match strategy {
        Strategy::MrcReceiver => mrc_filter(&eq, cfg.snr)?,
        _ => mmse_filter(&eq, cfg.snr)?,
    };
    let alpha = relay_gain(ch.h_sr.column_norm_sqr(i), cfg.snr)?;
    Ok(BlockPlan {
        decision,
        relay: RelayPath::Forward { alpha, column },
        w: filter.w,
    })
}

/// Selection decision of `strategy` for one realization.
pub fn decide(
    strategy: Strategy,
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    snrs: &LinkSnrs,
) -> Result<SelectionDecision> {
    Ok(match strategy {
        Strategy::MmseReceiver => select_mmse(snrs),
        Strategy::MrcReceiver => select_joint_mrc(snrs),
        Strategy::OptimalRelayFilter => {
            let pair = dominant_singular_pair(&ch.h_rd)?;
            select_for_relay_filter(snrs, pair.sigma * pair.sigma, cfg.snr)
        }
        Strategy::DirectOnly => select_direct(snrs),
        Strategy::FixedAntenna => fixed_antenna(snrs),
    })
}

/// Closed-form post-SNR the strategy achieves on this block.
///
/// Only [`Strategy::OptimalRelayFilter`] needs the full realization; the
/// others depend on the link SNRs alone.
pub fn strategy_post_snr(
    strategy: Strategy,
    cfg: &SystemConfig,
    ch: Option<&ChannelRealization>,
    snrs: &LinkSnrs,
) -> Result<f64> {
    match (strategy, ch) {
        (Strategy::OptimalRelayFilter, Some(ch)) => {
            Ok(decide(strategy, cfg, ch, snrs)?.predicted_post_snr)
        }
        (Strategy::OptimalRelayFilter, None) => Err(Error::InvalidParameter(
            "optimal-relay-filter needs the full relay-destination matrix".into(),
        )),
        (Strategy::MmseReceiver, _) => Ok(select_mmse(snrs).predicted_post_snr),
        (Strategy::MrcReceiver, _) => Ok(select_joint_mrc(snrs).predicted_post_snr),
        (Strategy::DirectOnly, _) => Ok(select_direct(snrs).predicted_post_snr),
        (Strategy::FixedAntenna, _) => Ok(fixed_antenna(snrs).predicted_post_snr),
    }
}

/// Link SNRs of the realization [`draw_realization_with`] would produce from
/// the same generator state, without materializing the matrices.
pub fn draw_link_snrs_with<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> LinkSnrs {
    let mut column_powers = |rows: usize, cols: usize, variance: f64| -> Vec<f64> {
        (0..cols)
            .map(|_| {
                (0..rows)
                    .map(|_| complex_gaussian(rng, variance).norm_sqr())
                    .sum::<f64>()
                    * cfg.snr
            })
            .collect()
    };
    let gamma_sd = column_powers(cfg.n_d, cfg.n_s, cfg.lambda_sd);
    let gamma_sr = column_powers(cfg.n_r, cfg.n_s, cfg.lambda_sr);
    let gamma_rd = column_powers(cfg.n_d, cfg.n_r, cfg.lambda_rd);
    LinkSnrs {
        gamma_sd,
        gamma_sr,
        gamma_rd,
    }
}

/// Sends `bits` BPSK symbols through one fading block; returns bit errors.
fn simulate_block(
    cfg: &SystemConfig,
    strategy: Strategy,
    stream: RngStream,
    bits: u64,
) -> Result<u64> {
    let mut rng = stream.generator();
    let ch = draw_realization_with(cfg, &mut rng)?;
    let snrs = link_snrs(cfg, &ch);
    let plan = plan_block(strategy, cfg, &ch, &snrs)?;
    let i = plan.decision.source_antenna;
    let h_sd = ch.h_sd.column(i);
    let h_sr = ch.h_sr.column(i);
    let n_d = cfg.n_d;

    let mut errors = 0;
    let mut y = vec![C64::new(0.0, 0.0); 2 * n_d];
    for _ in 0..bits {
        let bit = u8::from(rng.random::<bool>());
        let s = bpsk_symbol(bit, cfg.snr);
        // Noise is drawn for both slots whatever the strategy so the streams
        // stay aligned across strategies.
        let n_r = sample_noise(&mut rng, cfg.n_r, 1.0);
        let n_d1 = sample_noise(&mut rng, n_d, 1.0);
        let n_d2 = sample_noise(&mut rng, n_d, 1.0);

        for (yd, (h, n)) in y[..n_d].iter_mut().zip(h_sd.iter().zip(n_d1.iter())) {
            *yd = h * s + n;
        }
        let decided = match &plan.relay {
            RelayPath::Silent => detect_bpsk(&plan.w, &y[..n_d]),
            RelayPath::Forward { alpha, column } => {
                // y_R = h_SR s + n_R, s_R = alpha h_SR^* y_R
                let y_r: Vec<C64> = h_sr
                    .iter()
                    .zip(n_r.iter())
                    .map(|(h, n)| h * s + n)
                    .collect();
                let s_r = inner(h_sr, &y_r) * *alpha;
                for (yd, (g, n)) in y[n_d..].iter_mut().zip(column.iter().zip(n_d2.iter())) {
                    *yd = g * s_r + n;
                }
                detect_bpsk(&plan.w, &y)
            }
        };
        if decided != bit {
            errors += 1;
        }
    }
    Ok(errors)
}

fn add_results(a: Result<(u64, u64)>, b: Result<(u64, u64)>) -> Result<(u64, u64)> {
    let (a0, a1) = a?;
    let (b0, b1) = b?;
    Ok((a0 + b0, a1 + b1))
}

/// One BER point at the transmit SNR already set in `cfg`.
pub fn run_ber_point(
    cfg: &SystemConfig,
    strategy: Strategy,
    snr_db: f64,
    trials: u64,
    seed: u64,
    opts: &BerOptions,
) -> Result<BerPoint> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if opts.symbols_per_block == 0 {
        return Err(Error::InvalidParameter(
            "symbols_per_block must be at least 1".into(),
        ));
    }
    let spb = opts.symbols_per_block;
    let blocks = trials.div_ceil(spb);
    let (mut bits, mut errors) = (0u64, 0u64);
    let mut start = 0;
    while start < blocks {
        let end = (start + BATCH_BLOCKS).min(blocks);
        let (b, e) = map_reduce(
            start..end,
            Ok((0, 0)),
            |block| {
                let n = spb.min(trials - block * spb);
                simulate_block(cfg, strategy, RngStream::new(seed, block), n).map(|e| (n, e))
            },
            add_results,
        )?;
        bits += b;
        errors += e;
        start = end;
        if opts.early_stop_errors.is_some_and(|limit| errors >= limit) {
            break;
        }
    }
    Ok(BerPoint::new(snr_db, strategy, bits, errors))
}

/// BER over a transmit-SNR sweep (dB); `cfg.snr` is replaced per point.
pub fn run_ber(
    cfg: &SystemConfig,
    strategy: Strategy,
    snr_sweep_db: &[f64],
    trials_per_point: u64,
    seed: u64,
    opts: &BerOptions,
) -> Result<Vec<BerPoint>> {
    snr_sweep_db
        .iter()
        .map(|&db| {
            run_ber_point(
                &cfg.with_snr(db_to_linear(db)),
                strategy,
                db,
                trials_per_point,
                seed,
                opts,
            )
        })
        .collect()
}

/// One outage point at the transmit SNR already set in `cfg`.
pub fn run_outage_point(
    cfg: &SystemConfig,
    strategy: Strategy,
    gamma0: f64,
    snr_db: f64,
    trials: u64,
    seed: u64,
) -> Result<OutagePoint> {
    cfg.validate()?;
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma0 must be positive, got {gamma0}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let needs_matrix = strategy == Strategy::OptimalRelayFilter;
    let outages = map_reduce(
        0..trials,
        Ok(0u64),
        |t| {
            let mut rng = RngStream::new(seed, t).generator();
            let gamma = if needs_matrix {
                let ch = draw_realization_with(cfg, &mut rng)?;
                let snrs = link_snrs(cfg, &ch);
                strategy_post_snr(strategy, cfg, Some(&ch), &snrs)?
            } else {
                let snrs = draw_link_snrs_with(cfg, &mut rng);
                strategy_post_snr(strategy, cfg, None, &snrs)?
            };
            Ok(u64::from(gamma < gamma0))
        },
        |a, b| Ok(a? + b?),
    )?;
    Ok(OutagePoint::new(snr_db, strategy, gamma0, trials, outages))
}

/// Outage probability over a transmit-SNR sweep (dB).
pub fn run_outage(
    cfg: &SystemConfig,
    strategy: Strategy,
    gamma0: f64,
    snr_sweep_db: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<OutagePoint>> {
    snr_sweep_db
        .iter()
        .map(|&db| {
            run_outage_point(
                &cfg.with_snr(db_to_linear(db)),
                strategy,
                gamma0,
                db,
                trials,
                seed,
            )
        })
        .collect()
}

/// `N_S N_D + N_R min(N_S, N_D)`.
pub fn diversity_order(n_s: usize, n_r: usize, n_d: usize) -> usize {
    n_s * n_d + n_r * n_s.min(n_d)
}

/// A (SNR, probability) sample of an error or outage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub probability: f64,
}

impl From<&BerPoint> for CurvePoint {
    fn from(p: &BerPoint) -> Self {
        Self {
            snr_db: p.snr_db,
            probability: p.ber,
        }
    }
}

impl From<&OutagePoint> for CurvePoint {
    fn from(p: &OutagePoint) -> Self {
        Self {
            snr_db: p.snr_db,
            probability: p.p_out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityFit {
    /// `-d log10 P / d log10 snr` between consecutive points.
    pub local_slopes: Vec<f64>,
    /// Negated least-squares slope over the window.
    pub slope: f64,
    pub points_used: usize,
    pub predicted_order: Option<usize>,
}

/// Fits the decay exponent of `points` (sorted by SNR).
///
/// `window_db` restricts the fit to an inclusive SNR range. A zero
/// probability inside the window is an error: its logarithm is undefined.
pub fn fit_diversity(points: &[CurvePoint], window_db: Option<(f64, f64)>) -> Result<DiversityFit> {
    let used: Vec<CurvePoint> = points
        .iter()
        .copied()
        .filter(|p| window_db.is_none_or(|(lo, hi)| p.snr_db >= lo && p.snr_db <= hi))
        .collect();
    if used.len() < 2 {
        return Err(Error::InsufficientStatistics(format!(
            "need at least 2 points to fit a slope, got {}",
            used.len()
        )));
    }
    if let Some(p) = used.iter().find(|p| !(p.probability > 0.0)) {
        return Err(Error::InsufficientStatistics(format!(
            "point at {} dB has probability {}; collect more trials",
            p.snr_db, p.probability
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.snr_db / 10.0).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.probability.log10()).collect();
    let local_slopes = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| -(y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientStatistics(
            "all points share one SNR".into(),
        ));
    }
    Ok(DiversityFit {
        local_slopes,
        slope: -sxy / sxx,
        points_used: used.len(),
        predicted_order: None,
    })
}

/// Keeps the points whose probability lies in `[lo, hi]`.
pub fn within_probability_window(points: &[CurvePoint], lo: f64, hi: f64) -> Vec<CurvePoint> {
    points
        .iter()
        .copied()
        .filter(|p| p.probability >= lo && p.probability <= hi)
        .collect()
}
