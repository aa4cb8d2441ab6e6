//! Cross-check of the closed-form post-SNRs against the numerically
//! evaluated receive filters over random realizations.

use serde::Serialize;

use crate::channel::{draw_realization, link_snrs, SystemConfig};
use crate::error::Result;
use crate::numerics::RngStream;
use crate::parallel::map_reduce;
use crate::receiver::{mmse_filter, mrc_filter};
use crate::relaying::equivalent_channel;
use crate::selection::{mmse_post_snr, mrc_post_snr, mrc_post_snr_printed};

/// Relative tolerance the closed forms must meet.
pub const CLOSED_FORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ConsistencyReport {
    pub realizations: u64,
    pub max_mmse_rel_dev: f64,
    pub max_mrc_rel_dev: f64,
    /// Realizations where numerical MMSE fell below numerical MRC.
    pub mmse_below_mrc: u64,
    pub printed_mrc: PrintedMrcReport,
}

/// How the typeset MRC expression compares with the numerical MRC filter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PrintedMrcReport {
    pub max_rel_dev: f64,
    /// Smallest deviation among samples with `gamma_SD != 1`.
    pub min_rel_dev_gsd_not_one: f64,
    /// Samples with `gamma_SD != 1`.
    pub samples_gsd_not_one: u64,
    /// Of those, samples where the printed form misses by more than
    /// [`CLOSED_FORM_TOL`].
    pub beyond_tolerance: u64,
    /// Samples where the printed form equals the numerical value exactly
    /// although `gamma_SD != 1`.
    pub identical_gsd_not_one: u64,
    /// Largest error of the identity
    /// `printed - corrected = (gamma_SD - 1) (gamma_SR gamma_RD)^2 / den`,
    /// relative to the larger of the two post-SNRs.
    pub max_identity_error: f64,
}

impl ConsistencyReport {
    pub fn passes(&self) -> bool {
        self.max_mmse_rel_dev <= CLOSED_FORM_TOL
            && self.max_mrc_rel_dev <= CLOSED_FORM_TOL
            && self.mmse_below_mrc == 0
    }

    fn merge(self, o: Self) -> Self {
        let (a, b) = (self.printed_mrc, o.printed_mrc);
        Self {
            realizations: self.realizations + o.realizations,
            max_mmse_rel_dev: self.max_mmse_rel_dev.max(o.max_mmse_rel_dev),
            max_mrc_rel_dev: self.max_mrc_rel_dev.max(o.max_mrc_rel_dev),
            mmse_below_mrc: self.mmse_below_mrc + o.mmse_below_mrc,
            printed_mrc: PrintedMrcReport {
                max_rel_dev: a.max_rel_dev.max(b.max_rel_dev),
                min_rel_dev_gsd_not_one: a.min_rel_dev_gsd_not_one.min(b.min_rel_dev_gsd_not_one),
                samples_gsd_not_one: a.samples_gsd_not_one + b.samples_gsd_not_one,
                beyond_tolerance: a.beyond_tolerance + b.beyond_tolerance,
                identical_gsd_not_one: a.identical_gsd_not_one + b.identical_gsd_not_one,
                max_identity_error: a.max_identity_error.max(b.max_identity_error),
            },
        }
    }

    fn empty() -> Self {
        Self {
            printed_mrc: PrintedMrcReport {
                min_rel_dev_gsd_not_one: f64::INFINITY,
                ..Default::default()
            },
            ..Default::default()
        }
    }
}

fn rel_dev(a: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        a.abs()
    } else {
        (a - reference).abs() / reference.abs()
    }
}

/// Evaluates one realization of `cfg` on the (source, relay) antenna pair
/// derived from `trial`.
fn check_one(cfg: &SystemConfig, stream: RngStream, trial: u64) -> Result<ConsistencyReport> {
    let ch = draw_realization(cfg, stream)?;
    let s = link_snrs(cfg, &ch);
    let i = (trial % cfg.n_s as u64) as usize;
    let k = ((trial / cfg.n_s as u64) % cfg.n_r as u64) as usize;
    let eq = equivalent_channel(cfg, &ch, i, k)?;
    let mmse = mmse_filter(&eq, cfg.snr)?.numerical_post_snr;
    let mrc = mrc_filter(&eq, cfg.snr)?.numerical_post_snr;
    let (sd, sr, rd) = (s.gamma_sd[i], s.gamma_sr[i], s.gamma_rd[k]);

    let printed = mrc_post_snr_printed(sd, sr, rd);
    let corrected = mrc_post_snr(sd, sr, rd);
    let printed_dev = rel_dev(printed, mrc);
    let den = sd * (sr + 1.0).powi(2) + sr * rd * (sr + 1.0 + rd);
    let predicted_gap = (sd - 1.0) * (sr * rd).powi(2) / den;
    let identity_error = ((printed - corrected) - predicted_gap).abs()
        / printed.abs().max(corrected.abs()).max(f64::MIN_POSITIVE);

    let mut r = ConsistencyReport::empty();
    r.realizations = 1;
    r.max_mmse_rel_dev = rel_dev(mmse_post_snr(sd, sr, rd), mmse);
    r.max_mrc_rel_dev = rel_dev(corrected, mrc);
    r.mmse_below_mrc = u64::from(mmse < mrc * (1.0 - 1e-12));
    r.printed_mrc.max_rel_dev = printed_dev;
    r.printed_mrc.max_identity_error = identity_error;
    if sd != 1.0 {
        r.printed_mrc.samples_gsd_not_one = 1;
        r.printed_mrc.min_rel_dev_gsd_not_one = printed_dev;
        r.printed_mrc.beyond_tolerance = u64::from(printed_dev > CLOSED_FORM_TOL);
        r.printed_mrc.identical_gsd_not_one = u64::from(printed == mrc);
    }
    Ok(r)
}

/// Runs `trials_per_config` realizations for every antenna-count triple in
/// `antenna_counts^3` and every transmit SNR in `snrs`.
pub fn closed_form_consistency(
    antenna_counts: &[usize],
    snrs: &[f64],
    trials_per_config: u64,
    seed: u64,
) -> Result<ConsistencyReport> {
    let mut total = ConsistencyReport::empty();
    let mut config_index = 0u64;
    for &n_s in antenna_counts {
        for &n_r in antenna_counts {
            for &n_d in antenna_counts {
                for &snr in snrs {
                    let cfg = SystemConfig::new(n_s, n_r, n_d, snr);
                    cfg.validate()?;
                    let base = config_index * trials_per_config;
                    let part = map_reduce(
                        0..trials_per_config,
                        Ok(ConsistencyReport::empty()),
                        |t| check_one(&cfg, RngStream::new(seed, base + t), t),
                        |a, b| Ok(a?.merge(b?)),
                    )?;
                    total = total.merge(part);
                    config_index += 1;
                }
            }
        }
    }
    Ok(total)
}
