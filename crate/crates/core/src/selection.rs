//! Closed-form post-processing SNRs and transmit antenna selection rules.
//!
//! All formulas take linear link SNRs `gamma_SD^(i)`, `gamma_SR^(i)` and
//! `gamma_RD^(k)`. Antenna indices are zero-based and every argmax breaks
//! ties toward the lowest index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::LinkSnrs;
use crate::error::{Error, Result};

/// End-to-end transmission strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Antenna selection at source and relay, MMSE combining at the destination.
    MmseReceiver,
    /// Joint antenna selection for MRC combining at the destination.
    MrcReceiver,
    /// Source antenna selection with the singular-vector relay filter.
    OptimalRelayFilter,
    /// Relay silent; best source antenna by direct-link SNR.
    DirectOnly,
    /// First source and first relay antenna, MMSE combining.
    FixedAntenna,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::MmseReceiver,
        Strategy::MrcReceiver,
        Strategy::OptimalRelayFilter,
        Strategy::DirectOnly,
        Strategy::FixedAntenna,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::MmseReceiver => "mmse-receiver",
            Strategy::MrcReceiver => "mrc-receiver",
            Strategy::OptimalRelayFilter => "optimal-relay-filter",
            Strategy::DirectOnly => "direct-only",
            Strategy::FixedAntenna => "fixed-antenna",
        }
    }

    pub fn allowed_list() -> String {
        Self::ALL.map(Strategy::as_str).join(", ")
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown strategy '{s}', expected one of: {}",
                    Self::allowed_list()
                ))
            })
    }
}

/// Destination combiner used to score source antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    Mmse,
    Mrc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDecision {
    pub strategy: Strategy,
    pub source_antenna: usize,
    /// `None` when the relay beamforms or stays silent.
    pub relay_antenna: Option<usize>,
    pub predicted_post_snr: f64,
}

/// Relayed-path SNR `gamma_SR gamma_RD / (gamma_SR + gamma_RD + 1)`.
pub fn gamma_srd(gamma_sr: f64, gamma_rd: f64) -> f64 {
    gamma_sr * gamma_rd / (gamma_sr + gamma_rd + 1.0)
}

/// Post-SNR of the MMSE destination filter: direct SNR plus relayed SNR.
pub fn mmse_post_snr(gamma_sd: f64, gamma_sr: f64, gamma_rd: f64) -> f64 {
    gamma_sd + gamma_srd(gamma_sr, gamma_rd)
}

/// Post-SNR when the destination applies MRC (`w = h`) to the stacked
/// observation:
///
/// ```text
/// (g_sd (g_sr + 1) + g_sr g_rd)^2
/// -----------------------------------------------------
/// g_sd (g_sr + 1)^2 + g_sr g_rd (g_sr + 1 + g_rd)
/// ```
///
/// Derived from the equivalent channel with `w = h`; see
/// `docs/mrc_closed_form.md` for how it differs from the commonly printed
/// variant ([`mrc_post_snr_printed`]).
pub fn mrc_post_snr(gamma_sd: f64, gamma_sr: f64, gamma_rd: f64) -> f64 {
    let relayed = gamma_sr * gamma_rd;
    let sr1 = gamma_sr + 1.0;
    let num = gamma_sd * sr1 + relayed;
    let den = gamma_sd * sr1 * sr1 + relayed * (sr1 + gamma_rd);
    if den == 0.0 {
        return 0.0;
    }
    num * num / den
}

/// The MRC expression as it is usually typeset, with an extra `gamma_SD`
/// factor on the `(gamma_SR gamma_RD)^2` numerator term. Only kept to report
/// its deviation from the numerical oracle; it agrees with
/// [`mrc_post_snr`] only when `gamma_SD = 1` or `gamma_SR gamma_RD = 0`.
pub fn mrc_post_snr_printed(gamma_sd: f64, gamma_sr: f64, gamma_rd: f64) -> f64 {
    let relayed = gamma_sr * gamma_rd;
    let sr1 = gamma_sr + 1.0;
    let den = gamma_sd * sr1 * sr1 + relayed * (sr1 + gamma_rd);
    if den == 0.0 {
        return 0.0;
    }
    gamma_sd * (gamma_sd * sr1 * sr1 + relayed * (sr1 + sr1 + relayed)) / den
}

/// True when relaying lowers the MRC post-SNR below the direct-link SNR:
/// `gamma_SR < gamma_SD` and `gamma_RD > gamma_SD (gamma_SR + 1) / (gamma_SD - gamma_SR)`.
///
/// Both inequalities are strict. At `gamma_SR = 0` the predicate can hold
/// while the MRC SNR equals `gamma_SD` exactly; that point has probability
/// zero under Rayleigh fading.
pub fn relaying_harmful(gamma_sd: f64, gamma_sr: f64, gamma_rd: f64) -> bool {
    gamma_sr < gamma_sd && gamma_rd > gamma_sd * (gamma_sr + 1.0) / (gamma_sd - gamma_sr)
}

/// Index of the largest entry; lowest index on ties.
fn argmax(values: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Relay antenna with the strongest relay-destination SNR. Under MMSE
/// combining this choice does not depend on the source antenna.
pub fn select_relay_antenna(snrs: &LinkSnrs) -> usize {
    argmax(snrs.gamma_rd.iter().copied()).map_or(0, |(k, _)| k)
}

/// Source antenna maximizing the receiver's post-SNR.
///
/// For [`Receiver::Mmse`] the relay antenna `k_o` is taken as given. MRC
/// scores do not separate over the two nodes, so for [`Receiver::Mrc`] the
/// search runs jointly over every (source, relay) pair and `k_o` is ignored.
pub fn select_source_antenna(snrs: &LinkSnrs, k_o: usize, receiver: Receiver) -> SelectionDecision {
    match receiver {
        Receiver::Mmse => {
            let g_rd = snrs.gamma_rd[k_o];
            let (i, snr) = argmax(
                snrs.gamma_sd
                    .iter()
                    .zip(&snrs.gamma_sr)
                    .map(|(&sd, &sr)| mmse_post_snr(sd, sr, g_rd)),
            )
            .unwrap_or((0, 0.0));
            SelectionDecision {
                strategy: Strategy::MmseReceiver,
                source_antenna: i,
                relay_antenna: Some(k_o),
                predicted_post_snr: snr,
            }
        }
        Receiver::Mrc => select_joint_mrc(snrs),
    }
}

/// Exhaustive search over all `N_S * N_R` pairs for MRC combining.
pub fn select_joint_mrc(snrs: &LinkSnrs) -> SelectionDecision {
    let n_r = snrs.n_r();
    let (flat, snr) = argmax((0..snrs.n_s()).flat_map(|i| {
        snrs.gamma_rd
            .iter()
            .map(move |&rd| mrc_post_snr(snrs.gamma_sd[i], snrs.gamma_sr[i], rd))
    }))
    .unwrap_or((0, 0.0));
    SelectionDecision {
        strategy: Strategy::MrcReceiver,
        source_antenna: flat / n_r,
        relay_antenna: Some(flat % n_r),
        predicted_post_snr: snr,
    }
}

/// MMSE selection done in two steps: relay antenna first, then source.
pub fn select_mmse(snrs: &LinkSnrs) -> SelectionDecision {
    let k_o = select_relay_antenna(snrs);
    select_source_antenna(snrs, k_o, Receiver::Mmse)
}

/// Source antenna for the singular-vector relay filter: the MMSE score with
/// `gamma_RD` replaced by `lambda_RD * snr`.
pub fn select_for_relay_filter(snrs: &LinkSnrs, lambda_rd: f64, snr: f64) -> SelectionDecision {
    let g_rd = lambda_rd * snr;
    let (i, best) = argmax(
        snrs.gamma_sd
            .iter()
            .zip(&snrs.gamma_sr)
            .map(|(&sd, &sr)| mmse_post_snr(sd, sr, g_rd)),
    )
    .unwrap_or((0, 0.0));
    SelectionDecision {
        strategy: Strategy::OptimalRelayFilter,
        source_antenna: i,
        relay_antenna: None,
        predicted_post_snr: best,
    }
}

/// Best source antenna by direct-link SNR alone.
pub fn select_direct(snrs: &LinkSnrs) -> SelectionDecision {
    let (i, best) = argmax(snrs.gamma_sd.iter().copied()).unwrap_or((0, 0.0));
    SelectionDecision {
        strategy: Strategy::DirectOnly,
        source_antenna: i,
        relay_antenna: None,
        predicted_post_snr: best,
    }
}

/// Antenna 0 at source and relay, scored with the MMSE formula.
pub fn fixed_antenna(snrs: &LinkSnrs) -> SelectionDecision {
    SelectionDecision {
        strategy: Strategy::FixedAntenna,
        source_antenna: 0,
        relay_antenna: Some(0),
        predicted_post_snr: mmse_post_snr(snrs.gamma_sd[0], snrs.gamma_sr[0], snrs.gamma_rd[0]),
    }
}
