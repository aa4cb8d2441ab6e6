//! Training and limited-feedback accounting for antenna selection.
//!
//! The destination first probes every relay antenna, tells the relay which
//! one to use, then probes every source antenna twice (direct slot and relay
//! forward) before telling the source its antenna. Each feedback message
//! carries an integer-encoded antenna index.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    db_to_linear, linear_to_db, link_snrs, ChannelRealization, LinkSnrs, SystemConfig,
};
use crate::numerics::RngStream;
use crate::selection::{select_relay_antenna, select_source_antenna, Receiver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackBudget {
    pub relay_index_bits: u32,
    pub source_index_bits: u32,
    pub total_feedback_bits: u32,
    pub snr_estimation_slots: usize,
    pub training_slots: usize,
    pub total_slots: usize,
}

/// Bits needed to name one of `n` antennas.
pub fn index_bits(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

pub const TRAINING_SLOTS: usize = 2;

pub fn feedback_budget(cfg: &SystemConfig) -> FeedbackBudget {
    budget_for(cfg.n_s, cfg.n_r)
}

/// Budget for `n_s` source and `n_r` relay antennas.
pub fn budget_for(n_s: usize, n_r: usize) -> FeedbackBudget {
    let relay_index_bits = index_bits(n_r);
    let source_index_bits = index_bits(n_s);
    let snr_estimation_slots = n_r + 2 * n_s;
    FeedbackBudget {
        relay_index_bits,
        source_index_bits,
        total_feedback_bits: relay_index_bits + source_index_bits,
        snr_estimation_slots,
        training_slots: TRAINING_SLOTS,
        total_slots: snr_estimation_slots + TRAINING_SLOTS,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum ProtocolEvent {
    /// Narrowband tone from one relay antenna; destination measures `gamma_RD`.
    RelayProbe {
        relay_antenna: usize,
        measured_snr: f64,
    },
    /// Destination tells the relay which antenna to transmit from.
    RelayIndexFeedback { relay_antenna: usize, bits: u32 },
    /// Channel-estimation training from the chosen relay antenna.
    RelayTraining { relay_antenna: usize },
    /// Tone from one source antenna; destination measures `gamma_SD`.
    SourceProbe {
        source_antenna: usize,
        measured_snr: f64,
    },
    /// Relay forwards the tone on its chosen antenna; destination infers `gamma_SR`.
    RelayForward {
        source_antenna: usize,
        relay_antenna: usize,
        measured_snr: f64,
    },
    /// Destination tells the source which antenna to transmit from.
    SourceIndexFeedback {
        source_antenna: usize,
        bits: u32,
        predicted_post_snr: f64,
    },
    /// Training from the chosen source antenna, not forwarded.
    SourceTraining { source_antenna: usize },
}

impl ProtocolEvent {
    /// Whether the event occupies an SNR-estimation slot.
    pub fn is_probe(&self) -> bool {
        matches!(
            self,
            ProtocolEvent::RelayProbe { .. }
                | ProtocolEvent::SourceProbe { .. }
                | ProtocolEvent::RelayForward { .. }
        )
    }

    pub fn is_feedback(&self) -> bool {
        matches!(
            self,
            ProtocolEvent::RelayIndexFeedback { .. } | ProtocolEvent::SourceIndexFeedback { .. }
        )
    }

    pub fn is_training(&self) -> bool {
        matches!(
            self,
            ProtocolEvent::RelayTraining { .. } | ProtocolEvent::SourceTraining { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSequence {
    pub events: Vec<ProtocolEvent>,
    pub relay_antenna: usize,
    pub source_antenna: usize,
}

/// Runs the probing and feedback procedure with perfect SNR estimates.
pub fn simulate_feedback_sequence(cfg: &SystemConfig, ch: &ChannelRealization) -> FeedbackSequence {
    sequence_from_measurements(cfg, &link_snrs(cfg, ch))
}

/// Same procedure with every SNR measurement perturbed by Gaussian error of
/// `std_db` decibels, drawn from `stream`.
pub fn simulate_feedback_sequence_noisy(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    std_db: f64,
    stream: RngStream,
) -> FeedbackSequence {
    let mut rng = stream.generator();
    let mut perturb = |x: f64| -> f64 {
        if x <= 0.0 || std_db == 0.0 {
            return x;
        }
        let e: f64 = rng.sample(rand_distr::StandardNormal);
        db_to_linear(linear_to_db(x) + std_db * e)
    };
    let exact = link_snrs(cfg, ch);
    let measured = LinkSnrs {
        gamma_sd: exact.gamma_sd.iter().map(|&x| perturb(x)).collect(),
        gamma_sr: exact.gamma_sr.iter().map(|&x| perturb(x)).collect(),
        gamma_rd: exact.gamma_rd.iter().map(|&x| perturb(x)).collect(),
    };
    sequence_from_measurements(cfg, &measured)
}

fn sequence_from_measurements(cfg: &SystemConfig, measured: &LinkSnrs) -> FeedbackSequence {
    let budget = feedback_budget(cfg);
    let mut events = Vec::with_capacity(budget.snr_estimation_slots + 4);

    events.extend(
        measured
            .gamma_rd
            .iter()
            .enumerate()
            .map(|(k, &g)| ProtocolEvent::RelayProbe {
                relay_antenna: k,
                measured_snr: g,
            }),
    );
    let k_o = select_relay_antenna(measured);
    events.push(ProtocolEvent::RelayIndexFeedback {
        relay_antenna: k_o,
        bits: budget.relay_index_bits,
    });
    events.push(ProtocolEvent::RelayTraining { relay_antenna: k_o });

    for i in 0..cfg.n_s {
        events.push(ProtocolEvent::SourceProbe {
            source_antenna: i,
            measured_snr: measured.gamma_sd[i],
        });
        events.push(ProtocolEvent::RelayForward {
            source_antenna: i,
            relay_antenna: k_o,
            measured_snr: measured.gamma_sr[i],
        });
    }
    let decision = select_source_antenna(measured, k_o, Receiver::Mmse);
    events.push(ProtocolEvent::SourceIndexFeedback {
        source_antenna: decision.source_antenna,
        bits: budget.source_index_bits,
        predicted_post_snr: decision.predicted_post_snr,
    });
    events.push(ProtocolEvent::SourceTraining {
        source_antenna: decision.source_antenna,
    });

    FeedbackSequence {
        events,
        relay_antenna: k_o,
        source_antenna: decision.source_antenna,
    }
}
