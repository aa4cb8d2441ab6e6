//! Link-level Monte Carlo simulation of the half-duplex amplify-and-forward
//! MIMO relay channel with transmit antenna selection at source and relay.
//!
//! The building blocks, bottom up:
//!
//! - [`numerics`]: tiny complex linear algebra and per-trial RNG streams
//! - [`channel`]: system configuration and Rayleigh block-fading draws
//! - [`relaying`]: relay gain, stacked equivalent channel, relay filter
//! - [`selection`]: closed-form post-SNRs and antenna selection rules
//! - [`receiver`]: MMSE/MRC destination filters and BPSK detection
//! - [`montecarlo`]: BER and outage engines, diversity fits
//! - [`protocol`]: probing/feedback sequence and its bit and slot budget
//! - [`experiment`]: JSON experiment specs and CSV output
//!
//! Trials fan out over rayon when the `parallel` feature is on (default);
//! results are identical either way.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod numerics;
pub mod oracle;
pub mod parallel;
pub mod protocol;
pub mod receiver;
pub mod relaying;
pub mod selection;

pub use channel::{draw_realization, link_snrs, ChannelRealization, LinkSnrs, SystemConfig};
pub use error::{Error, Result};
pub use montecarlo::{BerOptions, BerPoint, DiversityFit, OutagePoint};
pub use selection::{SelectionDecision, Strategy};
