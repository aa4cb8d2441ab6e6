//! System configuration and block-fading realizations of the three links.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sample_complex_gaussian, CMatrix, RngStream};

/// Antenna counts, per-entry mean channel power gains and transmit SNR.
///
/// Noise power is normalized to one at every node; any noise imbalance is
/// folded into the link gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_s: usize,
    pub n_r: usize,
    pub n_d: usize,
    pub lambda_sd: f64,
    pub lambda_sr: f64,
    pub lambda_rd: f64,
    /// Symbol energy `E_s` (linear), equal to the transmit SNR.
    pub snr: f64,
}

/// How a quoted mean link SNR maps onto a per-entry gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanSnrConvention {
    /// Mean SNR of a single transmit/receive antenna pair: `lambda * snr`.
    #[default]
    PerAntennaPair,
    /// Mean of `gamma_XY^(i)` summed over all receive antennas:
    /// `N_Y * lambda * snr`.
    PerTransmitAntenna,
}

impl MeanSnrConvention {
    /// Per-entry gain giving mean link SNR `mean_db` at transmit SNR `snr`.
    pub fn gain(self, mean_db: f64, snr: f64, receive_antennas: usize) -> f64 {
        let mean = db_to_linear(mean_db);
        match self {
            Self::PerAntennaPair => mean / snr,
            Self::PerTransmitAntenna => mean / (snr * receive_antennas as f64),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl SystemConfig {
    /// Equal antenna counts and unit gains at all links.
    pub fn symmetric(n: usize, snr: f64) -> Self {
        Self::new(n, n, n, snr)
    }

    /// Unit gains at all links.
    pub fn new(n_s: usize, n_r: usize, n_d: usize, snr: f64) -> Self {
        Self {
            n_s,
            n_r,
            n_d,
            lambda_sd: 1.0,
            lambda_sr: 1.0,
            lambda_rd: 1.0,
            snr,
        }
    }

    pub fn with_gains(mut self, lambda_sd: f64, lambda_sr: f64, lambda_rd: f64) -> Self {
        self.lambda_sd = lambda_sd;
        self.lambda_sr = lambda_sr;
        self.lambda_rd = lambda_rd;
        self
    }

    pub fn with_snr(mut self, snr: f64) -> Self {
        self.snr = snr;
        self
    }

    /// Configuration whose links have the requested mean SNRs (dB) at
    /// transmit SNR `snr`.
    pub fn from_mean_link_snrs(
        n_s: usize,
        n_r: usize,
        n_d: usize,
        mean_db: [f64; 3],
        snr: f64,
        convention: MeanSnrConvention,
    ) -> Self {
        let [sd, sr, rd] = mean_db;
        Self {
            n_s,
            n_r,
            n_d,
            lambda_sd: convention.gain(sd, snr, n_d),
            lambda_sr: convention.gain(sr, snr, n_r),
            lambda_rd: convention.gain(rd, snr, n_d),
            snr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_s", self.n_s), ("n_r", self.n_r), ("n_d", self.n_d)] {
            if n == 0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        for (name, x) in [
            ("lambda_sd", self.lambda_sd),
            ("lambda_sr", self.lambda_sr),
            ("lambda_rd", self.lambda_rd),
            ("snr", self.snr),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {x}"
                )));
            }
        }
        Ok(())
    }
}

/// One fading block: `H_SD` (N_D x N_S), `H_SR` (N_R x N_S), `H_RD` (N_D x N_R).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_sd: CMatrix,
    pub h_sr: CMatrix,
    pub h_rd: CMatrix,
}

impl ChannelRealization {
    /// Wraps explicit matrices, checking they agree with `cfg`.
    pub fn new(cfg: &SystemConfig, h_sd: CMatrix, h_sr: CMatrix, h_rd: CMatrix) -> Result<Self> {
        let ch = Self { h_sd, h_sr, h_rd };
        ch.check_dims(cfg)?;
        Ok(ch)
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        let want = [
            ("h_sd", &self.h_sd, cfg.n_d, cfg.n_s),
            ("h_sr", &self.h_sr, cfg.n_r, cfg.n_s),
            ("h_rd", &self.h_rd, cfg.n_d, cfg.n_r),
        ];
        for (name, m, rows, cols) in want {
            if (m.rows(), m.cols()) != (rows, cols) {
                return Err(Error::InvalidParameter(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(())
    }
}

/// Draws a realization from the substream identified by `stream`.
pub fn draw_realization(cfg: &SystemConfig, stream: RngStream) -> Result<ChannelRealization> {
    draw_realization_with(cfg, &mut stream.generator())
}

/// Draws a realization from an existing generator. The three matrices are
/// sampled in the order SD, SR, RD.
pub fn draw_realization_with<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    Ok(ChannelRealization {
        h_sd: sample_complex_gaussian(rng, cfg.n_d, cfg.n_s, cfg.lambda_sd)?,
        h_sr: sample_complex_gaussian(rng, cfg.n_r, cfg.n_s, cfg.lambda_sr)?,
        h_rd: sample_complex_gaussian(rng, cfg.n_d, cfg.n_r, cfg.lambda_rd)?,
    })
}

/// Receive SNR from every transmit antenna of each link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSnrs {
    /// Indexed by source antenna.
    pub gamma_sd: Vec<f64>,
    /// Indexed by source antenna.
    pub gamma_sr: Vec<f64>,
    /// Indexed by relay antenna.
    pub gamma_rd: Vec<f64>,
}

impl LinkSnrs {
    pub fn n_s(&self) -> usize {
        self.gamma_sd.len()
    }

    pub fn n_r(&self) -> usize {
        self.gamma_rd.len()
    }
}

/// `gamma_XY^(i) = |h_XY^(i)|^2 * snr` for every column of every link.
pub fn link_snrs(cfg: &SystemConfig, ch: &ChannelRealization) -> LinkSnrs {
    let per_column = |m: &CMatrix| {
        (0..m.cols())
            .map(|k| m.column_norm_sqr(k) * cfg.snr)
            .collect()
    };
    LinkSnrs {
        gamma_sd: per_column(&ch.h_sd),
        gamma_sr: per_column(&ch.h_sr),
        gamma_rd: per_column(&ch.h_rd),
    }
}
