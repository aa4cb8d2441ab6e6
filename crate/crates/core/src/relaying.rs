//! Relay-side processing: the MRC-and-amplify gain, the stacked two-slot
//! equivalent channel seen by the destination, and the rank-one relay filter
//! built from the dominant right singular vector of `H_RD`.

use crate::channel::{ChannelRealization, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{dominant_singular_pair, norm_sqr, CMatrix, CVector, C64};

/// Amplification `alpha` applied after MRC at the relay so that its
/// transmit power matches `E_s`:
/// `alpha^2 = 1 / (g^2 + g / snr)` with `g = |h_SR^(i)|^2`.
pub fn relay_gain(g: f64, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "snr must be positive, got {snr}"
        )));
    }
    if !(g > 0.0) {
        return Err(Error::DegenerateInput(
            "source-relay channel has zero power; the relay receives nothing".into(),
        ));
    }
    Ok(1.0 / (g * g + g / snr).sqrt())
}

/// How the relay maps its combined scalar onto its antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelayTransmit {
    /// Single transmit antenna `k`.
    Antenna(usize),
    /// Dominant right singular vector of `H_RD`.
    Beamformer,
}

/// `y_D = h s + n` over both slots, with the noise covariance `r_n` made
/// colored by the amplified relay noise.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel {
    /// Length `2 N_D`: direct path on top, relayed path below.
    pub h: CVector,
    /// `2 N_D x 2 N_D`: `diag(I, I + c g g^*)` with `g` the relay's
    /// effective transmit column.
    pub r_n: CMatrix,
    pub source_antenna: usize,
    pub relay: RelayTransmit,
    /// `|h_SR| / sqrt(|h_SR|^2 + 1/snr)`.
    pub relayed_amplitude: f64,
    /// `1 / (|h_SR|^2 + 1/snr)`.
    pub noise_coupling: f64,
}

impl EquivalentChannel {
    pub fn n_d(&self) -> usize {
        self.h.len() / 2
    }

    /// Direct-slot part of `h`.
    pub fn direct(&self) -> &[C64] {
        &self.h[..self.n_d()]
    }
}

/// Stacked equivalent channel for source antenna `i` and relay antenna `k`.
pub fn equivalent_channel(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    i: usize,
    k: usize,
) -> Result<EquivalentChannel> {
    check_index("source antenna", i, cfg.n_s)?;
    check_index("relay antenna", k, cfg.n_r)?;
    assemble(
        ch.h_sd.column(i),
        ch.h_sr.column_norm_sqr(i),
        ch.h_rd.column(k),
        cfg.snr,
        i,
        RelayTransmit::Antenna(k),
    )
}

/// Stacked equivalent channel when the relay transmits with `filter`.
pub fn equivalent_channel_with_filter(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    filter: &RelayFilter,
) -> Result<EquivalentChannel> {
    let i = filter.source_antenna;
    check_index("source antenna", i, cfg.n_s)?;
    let g = filter.effective_column(ch);
    assemble(
        ch.h_sd.column(i),
        ch.h_sr.column_norm_sqr(i),
        &g,
        cfg.snr,
        i,
        RelayTransmit::Beamformer,
    )
}

fn check_index(what: &str, idx: usize, n: usize) -> Result<()> {
    if idx >= n {
        return Err(Error::InvalidParameter(format!(
            "{what} index {idx} out of range 0..{n}"
        )));
    }
    Ok(())
}

fn assemble(
    direct: &[C64],
    sr_power: f64,
    relay_column: &[C64],
    snr: f64,
    source_antenna: usize,
    relay: RelayTransmit,
) -> Result<EquivalentChannel> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "snr must be positive, got {snr}"
        )));
    }
    if !(sr_power > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "source antenna {source_antenna} has a zero source-relay channel"
        )));
    }
    let n_d = direct.len();
    debug_assert_eq!(relay_column.len(), n_d);
    let denom = sr_power + 1.0 / snr;
    let amplitude = (sr_power / denom).sqrt();
    let coupling = 1.0 / denom;

    let mut h = Vec::with_capacity(2 * n_d);
    h.extend_from_slice(direct);
    h.extend(relay_column.iter().map(|z| z * amplitude));

    let mut r_n = CMatrix::identity(2 * n_d);
    for r in 0..n_d {
        for c in 0..n_d {
            r_n[(n_d + r, n_d + c)] += relay_column[r] * relay_column[c].conj() * coupling;
        }
    }

    Ok(EquivalentChannel {
        h: CVector::from_vec(h),
        r_n,
        source_antenna,
        relay,
        relayed_amplitude: amplitude,
        noise_coupling: coupling,
    })
}

/// Rank-one relay filter `W = alpha v1 h_SR^(i)^*`: MRC on the receive side,
/// dominant right singular vector of `H_RD` on the transmit side.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayFilter {
    /// `N_R x N_R`, already scaled to the relay power constraint.
    pub w_relay: CMatrix,
    /// Unit-norm transmit direction `v1`.
    pub beam: CVector,
    /// Largest singular value of `H_RD`.
    pub sigma_rd: f64,
    /// `sigma_rd^2`; stands in for `|h_RD^(k_o)|^2` in every SNR formula.
    pub lambda_rd: f64,
    /// Same scalar as [`relay_gain`] for the chosen source antenna.
    pub gain: f64,
    pub source_antenna: usize,
}

impl RelayFilter {
    /// `H_RD v1`: the column through which the relayed scalar reaches the
    /// destination. Its squared norm equals `lambda_rd`.
    pub fn effective_column(&self, ch: &ChannelRealization) -> CVector {
        ch.h_rd.mul_vec(&self.beam)
    }
}

pub fn optimal_relay_filter(ch: &ChannelRealization, i_o: usize, snr: f64) -> Result<RelayFilter> {
    check_index("source antenna", i_o, ch.h_sr.cols())?;
    let pair = dominant_singular_pair(&ch.h_rd)?;
    let h_sr = ch.h_sr.column(i_o);
    let gain = relay_gain(norm_sqr(h_sr), snr)?;
    let w_relay = CMatrix::outer(&pair.v, h_sr).scale(C64::new(gain, 0.0));
    Ok(RelayFilter {
        w_relay,
        sigma_rd: pair.sigma,
        lambda_rd: pair.sigma * pair.sigma,
        beam: pair.v,
        gain,
        source_antenna: i_o,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization, link_snrs};
    use crate::numerics::RngStream;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn scalar_channel(sd: f64, sr: f64, rd: f64) -> (SystemConfig, ChannelRealization) {
        let m = |x| CMatrix::from_col_major(1, 1, vec![c(x)]).unwrap();
        let cfg = SystemConfig::new(1, 1, 1, 1.0);
        (
            cfg,
            ChannelRealization::new(&cfg, m(sd), m(sr), m(rd)).unwrap(),
        )
    }

    #[test]
    fn gain_hand_values() {
        assert_relative_eq!(
            relay_gain(2.0, 1.0).unwrap(),
            1.0 / 6f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            relay_gain(1.0, 1.0).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(relay_gain(1.0, 1e15).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            0.408_248_290_463_863,
            relay_gain(2.0, 1.0).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gain_degenerate() {
        assert!(matches!(
            relay_gain(0.0, 1.0),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            relay_gain(1.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn scalar_equivalent_channel_high_snr() {
        let (cfg, ch) = scalar_channel(1.0, 1.0, 1.0);
        let eq = equivalent_channel(&cfg.with_snr(1e14), &ch, 0, 0).unwrap();
        assert_relative_eq!(eq.h[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(eq.h[1].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(eq.r_n[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(eq.r_n[(1, 1)].re, 2.0, epsilon = 1e-12);
        assert_eq!(eq.r_n[(0, 1)], c(0.0));
    }

    #[test]
    fn perfect_first_hop_whitens_noise() {
        let (cfg, ch) = scalar_channel(1.0, 1e8, 0.5);
        let eq = equivalent_channel(&cfg, &ch, 0, 0).unwrap();
        assert_relative_eq!(eq.relayed_amplitude, 1.0, epsilon = 1e-12);
        assert_relative_eq!(eq.r_n[(1, 1)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn low_snr_matches_direct_formula() {
        let (cfg, ch) = scalar_channel(1.0, 0.7, 1.3);
        let snr = 1e-6;
        let eq = equivalent_channel(&cfg.with_snr(snr), &ch, 0, 0).unwrap();
        let g: f64 = 0.49;
        let expected = g.sqrt() / (g + 1.0 / snr).sqrt() * 1.3;
        assert_relative_eq!(eq.h[1].re, expected, max_relative = 1e-14);
        // a ~ |h_SR| sqrt(snr) in this regime
        assert_relative_eq!(eq.relayed_amplitude, 0.7 * snr.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn zero_source_relay_channel_is_degenerate() {
        let (cfg, ch) = scalar_channel(1.0, 0.0, 1.0);
        assert!(matches!(
            equivalent_channel(&cfg, &ch, 0, 0),
            Err(Error::DegenerateInput(_))
        ));
        assert!(optimal_relay_filter(&ch, 0, 1.0).is_err());
    }

    #[test]
    fn noise_covariance_structure() {
        let cfg = SystemConfig::new(2, 3, 3, 2.5);
        let ch = draw_realization(&cfg, RngStream::new(9, 1)).unwrap();
        let eq = equivalent_channel(&cfg, &ch, 1, 2).unwrap();
        assert!(eq.r_n.is_hermitian(1e-14));
        for r in 0..3 {
            for col in 0..6 {
                let want = if r == col { c(1.0) } else { c(0.0) };
                assert_eq!(eq.r_n[(r, col)], want);
                assert_eq!(eq.r_n[(col, r)], want);
            }
        }
        let g = ch.h_rd.column(2);
        let coupling = 1.0 / (ch.h_sr.column_norm_sqr(1) + 1.0 / cfg.snr);
        for r in 0..3 {
            for col in 0..3 {
                let id = if r == col { 1.0 } else { 0.0 };
                let want = c(id) + g[r] * g[col].conj() * coupling;
                assert!((eq.r_n[(3 + r, 3 + col)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn filter_on_diagonal_rd() {
        let cfg = SystemConfig::new(1, 2, 2, 1.0);
        let ch = ChannelRealization::new(
            &cfg,
            CMatrix::from_col_major(2, 1, vec![c(1.0), c(0.0)]).unwrap(),
            CMatrix::from_col_major(2, 1, vec![c(1.0), c(1.0)]).unwrap(),
            CMatrix::diag(&[2.0, 1.0]),
        )
        .unwrap();
        let f = optimal_relay_filter(&ch, 0, 1.0).unwrap();
        assert_relative_eq!(f.lambda_rd, 4.0, epsilon = 1e-12);
        assert_relative_eq!(f.beam[0].re, 1.0, epsilon = 1e-12);
        assert_eq!(f.w_relay.numerical_rank(1e-12), 1);
    }

    #[test]
    fn filter_dominates_column_norms() {
        for idx in 0..200 {
            let cfg = SystemConfig::new(2, 3, 3, 1.0);
            let ch = draw_realization(&cfg, RngStream::new(77, idx)).unwrap();
            let f = optimal_relay_filter(&ch, 0, cfg.snr).unwrap();
            let best = (0..3)
                .map(|k| ch.h_rd.column_norm_sqr(k))
                .fold(0.0, f64::max);
            assert!(f.lambda_rd >= best);
            assert_relative_eq!(
                f.effective_column(&ch).norm_sqr(),
                f.lambda_rd,
                max_relative = 1e-12
            );
            let snrs = link_snrs(&cfg, &ch);
            assert!(snrs.gamma_rd.iter().all(|&g| g <= f.lambda_rd * cfg.snr));
        }
    }

    #[test]
    fn single_relay_antenna_filter_matches_selection() {
        let cfg = SystemConfig::new(2, 1, 2, 3.0);
        let ch = draw_realization(&cfg, RngStream::new(4, 4)).unwrap();
        let f = optimal_relay_filter(&ch, 1, cfg.snr).unwrap();
        let by_filter = equivalent_channel_with_filter(&cfg, &ch, &f).unwrap();
        let by_antenna = equivalent_channel(&cfg, &ch, 1, 0).unwrap();
        assert_eq!(by_filter.h, by_antenna.h);
        assert_eq!(by_filter.r_n, by_antenna.r_n);
    }
}
