//! Destination-side linear filters and BPSK detection.
//!
//! The post-SNRs computed here come straight from the filter and the
//! equivalent channel, so they serve as the numerical reference for the
//! closed forms in [`crate::selection`].

use crate::error::{Error, Result};
use crate::numerics::{hermitian_solve, inner, CMatrix, CVector, C64};
use crate::relaying::EquivalentChannel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Mmse,
    Mrc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverFilter {
    pub w: CVector,
    pub kind: FilterKind,
    pub numerical_post_snr: f64,
}

/// `w = R_yD^{-1} R_yDs`, i.e. the solution of
/// `(E_s h h^* + R_n) w = E_s h`.
pub fn mmse_filter(eq: &EquivalentChannel, snr: f64) -> Result<ReceiverFilter> {
    let n = eq.h.len();
    let mut r_y = eq.r_n.clone();
    for r in 0..n {
        for c in 0..n {
            r_y[(r, c)] += eq.h[r] * eq.h[c].conj() * snr;
        }
    }
    let rhs = eq.h.scale(C64::new(snr, 0.0));
    let w = hermitian_solve(&r_y, &rhs)?;
    let numerical_post_snr = post_snr_of_filter(&w, eq, snr)?;
    Ok(ReceiverFilter {
        w,
        kind: FilterKind::Mmse,
        numerical_post_snr,
    })
}

/// Matched filter `w = h`.
pub fn mrc_filter(eq: &EquivalentChannel, snr: f64) -> Result<ReceiverFilter> {
    let w = eq.h.clone();
    let numerical_post_snr = post_snr_of_filter(&w, eq, snr)?;
    Ok(ReceiverFilter {
        w,
        kind: FilterKind::Mrc,
        numerical_post_snr,
    })
}

/// `E_s |w^* h|^2 / (w^* R_n w)`; invariant to scaling `w`.
pub fn post_snr_of_filter(w: &[C64], eq: &EquivalentChannel, snr: f64) -> Result<f64> {
    post_snr(w, &eq.h, &eq.r_n, snr)
}

pub(crate) fn post_snr(w: &[C64], h: &[C64], r_n: &CMatrix, snr: f64) -> Result<f64> {
    if w.len() != h.len() {
        return Err(Error::InvalidParameter(format!(
            "filter length {} does not match channel length {}",
            w.len(),
            h.len()
        )));
    }
    if w.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Err(Error::InvalidParameter("receive filter is zero".into()));
    }
    let signal = inner(w, h).norm_sqr() * snr;
    let noise = inner(w, &r_n.mul_vec(w)).re;
    Ok(signal / noise)
}

/// BPSK mapping: bit 0 is sent as `+sqrt(E_s)`, bit 1 as `-sqrt(E_s)`.
pub fn bpsk_symbol(bit: u8, snr: f64) -> f64 {
    if bit == 0 {
        snr.sqrt()
    } else {
        -snr.sqrt()
    }
}

/// Hard decision on `Re(w^* y)`. A zero statistic decides bit 0.
pub fn detect_bpsk(w: &[C64], y: &[C64]) -> u8 {
    if inner(w, y).re >= 0.0 {
        0
    } else {
        1
    }
}
