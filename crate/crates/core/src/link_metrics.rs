//! Received SNR and SNR gain over the direct-path baseline.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{invalid, Result, SimError};
use crate::phase_control::ReflectionConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub tx_power: f64,
    pub noise_power: f64,
}

impl LinkParams {
    pub fn new(tx_power: f64, noise_power: f64) -> Result<Self> {
        if !(tx_power > 0.0 && tx_power.is_finite()) {
            return Err(invalid(format!("transmit power must be positive, got {tx_power}")));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(invalid(format!("noise power must be positive, got {noise_power}")));
        }
        Ok(LinkParams { tx_power, noise_power })
    }

    /// Linear SNR `P |gain|^2 / sigma^2`.
    pub fn snr_linear(&self, gain: Complex64) -> f64 {
        self.tx_power * gain.norm_sqr() / self.noise_power
    }
}

/// End-to-end complex gain `sum_n h_r[n] beta c[n] g[n] + h_d`.
pub fn effective_gain(ch: &ChannelSet, rc: &ReflectionConfig) -> Result<Complex64> {
    if rc.coeffs.len() != ch.len() || ch.irs_to_ue.len() != ch.len() {
        return Err(invalid(format!(
            "reflection config has {} coefficients, channel has {} elements",
            rc.coeffs.len(),
            ch.len()
        )));
    }
    let reflected: Complex64 = ch
        .irs_to_ue
        .iter()
        .zip(&rc.coeffs)
        .zip(&ch.ap_to_irs)
        .map(|((h, c), g)| h * rc.beta * c * g)
        .sum();
    Ok(reflected + ch.direct)
}

/// SNR in dB. A zero gain maps to `f64::NEG_INFINITY`.
pub fn snr_db(gain: Complex64, lp: &LinkParams) -> f64 {
    let snr = lp.snr_linear(gain);
    if snr == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * snr.log10()
    }
}

/// SNR with the surface configured minus SNR over the direct path alone, dB.
///
/// Transmit and noise power cancel, so the result is
/// `20 log10(|effective| / |h_d|)`. Negative values are legitimate.
pub fn snr_gain_db(ch: &ChannelSet, rc: &ReflectionConfig, lp: &LinkParams) -> Result<f64> {
    if ch.direct.norm() == 0.0 {
        return Err(SimError::UndefinedBaseline);
    }
    let g = effective_gain(ch, rc)?;
    Ok(snr_db(g, lp) - snr_db(ch.direct, lp))
}
