//! Deterministic line-of-sight channel synthesis.
//!
//! Every hop uses a log-distance amplitude law with a spherical phase term:
//!
//! ```text
//! a(d) = sqrt(G0) * (d0 / max(d, d0))^(alpha / 2)
//! h(d) = a(d) * exp(-j 2 pi d / lambda)
//! ```
//!
//! `G0` is the power gain at the reference distance. [`ChannelParams::friis`]
//! sets it to the free-space value `(lambda / (4 pi d0))^2`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::geometry::{IrsGeometry, Point3, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub wavelength: f64,
    pub path_loss_exponent: f64,
    pub ref_distance: f64,
    /// Single-hop power gain at `ref_distance`, dB.
    pub ref_gain_db: f64,
}

impl ChannelParams {
    pub fn new(
        wavelength: f64,
        path_loss_exponent: f64,
        ref_distance: f64,
        ref_gain_db: f64,
    ) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(ref_distance > 0.0 && ref_distance.is_finite()) {
            return Err(invalid(format!("reference distance must be positive, got {ref_distance}")));
        }
        if !(path_loss_exponent >= 0.0 && path_loss_exponent.is_finite()) {
            return Err(invalid(format!(
                "path loss exponent must be >= 0, got {path_loss_exponent}"
            )));
        }
        if !ref_gain_db.is_finite() {
            return Err(invalid("reference gain must be finite"));
        }
        Ok(ChannelParams { wavelength, path_loss_exponent, ref_distance, ref_gain_db })
    }

    /// Generalized Friis: free-space loss up to `d0`, exponent `alpha` beyond.
    pub fn friis(wavelength: f64, path_loss_exponent: f64, ref_distance: f64) -> Result<Self> {
        let g0 = 20.0 * (wavelength / (4.0 * PI * ref_distance)).log10();
        Self::new(wavelength, path_loss_exponent, ref_distance, g0)
    }

    pub fn from_scenario(cfg: &ScenarioConfig) -> Result<Self> {
        Self::new(cfg.wavelength(), cfg.path_loss_exponent, cfg.ref_distance, cfg.ref_gain_db)
    }

    /// Amplitude of a hop of length `d`; clamped to the `d0` value below `d0`.
    pub fn amplitude(&self, d: f64) -> f64 {
        let ref_amp = 10f64.powf(self.ref_gain_db / 20.0);
        ref_amp * (self.ref_distance / d.max(self.ref_distance)).powf(self.path_loss_exponent / 2.0)
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Complex LOS gain from `tx` to `rx`.
pub fn los_gain(tx: &Point3, rx: &Point3, params: &ChannelParams) -> Result<Complex64> {
    let d = tx.distance(rx);
    if d == 0.0 {
        return Err(invalid(format!("coincident endpoints at {tx:?}")));
    }
    if !d.is_finite() {
        return Err(invalid("non-finite link distance"));
    }
    // phase from the fractional wavelength count keeps precision for large d
    let phase = wrap_phase(-TAU * (d / params.wavelength).fract());
    Ok(Complex64::from_polar(params.amplitude(d), phase))
}

/// Channel coefficients for one AP/UE pair.
///
/// The three fields are the physical link gains as they enter the received
/// signal `(sum_n irs_to_ue[n] * theta[n] * ap_to_irs[n] + direct) * sqrt(P) * x`.
/// In row-vector notation `irs_to_ue` is `h_r^H` and `direct` is `h_d^*`, so
/// no conjugation is applied to the synthesized LOS gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// AP to element `n` (`g_n`, phase `psi_n`).
    pub ap_to_irs: Vec<Complex64>,
    /// Element `n` to UE (`(h_r^H)_n`, phase `phi_n`).
    pub irs_to_ue: Vec<Complex64>,
    /// AP to UE (`h_d^*`, phase `zeta`).
    pub direct: Complex64,
}

impl ChannelSet {
    pub fn len(&self) -> usize {
        self.ap_to_irs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ap_to_irs.is_empty()
    }

    /// Per-element cascade `irs_to_ue[n] * ap_to_irs[n]`.
    pub fn cascade(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.irs_to_ue.iter().zip(&self.ap_to_irs).map(|(h, g)| h * g)
    }

    /// Same set with the direct path removed (blocked LOS).
    pub fn without_direct(&self) -> ChannelSet {
        ChannelSet { direct: Complex64::new(0.0, 0.0), ..self.clone() }
    }
}

pub fn compute_channels(
    geom: &IrsGeometry,
    ap: &Point3,
    ue: &Point3,
    params: &ChannelParams,
) -> Result<ChannelSet> {
    let positions = geom.element_positions();
    let ap_to_irs = positions
        .iter()
        .map(|p| los_gain(ap, p, params))
        .collect::<Result<Vec<_>>>()?;
    let irs_to_ue = positions
        .iter()
        .map(|p| los_gain(p, ue, params))
        .collect::<Result<Vec<_>>>()?;
    let direct = los_gain(ap, ue, params)?;
    Ok(ChannelSet { ap_to_irs, irs_to_ue, direct })
}
