//! Reflection coefficient design for the four control regimes, plus exact and
//! local search over column-wise binary configurations.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{wrap_phase, ChannelSet};
use crate::error::{invalid, Result, SimError};
use crate::geometry::IrsGeometry;
use crate::link_metrics::LinkParams;

/// Default upper bound on the column count accepted by exhaustive search.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 24;

/// Default sweep limit for coordinate ascent.
pub const DEFAULT_MAX_SWEEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ElementContinuous,
    ElementBinary,
    ColumnContinuous,
    ColumnBinary,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::ElementContinuous,
        Scheme::ElementBinary,
        Scheme::ColumnContinuous,
        Scheme::ColumnBinary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ElementContinuous => "element-continuous",
            Scheme::ElementBinary => "element-binary",
            Scheme::ColumnContinuous => "column-continuous",
            Scheme::ColumnBinary => "column-binary",
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(self, Scheme::ElementBinary | Scheme::ColumnBinary)
    }

    pub fn is_columnwise(self) -> bool {
        matches!(self, Scheme::ColumnContinuous | Scheme::ColumnBinary)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            invalid(format!(
                "unknown scheme '{s}', expected one of: {}",
                Scheme::ALL.map(Scheme::name).join(", ")
            ))
        })
    }
}

/// Per-element phases in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    /// Wraps every entry into `[0, 2pi)`.
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(invalid("phases must be finite"));
        }
        Ok(PhaseVector(theta.into_iter().map(wrap_phase).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_coeffs(&self) -> Vec<Complex64> {
        self.0.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionConfig {
    pub coeffs: Vec<Complex64>,
    pub scheme: Scheme,
    /// Reflection amplitude, fixed at 1 for a lossless passive surface.
    pub beta: f64,
}

impl ReflectionConfig {
    pub fn new(coeffs: Vec<Complex64>, scheme: Scheme) -> Self {
        ReflectionConfig { coeffs, scheme, beta: 1.0 }
    }

    /// Applied phase of each coefficient in `[0, 2pi)`.
    pub fn phases(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| wrap_phase(c.arg())).collect()
    }

    /// Column sign vector if the configuration is column-constant `+-1`.
    pub fn column_signs(&self, geom: &IrsGeometry) -> Option<Vec<f64>> {
        if self.coeffs.len() != geom.len() {
            return None;
        }
        let signs: Vec<f64> = (0..geom.n_cols()).map(|k| self.coeffs[geom.topmost(k)].re).collect();
        let ok = self.coeffs.iter().enumerate().all(|(n, c)| {
            let s = signs[geom.column_of(n)];
            c.im == 0.0 && (s == 1.0 || s == -1.0) && c.re == s
        });
        ok.then_some(signs)
    }

    /// Expands one sign per column to per-element coefficients.
    pub fn from_column_signs(signs: &[f64], geom: &IrsGeometry) -> Self {
        let coeffs = (0..geom.len())
            .map(|n| Complex64::new(signs[geom.column_of(n)], 0.0))
            .collect();
        ReflectionConfig::new(coeffs, Scheme::ColumnBinary)
    }
}

/// Co-phasing solution: `theta[n] = (zeta - (phi_n + psi_n)) mod 2pi`.
///
/// Every cascade term `h_r[n] e^{j theta[n]} g[n]` then carries the phase of the
/// direct path.
pub fn optimal_continuous(ch: &ChannelSet) -> PhaseVector {
    let zeta = ch.direct.arg();
    let theta = ch
        .irs_to_ue
        .iter()
        .zip(&ch.ap_to_irs)
        .map(|(h, g)| wrap_phase(zeta - (h.arg() + g.arg())))
        .collect();
    PhaseVector(theta)
}

/// 1-bit quantizer: `+1` when `cos(theta) >= 0`, else `-1`.
pub fn binarize(pv: &PhaseVector, scheme: Scheme) -> Result<ReflectionConfig> {
    if !scheme.is_binary() {
        return Err(invalid(format!("binarize needs a binary scheme, got {scheme}")));
    }
    let coeffs = pv
        .0
        .iter()
        .map(|t| Complex64::new(if t.cos() >= 0.0 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    Ok(ReflectionConfig::new(coeffs, scheme))
}

/// Copies the topmost element's phase down every column.
pub fn column_group(pv: &PhaseVector, geom: &IrsGeometry) -> Result<PhaseVector> {
    if pv.len() != geom.len() {
        return Err(invalid(format!(
            "phase vector has {} entries, array has {} elements",
            pv.len(),
            geom.len()
        )));
    }
    let theta = (0..geom.len()).map(|n| pv.0[geom.topmost(geom.column_of(n))]).collect();
    Ok(PhaseVector(theta))
}

/// Reflection coefficients for `scheme`. Column-binary groups first, then quantizes.
pub fn configure(ch: &ChannelSet, geom: &IrsGeometry, scheme: Scheme) -> Result<ReflectionConfig> {
    check_dims(ch, geom)?;
    let theta = optimal_continuous(ch);
    match scheme {
        Scheme::ElementContinuous => Ok(ReflectionConfig::new(theta.to_coeffs(), scheme)),
        Scheme::ElementBinary => binarize(&theta, scheme),
        Scheme::ColumnContinuous => {
            Ok(ReflectionConfig::new(column_group(&theta, geom)?.to_coeffs(), scheme))
        }
        Scheme::ColumnBinary => binarize(&column_group(&theta, geom)?, scheme),
    }
}

fn check_dims(ch: &ChannelSet, geom: &IrsGeometry) -> Result<()> {
    if ch.len() != geom.len() || ch.irs_to_ue.len() != geom.len() {
        return Err(invalid(format!(
            "channel has {} elements, array has {}",
            ch.len(),
            geom.len()
        )));
    }
    Ok(())
}

/// Cascade summed per column: `sums[k] = sum_{n in column k} h_r[n] g[n]`.
///
/// With column signs `s`, the reflected field is `sum_k s[k] sums[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnAggregate {
    pub sums: Vec<Complex64>,
}

impl ColumnAggregate {
    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    /// `|sum_k s[k] sums[k] + direct|^2`, accumulated in column order.
    pub fn power(&self, signs: &[f64], direct: Complex64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, s) in self.sums.iter().zip(signs) {
            acc += c * s;
        }
        (acc + direct).norm_sqr()
    }
}

pub fn column_aggregate(ch: &ChannelSet, geom: &IrsGeometry) -> Result<ColumnAggregate> {
    check_dims(ch, geom)?;
    let mut sums = vec![Complex64::new(0.0, 0.0); geom.n_cols()];
    for (n, term) in ch.cascade().enumerate() {
        sums[geom.column_of(n)] += term;
    }
    Ok(ColumnAggregate { sums })
}

/// Sign vector for enumeration index `mask`: column `k` is `-1` when bit
/// `n_cols - 1 - k` is set, so ascending masks are lexicographic with `+1 < -1`.
fn signs_from_mask(mask: u64, n_cols: usize, out: &mut [f64]) {
    for (k, s) in out.iter_mut().enumerate().take(n_cols) {
        *s = if (mask >> (n_cols - 1 - k)) & 1 == 1 { -1.0 } else { 1.0 };
    }
}

/// Best column sign vector by full enumeration of `2^n_cols` candidates.
///
/// Ties go to the lexicographically smallest vector with `+1 < -1`. The
/// result is independent of how the enumeration is split across threads.
pub fn exhaustive_signs(
    agg: &ColumnAggregate,
    direct: Complex64,
    cap: usize,
) -> Result<(Vec<f64>, f64)> {
    let n = agg.len();
    if n > cap || n > 63 {
        return Err(SimError::Capacity { n_cols: n, cap });
    }
    let total = 1u64 << n;
    let (best_power, best_mask) = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, mask| {
                signs_from_mask(mask, n, buf);
                (agg.power(buf, direct), mask)
            },
        )
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), pick_better);
    let mut signs = vec![0.0; n];
    signs_from_mask(best_mask, n, &mut signs);
    Ok((signs, best_power))
}

fn pick_better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
        a
    } else {
        b
    }
}

/// Exact column-wise binary optimum and its linear SNR.
pub fn exhaustive_column_binary(
    ch: &ChannelSet,
    geom: &IrsGeometry,
    lp: &LinkParams,
    cap: usize,
) -> Result<(ReflectionConfig, f64)> {
    let agg = column_aggregate(ch, geom)?;
    let (signs, power) = exhaustive_signs(&agg, ch.direct, cap)?;
    let snr = lp.tx_power * power / lp.noise_power;
    Ok((ReflectionConfig::from_column_signs(&signs, geom), snr))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub config: ReflectionConfig,
    /// Received power `|G|^2` at the start and after every accepted flip.
    pub power_trace: Vec<f64>,
    pub sweeps: usize,
    /// False when `max_sweeps` ran out before a local optimum was confirmed.
    pub converged: bool,
}

impl AscentResult {
    pub fn final_power(&self) -> f64 {
        *self.power_trace.last().expect("trace holds the initial power")
    }
}

/// Single-flip local search over column signs.
///
/// Columns are visited in order `0..n_cols`; a flip is kept only if it
/// strictly increases `|sum_k s[k] c[k] + h_d|^2`.
pub fn ascend_signs(
    agg: &ColumnAggregate,
    direct: Complex64,
    mut signs: Vec<f64>,
    max_sweeps: usize,
) -> (Vec<f64>, Vec<f64>, usize, bool) {
    let mut power = agg.power(&signs, direct);
    let mut trace = vec![power];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut improved = false;
        for k in 0..signs.len() {
            signs[k] = -signs[k];
            let p = agg.power(&signs, direct);
            if p > power {
                power = p;
                trace.push(p);
                improved = true;
            } else {
                signs[k] = -signs[k];
            }
        }
        if !improved {
            converged = true;
            break;
        }
    }
    (signs, trace, sweeps, converged)
}

pub fn coordinate_ascent_column_binary(
    ch: &ChannelSet,
    geom: &IrsGeometry,
    init: &ReflectionConfig,
    max_sweeps: usize,
) -> Result<AscentResult> {
    let agg = column_aggregate(ch, geom)?;
    let signs = init
        .column_signs(geom)
        .ok_or_else(|| invalid("ascent start must be column-constant +-1"))?;
    let (signs, power_trace, sweeps, converged) = ascend_signs(&agg, ch.direct, signs, max_sweeps);
    Ok(AscentResult {
        config: ReflectionConfig::from_column_signs(&signs, geom),
        power_trace,
        sweeps,
        converged,
    })
}
