//! Map sweeps, CDFs, phase diagnostics and the random-UE method comparison.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{compute_channels, wrap_phase, ChannelParams, ChannelSet};
use crate::error::{invalid, Result, SimError};
use crate::geometry::{IrsGeometry, MapBounds, Point3, ScenarioConfig};
use crate::link_metrics::{effective_gain, snr_db, snr_gain_db, LinkParams};
use crate::phase_control::{
    configure, coordinate_ascent_column_binary, exhaustive_column_binary, Scheme,
    DEFAULT_EXHAUSTIVE_CAP, DEFAULT_MAX_SWEEPS,
};

/// Whether per-UE work is spread over the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub pos: Point3,
    pub snr_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub pos: Point3,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub scenario_id: u8,
    pub scheme: Scheme,
    pub points: Vec<GridPoint>,
    pub bounds: MapBounds,
    pub grid_step: f64,
    pub skipped: Vec<SkippedPoint>,
}

impl SweepResult {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.snr_gain_db)
    }

    pub fn median(&self) -> Option<f64> {
        median(self.values().collect())
    }
}

/// Sample median; the mean of the two central values for even counts.
pub fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

struct Evaluator {
    geom: IrsGeometry,
    ap: Point3,
    params: ChannelParams,
    link: LinkParams,
}

impl Evaluator {
    fn new(scenario: &ScenarioConfig, geom: &IrsGeometry) -> Result<Self> {
        scenario.validate()?;
        Ok(Evaluator {
            geom: geom.clone(),
            ap: scenario.ap_pos,
            params: ChannelParams::from_scenario(scenario)?,
            link: LinkParams::new(scenario.tx_power, scenario.noise_power)?,
        })
    }

    fn channels(&self, ue: &Point3) -> Result<ChannelSet> {
        compute_channels(&self.geom, &self.ap, ue, &self.params)
    }

    fn gains(&self, ue: &Point3, schemes: &[Scheme]) -> Result<Vec<f64>> {
        let ch = self.channels(ue)?;
        schemes
            .iter()
            .map(|&s| {
                let rc = configure(&ch, &self.geom, s)?;
                let g = snr_gain_db(&ch, &rc, &self.link)?;
                if g.is_finite() {
                    Ok(g)
                } else {
                    Err(invalid(format!("non-finite SNR gain {g}")))
                }
            })
            .collect()
    }
}

/// One sweep per scheme over the scenario's UE grid, sharing channel synthesis.
///
/// Points whose channels cannot be evaluated are logged and listed in
/// `skipped`; they never appear with a placeholder value.
pub fn sweep_schemes(
    scenario: &ScenarioConfig,
    geom: &IrsGeometry,
    schemes: &[Scheme],
    exec: Execution,
) -> Result<Vec<SweepResult>> {
    let eval = Evaluator::new(scenario, geom)?;
    let grid = scenario.ue_grid();
    let per_point: Vec<Result<Vec<f64>>> = match exec {
        Execution::Parallel => grid.par_iter().map(|ue| eval.gains(ue, schemes)).collect(),
        Execution::Sequential => grid.iter().map(|ue| eval.gains(ue, schemes)).collect(),
    };

    let mut results: Vec<SweepResult> = schemes
        .iter()
        .map(|&scheme| SweepResult {
            scenario_id: scenario.id,
            scheme,
            points: Vec::with_capacity(grid.len()),
            bounds: scenario.map_bounds,
            grid_step: scenario.grid_step,
            skipped: Vec::new(),
        })
        .collect();
    for (ue, outcome) in grid.iter().zip(per_point) {
        match outcome {
            Ok(gains) => {
                for (r, g) in results.iter_mut().zip(gains) {
                    r.points.push(GridPoint { pos: *ue, snr_gain_db: g });
                }
            }
            Err(e) => {
                warn!("skipping UE at ({}, {}, {}): {e}", ue.x, ue.y, ue.z);
                for r in results.iter_mut() {
                    r.skipped.push(SkippedPoint { pos: *ue, reason: e.to_string() });
                }
            }
        }
    }
    Ok(results)
}

pub fn sweep(scenario: &ScenarioConfig, geom: &IrsGeometry, scheme: Scheme) -> Result<SweepResult> {
    let mut v = sweep_schemes(scenario, geom, &[scheme], Execution::Parallel)?;
    Ok(v.remove(0))
}

/// Empirical CDF with one entry per distinct value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfSeries {
    pub values: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl CdfSeries {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("cannot build a CDF from an empty sample"));
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        for (i, v) in values.iter().enumerate() {
            let is_last_of_run = values.get(i + 1) != Some(v);
            if is_last_of_run {
                xs.push(*v);
                fs.push((i + 1) as f64 / n);
            }
        }
        Ok(CdfSeries { values: xs, fractions: fs })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest value whose cumulative fraction reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let idx = self.fractions.partition_point(|&f| f < p).min(self.values.len() - 1);
        self.values[idx]
    }
}

pub fn cdf(sr: &SweepResult) -> Result<CdfSeries> {
    CdfSeries::from_values(sr.values().collect())
}

/// Share of points with gain `<= threshold`; 0 for an empty sweep.
pub fn fraction_at_or_below(sr: &SweepResult, threshold: f64) -> f64 {
    if sr.points.is_empty() {
        return 0.0;
    }
    sr.values().filter(|&v| v <= threshold).count() as f64 / sr.points.len() as f64
}

/// UE used for the phase diagnostics when none is given: the map midpoint.
pub fn diagnostic_ue(scenario: &ScenarioConfig) -> Point3 {
    let b = &scenario.map_bounds;
    Point3::new((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0, scenario.ue_height)
}

/// Propagation phase `(psi_n + phi_n) mod 2pi` down one column, top to bottom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseProfile {
    pub column: usize,
    pub rows: Vec<usize>,
    pub phases: Vec<f64>,
}

impl PhaseProfile {
    /// max - min of the phase series after removing 2pi jumps.
    pub fn unwrapped_spread(&self) -> f64 {
        let u = unwrap(&self.phases);
        let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
        if u.is_empty() {
            0.0
        } else {
            max - min
        }
    }
}

/// Removes jumps larger than pi between consecutive samples.
pub fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let d = p - phases[i - 1];
            offset -= TAU * (d / TAU).round();
        }
        out.push(p + offset);
    }
    out
}

fn check_column(geom: &IrsGeometry, column: usize) -> Result<()> {
    if column >= geom.n_cols() {
        return Err(invalid(format!(
            "column {column} out of range, array has {} columns",
            geom.n_cols()
        )));
    }
    Ok(())
}

pub fn phase_profile(
    scenario: &ScenarioConfig,
    geom: &IrsGeometry,
    ue: &Point3,
    column: usize,
) -> Result<PhaseProfile> {
    check_column(geom, column)?;
    let ch = Evaluator::new(scenario, geom)?.channels(ue)?;
    let rows: Vec<usize> = (0..geom.n_rows()).collect();
    let phases = geom
        .column_elements(column)
        .map(|n| wrap_phase(ch.ap_to_irs[n].arg() + ch.irs_to_ue[n].arg()))
        .collect();
    Ok(PhaseProfile { column, rows, phases })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseHistogram {
    /// `n_bins + 1` uniform edges over `[0, 2pi]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn phase_histogram(pp: &PhaseProfile, n_bins: usize) -> Result<PhaseHistogram> {
    if n_bins == 0 {
        return Err(invalid("histogram needs at least one bin"));
    }
    let width = TAU / n_bins as f64;
    let edges = (0..=n_bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0; n_bins];
    for &p in &pp.phases {
        let bin = ((wrap_phase(p) / width).floor() as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    Ok(PhaseHistogram { edges, counts })
}

/// Phases actually applied to one column by a control scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionProfile {
    pub column: usize,
    pub scheme: Scheme,
    pub rows: Vec<usize>,
    pub phases: Vec<f64>,
}

pub fn reflection_profile(
    scenario: &ScenarioConfig,
    geom: &IrsGeometry,
    ue: &Point3,
    column: usize,
    scheme: Scheme,
) -> Result<ReflectionProfile> {
    check_column(geom, column)?;
    let ch = Evaluator::new(scenario, geom)?.channels(ue)?;
    let applied = configure(&ch, geom, scheme)?.phases();
    Ok(ReflectionProfile {
        column,
        scheme,
        rows: (0..geom.n_rows()).collect(),
        phases: geom.column_elements(column).map(|n| applied[n]).collect(),
    })
}

/// A way of choosing reflection coefficients for the method comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Scheme(Scheme),
    /// Column-binary quantized start refined by single-flip ascent.
    ColumnBinaryAscent,
    /// Column-binary optimum by full enumeration.
    ColumnBinaryExhaustive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Scheme(s) => s.name(),
            Method::ColumnBinaryAscent => "column-binary-ascent",
            Method::ColumnBinaryExhaustive => "column-binary-exhaustive",
        }
    }

    pub fn all() -> Vec<Method> {
        let mut v: Vec<Method> = Scheme::ALL.into_iter().map(Method::Scheme).collect();
        v.push(Method::ColumnBinaryAscent);
        v.push(Method::ColumnBinaryExhaustive);
        v
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Method::all().into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Method::all().into_iter().map(Method::name).collect();
            invalid(format!("unknown method '{s}', expected one of: {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodAverage {
    pub method: Method,
    pub mean_snr_db: f64,
    pub n_ue: usize,
    pub seed: u64,
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Draws UE `index` of a seeded population.
///
/// Each UE owns its own ChaCha stream, so the draw does not depend on the
/// order in which UEs are evaluated.
pub fn random_ue(scenario: &ScenarioConfig, seed: u64, index: u64) -> Result<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let b = &scenario.map_bounds;
    for _ in 0..100_000 {
        let x = b.x_min + (b.x_max - b.x_min) * rng.gen::<f64>();
        let y = b.y_min + (b.y_max - b.y_min) * rng.gen::<f64>();
        if scenario.admits_ue(x, y) {
            return Ok(Point3::new(x, y, scenario.ue_height));
        }
    }
    Err(invalid("map has no admissible UE positions"))
}

/// Absolute SNR (dB) of one method at one UE.
pub fn method_snr_db(
    ch: &ChannelSet,
    geom: &IrsGeometry,
    link: &LinkParams,
    method: Method,
) -> Result<f64> {
    let rc = match method {
        Method::Scheme(s) => configure(ch, geom, s)?,
        Method::ColumnBinaryAscent => {
            let init = configure(ch, geom, Scheme::ColumnBinary)?;
            coordinate_ascent_column_binary(ch, geom, &init, DEFAULT_MAX_SWEEPS)?.config
        }
        Method::ColumnBinaryExhaustive => {
            exhaustive_column_binary(ch, geom, link, DEFAULT_EXHAUSTIVE_CAP)?.0
        }
    };
    Ok(snr_db(effective_gain(ch, &rc)?, link))
}

/// Mean SNR in dB per method over `n_ue` seeded random UE positions.
///
/// Averaging is an arithmetic mean of per-UE dB values.
pub fn random_ue_average(
    scenario: &ScenarioConfig,
    geom: &IrsGeometry,
    methods: &[Method],
    n_ue: usize,
    seed: u64,
) -> Result<Vec<MethodAverage>> {
    if n_ue == 0 {
        return Err(invalid("n_ue must be at least 1"));
    }
    if methods.contains(&Method::ColumnBinaryExhaustive) && geom.n_cols() > DEFAULT_EXHAUSTIVE_CAP {
        return Err(SimError::Capacity { n_cols: geom.n_cols(), cap: DEFAULT_EXHAUSTIVE_CAP });
    }
    let eval = Evaluator::new(scenario, geom)?;
    let per_ue: Vec<Vec<f64>> = (0..n_ue as u64)
        .into_par_iter()
        .map(|i| {
            let ue = random_ue(scenario, seed, i)?;
            let ch = eval.channels(&ue)?;
            methods.iter().map(|&m| method_snr_db(&ch, geom, &eval.link, m)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let total: f64 = per_ue.iter().map(|row| row[j]).sum();
            MethodAverage { method, mean_snr_db: total / n_ue as f64, n_ue, seed }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(id: u8) -> (ScenarioConfig, IrsGeometry) {
        let mut cfg = ScenarioConfig::preset(id).unwrap();
        cfg.n_cols = 8;
        cfg.n_rows = 8;
        cfg.grid_step = 2.0;
        let g = cfg.irs().unwrap();
        (cfg, g)
    }

    #[test]
    fn one_point_grid() {
        let (mut cfg, g) = tiny(1);
        cfg.map_bounds = MapBounds { x_min: 3.0, x_max: 3.0, y_min: 4.0, y_max: 4.0 };
        let sr = sweep(&cfg, &g, Scheme::ColumnBinary).unwrap();
        assert_eq!(sr.points.len(), 1);
        assert!(sr.skipped.is_empty());
    }

    #[test]
    fn cdf_of_constant_is_single_step() {
        let c = CdfSeries::from_values(vec![2.5; 7]).unwrap();
        assert_eq!(c.values, vec![2.5]);
        assert_eq!(c.fractions, vec![1.0]);
        assert!(CdfSeries::from_values(vec![]).is_err());
    }

    #[test]
    fn cdf_ties_and_quantile() {
        let c = CdfSeries::from_values(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(c.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(c.fractions, vec![0.25, 0.75, 1.0]);
        assert_eq!(c.quantile(0.5), 2.0);
        assert_eq!(c.quantile(1.0), 3.0);
    }

    #[test]
    fn fractions_at_extremes() {
        let (cfg, g) = tiny(3);
        let sr = sweep(&cfg, &g, Scheme::ElementBinary).unwrap();
        let lo = sr.values().fold(f64::INFINITY, f64::min);
        let hi = sr.values().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(fraction_at_or_below(&sr, lo - 1.0), 0.0);
        assert_eq!(fraction_at_or_below(&sr, hi + 1.0), 1.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let u = unwrap(&[6.0, 0.1, 0.5]);
        assert!((u[1] - (0.1 + TAU)).abs() < 1e-12);
        assert!((u[2] - (0.5 + TAU)).abs() < 1e-12);
    }

    #[test]
    fn single_row_profile() {
        let mut cfg = ScenarioConfig::preset(1).unwrap();
        cfg.n_cols = 4;
        cfg.n_rows = 1;
        let g = cfg.irs().unwrap();
        let p = phase_profile(&cfg, &g, &diagnostic_ue(&cfg), 2).unwrap();
        assert_eq!(p.phases.len(), 1);
        assert!(phase_profile(&cfg, &g, &diagnostic_ue(&cfg), 4).is_err());
    }

    #[test]
    fn histogram_counts_sum_to_rows() {
        let (cfg, g) = tiny(3);
        let p = phase_profile(&cfg, &g, &diagnostic_ue(&cfg), 3).unwrap();
        let h = phase_histogram(&p, 16).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 8);
        assert_eq!(h.edges.len(), 17);
        assert!(phase_histogram(&p, 0).is_err());
    }

    #[test]
    fn flat_profile_histogram_is_compact() {
        let p = PhaseProfile { column: 0, rows: vec![0, 1, 2], phases: vec![1.0, 1.01, 1.02] };
        let h = phase_histogram(&p, 16).unwrap();
        assert!(h.counts.iter().filter(|&&c| c > 0).count() <= 2);
    }

    #[test]
    fn column_binary_reflection_is_constant() {
        let (cfg, g) = tiny(3);
        let r = reflection_profile(&cfg, &g, &diagnostic_ue(&cfg), 1, Scheme::ColumnBinary).unwrap();
        let first = r.phases[0];
        assert!(first == 0.0 || (first - std::f64::consts::PI).abs() < 1e-12);
        assert!(r.phases.iter().all(|&p| p == first));
    }

    #[test]
    fn single_ue_average_equals_point_snr() {
        let (cfg, g) = tiny(1);
        let t = random_ue_average(&cfg, &g, &[Method::Scheme(Scheme::ColumnBinary)], 1, 9).unwrap();
        let ue = random_ue(&cfg, 9, 0).unwrap();
        let eval = Evaluator::new(&cfg, &g).unwrap();
        let ch = eval.channels(&ue).unwrap();
        let direct =
            method_snr_db(&ch, &g, &eval.link, Method::Scheme(Scheme::ColumnBinary)).unwrap();
        assert_eq!(t[0].mean_snr_db, direct);
        assert_eq!(t[0].n_ue, 1);
    }

    #[test]
    fn exhaustive_refused_above_cap() {
        let cfg = ScenarioConfig::preset(1).unwrap();
        let g = cfg.irs().unwrap();
        let r = random_ue_average(&cfg, &g, &[Method::ColumnBinaryExhaustive], 1, 0);
        assert!(matches!(r, Err(SimError::Capacity { .. })));
    }

    #[test]
    fn method_names_parse() {
        for m in Method::all() {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
