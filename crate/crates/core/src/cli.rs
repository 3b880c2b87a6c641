//! Command-line front end: argument parsing, scenario files and result files.
//!
//! Scenario files are flat `key = value` text. Lines starting with `#` are
//! comments and keys prefixed with `meta.` are ignored, which lets the
//! `metadata.cfg` sidecar of any run be fed back in as a scenario file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use crate::error::{invalid, Result, SimError};
use crate::experiments::{
    cdf, diagnostic_ue, fraction_at_or_below, phase_histogram, phase_profile, random_ue_average,
    reflection_profile, sweep_schemes, CdfSeries, Execution, Method, MethodAverage,
    PhaseHistogram, PhaseProfile, ReflectionProfile, SweepResult,
};
use crate::geometry::{Point3, ScenarioConfig};
use crate::phase_control::{Scheme, DEFAULT_EXHAUSTIVE_CAP};

pub const TOOL_VERSION: &str = concat!("irs-sim ", env!("CARGO_PKG_VERSION"));

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "IRS_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "irs-sim", version, about = "IRS link-budget simulator")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// SNR-gain heatmap for one or more schemes.
    Sweep(SweepArgs),
    /// Empirical CDF of the SNR gain over the map.
    Cdf(SweepArgs),
    /// Propagation phase down one column.
    PhaseProfile(DiagArgs),
    /// Histogram of the propagation phase down one column.
    PhaseHist(DiagArgs),
    /// Reflection phases applied to one column.
    ReflectionProfile(ReflectionArgs),
    /// Mean SNR over seeded random UE positions per method.
    RandomAvg(AvgArgs),
    /// All four schemes: heatmaps, CDFs and a summary table.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario preset (1, 2 or 3).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), conflicts_with = "config")]
    scenario: Option<u8>,
    /// Flat key=value scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, required_unless_present = "all_schemes")]
    scheme: Vec<Scheme>,
    #[arg(long)]
    all_schemes: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Accepted for symmetry with `sweep`; compare always runs every scheme.
    #[arg(long)]
    all_schemes: bool,
}

#[derive(Debug, Args)]
struct DiagArgs {
    #[command(flatten)]
    common: Common,
    /// Column index; defaults to the center column.
    #[arg(long)]
    column: Option<usize>,
    #[arg(long, requires = "ue_y")]
    ue_x: Option<f64>,
    #[arg(long, requires = "ue_x")]
    ue_y: Option<f64>,
    #[arg(long, default_value_t = 16)]
    bins: usize,
}

#[derive(Debug, Args)]
struct ReflectionArgs {
    #[command(flatten)]
    diag: DiagArgs,
    #[arg(long, value_enum, required_unless_present = "all_schemes")]
    scheme: Vec<Scheme>,
    #[arg(long)]
    all_schemes: bool,
}

#[derive(Debug, Args)]
struct AvgArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated methods; defaults to every feasible one.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 100)]
    n_ue: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: SimError| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sweep,
    Cdf,
    PhaseProfile,
    PhaseHist,
    ReflectionProfile,
    RandomAvg,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Cdf => "cdf",
            Command::PhaseProfile => "phase-profile",
            Command::PhaseHist => "phase-hist",
            Command::ReflectionProfile => "reflection-profile",
            Command::RandomAvg => "random-avg",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScenarioSource {
    Preset(u8),
    File(PathBuf),
}

/// A validated command line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub command: Command,
    pub source: ScenarioSource,
    pub schemes: Vec<Scheme>,
    pub methods: Vec<Method>,
    pub n_cols: Option<usize>,
    pub n_rows: Option<usize>,
    pub grid_step: Option<f64>,
    pub seed: u64,
    pub n_ue: usize,
    pub column: Option<usize>,
    pub ue_xy: Option<(f64, f64)>,
    pub bins: usize,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl RunSpec {
    fn base(command: Command, c: Common) -> Self {
        let source = match (c.scenario, c.config) {
            (_, Some(p)) => ScenarioSource::File(p),
            (Some(id), None) => ScenarioSource::Preset(id),
            (None, None) => ScenarioSource::Preset(1),
        };
        RunSpec {
            command,
            source,
            schemes: Vec::new(),
            methods: Vec::new(),
            n_cols: c.nx,
            n_rows: c.ny,
            grid_step: c.grid_step,
            seed: 0,
            n_ue: 0,
            column: None,
            ue_xy: None,
            bins: 16,
            out_dir: c.out,
            format: c.format,
        }
    }
}

fn schemes_or_all(schemes: Vec<Scheme>, all: bool) -> Vec<Scheme> {
    if all {
        Scheme::ALL.to_vec()
    } else {
        let mut out = Vec::new();
        for s in schemes {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }
}

fn diag_spec(command: Command, d: DiagArgs) -> RunSpec {
    let mut spec = RunSpec::base(command, d.common);
    spec.column = d.column;
    spec.ue_xy = d.ue_x.zip(d.ue_y);
    spec.bins = d.bins;
    spec
}

/// Parses a full argument vector (program name first).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunSpec, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    Ok(match cli.command {
        CliCommand::Sweep(a) => {
            let mut s = RunSpec::base(Command::Sweep, a.common);
            s.schemes = schemes_or_all(a.scheme, a.all_schemes);
            s
        }
        CliCommand::Cdf(a) => {
            let mut s = RunSpec::base(Command::Cdf, a.common);
            s.schemes = schemes_or_all(a.scheme, a.all_schemes);
            s
        }
        CliCommand::Compare(a) => {
            let mut s = RunSpec::base(Command::Compare, a.common);
            s.schemes = Scheme::ALL.to_vec();
            s
        }
        CliCommand::PhaseProfile(d) => diag_spec(Command::PhaseProfile, d),
        CliCommand::PhaseHist(d) => diag_spec(Command::PhaseHist, d),
        CliCommand::ReflectionProfile(r) => {
            let mut s = diag_spec(Command::ReflectionProfile, r.diag);
            s.schemes = schemes_or_all(r.scheme, r.all_schemes);
            s
        }
        CliCommand::RandomAvg(a) => {
            let mut s = RunSpec::base(Command::RandomAvg, a.common);
            s.methods = a.methods;
            s.n_ue = a.n_ue;
            s.seed = a.seed;
            s
        }
    })
}

const CONFIG_KEYS: [&str; 21] = [
    "scenario_id",
    "ap_x",
    "ap_y",
    "ap_z",
    "irs_x",
    "irs_y",
    "irs_z",
    "ue_z",
    "freq_hz",
    "tx_power_w",
    "noise_power_w",
    "alpha",
    "d0_m",
    "ref_gain_db",
    "grid_step_m",
    "nx",
    "ny",
    "map_x_min",
    "map_x_max",
    "map_y_min",
    "map_y_max",
];

/// Parses scenario text; unspecified keys keep their scenario-1 values.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::preset(1)?;
    let mut overridden = false;
    let mut explicit_id = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |msg: String| SimError::Parse { line: line_no, msg };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(format!("expected key=value, found '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.starts_with("meta.") {
            continue;
        }
        if !CONFIG_KEYS.contains(&key) {
            return Err(perr(format!("unknown key '{key}'")));
        }
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| perr(format!("value for '{key}' is not a number: '{v}'")))
        };
        let count = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| perr(format!("value for '{key}' is not a non-negative integer: '{v}'")))
        };
        match key {
            "scenario_id" => {
                let id = count(value)?;
                explicit_id = Some(u8::try_from(id).map_err(|_| perr("scenario_id out of range".into()))?);
            }
            "ap_x" => cfg.ap_pos.x = num(value)?,
            "ap_y" => cfg.ap_pos.y = num(value)?,
            "ap_z" => cfg.ap_pos.z = num(value)?,
            "irs_x" => cfg.irs_center.x = num(value)?,
            "irs_y" => cfg.irs_center.y = num(value)?,
            "irs_z" => cfg.irs_center.z = num(value)?,
            "ue_z" => cfg.ue_height = num(value)?,
            "freq_hz" => cfg.frequency = num(value)?,
            "tx_power_w" => cfg.tx_power = num(value)?,
            "noise_power_w" => cfg.noise_power = num(value)?,
            "alpha" => cfg.path_loss_exponent = num(value)?,
            "d0_m" => cfg.ref_distance = num(value)?,
            "ref_gain_db" => cfg.ref_gain_db = num(value)?,
            "grid_step_m" => cfg.grid_step = num(value)?,
            "nx" => cfg.n_cols = count(value)?,
            "ny" => cfg.n_rows = count(value)?,
            "map_x_min" => cfg.map_bounds.x_min = num(value)?,
            "map_x_max" => cfg.map_bounds.x_max = num(value)?,
            "map_y_min" => cfg.map_bounds.y_min = num(value)?,
            "map_y_max" => cfg.map_bounds.y_max = num(value)?,
            _ => unreachable!(),
        }
        if key != "scenario_id" {
            info!("config override: {key} = {value}");
            overridden = true;
        }
    }
    cfg.id = match explicit_id {
        Some(id) => id,
        None if overridden => 0,
        None => 1,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Serializes a scenario in the format read by [`parse_config`].
pub fn scenario_to_config(cfg: &ScenarioConfig) -> String {
    let b = &cfg.map_bounds;
    let pairs: [(&str, String); 21] = [
        ("scenario_id", cfg.id.to_string()),
        ("ap_x", cfg.ap_pos.x.to_string()),
        ("ap_y", cfg.ap_pos.y.to_string()),
        ("ap_z", cfg.ap_pos.z.to_string()),
        ("irs_x", cfg.irs_center.x.to_string()),
        ("irs_y", cfg.irs_center.y.to_string()),
        ("irs_z", cfg.irs_center.z.to_string()),
        ("ue_z", cfg.ue_height.to_string()),
        ("freq_hz", cfg.frequency.to_string()),
        ("tx_power_w", cfg.tx_power.to_string()),
        ("noise_power_w", cfg.noise_power.to_string()),
        ("alpha", cfg.path_loss_exponent.to_string()),
        ("d0_m", cfg.ref_distance.to_string()),
        ("ref_gain_db", cfg.ref_gain_db.to_string()),
        ("grid_step_m", cfg.grid_step.to_string()),
        ("nx", cfg.n_cols.to_string()),
        ("ny", cfg.n_rows.to_string()),
        ("map_x_min", b.x_min.to_string()),
        ("map_x_max", b.x_max.to_string()),
        ("map_y_min", b.y_min.to_string()),
        ("map_y_max", b.y_max.to_string()),
    ];
    pairs.iter().fold(String::new(), |mut s, (k, v)| {
        let _ = writeln!(s, "{k}={v}");
        s
    })
}

/// Scenario after applying the command-line overrides.
pub fn resolve_scenario(spec: &RunSpec) -> Result<ScenarioConfig> {
    let mut cfg = match &spec.source {
        ScenarioSource::Preset(id) => ScenarioConfig::preset(*id)?,
        ScenarioSource::File(p) => load_config(p)?,
    };
    if let Some(nx) = spec.n_cols {
        cfg.n_cols = nx;
    }
    if let Some(ny) = spec.n_rows {
        cfg.n_rows = ny;
    }
    if let Some(step) = spec.grid_step {
        cfg.grid_step = step;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Data value formatting: 12 significant digits, scientific notation.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A table of rows ready for CSV or JSON output.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Array of objects keyed by the CSV header. Non-finite numbers become `null`.
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(k, c)| {
                        let v = match c {
                            Cell::Num(v) => serde_json::Number::from_f64(*v)
                                .map_or(serde_json::Value::Null, serde_json::Value::Number),
                            Cell::Int(i) => serde_json::Value::from(*i),
                            Cell::Text(t) => serde_json::Value::from(t.clone()),
                        };
                        (k.to_string(), v)
                    })
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub fn heatmap_table(sr: &SweepResult) -> Table {
    Table {
        header: vec!["x_m", "y_m", "snr_gain_db"],
        rows: sr
            .points
            .iter()
            .map(|p| vec![Cell::Num(p.pos.x), Cell::Num(p.pos.y), Cell::Num(p.snr_gain_db)])
            .collect(),
    }
}

pub fn cdf_table(c: &CdfSeries) -> Table {
    Table {
        header: vec!["snr_gain_db", "cum_fraction"],
        rows: c
            .values
            .iter()
            .zip(&c.fractions)
            .map(|(v, f)| vec![Cell::Num(*v), Cell::Num(*f)])
            .collect(),
    }
}

pub fn profile_table(rows: &[usize], phases: &[f64]) -> Table {
    Table {
        header: vec!["row_index", "phase_rad"],
        rows: rows
            .iter()
            .zip(phases)
            .map(|(r, p)| vec![Cell::Int(*r as u64), Cell::Num(*p)])
            .collect(),
    }
}

pub fn phase_profile_table(p: &PhaseProfile) -> Table {
    profile_table(&p.rows, &p.phases)
}

pub fn reflection_profile_table(p: &ReflectionProfile) -> Table {
    profile_table(&p.rows, &p.phases)
}

pub fn histogram_table(h: &PhaseHistogram) -> Table {
    Table {
        header: vec!["bin_low_rad", "bin_high_rad", "count"],
        rows: h
            .counts
            .iter()
            .enumerate()
            .map(|(i, c)| vec![Cell::Num(h.edges[i]), Cell::Num(h.edges[i + 1]), Cell::Int(*c as u64)])
            .collect(),
    }
}

pub fn random_avg_table(rows: &[MethodAverage]) -> Table {
    Table {
        header: vec!["method", "mean_snr_db", "n_ue", "seed"],
        rows: rows
            .iter()
            .map(|m| {
                vec![
                    Cell::Text(m.method.name().to_string()),
                    Cell::Num(m.mean_snr_db),
                    Cell::Int(m.n_ue as u64),
                    Cell::Int(m.seed),
                ]
            })
            .collect(),
    }
}

pub fn summary_table(sweeps: &[SweepResult]) -> Table {
    Table {
        header: vec!["scheme", "median_snr_gain_db", "fraction_at_or_below_0db", "n_points"],
        rows: sweeps
            .iter()
            .map(|sr| {
                vec![
                    Cell::Text(sr.scheme.name().to_string()),
                    Cell::Num(sr.median().unwrap_or(f64::NAN)),
                    Cell::Num(fraction_at_or_below(sr, 0.0)),
                    Cell::Int(sr.points.len() as u64),
                ]
            })
            .collect(),
    }
}

/// Files of one run. Everything written so far is deleted if the run fails.
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputSet { dir: dir.to_path_buf(), written: Vec::new(), committed: false })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!("{name}.part"));
        let res = (|| -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(contents.as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        })();
        if let Err(e) = res {
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn scenario_label(cfg: &ScenarioConfig) -> String {
    if cfg.id == 0 {
        "custom".to_string()
    } else {
        format!("s{}", cfg.id)
    }
}

/// Sidecar describing a run. Parseable by [`parse_config`].
pub fn metadata(spec: &RunSpec, cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {TOOL_VERSION}");
    let _ = writeln!(s, "meta.tool_version={TOOL_VERSION}");
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let _ = writeln!(s, "meta.timestamp_unix={stamp}");
    let run = serde_json::to_string(spec).expect("run spec serializes");
    let _ = writeln!(s, "meta.run_spec={run}");
    s.push_str(&scenario_to_config(cfg));
    s
}

/// What a successful run produced.
#[derive(Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub skipped: Vec<Point3>,
    pub lines: Vec<String>,
}

/// Executes a run and writes its files.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    let cfg = resolve_scenario(spec)?;
    let geom = cfg.irs()?;
    let label = scenario_label(&cfg);
    let ext = spec.format.ext();
    let mut out = OutputSet::new(&spec.out_dir)?;
    let mut skipped = Vec::new();
    let mut lines = Vec::new();

    match spec.command {
        Command::Sweep | Command::Cdf | Command::Compare => {
            if spec.schemes.is_empty() {
                return Err(invalid("no scheme selected"));
            }
            let sweeps = sweep_schemes(&cfg, &geom, &spec.schemes, Execution::Parallel)?;
            if let Some(first) = sweeps.first() {
                skipped.extend(first.skipped.iter().map(|s| s.pos));
            }
            for sr in &sweeps {
                if spec.command != Command::Cdf {
                    let name = format!("heatmap_{label}_{}.{ext}", sr.scheme);
                    out.write(&name, &heatmap_table(sr).render(spec.format))?;
                }
                if spec.command != Command::Sweep {
                    let name = format!("cdf_{label}_{}.{ext}", sr.scheme);
                    out.write(&name, &cdf_table(&cdf(sr)?).render(spec.format))?;
                }
                lines.push(format!(
                    "{label} {:<20} median gain {:>8.3} dB over {} points",
                    sr.scheme.name(),
                    sr.median().unwrap_or(f64::NAN),
                    sr.points.len()
                ));
            }
            if spec.command == Command::Compare {
                out.write(&format!("summary_{label}.{ext}"), &summary_table(&sweeps).render(spec.format))?;
            }
        }
        Command::PhaseProfile | Command::PhaseHist | Command::ReflectionProfile => {
            let column = spec.column.unwrap_or(geom.n_cols() / 2);
            let ue = spec
                .ue_xy
                .map(|(x, y)| Point3::new(x, y, cfg.ue_height))
                .unwrap_or_else(|| diagnostic_ue(&cfg));
            match spec.command {
                Command::PhaseProfile => {
                    let p = phase_profile(&cfg, &geom, &ue, column)?;
                    lines.push(format!("column {column} unwrapped spread {:.4} rad", p.unwrapped_spread()));
                    out.write(
                        &format!("phase_profile_{label}_c{column}.{ext}"),
                        &phase_profile_table(&p).render(spec.format),
                    )?;
                }
                Command::PhaseHist => {
                    let p = phase_profile(&cfg, &geom, &ue, column)?;
                    let h = phase_histogram(&p, spec.bins)?;
                    out.write(
                        &format!("phase_hist_{label}_c{column}.{ext}"),
                        &histogram_table(&h).render(spec.format),
                    )?;
                }
                _ => {
                    if spec.schemes.is_empty() {
                        return Err(invalid("no scheme selected"));
                    }
                    for &scheme in &spec.schemes {
                        let p = reflection_profile(&cfg, &geom, &ue, column, scheme)?;
                        out.write(
                            &format!("reflection_profile_{label}_c{column}_{scheme}.{ext}"),
                            &reflection_profile_table(&p).render(spec.format),
                        )?;
                    }
                }
            }
        }
        Command::RandomAvg => {
            let methods = if spec.methods.is_empty() {
                let mut m = vec![
                    Method::Scheme(Scheme::ElementContinuous),
                    Method::Scheme(Scheme::ColumnBinary),
                    Method::ColumnBinaryAscent,
                ];
                if geom.n_cols() <= DEFAULT_EXHAUSTIVE_CAP {
                    m.push(Method::ColumnBinaryExhaustive);
                }
                m
            } else {
                spec.methods.clone()
            };
            let table = random_ue_average(&cfg, &geom, &methods, spec.n_ue, spec.seed)?;
            for row in &table {
                lines.push(format!("{label} {:<26} mean SNR {:>8.3} dB", row.method.name(), row.mean_snr_db));
            }
            out.write(&format!("random_avg_{label}.{ext}"), &random_avg_table(&table).render(spec.format))?;
        }
    }

    out.write("metadata.cfg", &metadata(spec, &cfg))?;
    Ok(RunReport { files: out.commit(), skipped, lines })
}

/// Reads [`THREADS_ENV`]; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(invalid(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}
