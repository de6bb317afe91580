//! Experiment runner: declarative configuration, per-SNR sweeps combining the
//! optimizer, the analytical models and the Monte-Carlo simulator, and CSV output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::stream_rng;
use crate::distortion::{analytic_breakdown, bpam_sdr, db, from_db, opta_sdr};
use crate::error::{Error, Result};
use crate::mappings::{build, Extras, Mapping, MappingConfig, MappingKind, MappingParams, DEFAULT_ETA};
use crate::optim::{optimize, sweep, OptProblem, OptResult};
use crate::sim::{run_simulation, ProjectionConfig, SimConfig};
use crate::surface::{classify_surface, principal_curvatures, second_fundamental_form, ClassificationReport, Grid};

/// Formats `v` with 6 significant digits: plain decimal for 1e-4 ≤ |v| < 1e6,
/// scientific otherwise.
pub fn fmt_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        format!("{v:.*}", (5 - exp) as usize)
    } else {
        sci
    }
}

/// `v` rounded to what [`fmt_sig`] prints.
pub fn round_sig(v: f64) -> f64 {
    if v.is_finite() {
        fmt_sig(v).parse().expect("fmt_sig output parses")
    } else {
        v
    }
}

/// Inclusive SNR grid `start:stop:step` in dB; empty when stop < start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrGrid {
    pub fn single(snr_db: f64) -> Self {
        Self { start: snr_db, stop: snr_db, step: 1.0 }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| round_sig(self.start + k as f64 * self.step)).collect()
    }
}

impl Default for SnrGrid {
    fn default() -> Self {
        Self { start: 10.0, stop: 50.0, step: 5.0 }
    }
}

impl FromStr for SnrGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad SNR grid '{s}': '{t}' is not a number")))
        };
        let g = match parts.as_slice() {
            [a] => Self::single(num(a)?),
            [a, b] => Self { start: num(a)?, stop: num(b)?, step: 1.0 },
            [a, b, c] => Self { start: num(a)?, stop: num(b)?, step: num(c)? },
            _ => return Err(Error::Config(format!("bad SNR grid '{s}': expected start:stop:step"))),
        };
        if ![g.start, g.stop, g.step].iter().all(|v| v.is_finite()) || g.step <= 0.0 {
            return Err(Error::Config(format!("bad SNR grid '{s}': values must be finite, step positive")));
        }
        Ok(g)
    }
}

impl fmt::Display for SnrGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

impl Serialize for SnrGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SnrGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<MappingKind>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(MappingKind),
        Many(Vec<MappingKind>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(k) => vec![k],
        OneOrMany::Many(v) => v,
    })
}

fn fixed_or_optimize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<MappingParams>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Choice {
        Keyword(String),
        Fixed(MappingParams),
    }
    match Choice::deserialize(d)? {
        Choice::Keyword(k) if k == "optimize" => Ok(None),
        Choice::Keyword(k) => {
            Err(serde::de::Error::custom(format!("params must be a table or \"optimize\" (got \"{k}\")")))
        }
        Choice::Fixed(p) => Ok(Some(p)),
    }
}

/// Declarative experiment record. Only `mapping` is required.
///
/// ```toml
/// mapping = ["rcasd", "snasu"]   # or a single name
/// params = "optimize"            # or { delta = 0.6, alpha1 = 5.5, alpha2 = 2.0 }
/// snr = "25:50:5"
/// n_samples = 100000
/// seed = 7
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub mapping: Vec<MappingKind>,
    /// Fixed parameters; `None` (or `"optimize"`) optimises at every SNR.
    #[serde(default, deserialize_with = "fixed_or_optimize", skip_serializing_if = "Option::is_none")]
    pub params: Option<MappingParams>,
    /// Fixed mapping-specific parameters used while optimising.
    #[serde(default, skip_serializing_if = "Extras::is_empty")]
    pub extras: Extras,
    #[serde(default)]
    pub snr: SnrGrid,
    /// Monte-Carlo samples per point; 0 skips the simulation.
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "one")]
    pub sigma_x: f64,
    #[serde(default = "one")]
    pub p_max: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub projection: ProjectionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_samples() -> usize {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn one() -> f64 {
    1.0
}
fn default_eta() -> f64 {
    DEFAULT_ETA
}
fn default_starts() -> usize {
    16
}

impl ExperimentConfig {
    pub fn new(mapping: Vec<MappingKind>) -> Self {
        Self {
            mapping,
            params: None,
            extras: Extras::default(),
            snr: SnrGrid::default(),
            n_samples: default_samples(),
            seed: default_seed(),
            sigma_x: 1.0,
            p_max: 1.0,
            eta: DEFAULT_ETA,
            starts: default_starts(),
            projection: ProjectionConfig::default(),
            out: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.mapping.is_empty() {
            return Err(Error::Config("at least one mapping is required".into()));
        }
        if !(self.sigma_x > 0.0 && self.p_max > 0.0 && self.eta > 0.0) {
            return Err(Error::Config("sigma_x, p_max and eta must be positive".into()));
        }
        if self.n_samples != 0 && self.n_samples < 1000 {
            return Err(Error::Config(format!("n_samples must be 0 or at least 1000 (got {})", self.n_samples)));
        }
        if self.starts == 0 {
            return Err(Error::Config("starts must be positive".into()));
        }
        Ok(())
    }

    pub fn problem(&self, kind: MappingKind) -> OptProblem {
        OptProblem {
            extras: self.extras,
            eta: self.eta,
            sigma_x: self.sigma_x,
            p_max: self.p_max,
            starts: self.starts,
            seed: self.seed,
            ..OptProblem::new(kind)
        }
    }

    fn mapping_config(&self, kind: MappingKind) -> Option<MappingConfig> {
        self.params.map(|params| MappingConfig { name: kind, params })
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "snr_db",
    "mapping",
    "delta",
    "alpha1",
    "alpha2",
    "extras",
    "sdr_analytical_db",
    "sdr_simulated_db",
    "opta_db",
    "bpam_db",
    "anomaly_rate",
    "eps_approx",
    "eps_ch_weak",
    "eps_ch_2nd",
];

fn ser_sig<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_sig(*v))
}

fn ser_opt_sig<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_str(&fmt_sig(*v)),
        None => s.serialize_str(""),
    }
}

/// One CSV row. Numbers are stored already rounded to 6 significant digits, so
/// writing and re-reading a row reproduces it exactly. Empty cells (`None`) mark
/// quantities that are unavailable or whose computation failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(serialize_with = "ser_sig")]
    pub snr_db: f64,
    pub mapping: MappingKind,
    #[serde(serialize_with = "ser_opt_sig")]
    pub delta: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig")]
    pub alpha1: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig")]
    pub alpha2: Option<f64>,
    pub extras: String,
    #[serde(serialize_with = "ser_opt_sig")]
    pub sdr_analytical_db: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig")]
    pub sdr_simulated_db: Option<f64>,
    #[serde(serialize_with = "ser_sig")]
    pub opta_db: f64,
    #[serde(serialize_with = "ser_sig")]
    pub bpam_db: f64,
    #[serde(serialize_with = "ser_opt_sig")]
    pub anomaly_rate: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig")]
    pub eps_approx: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig")]
    pub eps_ch_weak: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig")]
    pub eps_ch_2nd: Option<f64>,
}

impl SweepRow {
    /// Row carrying only the SNR, the mapping name and the baselines.
    pub fn empty(snr_db: f64, mapping: MappingKind) -> Self {
        let snr = from_db(snr_db);
        Self {
            snr_db: round_sig(snr_db),
            mapping,
            delta: None,
            alpha1: None,
            alpha2: None,
            extras: String::new(),
            sdr_analytical_db: None,
            sdr_simulated_db: None,
            opta_db: round_sig(db(opta_sdr(snr, 3, 2))),
            bpam_db: round_sig(db(bpam_sdr(snr, 3, 2))),
            anomaly_rate: None,
            eps_approx: None,
            eps_ch_weak: None,
            eps_ch_2nd: None,
        }
    }

    fn set_params(&mut self, p: &MappingParams) {
        self.delta = Some(round_sig(p.delta));
        self.alpha1 = Some(round_sig(p.alpha1));
        self.alpha2 = Some(round_sig(p.alpha2));
        self.extras = p.extras.describe();
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Writes the header and `rows` (UTF-8, LF line endings).
pub fn write_rows<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn rows_to_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Inconsistent(e.to_string()))
}

/// Parses CSV written by [`write_rows`]; the header must match exactly.
pub fn read_rows<R: std::io::Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected CSV header: {header:?}")));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes `rows` to `path`, or to stdout when `path` is `None`.
pub fn emit_rows(path: Option<&Path>, rows: &[SweepRow]) -> Result<()> {
    match path {
        Some(p) => write_rows(std::fs::File::create(p)?, rows),
        None => write_rows(std::io::stdout().lock(), rows),
    }
}

/// Rows of a run plus the failures recorded along the way.
#[derive(Debug, Default)]
pub struct Outcome {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<String>,
    pub optima: Vec<OptResult>,
}

impl Outcome {
    /// 0 when every point succeeded, 2 when some failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

/// Per-point simulation seed, independent of the order points are processed in.
fn point_seed(seed: u64, kind: MappingKind, index: usize) -> u64 {
    use rand::RngCore;
    let k = MappingKind::ALL.iter().position(|&m| m == kind).unwrap_or(0) as u64;
    stream_rng(seed, (k << 32) | index as u64).next_u64()
}

struct PointJob {
    kind: MappingKind,
    index: usize,
    snr_db: f64,
    params: Result<MappingParams>,
}

fn evaluate_point(cfg: &ExperimentConfig, job: PointJob, simulate: bool, failures: &mut Vec<String>) -> SweepRow {
    let mut row = SweepRow::empty(job.snr_db, job.kind);
    let label = format!("{} at {} dB", job.kind, fmt_sig(job.snr_db));
    let params = match job.params {
        Ok(p) => p,
        Err(e) => {
            failures.push(format!("{label}: {e}"));
            return row;
        }
    };
    row.set_params(&params);
    let mapping: Box<dyn Mapping> = match build(&MappingConfig { name: job.kind, params }, cfg.sigma_x) {
        Ok(m) => m,
        Err(e) => {
            failures.push(format!("{label}: {e}"));
            return row;
        }
    };
    let noise_var = cfg.p_max / from_db(job.snr_db);
    match analytic_breakdown(mapping.as_ref(), noise_var) {
        Ok(b) => {
            row.sdr_analytical_db = Some(round_sig(b.sdr_db(cfg.sigma_x)));
            row.eps_approx = Some(round_sig(b.eps_approx));
            row.eps_ch_weak = Some(round_sig(b.eps_ch_weak));
            row.eps_ch_2nd = Some(round_sig(b.eps_ch_2nd));
        }
        Err(Error::Unsupported(_)) => {}
        Err(e) => failures.push(format!("{label}: analytical model: {e}")),
    }
    if simulate && cfg.n_samples > 0 {
        let sc = SimConfig {
            snr_db: job.snr_db,
            sigma_x: cfg.sigma_x,
            p_max: cfg.p_max,
            n_samples: cfg.n_samples,
            seed: point_seed(cfg.seed, job.kind, job.index),
            projection: cfg.projection,
        };
        match run_simulation(mapping.as_ref(), &sc) {
            Ok(s) => {
                row.sdr_simulated_db = Some(round_sig(s.sdr_db));
                row.anomaly_rate = Some(round_sig(s.anomaly_rate));
                for w in s.warnings {
                    eprintln!("warning: {label}: {w}");
                }
            }
            Err(e) => failures.push(format!("{label}: simulation: {e}")),
        }
    }
    row
}

/// Parameters per SNR: the fixed ones, or the warm-started optimizer sweep.
fn parameter_jobs(
    cfg: &ExperimentConfig,
    kind: MappingKind,
    snrs: &[f64],
    optima: &mut Vec<OptResult>,
) -> Vec<PointJob> {
    match cfg.mapping_config(kind) {
        Some(mc) => snrs
            .iter()
            .enumerate()
            .map(|(index, &snr_db)| PointJob { kind, index, snr_db, params: Ok(mc.params) })
            .collect(),
        None => sweep(&cfg.problem(kind), snrs)
            .into_iter()
            .enumerate()
            .map(|(index, p)| {
                let params = p.result.map(|r| {
                    let params = r.params;
                    optima.push(r);
                    params
                });
                PointJob { kind, index, snr_db: p.snr_db, params }
            })
            .collect(),
    }
}

fn run(cfg: &ExperimentConfig, simulate: bool) -> Result<Outcome> {
    cfg.validate()?;
    let snrs = cfg.snr.points();
    let mut out = Outcome::default();
    let mut per_mapping = Vec::new();
    for &kind in &cfg.mapping {
        let jobs = parameter_jobs(cfg, kind, &snrs, &mut out.optima);
        let rows: Vec<SweepRow> =
            jobs.into_iter().map(|j| evaluate_point(cfg, j, simulate, &mut out.failures)).collect();
        per_mapping.push(rows);
    }
    // SNR-major order, mappings in configuration order within an SNR.
    for i in 0..snrs.len() {
        for rows in &per_mapping {
            out.rows.push(rows[i].clone());
        }
    }
    Ok(out)
}

/// Optimizer + simulator at every grid point (parameters optimised unless fixed).
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    run(cfg, true)
}

/// Monte-Carlo runs at every grid point; requires fixed parameters.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Outcome> {
    if cfg.params.is_none() {
        return Err(Error::Config("simulate needs fixed params (use sweep to optimise)".into()));
    }
    run(cfg, true)
}

/// Optimised parameters and analytical performance per grid point, no simulation.
pub fn cmd_optimize(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut c = cfg.clone();
    c.params = None;
    run(&c, false)
}

/// OPTA and BPAM reference curve row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    #[serde(serialize_with = "ser_sig")]
    pub snr_db: f64,
    #[serde(serialize_with = "ser_sig")]
    pub opta_db: f64,
    #[serde(serialize_with = "ser_sig")]
    pub bpam_db: f64,
}

pub fn cmd_baselines(m: usize, n: usize, snr: &SnrGrid) -> Result<Vec<BaselineRow>> {
    if m < n || n == 0 {
        return Err(Error::Config(format!("baselines need M ≥ N ≥ 1 (got {m}:{n})")));
    }
    Ok(snr
        .points()
        .into_iter()
        .map(|s| BaselineRow {
            snr_db: s,
            opta_db: round_sig(db(opta_sdr(from_db(s), m, n))),
            bpam_db: round_sig(db(bpam_sdr(from_db(s), m, n))),
        })
        .collect())
}

pub fn write_baselines<W: Write>(w: W, rows: &[BaselineRow]) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(["snr_db", "opta_db", "bpam_db"])?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Curvature summary of one mapping.
#[derive(Clone, Debug)]
pub struct AnalyzeReport {
    pub mapping: MappingConfig,
    pub classification: ClassificationReport,
    pub max_abs_kappa1: f64,
    /// |κ₁| averaged uniformly over the (tail-truncated) channel domain.
    pub mean_abs_kappa1: f64,
    /// E|κ₁| under the channel law; `None` when the mapping has no channel model.
    pub expected_abs_kappa1: Option<f64>,
    pub noise_radius: f64,
    pub min_radius_of_curvature: f64,
    /// min ρ − r over the grid; negative when the noise tube exceeds the local radius.
    pub canal_margin: f64,
    /// Fraction of grid points whose radius of curvature exceeds the noise radius.
    pub canal_safe_fraction: f64,
}

impl fmt::Display for AnalyzeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.classification;
        let p = &self.mapping.params;
        writeln!(f, "mapping            {}", self.mapping.name)?;
        writeln!(
            f,
            "params             delta={} alpha1={} alpha2={} eta={}",
            fmt_sig(p.delta),
            fmt_sig(p.alpha1),
            fmt_sig(p.alpha2),
            fmt_sig(p.eta)
        )?;
        if !p.extras.is_empty() {
            writeln!(f, "extras             {}", p.extras.describe())?;
        }
        writeln!(f, "developable        {} (max violation {})", c.developable, fmt_sig(c.max_developable_violation))?;
        writeln!(f, "minimal            {} (max violation {})", c.minimal, fmt_sig(c.max_minimal_violation))?;
        writeln!(f, "loc coordinates    {} (max violation {})", c.coords_are_loc, fmt_sig(c.max_loc_violation))?;
        writeln!(
            f,
            "geodesic coords    {} (max violation {})",
            c.coords_are_geodesic,
            fmt_sig(c.max_geodesic_violation)
        )?;
        writeln!(f, "max |kappa1|       {}", fmt_sig(self.max_abs_kappa1))?;
        writeln!(f, "mean |kappa1|      {}", fmt_sig(self.mean_abs_kappa1))?;
        if let Some(e) = self.expected_abs_kappa1 {
            writeln!(f, "E|kappa1| (law)    {}", fmt_sig(e))?;
        }
        writeln!(f, "max |K|            {}", fmt_sig(c.max_abs_gaussian))?;
        writeln!(f, "noise radius       {}", fmt_sig(self.noise_radius))?;
        writeln!(f, "min curv. radius   {}", fmt_sig(self.min_radius_of_curvature))?;
        writeln!(f, "canal margin       {}", fmt_sig(self.canal_margin))?;
        write!(f, "canal safe         {}", fmt_sig(self.canal_safe_fraction))
    }
}

const KAPPA_MEAN_SAMPLES: usize = 4000;

/// Fine grid for curvature averages: dense along z₁, where the spiral mappings vary.
fn fine_grid(region: Option<crate::surface::Rect>) -> Grid {
    Grid { n0: 256, n1: 16, region }
}

/// |κ₁| at every cell centre of the grid.
fn grid_kappa(m: &dyn Mapping, grid: Grid) -> Result<Vec<f64>> {
    let region = grid.region.unwrap_or_else(|| m.domain());
    let mut out = Vec::with_capacity(grid.n0 * grid.n1);
    for i in 0..grid.n0 {
        for j in 0..grid.n1 {
            let f = second_fundamental_form(m, region.cell_center(i, j, grid.n0, grid.n1))?;
            out.push(principal_curvatures(&f)?.kappa1.abs());
        }
    }
    Ok(out)
}

/// E|κ₁| with z drawn from the channel law (fixed seed).
fn mean_kappa(m: &dyn Mapping) -> Option<f64> {
    let laws = m.channel_laws().ok()?;
    let mut rng = stream_rng(0xCAFE, 0);
    let mut vals = Vec::with_capacity(KAPPA_MEAN_SAMPLES);
    let mut taken = 0;
    while vals.len() < KAPPA_MEAN_SAMPLES && taken < 4 * KAPPA_MEAN_SAMPLES {
        taken += 1;
        let z = m.normalize_z(crate::surface::Vec2::new(laws[0].sample(&mut rng), laws[1].sample(&mut rng))).0;
        if let Ok(k) = second_fundamental_form(m, z).and_then(|f| principal_curvatures(&f)) {
            if k.kappa1.is_finite() {
                vals.push(k.kappa1.abs());
            }
        }
    }
    (!vals.is_empty()).then(|| crate::channel::pairwise_sum(&vals) / vals.len() as f64)
}

/// Classification and curvature/canal report of one mapping.
pub fn cmd_analyze(mc: &MappingConfig, sigma_x: f64, grid: Grid, noise_radius: f64) -> Result<AnalyzeReport> {
    if !(noise_radius >= 0.0) {
        return Err(Error::Config(format!("noise radius must be non-negative (got {noise_radius})")));
    }
    let m = build(mc, sigma_x)?;
    let classification = classify_surface(m.as_ref(), grid)?;
    let ks = grid_kappa(m.as_ref(), fine_grid(grid.region))?;
    let max_k = ks.iter().copied().fold(classification.max_abs_kappa1, f64::max);
    let mean = ks.iter().sum::<f64>() / ks.len() as f64;
    let radius = |k: f64| if k > 0.0 { 1.0 / k } else { f64::INFINITY };
    let min_rho = radius(max_k);
    let safe = ks.iter().filter(|&&k| radius(k) > noise_radius).count() as f64 / ks.len() as f64;
    Ok(AnalyzeReport {
        mapping: *mc,
        classification,
        max_abs_kappa1: max_k,
        mean_abs_kappa1: mean,
        expected_abs_kappa1: mean_kappa(m.as_ref()),
        noise_radius,
        min_radius_of_curvature: min_rho,
        canal_margin: min_rho - noise_radius,
        canal_safe_fraction: safe,
    })
}

/// Curvature over a (Δ, α₁) parameter grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    #[serde(serialize_with = "ser_sig")]
    pub delta: f64,
    #[serde(serialize_with = "ser_sig")]
    pub alpha1: f64,
    #[serde(serialize_with = "ser_sig")]
    pub max_abs_kappa1: f64,
    #[serde(serialize_with = "ser_sig")]
    pub mean_abs_kappa1: f64,
    #[serde(serialize_with = "ser_opt_sig")]
    pub expected_abs_kappa1: Option<f64>,
}

/// max and mean |κ₁| for every (Δ, α₁) pair, other parameters taken from `base`.
pub fn kappa_grid(
    base: &MappingConfig,
    sigma_x: f64,
    deltas: &[f64],
    alpha1s: &[f64],
    grid: Grid,
) -> Result<Vec<KappaRow>> {
    let mut rows = Vec::with_capacity(deltas.len() * alpha1s.len());
    for &delta in deltas {
        for &alpha1 in alpha1s {
            let mc = MappingConfig { name: base.name, params: MappingParams { delta, alpha1, ..base.params } };
            let m = build(&mc, sigma_x)?;
            let ks = grid_kappa(m.as_ref(), grid)?;
            rows.push(KappaRow {
                delta: round_sig(delta),
                alpha1: round_sig(alpha1),
                max_abs_kappa1: round_sig(ks.iter().copied().fold(0.0, f64::max)),
                mean_abs_kappa1: round_sig(ks.iter().sum::<f64>() / ks.len() as f64),
                expected_abs_kappa1: mean_kappa(m.as_ref()).map(round_sig),
            });
        }
    }
    Ok(rows)
}

pub fn write_kappa_grid<W: Write>(w: W, rows: &[KappaRow]) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(["delta", "alpha1", "max_abs_kappa1", "mean_abs_kappa1", "expected_abs_kappa1"])?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Parameters optimised at one SNR (for commands that need a concrete mapping).
pub fn optimized_config(cfg: &ExperimentConfig, kind: MappingKind, snr_db: f64) -> Result<MappingConfig> {
    Ok(MappingConfig { name: kind, params: optimize(&cfg.problem(kind), snr_db)?.params })
}

/// Worker count from `SKGEOM_THREADS` (unset: rayon's default).
pub fn thread_count_from_env() -> Result<Option<usize>> {
    match std::env::var("SKGEOM_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("SKGEOM_THREADS must be a positive integer (got '{v}')"))),
        },
    }
}

/// Caps the global worker pool at `SKGEOM_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Some(n) = thread_count_from_env()? {
        // Fails only when the pool was already initialised; keep that one.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
