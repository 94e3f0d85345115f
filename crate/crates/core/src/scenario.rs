//! Config-driven runs: a TOML scenario goes in, CSV tables and a flat
//! key-value manifest come out.
//!
//! ```toml
//! name = "well_and_oscillators"
//!
//! [system.1]
//! kind = "quartic"
//! a = 0.5
//! b = -2.0
//! c = 1.0
//!
//! [system.2]
//! kind = "harmonic"
//! b = 1.0
//! repeat = 2
//!
//! [grids]
//! beta_min = 0.1
//! beta_max = 20.0
//! beta_count = 60
//! energy_max = 30.0
//!
//! [outputs]
//! canonical_sweep = true
//! distribution = [1.0]
//! ```
//!
//! Components may carry a `series` label; each label forms its own system
//! and every table gets a `series` column.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canonical::{component_moments, symmetric_double_well_config_integral, Canonical};
use crate::density::{build_density, EnergyGrid, LevelDensity, PowerLawSpec};
use crate::error::{Error, Result};
use crate::esqpt::{detect_nonanalyticity, enumerate_stationary_points, Detected};
use crate::microcanonical::{ExtremumKind, Microcanonical, RootLocation, Slope};
use crate::potential::{PotentialComponent, SeparableSystem};
use crate::quadrature::Tolerance;

/// Label used for components without an explicit `series`.
pub const DEFAULT_SERIES: &str = "main";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindTag {
    Harmonic,
    Quartic,
    Plateau,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plateaus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    repeat: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    series: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    system: BTreeMap<String, RawComponent>,
    grids: Grids,
    #[serde(default)]
    outputs: Outputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    #[default]
    Log,
}

fn default_cells() -> usize {
    4000
}

/// Inverse-temperature sweep and energy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_count: usize,
    #[serde(default)]
    pub beta_spacing: Spacing,
    /// Span of the energy grid above the ground state. Defaults to the
    /// highest stationary energy plus `-ln(1e-12) / beta_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_max: Option<f64>,
    #[serde(default = "default_cells")]
    pub energy_count: usize,
}

impl Grids {
    pub fn betas(&self) -> Vec<f64> {
        let n = self.beta_count;
        if n == 1 {
            return vec![self.beta_min];
        }
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.beta_spacing {
                    Spacing::Linear => self.beta_min + t * (self.beta_max - self.beta_min),
                    Spacing::Log => {
                        (self.beta_min.ln() + t * (self.beta_max / self.beta_min).ln()).exp()
                    }
                }
            })
            .collect()
    }

    fn energy_span(&self, system: &SeparableSystem) -> f64 {
        self.energy_max
            .unwrap_or_else(|| system.highest_critical_energy() - (1e-12f64).ln() / self.beta_min)
    }
}

/// Which tables to write.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub canonical_sweep: bool,
    pub micro_sweep: bool,
    pub caloric_curve: bool,
    pub density: bool,
    /// One distribution table per listed inverse temperature.
    pub distribution: Vec<f64>,
    pub stationary_points: bool,
    pub singularity_report: bool,
    pub closed_form_checks: bool,
}

impl Outputs {
    fn any(&self) -> bool {
        self.canonical_sweep
            || self.micro_sweep
            || self.caloric_curve
            || self.density
            || !self.distribution.is_empty()
            || self.stationary_points
            || self.singularity_report
            || self.closed_form_checks
    }

    fn needs_density(&self) -> bool {
        self.micro_sweep
            || self.caloric_curve
            || self.density
            || !self.distribution.is_empty()
            || self.singularity_report
            || self.closed_form_checks
    }
}

/// Parameters of one configured component.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentModel {
    Harmonic { b: f64 },
    Quartic { a: f64, b: f64, c: f64 },
    Plateau(Vec<(f64, f64)>),
    Power { coefficient: f64, exponent: f64 },
}

impl ComponentModel {
    pub fn build(&self) -> Result<PotentialComponent> {
        match self {
            Self::Harmonic { b } => PotentialComponent::harmonic(*b),
            Self::Quartic { a, b, c } => PotentialComponent::quartic(*a, *b, *c),
            Self::Plateau(p) => PotentialComponent::plateau(p),
            Self::Power {
                coefficient,
                exponent,
            } => PotentialComponent::power(*coefficient, *exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    /// The `N` of `[system.N]`.
    pub index: usize,
    pub series: Option<String>,
    pub repeat: usize,
    pub model: ComponentModel,
}

impl ComponentSpec {
    pub fn series_label(&self) -> &str {
        self.series.as_deref().unwrap_or(DEFAULT_SERIES)
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    /// Sorted by index.
    pub components: Vec<ComponentSpec>,
    pub grids: Grids,
    pub outputs: Outputs,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn header_line(text: &str, key: &str) -> Option<usize> {
    let header = format!("[system.{key}]");
    text.lines()
        .position(|l| l.trim().replace(' ', "") == header)
        .map(|i| i + 1)
}

fn parse_pairs(text: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let inner = item
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| format!("expected `(E,L)`, got `{item}`"))?;
            let (e, l) = inner
                .split_once(',')
                .ok_or_else(|| format!("expected `(E,L)`, got `{item}`"))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("`{}`: {e}", s.trim()))
            };
            Ok((num(e)?, num(l)?))
        })
        .collect()
}

fn format_pairs(pairs: &[(f64, f64)]) -> String {
    pairs
        .iter()
        .map(|(e, l)| format!("({e:?},{l:?})"))
        .collect::<Vec<_>>()
        .join(";")
}

fn component_model(raw: &RawComponent) -> std::result::Result<ComponentModel, String> {
    let present = |name: &str, v: bool| -> std::result::Result<(), String> {
        if v {
            Err(format!("key `{name}` is not used by kind {:?}", raw.kind).to_lowercase())
        } else {
            Ok(())
        }
    };
    let need = |name: &str, v: Option<f64>| v.ok_or_else(|| format!("missing key `{name}`"));
    match raw.kind {
        KindTag::Harmonic => {
            present("a", raw.a.is_some())?;
            present("c", raw.c.is_some())?;
            present("plateaus", raw.plateaus.is_some())?;
            present("power", raw.power.is_some())?;
            Ok(ComponentModel::Harmonic {
                b: need("b", raw.b)?,
            })
        }
        KindTag::Quartic => {
            present("plateaus", raw.plateaus.is_some())?;
            present("power", raw.power.is_some())?;
            Ok(ComponentModel::Quartic {
                a: raw.a.unwrap_or(0.0),
                b: need("b", raw.b)?,
                c: need("c", raw.c)?,
            })
        }
        KindTag::Plateau => {
            present("a", raw.a.is_some())?;
            present("b", raw.b.is_some())?;
            present("c", raw.c.is_some())?;
            present("power", raw.power.is_some())?;
            let text = raw.plateaus.as_deref().ok_or("missing key `plateaus`")?;
            Ok(ComponentModel::Plateau(parse_pairs(text)?))
        }
        KindTag::Power => {
            present("a", raw.a.is_some())?;
            present("b", raw.b.is_some())?;
            present("c", raw.c.is_some())?;
            present("plateaus", raw.plateaus.is_some())?;
            let text = raw.power.as_deref().ok_or("missing key `power`")?;
            let (b, i) = text
                .split_once(',')
                .ok_or_else(|| format!("expected `b,I`, got `{text}`"))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("`{}`: {e}", s.trim()))
            };
            Ok(ComponentModel::Power {
                coefficient: num(b)?,
                exponent: num(i)?,
            })
        }
    }
}

fn raw_component(spec: &ComponentSpec) -> RawComponent {
    let mut raw = RawComponent {
        kind: KindTag::Harmonic,
        a: None,
        b: None,
        c: None,
        plateaus: None,
        power: None,
        repeat: (spec.repeat != 1).then_some(spec.repeat),
        series: spec.series.clone(),
    };
    match &spec.model {
        ComponentModel::Harmonic { b } => raw.b = Some(*b),
        ComponentModel::Quartic { a, b, c } => {
            raw.kind = KindTag::Quartic;
            raw.a = Some(*a);
            raw.b = Some(*b);
            raw.c = Some(*c);
        }
        ComponentModel::Plateau(p) => {
            raw.kind = KindTag::Plateau;
            raw.plateaus = Some(format_pairs(p));
        }
        ComponentModel::Power {
            coefficient,
            exponent,
        } => {
            raw.kind = KindTag::Power;
            raw.power = Some(format!("{coefficient:?},{exponent:?}"));
        }
    }
    raw
}

fn semantic(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

/// Parses and validates a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    if raw.system.is_empty() {
        return Err(semantic(None, "f >= 1 required: no [system.N] sections"));
    }
    let mut components = Vec::with_capacity(raw.system.len());
    for (key, rc) in &raw.system {
        let line = header_line(text, key);
        let index: usize = key.parse().map_err(|_| {
            semantic(
                line,
                format!("[system.{key}]: section index must be a non-negative integer"),
            )
        })?;
        let model =
            component_model(rc).map_err(|m| semantic(line, format!("[system.{key}]: {m}")))?;
        model
            .build()
            .map_err(|e| semantic(line, format!("[system.{key}]: {e}")))?;
        let repeat = rc.repeat.unwrap_or(1);
        if repeat == 0 {
            return Err(semantic(
                line,
                format!("[system.{key}]: repeat must be >= 1"),
            ));
        }
        if let Some(s) = &rc.series {
            if s.is_empty()
                || !s
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(semantic(
                    line,
                    format!("[system.{key}]: series label `{s}` must be [A-Za-z0-9_-]+"),
                ));
            }
        }
        components.push(ComponentSpec {
            index,
            series: rc.series.clone(),
            repeat,
            model,
        });
    }
    components.sort_by_key(|c| c.index);
    if let Some(w) = components.windows(2).find(|w| w[0].index == w[1].index) {
        return Err(semantic(
            None,
            format!("duplicate section index {}", w[0].index),
        ));
    }
    let g = &raw.grids;
    if !(g.beta_min > 0.0 && g.beta_min.is_finite()) {
        return Err(semantic(
            None,
            format!("[grids]: beta_min must be > 0, got {}", g.beta_min),
        ));
    }
    if !(g.beta_max >= g.beta_min && g.beta_max.is_finite()) {
        return Err(semantic(None, "[grids]: beta_max must be >= beta_min"));
    }
    if g.beta_count == 0 {
        return Err(semantic(None, "[grids]: beta_count must be >= 1"));
    }
    if g.energy_count < 8 {
        return Err(semantic(None, "[grids]: energy_count must be >= 8"));
    }
    if let Some(e) = g.energy_max {
        if !(e > 0.0 && e.is_finite()) {
            return Err(semantic(None, "[grids]: energy_max must be > 0"));
        }
    }
    if let Some(b) = raw
        .outputs
        .distribution
        .iter()
        .find(|b| !(**b > 0.0 && b.is_finite()))
    {
        return Err(semantic(
            None,
            format!("[outputs]: distribution beta must be > 0, got {b}"),
        ));
    }
    if !raw.outputs.any() {
        return Err(semantic(None, "[outputs]: nothing requested"));
    }
    Ok(Scenario {
        name: raw.name,
        components,
        grids: raw.grids,
        outputs: raw.outputs,
    })
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_scenario(s)
    }
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        parse_scenario(&fs::read_to_string(path)?)
    }

    /// Canonical TOML text; parsing it gives back an identical scenario.
    pub fn to_toml(&self) -> String {
        let raw = RawConfig {
            name: self.name.clone(),
            system: self
                .components
                .iter()
                .map(|c| (c.index.to_string(), raw_component(c)))
                .collect(),
            grids: self.grids.clone(),
            outputs: self.outputs.clone(),
        };
        toml::to_string(&raw).expect("scenario is always representable")
    }

    /// Systems by series label, in order of first appearance.
    pub fn systems(&self) -> Result<Vec<(String, SeparableSystem)>> {
        let mut groups: Vec<(String, Vec<PotentialComponent>)> = Vec::new();
        for spec in &self.components {
            let label = spec.series_label();
            let component = spec.model.build()?;
            let slot = match groups.iter().position(|(l, _)| l == label) {
                Some(i) => i,
                None => {
                    groups.push((label.to_string(), Vec::new()));
                    groups.len() - 1
                }
            };
            groups[slot]
                .1
                .extend(std::iter::repeat_n(component, spec.repeat));
        }
        groups
            .into_iter()
            .map(|(l, c)| SeparableSystem::new(c).map(|s| (l, s)))
            .collect()
    }

    /// Hex SHA-256 of the canonical text, truncated to 16 digits.
    pub fn hash(&self, profile: ToleranceProfile) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml().as_bytes());
        h.update(profile.as_str().as_bytes());
        hex::encode(h.finalize())[..16].to_string()
    }
}

/// Accuracy presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToleranceProfile {
    /// Looser quadrature and at most 1000 energy cells.
    Fast,
    #[default]
    Strict,
}

impl ToleranceProfile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fast => "fast",
            Self::Strict => "strict",
        }
    }

    pub fn density_tolerance(&self) -> Tolerance {
        match self {
            Self::Fast => Tolerance::relative(1e-9),
            Self::Strict => Tolerance::default(),
        }
    }

    pub fn canonical_tolerance(&self) -> Tolerance {
        match self {
            Self::Fast => Tolerance::relative(1e-9),
            Self::Strict => Tolerance::relative(1e-13),
        }
    }

    pub fn cells(&self, requested: usize) -> usize {
        match self {
            Self::Fast => requested.min(1000),
            Self::Strict => requested,
        }
    }
}

impl FromStr for ToleranceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Self::Fast),
            "strict" => Ok(Self::Strict),
            _ => Err(Error::InvalidParameter(format!(
                "tolerance profile must be fast or strict, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for ToleranceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Parent directory; the run writes into `<out>/<name>-<hash>`.
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub profile: ToleranceProfile,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            threads: None,
            profile: ToleranceProfile::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub directory: PathBuf,
    /// Written tables, manifest last.
    pub files: Vec<PathBuf>,
    /// `(output, message)` for every output that failed or was partial.
    pub failures: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct CanonicalRow<'a> {
    series: &'a str,
    beta: f64,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "Z")]
    z: f64,
    #[serde(rename = "lnZ")]
    ln_z: f64,
    #[serde(rename = "C_can")]
    c_can: f64,
    #[serde(rename = "C_can_per_dof")]
    c_per_dof: f64,
    #[serde(rename = "C_config")]
    c_config: f64,
    #[serde(rename = "C_lnZ")]
    c_ln_z: f64,
    #[serde(rename = "dC_dbeta")]
    dc: f64,
    #[serde(rename = "mean_V")]
    mean_v: f64,
    #[serde(rename = "var_V")]
    var_v: f64,
    #[serde(rename = "skew_V")]
    skew_v: f64,
}

#[derive(Serialize)]
struct MicroRow<'a> {
    series: &'a str,
    beta: f64,
    #[serde(rename = "T")]
    t: f64,
    root: usize,
    branch_id: String,
    slope: &'static str,
    #[serde(rename = "E")]
    energy: f64,
    #[serde(rename = "C_mic")]
    c_mic: f64,
    #[serde(rename = "C_mic_per_dof")]
    c_per_dof: f64,
}

#[derive(Serialize)]
struct CaloricRow<'a> {
    series: &'a str,
    #[serde(rename = "E")]
    energy: f64,
    beta_mic: f64,
    branch_id: String,
}

#[derive(Serialize)]
struct DensityRow<'a> {
    series: &'a str,
    #[serde(rename = "E")]
    energy: f64,
    rho: f64,
}

#[derive(Serialize)]
struct SingularRow<'a> {
    series: &'a str,
    #[serde(rename = "E_c")]
    energy: f64,
    #[serde(rename = "type")]
    kind: &'static str,
    sign: i8,
    order: usize,
    multiplicity: usize,
}

#[derive(Serialize)]
struct DistributionRow<'a> {
    series: &'a str,
    #[serde(rename = "E")]
    energy: f64,
    w: f64,
    w_relative: f64,
}

#[derive(Serialize)]
struct ExtremumRow<'a> {
    series: &'a str,
    beta: f64,
    #[serde(rename = "E")]
    energy: f64,
    kind: &'static str,
    w_relative: f64,
}

#[derive(Serialize)]
struct StationaryRow<'a> {
    series: &'a str,
    #[serde(rename = "E_c")]
    energy: f64,
    r: usize,
    degenerate: bool,
    predicted_type: &'static str,
    multiplicity: usize,
    configuration: String,
}

#[derive(Serialize)]
struct ReportRow<'a> {
    series: &'a str,
    #[serde(rename = "E_c")]
    energy: f64,
    order: usize,
    predicted_type: &'static str,
    predicted_sign: i8,
    multiplicity: usize,
    detected_type: &'static str,
    detected_sign: i8,
    amplitude: f64,
    #[serde(rename = "located_E")]
    located_energy: f64,
    resolution: f64,
    agrees: bool,
}

#[derive(Serialize)]
struct CheckRow<'a> {
    series: &'a str,
    check: &'static str,
    beta: f64,
    numeric: f64,
    closed_form: f64,
    rel_error: f64,
}

fn slope_label(s: Option<Slope>) -> &'static str {
    match s {
        Some(Slope::Decreasing) => "decreasing",
        Some(Slope::Increasing) => "increasing",
        None => "",
    }
}

fn location_label(l: RootLocation) -> String {
    match l {
        RootLocation::Branch(b) => b.to_string(),
        RootLocation::Window(w) => format!("window-{w}"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// Collects rows for one table, remembering per-row failures.
struct Table<T> {
    rows: Vec<T>,
    errors: Vec<String>,
}

impl<T> Table<T> {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn absorb(&mut self, r: Result<Vec<T>>, context: impl FnOnce() -> String) {
        match r {
            Ok(mut rows) => self.rows.append(&mut rows),
            Err(e) => self.errors.push(format!("{}: {e}", context())),
        }
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
    failures: Vec<(String, String)>,
    manifest: Vec<(String, String)>,
}

impl Writer {
    fn table<T: Serialize>(&mut self, name: &str, table: Table<T>) {
        let path = self.dir.join(format!("{name}.csv"));
        let status = match write_csv(&path, &table.rows) {
            Ok(()) => {
                self.files.push(path);
                if table.errors.is_empty() {
                    "ok".to_string()
                } else {
                    format!("partial ({} errors)", table.errors.len())
                }
            }
            Err(e) => format!("failed ({e})"),
        };
        if !table.errors.is_empty() {
            self.failures
                .push((name.to_string(), table.errors.join("; ")));
        }
        for (i, e) in table.errors.iter().enumerate() {
            self.manifest
                .push((format!("output.{name}.error.{i}"), e.clone()));
        }
        self.manifest
            .push((format!("output.{name}.status"), status));
    }

    fn record(&mut self, key: impl Into<String>, value: impl ToString) {
        self.manifest.push((key.into(), value.to_string()));
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every requested output for every series and writes the results.
///
/// Failures of individual outputs are recorded in the manifest and in the
/// returned report; the remaining outputs are still produced.
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<RunReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(scenario, options))
}

fn run_in_pool(scenario: &Scenario, options: &RunOptions) -> Result<RunReport> {
    let started = Instant::now();
    let profile = options.profile;
    let hash = scenario.hash(profile);
    let dir_name = match &scenario.name {
        Some(n) => format!("{n}-{hash}"),
        None => hash.clone(),
    };
    let dir = options.out_dir.join(dir_name);
    fs::create_dir_all(&dir)?;
    let config_path = dir.join("config.toml");
    fs::write(&config_path, scenario.to_toml())?;

    let mut w = Writer {
        dir: dir.clone(),
        files: vec![config_path],
        failures: Vec::new(),
        manifest: Vec::new(),
    };
    w.record("crate_version", env!("CARGO_PKG_VERSION"));
    w.record("config_hash", &hash);
    w.record("name", scenario.name.as_deref().unwrap_or(""));
    w.record("tolerance_profile", profile);
    w.record("threads", rayon::current_num_threads());
    w.record(
        "density_quadrature_rel_tol",
        profile.density_tolerance().rel,
    );
    w.record(
        "canonical_quadrature_rel_tol",
        profile.canonical_tolerance().rel,
    );
    w.record(
        "beta_grid",
        format!(
            "{} to {} ({} points, {:?})",
            scenario.grids.beta_min,
            scenario.grids.beta_max,
            scenario.grids.beta_count,
            scenario.grids.beta_spacing
        ),
    );
    w.record(
        "density_representation",
        "cell means; node j at origin + (j + 1/2) h, so a grid-aligned E_c is sampled half a cell away",
    );

    let betas = scenario.grids.betas();
    let outputs = &scenario.outputs;
    let systems = scenario.systems()?;
    let mut warnings = Vec::new();

    let mut canonical_rows = Table::new();
    let mut micro_rows = Table::new();
    let mut caloric_rows = Table::new();
    let mut density_rows = Table::new();
    let mut singular_rows = Table::new();
    let mut dist_rows: Vec<Table<DistributionRow>> =
        outputs.distribution.iter().map(|_| Table::new()).collect();
    let mut extrema_rows = Table::new();
    let mut stationary_rows = Table::new();
    let mut report_rows = Table::new();
    let mut check_rows = Table::new();
    let mut times: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut timed = |stage: &'static str, t: Instant| {
        *times.entry(stage).or_default() += t.elapsed().as_secs_f64();
    };

    for (label, system) in &systems {
        let label = label.as_str();
        let f = system.dof();
        w.record(format!("series.{label}.dof"), f);
        let canon = Canonical::new(system).with_tolerance(profile.canonical_tolerance());

        if outputs.canonical_sweep {
            let t = Instant::now();
            let rows: Vec<Result<CanonicalRow>> = betas
                .par_iter()
                .map(|&beta| {
                    let m = canon.moments(beta)?;
                    let ln_z = canon.ln_partition_function(beta)?;
                    let c = canon.heat_capacity(beta)?;
                    let c_ln_z = canon.heat_capacity_from_ln_z(beta)?.value;
                    let dc = canon.dc_dbeta(beta)?;
                    Ok(CanonicalRow {
                        series: label,
                        beta,
                        t: 1.0 / beta,
                        z: ln_z.exp(),
                        ln_z,
                        c_can: c,
                        c_per_dof: c / f as f64,
                        c_config: beta * beta * m.dispersion,
                        c_ln_z,
                        dc,
                        mean_v: m.mean,
                        var_v: m.dispersion,
                        skew_v: m.skewness(),
                    })
                })
                .collect();
            for (beta, r) in betas.iter().zip(rows) {
                canonical_rows.absorb(r.map(|x| vec![x]), || format!("{label} beta={beta}"));
            }
            timed("canonical_sweep", t);
        }

        if outputs.stationary_points {
            let t = Instant::now();
            let r = enumerate_stationary_points(system).map(|pts| {
                pts.iter()
                    .map(|p| {
                        let tol = 1e-9 * (1.0 + p.energy.abs());
                        StationaryRow {
                            series: label,
                            energy: p.energy,
                            r: p.rank,
                            degenerate: p.degenerate,
                            predicted_type: p.predicted.label(),
                            multiplicity: pts
                                .iter()
                                .filter(|q| (q.energy - p.energy).abs() <= tol)
                                .count(),
                            configuration: p
                                .configuration
                                .iter()
                                .map(|q| format!("{q:?}"))
                                .collect::<Vec<_>>()
                                .join(" "),
                        }
                    })
                    .collect()
            });
            stationary_rows.absorb(r, || label.to_string());
            timed("stationary_points", t);
        }

        if !outputs.needs_density() {
            continue;
        }
        let t = Instant::now();
        let span = scenario.grids.energy_span(system);
        if span <= system.highest_critical_energy() {
            warnings.push(format!(
                "series {label}: energy_max {span} does not exceed the highest stationary energy {}",
                system.highest_critical_energy()
            ));
        }
        let cells = profile.cells(scenario.grids.energy_count);
        let density = EnergyGrid::new(span, cells)
            .and_then(|g| build_density(system, g, profile.density_tolerance()));
        timed("density", t);
        let density = match density {
            Ok(d) => d,
            Err(e) => {
                let msg = format!("{label}: level density: {e}");
                for table in [
                    &mut micro_rows.errors,
                    &mut caloric_rows.errors,
                    &mut density_rows.errors,
                    &mut extrema_rows.errors,
                    &mut report_rows.errors,
                    &mut check_rows.errors,
                ] {
                    table.push(msg.clone());
                }
                for d in &mut dist_rows {
                    d.errors.push(msg.clone());
                }
                continue;
            }
        };
        w.record(format!("series.{label}.energy_span"), span);
        w.record(format!("series.{label}.energy_cells"), cells);
        w.record(format!("series.{label}.energy_spacing"), density.spacing());

        if outputs.density {
            density_rows
                .rows
                .extend(
                    density
                        .energies()
                        .into_iter()
                        .zip(density.values())
                        .map(|(e, &rho)| DensityRow {
                            series: label,
                            energy: e,
                            rho,
                        }),
                );
            singular_rows
                .rows
                .extend(density.singular_points().iter().map(|s| SingularRow {
                    series: label,
                    energy: s.energy,
                    kind: s.kind.label(),
                    sign: s.kind.sign(),
                    order: s.order,
                    multiplicity: s.multiplicity,
                }));
        }

        if outputs.singularity_report {
            let t = Instant::now();
            let rows: Vec<(f64, Result<ReportRow>)> = density
                .singular_points()
                .par_iter()
                .filter(|s| s.energy < density.top())
                .map(|s| {
                    let r = detect_nonanalyticity(&density, s.energy, s.order).map(|d| ReportRow {
                        series: label,
                        energy: s.energy,
                        order: s.order,
                        predicted_type: s.kind.label(),
                        predicted_sign: s.kind.sign(),
                        multiplicity: s.multiplicity,
                        detected_type: d.detected.label(),
                        detected_sign: d.sign,
                        amplitude: d.amplitude,
                        located_energy: d.located_energy,
                        resolution: d.resolution,
                        agrees: d.detected.matches(&s.kind) && d.sign == s.kind.sign(),
                    });
                    (s.energy, r)
                })
                .collect();
            for (e, r) in rows {
                report_rows.absorb(r.map(|x| vec![x]), || format!("{label} E_c={e}"));
            }
            let unresolved = report_rows
                .rows
                .iter()
                .filter(|r| r.series == label && r.detected_type == Detected::Inconclusive.label())
                .count();
            if unresolved > 0 {
                warnings.push(format!(
                    "series {label}: {unresolved} singular points unresolved at this grid spacing"
                ));
            }
            timed("singularity_report", t);
        }

        if outputs.closed_form_checks {
            let t = Instant::now();
            check_rows.absorb(
                closed_form_checks(label, system, &canon, &density, &betas),
                || label.to_string(),
            );
            timed("closed_form_checks", t);
        }

        let needs_micro =
            outputs.micro_sweep || outputs.caloric_curve || !outputs.distribution.is_empty();
        if !needs_micro {
            continue;
        }
        let t = Instant::now();
        let micro = Microcanonical::new(density.clone());
        timed("caloric_curve", t);

        if !outputs.distribution.is_empty() {
            let t = Instant::now();
            let results: Vec<_> = outputs
                .distribution
                .par_iter()
                .map(|&beta| crate::microcanonical::thermal_distribution(&density, beta))
                .collect();
            for ((table, &beta), r) in dist_rows.iter_mut().zip(&outputs.distribution).zip(results)
            {
                match r {
                    Ok(d) => {
                        table
                            .rows
                            .extend(d.energies.iter().zip(&d.values).map(|(&e, &v)| {
                                DistributionRow {
                                    series: label,
                                    energy: e,
                                    w: v * d.scale,
                                    w_relative: v,
                                }
                            }));
                        extrema_rows
                            .rows
                            .extend(d.extrema.iter().map(|x| ExtremumRow {
                                series: label,
                                beta,
                                energy: x.energy,
                                kind: match x.kind {
                                    ExtremumKind::Maximum => "maximum",
                                    ExtremumKind::Minimum => "minimum",
                                },
                                w_relative: x.value,
                            }));
                    }
                    Err(e) => {
                        table.errors.push(format!("{label} beta={beta}: {e}"));
                        extrema_rows
                            .errors
                            .push(format!("{label} beta={beta}: {e}"));
                    }
                }
            }
            timed("distribution", t);
        }

        let micro = match micro {
            Ok(m) => m,
            Err(e) => {
                if outputs.micro_sweep {
                    micro_rows.errors.push(format!("{label}: {e}"));
                }
                if outputs.caloric_curve {
                    caloric_rows.errors.push(format!("{label}: {e}"));
                }
                continue;
            }
        };

        if outputs.caloric_curve {
            let curve = micro.curve();
            let mut rows: Vec<CaloricRow> = curve
                .samples()
                .iter()
                .zip(curve.branch_of_samples())
                .map(|(s, b)| CaloricRow {
                    series: label,
                    energy: s.energy,
                    beta_mic: s.beta,
                    branch_id: b.to_string(),
                })
                .collect();
            for (k, win) in curve.windows().iter().enumerate() {
                rows.extend(win.interior.iter().map(|&(e, b)| CaloricRow {
                    series: label,
                    energy: e,
                    beta_mic: b,
                    branch_id: format!("window-{k}"),
                }));
            }
            rows.sort_by(|a, b| a.energy.total_cmp(&b.energy));
            caloric_rows.rows.extend(rows);
        }

        if outputs.micro_sweep {
            let t = Instant::now();
            let rows: Vec<Result<Vec<MicroRow>>> = betas
                .par_iter()
                .map(|&beta| {
                    Ok(micro
                        .heat_capacity(beta)?
                        .into_iter()
                        .enumerate()
                        .map(|(i, c)| MicroRow {
                            series: label,
                            beta,
                            t: 1.0 / beta,
                            root: i,
                            branch_id: location_label(c.location),
                            slope: slope_label(c.slope),
                            energy: c.energy,
                            c_mic: c.value,
                            c_per_dof: c.value / f as f64,
                        })
                        .collect())
                })
                .collect();
            for (beta, r) in betas.iter().zip(rows) {
                micro_rows.absorb(r, || format!("{label} beta={beta}"));
            }
            timed("micro_sweep", t);
        }
    }

    if outputs.canonical_sweep {
        w.table("canonical_sweep", canonical_rows);
    }
    if outputs.micro_sweep {
        w.table("micro_sweep", micro_rows);
    }
    if outputs.caloric_curve {
        w.table("caloric_curve", caloric_rows);
    }
    if outputs.density {
        w.table("density", density_rows);
        w.table("density_singular_points", singular_rows);
    }
    for (beta, table) in outputs.distribution.iter().zip(dist_rows) {
        w.table(&format!("distribution_beta_{beta:?}"), table);
    }
    if !outputs.distribution.is_empty() {
        w.table("distribution_extrema", extrema_rows);
    }
    if outputs.stationary_points {
        w.table("stationary_points", stationary_rows);
    }
    if outputs.singularity_report {
        w.table("singularity_report", report_rows);
    }
    if outputs.closed_form_checks {
        w.table("closed_form_checks", check_rows);
    }

    for (stage, secs) in &times {
        w.record(format!("stage.{stage}.wall_seconds"), format!("{secs:.6}"));
    }
    w.record(
        "total.wall_seconds",
        format!("{:.6}", started.elapsed().as_secs_f64()),
    );
    for (i, msg) in warnings.iter().enumerate() {
        w.record(format!("warning.{i}"), msg);
    }
    let manifest_path = dir.join("manifest.txt");
    let text: String = w
        .manifest
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.replace('\n', " ")))
        .collect();
    fs::write(&manifest_path, text)?;
    w.files.push(manifest_path);
    Ok(RunReport {
        directory: dir,
        files: w.files,
        failures: w.failures,
        warnings,
    })
}

fn closed_form_checks<'a>(
    label: &'a str,
    system: &SeparableSystem,
    canon: &Canonical<'_>,
    density: &LevelDensity,
    betas: &[f64],
) -> Result<Vec<CheckRow<'a>>> {
    let mut rows = Vec::new();
    let span = density.top() - density.origin();
    // Only where the truncated grid holds essentially all of the weight.
    for &beta in betas.iter().filter(|&&b| b * span > 30.0) {
        let z = canon.partition_function(beta)?;
        let lt = density.laplace_transform(beta)?;
        rows.push(CheckRow {
            series: label,
            check: "laplace_vs_Z",
            beta,
            numeric: lt,
            closed_form: z,
            rel_error: rel(lt, z),
        });
    }
    if let Some(spec) = PowerLawSpec::from_system(system) {
        let m = spec.exponent();
        for &beta in betas {
            let c = canon.heat_capacity(beta)?;
            rows.push(CheckRow {
                series: label,
                check: "power_law_C_can",
                beta,
                numeric: c,
                closed_form: m,
                rel_error: rel(c, m),
            });
            let z = canon.partition_function(beta)?;
            let exact = spec.partition_function(beta)?;
            rows.push(CheckRow {
                series: label,
                check: "power_law_Z",
                beta,
                numeric: z,
                closed_form: exact,
                rel_error: rel(z, exact),
            });
        }
    }
    for component in system.components() {
        let PotentialComponent::Polynomial(well) = component else {
            continue;
        };
        let (a, b, c) = well.coefficients();
        if a != 0.0 || b >= 0.0 || c <= 0.0 {
            continue;
        }
        for &beta in betas {
            let numeric = component_moments(component, beta, Tolerance::relative(1e-13))?
                .ln_z
                .exp();
            let exact =
                symmetric_double_well_config_integral(b, c, beta)? * (-beta * well.shift()).exp();
            rows.push(CheckRow {
                series: label,
                check: "bessel_double_well_Z",
                beta,
                numeric,
                closed_form: exact,
                rel_error: rel(numeric, exact),
            });
        }
        break;
    }
    Ok(rows)
}
