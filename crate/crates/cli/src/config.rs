//! Run configuration: TOML on disk, dotted `--set` overrides, strict schema.

use std::fmt;
use std::path::{Path, PathBuf};

use nehari_core::certify::{CertifyTolerances, ConditionPlan};
use nehari_core::models::ModelSpec;
use nehari_core::nehari::SolverConfig;
use nehari_core::pipeline::{PipelineOptions, DIRECT_MODES, DUAL_MODES};
use nehari_core::SymmetryClass;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SolveDirect,
    SolveDual,
    CheckConditions,
    FenchelTable,
    Certify,
    Sweep,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SolveDirect => "solve_direct",
            Mode::SolveDual => "solve_dual",
            Mode::CheckConditions => "check_conditions",
            Mode::FenchelTable => "fenchel_table",
            Mode::Certify => "certify",
            Mode::Sweep => "sweep",
        }
    }
}

/// Which model family a mode talks to: a potential `V` or a Hamiltonian `H`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    Direct,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub stem: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), stem: "result".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub periods: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FenchelTableConfig {
    pub points: usize,
    pub min_radius: f64,
    pub max_radius: f64,
    pub seed: u64,
    /// Relative tolerance for the closed-form and Young-equality checks.
    pub tol: f64,
}

impl Default for FenchelTableConfig {
    fn default() -> Self {
        FenchelTableConfig { points: 100, min_radius: 1e-2, max_radius: 1e2, seed: 0, tol: 1e-8 }
    }
}

/// Coefficients supplied for the `certify` mode, in the layout of the space
/// built from `period_T`, `dimension`, `symmetry_class` and `num_modes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectedCandidate {
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub formulation: Formulation,
    pub model: ModelSpec,
    #[serde(rename = "period_T", default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_class")]
    pub symmetry_class: SymmetryClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_modes: Option<usize>,
    #[serde(default = "default_true")]
    pub check_truncation: bool,
    #[serde(default = "default_true")]
    pub check_conditions: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub certify: CertifyTolerances,
    #[serde(default)]
    pub conditions: ConditionPlan,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub fenchel: FenchelTableConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<InjectedCandidate>,
}

fn default_dimension() -> usize {
    1
}
fn default_class() -> SymmetryClass {
    SymmetryClass::E1
}
fn default_true() -> bool {
    true
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl RunConfig {
    pub fn formulation_for_mode(&self) -> Formulation {
        match self.mode {
            Mode::SolveDirect => Formulation::Direct,
            Mode::SolveDual | Mode::FenchelTable => Formulation::Dual,
            _ => self.formulation,
        }
    }

    pub fn modes(&self) -> usize {
        self.num_modes.unwrap_or(match self.formulation_for_mode() {
            Formulation::Direct => DIRECT_MODES,
            Formulation::Dual => DUAL_MODES,
        })
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            solver: self.solver.clone(),
            certify: self.certify.clone(),
            conditions: self.conditions.clone(),
            check_truncation: self.check_truncation,
            check_conditions: self.check_conditions,
        }
    }

    /// Mode-dependent checks that serde cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let needs_period = matches!(self.mode, Mode::SolveDirect | Mode::SolveDual | Mode::Certify);
        if needs_period && self.period.is_none() {
            return Err(err("missing required key `period_T`"));
        }
        if let Some(t) = self.period {
            if !(t > 0.0 && t.is_finite()) {
                return Err(err(format!("`period_T` must be positive and finite, got {t}")));
            }
        }
        if self.dimension == 0 {
            return Err(err("`dimension` must be at least 1"));
        }
        if self.num_modes == Some(0) {
            return Err(err("`num_modes` must be at least 1"));
        }
        if self.formulation_for_mode() == Formulation::Dual && !self.dimension.is_multiple_of(2) {
            return Err(err(format!("dual runs need an even `dimension`, got {}", self.dimension)));
        }
        if self.mode == Mode::Sweep {
            let periods = match &self.sweep {
                Some(s) => &s.periods,
                None => return Err(err("sweep mode needs `sweep.periods`")),
            };
            if periods.is_empty() {
                return Err(err("`sweep.periods` must not be empty"));
            }
            if periods.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(err("`sweep.periods` must be positive and finite"));
            }
            if periods.windows(2).any(|w| w[1] <= w[0]) {
                return Err(err("`sweep.periods` must be strictly increasing"));
            }
        }
        if self.mode == Mode::Certify && self.candidate.is_none() {
            return Err(err("certify mode needs `candidate.coefficients`"));
        }
        if self.mode == Mode::FenchelTable {
            let f = &self.fenchel;
            if f.points == 0 || !(f.min_radius > 0.0 && f.max_radius >= f.min_radius) {
                return Err(err("`fenchel` needs points > 0 and 0 < min_radius <= max_radius"));
            }
        }
        if self.output.stem.is_empty() {
            return Err(err("`output.stem` must not be empty"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }
}

/// Values layered on top of the config file, in increasing precedence:
/// `--set` overrides first, then the dedicated flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub set: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub modes: Option<usize>,
    pub period: Option<f64>,
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a
/// bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `table[a][b]...[z] = value` for the dotted key `a.b...z`, creating
/// intermediate tables.
pub fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(err(format!("malformed override key `{key}`")));
    }
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in path {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(err(format!("override `{key}`: `{p}` is not a table"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Reads a config table from TOML, or from the `config` section of a JSON
/// result document (so an earlier run can be replayed directly).
fn read_table(path: &Path) -> Result<toml::Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let doc: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| err(format!("{}: {e}", path.display())))?;
        let cfg = doc.get("config").cloned().unwrap_or(doc);
        let cfg: RunConfig = serde_json::from_value(cfg).map_err(|e| err(format!("{}: {e}", path.display())))?;
        return toml::Table::try_from(&cfg).map_err(|e| err(e.to_string()));
    }
    text.parse::<toml::Table>().map_err(|e| err(format!("{}: {e}", path.display())))
}

/// Builds and validates the run configuration.
pub fn load_config(path: Option<&Path>, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut table = match path {
        Some(p) => read_table(p)?,
        None => toml::Table::new(),
    };
    for item in &ov.set {
        let (k, v) = item.split_once('=').ok_or_else(|| err(format!("override `{item}` is not key=value")))?;
        set_dotted(&mut table, k.trim(), parse_value(v.trim()))?;
    }
    if let Some(m) = ov.mode {
        table.insert("mode".into(), toml::Value::String(m.as_str().into()));
    }
    if let Some(d) = &ov.out {
        set_dotted(&mut table, "output.dir", toml::Value::String(d.to_string_lossy().into_owned()))?;
    }
    if let Some(s) = ov.seed {
        let s = i64::try_from(s).map_err(|_| err("seed does not fit a signed 64-bit integer"))?;
        set_dotted(&mut table, "solver.seed", toml::Value::Integer(s))?;
    }
    if let Some(n) = ov.modes {
        table.insert("num_modes".into(), toml::Value::Integer(n as i64));
    }
    if let Some(t) = ov.period {
        table.insert("period_T".into(), toml::Value::Float(t));
    }
    let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
