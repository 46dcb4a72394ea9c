//! Run configuration: TOML schema, file includes and command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eic_core::axioms::Verdict;
use eic_core::model::ParameterSpace;
use eic_core::numerics::{ArgmaxConfig, FisherMethod, HessianConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Config schema versions this build reads.
pub const SUPPORTED_SPEC_VERSIONS: std::ops::RangeInclusive<u32> = 1..=1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Estimate,
    Compare,
    VerifyFisher,
    VerifyLimit,
    VerifyPmle,
    AuditAxioms,
    CFunction,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Compare => "compare",
            Command::VerifyFisher => "verify-fisher",
            Command::VerifyLimit => "verify-limit",
            Command::VerifyPmle => "verify-pmle",
            Command::AuditAxioms => "audit-axioms",
            Command::CFunction => "c-function",
        }
    }

    /// Tolerance of the command's check when the config gives none.
    pub fn default_tolerance(self) -> Option<f64> {
        match self {
            Command::Compare | Command::VerifyPmle => Some(1e-4),
            Command::VerifyFisher | Command::CFunction => Some(1e-2),
            Command::VerifyLimit => Some(0.02),
            Command::Estimate | Command::AuditAxioms => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Bernoulli,
    Binomial { n: u32 },
    Categorical { k: usize },
    GaussianKnownSigma { sigma: f64 },
    GaussianMeanSigma { n: usize },
    ExponentialRate,
    GammaSum { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub family: FamilyConfig,
    /// Observe `iid` independent copies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    Uniform,
    Beta { alpha: f64, beta: f64 },
    Gaussian { mean: Vec<f64>, sd: Vec<f64> },
    /// Improper `1/θ[axis]`.
    PowerLawSigma { axis: usize },
    Pmf { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossConfig {
    Quadratic,
    Hellinger2,
    Kl,
    ChiSquared,
    Bhattacharyya,
    NoIro,
    NoIsi,
    NoIia {
        threshold: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    MleQuadratic,
    MleHellinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorConfig {
    Dmap,
    Cmap,
    Wf,
    /// Maximum likelihood (flat penalty).
    PmleFlat,
    /// PMLE with the prior density as penalty.
    PmlePrior,
    Eic,
    Bayes,
    BayesExtended,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyFisherConfig {
    /// Points to check; when empty, `random` interior points are drawn.
    pub thetas: Vec<Vec<f64>>,
    pub random: usize,
}

impl Default for VerifyFisherConfig {
    fn default() -> Self {
        Self {
            thetas: Vec::new(),
            random: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumConfig {
    SmoothStep,
    ExpSaturate { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitConfig {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_spectrum")]
    pub spectrum: SpectrumConfig,
    #[serde(default = "one")]
    pub v_max: f64,
}

fn default_eps() -> Vec<f64> {
    eic_core::risk::default_eps_grid()
}

fn default_spectrum() -> SpectrumConfig {
    SpectrumConfig::SmoothStep
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmleConfig {
    /// Number of seeded random penalties.
    pub penalties: usize,
}

impl Default for PmleConfig {
    fn default() -> Self {
        Self { penalties: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    pub pairs: usize,
    /// Expected summary verdict per axiom (`irp`, `iro`, `iia`, `isi`).
    pub expect: BTreeMap<String, Verdict>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            pairs: 6,
            expect: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CFunctionConfig {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    #[serde(default = "hundred")]
    pub points: usize,
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec_version: u32,
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub theta: ParameterSpace,
    #[serde(default = "uniform")]
    pub prior: PriorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossConfig>,
    #[serde(default)]
    pub estimators: Vec<EstimatorConfig>,
    #[serde(default)]
    pub observations: Vec<Vec<f64>>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub argmax: ArgmaxConfig,
    #[serde(default)]
    pub hessian: HessianConfig,
    #[serde(default = "analytic")]
    pub fisher: FisherMethod,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub verify_fisher: VerifyFisherConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitConfig>,
    #[serde(default)]
    pub pmle: PmleConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfunction: Option<CFunctionConfig>,
}

fn uniform() -> PriorConfig {
    PriorConfig::Uniform
}

fn analytic() -> FisherMethod {
    FisherMethod::Analytic
}

/// Command-line settings layered over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub seed: Option<u64>,
    /// Dotted `key=value` pairs; values are read as TOML literals when possible.
    pub values: Vec<String>,
}

fn config_error(operation: &str, message: impl Into<String>) -> CliError {
    CliError::config(operation, message)
}

/// Reads `path`, resolves `problem_file` and `observations_file` includes
/// relative to it, applies `overrides` and fills defaults.
pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("config.read", format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base, overrides)
}

pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| config_error("config.parse", e.to_string()))?;
    resolve_includes(&mut table, base)?;
    if let Some(c) = &overrides.command {
        table.insert("command".into(), toml::Value::String(c.clone()));
    }
    if let Some(s) = overrides.seed {
        let s = i64::try_from(s).map_err(|_| config_error("config.seed", "seed must fit in a signed 64-bit integer"))?;
        table.insert("seed".into(), toml::Value::Integer(s));
    }
    if overrides.out.is_some() || overrides.format.is_some() {
        let output = table
            .entry("output")
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_error("config.output", "output must be a table"))?;
        if let Some(p) = &overrides.out {
            output.insert("path".into(), toml::Value::String(p.display().to_string()));
        }
        if let Some(f) = &overrides.format {
            output.insert("format".into(), toml::Value::String(f.clone()));
        }
    }
    for kv in &overrides.values {
        apply_override(&mut table, kv)?;
    }
    if !table.contains_key("model") {
        return Err(config_error("config.validate", "missing table `model`"));
    }
    if !table["model"].as_table().is_some_and(|m| m.contains_key("family")) {
        return Err(config_error("config.validate", "missing `model.family`"));
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| config_error("config.validate", e.to_string()))?;
    validate(config)
}

fn resolve_includes(table: &mut toml::Table, base: &Path) -> Result<(), CliError> {
    if let Some(v) = table.remove("problem_file") {
        let rel = v
            .as_str()
            .ok_or_else(|| config_error("config.problem_file", "problem_file must be a path"))?;
        let path = base.join(rel);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| config_error("config.problem_file", format!("{}: {e}", path.display())))?;
        let problem: toml::Table =
            toml::from_str(&text).map_err(|e| config_error("config.problem_file", e.to_string()))?;
        for (k, v) in problem {
            if !matches!(k.as_str(), "model" | "theta" | "prior") {
                return Err(config_error("config.problem_file", format!("unexpected key `{k}` in a problem file")));
            }
            if table.contains_key(&k) {
                return Err(config_error("config.problem_file", format!("`{k}` given both inline and in the problem file")));
            }
            table.insert(k, v);
        }
    }
    if let Some(v) = table.remove("observations_file") {
        let rel = v
            .as_str()
            .ok_or_else(|| config_error("config.observations_file", "observations_file must be a path"))?;
        if table.contains_key("observations") {
            return Err(config_error("config.observations_file", "observations given both inline and as a file"));
        }
        let rows = read_observations(&base.join(rel))?;
        let array = rows
            .into_iter()
            .map(|r| toml::Value::Array(r.into_iter().map(toml::Value::Float).collect()))
            .collect();
        table.insert("observations".into(), toml::Value::Array(array));
    }
    Ok(())
}

/// One observation per CSV row, no header.
pub fn read_observations(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let op = "config.observations_file";
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| config_error(op, format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| config_error(op, e.to_string()))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| config_error(op, format!("row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn apply_override(table: &mut toml::Table, kv: &str) -> Result<(), CliError> {
    let op = "config.tol_override";
    let (key, raw) = kv
        .split_once('=')
        .ok_or_else(|| config_error(op, format!("expected key=value, got `{kv}`")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_error(op, format!("`{part}` in `{key}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn validate(mut config: RunConfig) -> Result<RunConfig, CliError> {
    let op = "config.validate";
    if !SUPPORTED_SPEC_VERSIONS.contains(&config.spec_version) {
        return Err(config_error(
            op,
            format!(
                "spec_version {} is not supported (expected {}..={})",
                config.spec_version,
                SUPPORTED_SPEC_VERSIONS.start(),
                SUPPORTED_SPEC_VERSIONS.end()
            ),
        ));
    }
    let needs_loss = match config.command {
        Command::VerifyFisher | Command::VerifyLimit | Command::AuditAxioms => true,
        Command::Estimate | Command::Compare => config
            .estimators
            .iter()
            .any(|e| matches!(e, EstimatorConfig::Eic | EstimatorConfig::Bayes | EstimatorConfig::BayesExtended)),
        Command::VerifyPmle | Command::CFunction => false,
    };
    if needs_loss && config.loss.is_none() {
        return Err(config_error(op, format!("`{}` needs a [loss] table", config.command.name())));
    }
    let needs_obs = matches!(
        config.command,
        Command::Estimate | Command::Compare | Command::VerifyLimit | Command::VerifyPmle
    );
    if needs_obs && config.observations.is_empty() {
        return Err(config_error(op, format!("`{}` needs observations", config.command.name())));
    }
    if matches!(config.command, Command::Estimate | Command::Compare) && config.estimators.is_empty() {
        return Err(config_error(op, "no estimators listed"));
    }
    if config.command == Command::Compare && config.estimators.len() < 2 {
        return Err(config_error(op, "`compare` needs at least two estimators"));
    }
    if config.command == Command::VerifyLimit && config.limit.is_none() {
        return Err(config_error(op, "`verify-limit` needs a [limit] table"));
    }
    if config.command == Command::CFunction && config.cfunction.is_none() {
        return Err(config_error(op, "`c-function` needs a [cfunction] table"));
    }
    for key in config.audit.expect.keys() {
        if !matches!(key.as_str(), "irp" | "iro" | "iia" | "isi") {
            return Err(config_error(op, format!("unknown axiom `{key}` in audit.expect")));
        }
    }
    if let Some(t) = config.check.tolerance {
        if !(t > 0.0) {
            return Err(config_error(op, "check.tolerance must be positive"));
        }
    } else {
        config.check.tolerance = config.command.default_tolerance();
    }
    Ok(config)
}
