//! JSON run configuration: solver selection, mode-pair weights, solver
//! parameters, and metric settings. Unknown keys are rejected, numeric
//! constraints are checked as soon as the document is parsed, and every
//! value a run actually used is echoed back into its sidecar report so the
//! run is self-describing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use ffmtr_core::metrics::{BandMode, MetricConfig, PeakMode};
use ffmtr_core::solvers::{RpcaConfig, TcConfig};
use ffmtr_core::{ModePair, ModePairWeights};

/// A command failed: `Config` covers bad flags/configuration (exit code 2),
/// `Data` covers unreadable/inconsistent data files and solver failures
/// (exit code 3).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "{m}"),
        }
    }
}

/// Core-library errors surface while working on data (reading tensors,
/// solving, writing results), so they default to the data exit code.
/// Configuration-derived failures are wrapped explicitly where they occur.
impl From<ffmtr_core::Error> for CliError {
    fn from(e: ffmtr_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Which solver a run configuration drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ffmtc,
    Ffmtrpca,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Ffmtc => write!(f, "ffmtc"),
            SolverKind::Ffmtrpca => write!(f, "ffmtrpca"),
        }
    }
}

/// Mode-pair weight specification: a named preset or an explicit map from
/// pair keys like `"(1,2)"` to weights.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Preset(BetaPreset),
    Explicit(BTreeMap<String, f64>),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaPreset {
    Uniform,
    SizeNormalized,
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec::Preset(BetaPreset::Uniform)
    }
}

impl BetaSpec {
    /// Parses a command-line weight specification: `uniform`,
    /// `size_normalized`, or an inline JSON object.
    pub fn parse_arg(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(BetaSpec::Preset(BetaPreset::Uniform)),
            "size_normalized" => Ok(BetaSpec::Preset(BetaPreset::SizeNormalized)),
            _ if s.trim_start().starts_with('{') => serde_json::from_str(s)
                .map(BetaSpec::Explicit)
                .map_err(|e| format!("invalid weight map: {e}")),
            _ => Err(format!(
                "expected `uniform`, `size_normalized`, or a JSON object, got `{s}`"
            )),
        }
    }

    /// Resolves the specification against concrete tensor dimensions.
    pub fn resolve(&self, dims: &[usize]) -> Result<ModePairWeights, CliError> {
        let lift =
            |r: ffmtr_core::Result<ModePairWeights>| r.map_err(|e| CliError::config(e.to_string()));
        match self {
            BetaSpec::Preset(BetaPreset::Uniform) => lift(ModePairWeights::uniform(dims.len())),
            BetaSpec::Preset(BetaPreset::SizeNormalized) => {
                lift(ModePairWeights::size_normalized(dims))
            }
            BetaSpec::Explicit(map) => {
                let mut parsed = BTreeMap::new();
                for (key, &w) in map {
                    let pair = ModePair::from_str(key)
                        .map_err(|e| CliError::config(format!("weight key `{key}`: {e}")))?;
                    parsed.insert(pair, w);
                }
                lift(ModePairWeights::from_map(dims.len(), parsed))
            }
        }
    }

    /// JSON echo of the resolved weights for the sidecar report.
    pub fn describe(&self, weights: &ModePairWeights) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (pair, w) in weights.iter() {
            map.insert(pair.to_string(), serde_json::json!(w));
        }
        serde_json::Value::Object(map)
    }
}

/// Peak selection for PSNR/SSIM: the string `"max_ref"` or a fixed number.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum PeakSpec {
    Named(PeakName),
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakName {
    MaxRef,
}

impl PeakSpec {
    /// Parses a command-line peak specification: `max-ref` or a number.
    pub fn parse_arg(s: &str) -> Result<Self, String> {
        if s == "max-ref" || s == "max_ref" {
            return Ok(PeakSpec::Named(PeakName::MaxRef));
        }
        s.parse::<f64>()
            .map_err(|_| format!("expected `max-ref` or a number, got `{s}`"))
            .and_then(|v| {
                if v.is_finite() && v > 0.0 {
                    Ok(PeakSpec::Fixed(v))
                } else {
                    Err(format!("peak must be finite and > 0, got {v}"))
                }
            })
    }
}

#[derive(Clone, Copy, Debug, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "kebab-case")]
pub enum BandModeSpec {
    Global,
    PerBandMean,
}

/// Metric settings section; every field optional, defaults from the metrics
/// module.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    pub peak: Option<PeakSpec>,
    pub band_mode: Option<BandModeSpec>,
    pub ssim_window: Option<usize>,
    pub ssim_sigma: Option<f64>,
    pub ssim_k1: Option<f64>,
    pub ssim_k2: Option<f64>,
}

impl MetricsSpec {
    /// Applies the spec on top of the metric defaults.
    pub fn to_config(self) -> Result<MetricConfig, CliError> {
        let mut cfg = MetricConfig::default();
        if let Some(peak) = self.peak {
            cfg.peak = match peak {
                PeakSpec::Named(PeakName::MaxRef) => PeakMode::MaxOfReference,
                PeakSpec::Fixed(v) => {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(CliError::config(format!(
                            "metrics.peak must be finite and > 0, got {v}"
                        )));
                    }
                    PeakMode::Fixed(v)
                }
            };
        }
        if let Some(bm) = self.band_mode {
            cfg.band_mode = match bm {
                BandModeSpec::Global => BandMode::Global,
                BandModeSpec::PerBandMean => BandMode::PerBandMean,
            };
        }
        if let Some(w) = self.ssim_window {
            cfg.ssim_window = w;
        }
        if let Some(s) = self.ssim_sigma {
            cfg.ssim_sigma = s;
        }
        if let Some(k) = self.ssim_k1 {
            cfg.ssim_k1 = k;
        }
        if let Some(k) = self.ssim_k2 {
            cfg.ssim_k2 = k;
        }
        Ok(cfg)
    }
}

/// One run configuration document. `solver` is required; every other field
/// falls back to the solver module defaults. Keys that belong to the other
/// solver are rejected so a misdirected configuration fails loudly instead
/// of being silently ignored.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverKind,
    #[serde(default)]
    pub beta: BetaSpec,
    pub mu0: Option<f64>,
    /// Completion only: geometric penalty growth factor (> 1).
    pub rho: Option<f64>,
    /// Robust PCA only: initial fidelity penalty (> 0).
    pub rho0: Option<f64>,
    /// Robust PCA only: geometric penalty growth factor (> 1).
    pub growth: Option<f64>,
    /// Robust PCA only: sparsity weight; omitted = `1/sqrt(largest pair face)`.
    pub lambda_sparse: Option<f64>,
    pub eps_log: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    /// Echoed into the sidecar report; reserved for seeded pipeline steps.
    pub seed: Option<u64>,
    pub metrics: Option<MetricsSpec>,
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

impl RunConfig {
    /// Loads and validates a configuration file. Both unreadable files and
    /// invalid documents are configuration errors.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-level checks that need no tensor: numeric ranges and
    /// solver/key consistency.
    fn validate(&self) -> Result<(), CliError> {
        let finite_pos = |name: &str, v: Option<f64>| match v {
            Some(x) => require(
                x.is_finite() && x > 0.0,
                format!("{name} must be finite and > 0, got {x}"),
            ),
            None => Ok(()),
        };
        let growth_like = |name: &str, v: Option<f64>| match v {
            Some(x) => require(
                x.is_finite() && x > 1.0,
                format!("{name} must be finite and > 1, got {x}"),
            ),
            None => Ok(()),
        };
        finite_pos("mu0", self.mu0)?;
        finite_pos("eps_log", self.eps_log)?;
        finite_pos("tol", self.tol)?;
        if let Some(m) = self.max_iters {
            require(m >= 1, format!("max_iters must be >= 1, got {m}"))?;
        }
        match self.solver {
            SolverKind::Ffmtc => {
                growth_like("rho", self.rho)?;
                require(self.rho0.is_none(), "rho0 applies to the ffmtrpca solver")?;
                require(
                    self.growth.is_none(),
                    "growth applies to the ffmtrpca solver",
                )?;
                require(
                    self.lambda_sparse.is_none(),
                    "lambda_sparse applies to the ffmtrpca solver",
                )?;
            }
            SolverKind::Ffmtrpca => {
                finite_pos("rho0", self.rho0)?;
                growth_like("growth", self.growth)?;
                finite_pos("lambda_sparse", self.lambda_sparse)?;
                require(self.rho.is_none(), "rho applies to the ffmtc solver")?;
            }
        }
        Ok(())
    }

    fn expect_solver(&self, expected: SolverKind, command: &str) -> Result<(), CliError> {
        require(
            self.solver == expected,
            format!(
                "the {command} command needs `\"solver\": \"{expected}\"`, got \"{}\"",
                self.solver
            ),
        )
    }

    /// Builds the completion solver configuration for a tensor of the given
    /// dimensions.
    pub fn to_tc_config(&self, dims: &[usize]) -> Result<TcConfig, CliError> {
        self.expect_solver(SolverKind::Ffmtc, "complete")?;
        let mut cfg = TcConfig::new(self.beta.resolve(dims)?);
        if let Some(v) = self.mu0 {
            cfg.mu0 = v;
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.eps_log {
            cfg.eps_log = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        Ok(cfg)
    }

    /// Builds the robust PCA solver configuration for a tensor of the given
    /// dimensions.
    pub fn to_rpca_config(&self, dims: &[usize]) -> Result<RpcaConfig, CliError> {
        self.expect_solver(SolverKind::Ffmtrpca, "rpca")?;
        let mut cfg = RpcaConfig::new(self.beta.resolve(dims)?);
        if let Some(v) = self.mu0 {
            cfg.mu0 = v;
        }
        if let Some(v) = self.rho0 {
            cfg.rho0 = v;
        }
        if let Some(v) = self.growth {
            cfg.growth = v;
        }
        if self.lambda_sparse.is_some() {
            cfg.lambda_sparse = self.lambda_sparse;
        }
        if let Some(v) = self.eps_log {
            cfg.eps_log = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        Ok(cfg)
    }
}
