//! TOML run configuration: one file per reproducible run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ngbvar_core::bvar::{LambdaMode, NgHyper};
use ngbvar_core::disagg::AggregationRule;
use ngbvar_core::irf::ShockSpec;
use ngbvar_core::series::{CsvSchema, Unit};
use ngbvar_core::{Error, Result};

/// Per-series value transform applied after disaggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    None,
    /// Negate; survey balances reported as tightening become easing.
    Invert,
    /// Period-on-period growth in percent.
    PctChange,
    /// Log-return in percent.
    LogReturn,
}

/// Disaggregation request for a quarterly input series.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisaggConfig {
    pub method: DisaggMethod,
    #[serde(default = "default_rule")]
    pub rule: AggregationRule,
    /// Monthly indicator id; required for Chow-Lin.
    #[serde(default)]
    pub indicator: Option<String>,
    /// Fixed AR(1) autocorrelation; omitted means maximum likelihood.
    #[serde(default)]
    pub rho: Option<f64>,
}

fn default_rule() -> AggregationRule {
    AggregationRule::Average
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisaggMethod {
    Spline,
    ChowLin,
}

/// Declarations for one input series.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    #[serde(default)]
    pub unit: Option<Unit>,
    #[serde(default)]
    pub transform: Transform,
    /// Grouping label for the report figures (one SVG per role).
    #[serde(default)]
    pub role: Option<String>,
    /// Panel label within a role figure.
    #[serde(default)]
    pub country: Option<String>,
    #[serde(default)]
    pub disaggregate: Option<DisaggConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Input CSV, relative paths resolved against the config file.
    pub path: PathBuf,
    #[serde(default = "CsvSchema::default")]
    pub schema: CsvSchema,
    /// Per-series declarations keyed by series id; undeclared series get
    /// defaults (no transform, rate unit).
    #[serde(default)]
    pub series: BTreeMap<String, SeriesConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lags: usize,
    /// Identification order, top to bottom.
    pub ordering: Vec<String>,
    pub shock_variable: String,
    #[serde(default = "default_shock_size")]
    pub shock_size_pp: f64,
    #[serde(default = "default_horizons")]
    pub horizons: usize,
}

fn default_shock_size() -> f64 {
    -0.25
}

fn default_horizons() -> usize {
    36
}

/// Prior and chain settings; every field optional, defaulting to
/// [`NgHyper::default_for_lags`]. `d` and `l` are scalars broadcast to all
/// lags.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub theta_psi: Option<f64>,
    pub d: Option<f64>,
    pub l: Option<f64>,
    pub d_cov: Option<f64>,
    pub l_cov: Option<f64>,
    pub s_shape: Option<f64>,
    pub s_rate: Option<f64>,
    pub lambda_mode: Option<LambdaMode>,
    pub burn: Option<usize>,
    pub keep: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub plots: bool,
    #[serde(default = "default_true")]
    pub export_draws: bool,
}

fn default_true() -> bool {
    true
}

/// Robustness battery settings. When enabled without explicit variants the
/// standard four (three lags, four lags, reorder, spread shock) run.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    #[serde(default)]
    pub enabled: bool,
    /// Series moved directly below the shock variable in the reorder
    /// variant.
    #[serde(default)]
    pub reorder_below: Vec<String>,
    /// Policy-rate id for the derived spread variant.
    #[serde(default)]
    pub policy_rate: Option<String>,
    #[serde(default = "default_spread_size")]
    pub spread_size_pp: f64,
}

fn default_spread_size() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub battery: BatteryConfig,
}

impl RunConfig {
    /// Parses and validates; returns the config together with the raw file
    /// bytes (hashed into the run id). Relative paths are resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<(RunConfig, Vec<u8>)> {
        let bytes = std::fs::read(path)?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::Input(format!("{} is not UTF-8", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Input(format!("config parse error: {e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if config.data.path.is_relative() {
            config.data.path = base.join(&config.data.path);
        }
        if config.output.dir.is_relative() {
            config.output.dir = base.join(&config.output.dir);
        }
        config.validate()?;
        Ok((config, bytes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.lags == 0 {
            return Err(Error::Input("model.lags must be at least 1".into()));
        }
        if self.model.ordering.is_empty() {
            return Err(Error::Ordering("model.ordering is empty".into()));
        }
        for id in &self.model.ordering {
            if self.model.ordering.iter().filter(|o| *o == id).count() > 1 {
                return Err(Error::Ordering(format!("'{id}' listed more than once")));
            }
        }
        if !self.model.ordering.contains(&self.model.shock_variable) {
            return Err(Error::Ordering(format!(
                "shock variable '{}' is not in the ordering",
                self.model.shock_variable
            )));
        }
        if self.model.horizons == 0 {
            return Err(Error::Input("model.horizons must be at least 1".into()));
        }
        for (id, s) in &self.data.series {
            if let Some(d) = &s.disaggregate {
                if d.method == DisaggMethod::ChowLin && d.indicator.is_none() {
                    return Err(Error::Input(format!(
                        "series '{id}': chow-lin needs an indicator"
                    )));
                }
                if let Some(r) = d.rho {
                    if r.abs() >= 1.0 {
                        return Err(Error::Domain(format!(
                            "series '{id}': rho {r} outside (-1, 1)"
                        )));
                    }
                }
            }
        }
        if self.battery.enabled {
            if self.battery.policy_rate.is_none() {
                return Err(Error::Input(
                    "battery.policy_rate is required when the battery is enabled".into(),
                ));
            }
            for id in self
                .battery
                .reorder_below
                .iter()
                .chain(self.battery.policy_rate.iter())
            {
                if !self.model.ordering.contains(id) {
                    return Err(Error::Ordering(format!(
                        "battery references '{id}' which is not in the ordering"
                    )));
                }
            }
        }
        self.hyper().validate(self.model.lags)?;
        Ok(())
    }

    /// Materializes the prior section, broadcasting scalar `d`/`l` per lag.
    pub fn hyper(&self) -> NgHyper {
        let p = self.model.lags;
        let mut h = NgHyper::default_for_lags(p);
        let c = &self.prior;
        if let Some(v) = c.theta_psi {
            h.theta_psi = v;
        }
        if let Some(v) = c.d {
            h.d = vec![v; p];
        }
        if let Some(v) = c.l {
            h.l = vec![v; p];
        }
        if let Some(v) = c.d_cov {
            h.d_cov = v;
        }
        if let Some(v) = c.l_cov {
            h.l_cov = v;
        }
        if let Some(v) = c.s_shape {
            h.s_prior.0 = v;
        }
        if let Some(v) = c.s_rate {
            h.s_prior.1 = v;
        }
        if let Some(v) = c.lambda_mode {
            h.lambda_mode = v;
        }
        if let Some(v) = c.burn {
            h.burn = v;
        }
        if let Some(v) = c.keep {
            h.keep = v;
        }
        if let Some(v) = c.thin {
            h.thin = v;
        }
        if let Some(v) = c.chains {
            h.chains = v;
        }
        if let Some(v) = c.seed {
            h.seed = v;
        }
        h
    }

    pub fn shock_spec(&self) -> ShockSpec {
        ShockSpec {
            shock_variable: self.model.shock_variable.clone(),
            size_pp: self.model.shock_size_pp,
            horizons: self.model.horizons,
        }
    }
}
