//! Run configuration: flat `key = value` text with the same names as the CLI
//! flags.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::losses::{LossSpec, MlpConfig};
use crate::posterior::PriorConfig;
use crate::rectifiers::{CalibrationStrategy, RectifierSpec};

use super::scenario::{ScenarioKind, ScenarioSpec};

pub const CONFIG_FORMAT_TAG: &str = "#format rectiprior-config/1";

/// Default probability clamp of the recalibration rectifier.
pub const DEFAULT_RECALIB_CLAMP: f64 = 1e-6;
/// Default ridge of the recalibration rectifier.
pub const DEFAULT_RECALIB_RIDGE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Labeled-only frequentist interval.
    Classical,
    /// Posterior bootstrap with `γ = 0`.
    BayesBootstrap,
    /// AI prior without rectification.
    Raw,
    /// AI prior with the configured rectifier.
    Rectified,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Classical,
        Method::BayesBootstrap,
        Method::Raw,
        Method::Rectified,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::BayesBootstrap => "bayes-bootstrap",
            Method::Raw => "raw",
            Method::Rectified => "rectified",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param(format!("unknown method `{s}`")))
    }
}

/// Where the data come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Files {
        labeled: PathBuf,
        base: Option<PathBuf>,
    },
    Scenario(ScenarioSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<DataSource>,
    /// Labeled subset size per replication when sampling from a file pool.
    pub n: Option<usize>,
    pub loss: LossSpec,
    /// `None` picks quantile mapping for real outcomes and probability
    /// recalibration for classification.
    pub rectifier: Option<RectifierSpec>,
    pub strategy: CalibrationStrategy,
    pub gamma: f64,
    pub draws: usize,
    pub level: f64,
    pub replications: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// Coordinate of `θ` evaluated by the benchmark.
    pub coord: usize,
    pub methods: Vec<Method>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            n: None,
            loss: LossSpec::Mean,
            rectifier: None,
            strategy: CalibrationStrategy::Npb,
            gamma: 1.0,
            draws: 500,
            level: 0.9,
            replications: 100,
            seed: 0,
            threads: None,
            out: None,
            coord: 0,
            methods: Method::ALL.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn rectifier_spec(&self) -> RectifierSpec {
        self.rectifier
            .clone()
            .unwrap_or(if self.loss.is_classification() {
                RectifierSpec::ProbRecalib {
                    ridge: DEFAULT_RECALIB_RIDGE,
                    clamp: DEFAULT_RECALIB_CLAMP,
                }
            } else {
                RectifierSpec::QuantileMap
            })
    }

    /// Posterior settings of the rectified analysis described by this config.
    pub fn prior_config(&self) -> PriorConfig {
        PriorConfig {
            gamma: self.gamma,
            draws: self.draws,
            level: self.level,
            strategy: self.strategy,
            rectifier: self.rectifier_spec(),
            seed: self.seed,
            threads: self.threads,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.is_none() {
            return Err(Error::param(
                "either labeled data or a scenario is required",
            ));
        }
        if let Some(DataSource::Scenario(s)) = &self.data {
            s.validate()?;
        }
        self.loss.validate()?;
        self.rectifier_spec().validate()?;
        self.strategy.validate()?;
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::param(format!(
                "gamma must be finite and ≥ 0, got {}",
                self.gamma
            )));
        }
        if self.draws < 2 {
            return Err(Error::param("draws must be at least 2"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::param(format!("level {} outside (0, 1)", self.level)));
        }
        if self.replications == 0 {
            return Err(Error::param("replications must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::param("threads must be positive or `auto`"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("no benchmark methods selected"));
        }
        Ok(())
    }

    /// Parse a configuration document.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut b = ConfigBuilder::default();
        b.apply_text(text)?;
        b.build()
    }
}

/// Accumulates `key = value` settings (from a file, then flags) and resolves
/// them into a [`RunConfig`]. Later settings override earlier ones.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    entries: Vec<(String, String)>,
}

/// Keys understood by [`ConfigBuilder`].
pub const CONFIG_KEYS: &[&str] = &[
    "labeled",
    "base",
    "scenario",
    "n",
    "n-unlabeled",
    "n-test",
    "noise",
    "shift",
    "distortion",
    "loss",
    "tau",
    "intercept",
    "classes",
    "ridge",
    "hidden",
    "epochs",
    "step",
    "mlp-seed",
    "rectifier",
    "recalib-ridge",
    "recalib-clamp",
    "strategy",
    "split-fraction",
    "gamma",
    "draws",
    "level",
    "replications",
    "seed",
    "threads",
    "out",
    "coord",
    "methods",
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::param(format!("`{key}`: cannot parse `{v}`")))
}

impl ConfigBuilder {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::param(format!("unknown configuration key `{key}`")));
        }
        self.entries.retain(|(k, _)| k != key);
        self.entries
            .push((key.to_string(), value.trim().to_string()));
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::param(format!("config line {}: expected `key = value`", i + 1))
            })?;
            self.set(k.trim(), v)
                .map_err(|e| Error::param(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key).map(|v| parse(key, v)).transpose()
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.value(key)?.unwrap_or(default))
    }

    fn loss(&self) -> Result<LossSpec> {
        let classes = self.value::<usize>("classes")?;
        let loss = match self.get("loss").unwrap_or("mean") {
            "mean" => LossSpec::Mean,
            "quantile" => LossSpec::Quantile {
                tau: self
                    .value("tau")?
                    .ok_or_else(|| Error::param("quantile loss needs --tau"))?,
            },
            "linear-regression" | "ols" => LossSpec::LinearRegression {
                intercept: self.or("intercept", true)?,
            },
            "logistic" | "multinomial-logistic" => LossSpec::MultinomialLogistic {
                num_classes: classes
                    .ok_or_else(|| Error::param("logistic loss needs --classes"))?,
                ridge: self.or("ridge", 1e-8)?,
            },
            "mlp" => {
                let c = classes.ok_or_else(|| Error::param("mlp loss needs --classes"))?;
                let d = MlpConfig::new(self.or("hidden", 20)?, c);
                LossSpec::Mlp(MlpConfig {
                    epochs: self.or("epochs", d.epochs)?,
                    step: self.or("step", d.step)?,
                    seed: self.or("mlp-seed", d.seed)?,
                    ..d
                })
            }
            other => return Err(Error::param(format!("unknown loss `{other}`"))),
        };
        Ok(loss)
    }

    fn rectifier(&self) -> Result<Option<RectifierSpec>> {
        let Some(name) = self.get("rectifier") else {
            return Ok(None);
        };
        Ok(Some(match name {
            "identity" | "none" => RectifierSpec::Identity,
            "quantile-map" => RectifierSpec::QuantileMap,
            "isotonic" => RectifierSpec::Isotonic,
            "moment-shift" => RectifierSpec::MomentShift,
            "moment-affine" => RectifierSpec::MomentAffine,
            "prob-recalib" => RectifierSpec::ProbRecalib {
                ridge: self.or("recalib-ridge", DEFAULT_RECALIB_RIDGE)?,
                clamp: self.or("recalib-clamp", DEFAULT_RECALIB_CLAMP)?,
            },
            other => return Err(Error::param(format!("unknown rectifier `{other}`"))),
        }))
    }

    fn strategy(&self) -> Result<CalibrationStrategy> {
        Ok(match self.get("strategy").unwrap_or("npb") {
            "fixed" => CalibrationStrategy::Fixed,
            "npb" => CalibrationStrategy::Npb,
            "split" => CalibrationStrategy::Split {
                fraction: self.or("split-fraction", 0.5)?,
            },
            other => return Err(Error::param(format!("unknown strategy `{other}`"))),
        })
    }

    fn data(&self) -> Result<Option<DataSource>> {
        match (self.get("labeled"), self.get("scenario")) {
            (Some(_), Some(_)) => Err(Error::param(
                "give either --labeled or --scenario, not both",
            )),
            (Some(l), None) => Ok(Some(DataSource::Files {
                labeled: PathBuf::from(l),
                base: self.get("base").map(PathBuf::from),
            })),
            (None, Some(kind)) => {
                if self.get("base").is_some() {
                    return Err(Error::param("--base cannot be combined with --scenario"));
                }
                let d = ScenarioSpec::new(ScenarioKind::parse(kind)?);
                Ok(Some(DataSource::Scenario(ScenarioSpec {
                    n: self.or("n", d.n)?,
                    n_unlabeled: self.or("n-unlabeled", d.n_unlabeled)?,
                    n_test: self.or("n-test", d.n_test)?,
                    noise: self.or("noise", d.noise)?,
                    shift: self.or("shift", d.shift)?,
                    distortion: self.or("distortion", d.distortion)?,
                    num_classes: self.or("classes", d.num_classes)?,
                    seed: self.or("seed", d.seed)?,
                    ..d
                })))
            }
            (None, None) => Ok(None),
        }
    }

    pub fn build(&self) -> Result<RunConfig> {
        let d = RunConfig::default();
        let threads = match self.get("threads") {
            None | Some("auto") => None,
            Some(v) => Some(parse("threads", v)?),
        };
        let methods = match self.get("methods") {
            None => d.methods,
            Some(v) => v
                .split(',')
                .map(|m| Method::parse(m.trim()))
                .collect::<Result<_>>()?,
        };
        Ok(RunConfig {
            data: self.data()?,
            n: self.value("n")?,
            loss: self.loss()?,
            rectifier: self.rectifier()?,
            strategy: self.strategy()?,
            gamma: self.or("gamma", d.gamma)?,
            draws: self.or("draws", d.draws)?,
            level: self.or("level", d.level)?,
            replications: self.or("replications", d.replications)?,
            seed: self.or("seed", d.seed)?,
            threads,
            out: self.get("out").map(PathBuf::from),
            coord: self.or("coord", d.coord)?,
            methods,
        })
    }
}
