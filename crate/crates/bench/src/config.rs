//! Run configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use sindybench_core::features::WeakConfig;
use sindybench_core::metrics::MIN_LYAPUNOV_PERIODS;
use sindybench_core::optimizers::{OptimizerConfig, OptimizerKind};
use sindybench_core::systems::{builtin_registry, builtin_system, PolynomialSystem};
use sindybench_core::{Error, Result};

/// Optimizer roster of a benchmark run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerChoice {
    Stlsq,
    Lasso,
    Sr3Nu1,
    Sr3Nu01,
    Miosr,
    WeakStlsq,
}

impl OptimizerChoice {
    pub const ALL: [OptimizerChoice; 6] = [
        OptimizerChoice::Stlsq,
        OptimizerChoice::Lasso,
        OptimizerChoice::Sr3Nu1,
        OptimizerChoice::Sr3Nu01,
        OptimizerChoice::Miosr,
        OptimizerChoice::WeakStlsq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerChoice::Stlsq => "stlsq",
            OptimizerChoice::Lasso => "lasso",
            OptimizerChoice::Sr3Nu1 => "sr3_nu1",
            OptimizerChoice::Sr3Nu01 => "sr3_nu01",
            OptimizerChoice::Miosr => "miosr",
            OptimizerChoice::WeakStlsq => "weak_stlsq",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == name)
    }

    /// Fits the weak-form problem instead of the pointwise one.
    pub fn is_weak(self) -> bool {
        self == OptimizerChoice::WeakStlsq
    }

    pub fn kind(self) -> OptimizerKind {
        self.template(1).variant
    }

    /// Optimizer settings with the scanned hyperparameter left at zero.
    pub fn template(self, dimension: usize) -> OptimizerConfig {
        match self {
            OptimizerChoice::Stlsq | OptimizerChoice::WeakStlsq => OptimizerConfig::stlsq(0.0),
            OptimizerChoice::Lasso => OptimizerConfig::lasso(0.0),
            OptimizerChoice::Sr3Nu1 => OptimizerConfig::sr3(0.0, 1.0),
            OptimizerChoice::Sr3Nu01 => OptimizerConfig::sr3(0.0, 0.1),
            OptimizerChoice::Miosr => OptimizerConfig::miosr(vec![1; dimension]),
        }
    }
}

impl fmt::Display for OptimizerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `"all-builtin"` or an explicit list of registry names.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SystemSelection {
    AllBuiltin,
    Names(Vec<String>),
}

impl<'de> Deserialize<'de> for SystemSelection {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Keyword(String),
            Names(Vec<String>),
        }
        match Raw::deserialize(de)? {
            Raw::Keyword(s) if s == "all-builtin" => Ok(SystemSelection::AllBuiltin),
            Raw::Keyword(s) => Err(serde::de::Error::custom(format!(
                "systems must be \"all-builtin\" or a list of names, got \"{s}\""
            ))),
            Raw::Names(v) => Ok(SystemSelection::Names(v)),
        }
    }
}

/// Largest Lyapunov exponent and scale-separation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropertyConfig {
    /// Lyapunov integration length in dominant periods.
    pub lyapunov_periods: usize,
    /// Renormalization interval in dominant periods.
    pub renorm_periods: f64,
    pub n_surrogates: usize,
    pub significance: f64,
}

impl Default for PropertyConfig {
    fn default() -> Self {
        PropertyConfig {
            lyapunov_periods: 500,
            renorm_periods: 1.0,
            n_surrogates: 100,
            significance: 0.95,
        }
    }
}

/// Stability census of every ensemble-mean model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub n_trials: usize,
    /// Initial-condition noise as a fraction of the training rms.
    pub perturbation: f64,
    pub horizon_periods: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            n_trials: 10,
            perturbation: 0.01,
            horizon_periods: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub systems: SystemSelection,
    pub optimizers: Vec<OptimizerChoice>,
    pub noise_percents: Vec<f64>,
    pub n_train_trajectories: usize,
    pub n_test_trajectories: usize,
    pub periods: usize,
    pub points_per_period: usize,
    pub n_models: usize,
    pub subsample_fraction: f64,
    pub grid_points: usize,
    pub weak: WeakConfig,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Wall-clock times make reports machine dependent, so they are only
    /// written when asked for.
    pub record_runtimes: bool,
    pub properties: PropertyConfig,
    pub stability: Option<StabilityConfig>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            systems: SystemSelection::AllBuiltin,
            optimizers: OptimizerChoice::ALL.to_vec(),
            noise_percents: vec![0.0, 0.1, 1.0],
            n_train_trajectories: 5,
            n_test_trajectories: 5,
            periods: 10,
            points_per_period: 100,
            n_models: 10,
            subsample_fraction: 0.5,
            grid_points: 300,
            weak: WeakConfig::default(),
            master_seed: 0,
            output_dir: PathBuf::from("sindybench-results"),
            record_runtimes: false,
            properties: PropertyConfig::default(),
            stability: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchmarkConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => config_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The selected systems, in configuration order.
    pub fn resolve_systems(&self) -> Result<Vec<PolynomialSystem>> {
        match &self.systems {
            SystemSelection::AllBuiltin => Ok(builtin_registry()),
            SystemSelection::Names(names) => names
                .iter()
                .map(|n| builtin_system(n).ok_or_else(|| config_err(format!("unknown system \"{n}\""))))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_train_trajectories", self.n_train_trajectories),
            ("n_test_trajectories", self.n_test_trajectories),
            ("periods", self.periods),
            ("points_per_period", self.points_per_period),
            ("n_models", self.n_models),
            ("grid_points", self.grid_points),
            ("properties.lyapunov_periods", self.properties.lyapunov_periods),
            ("properties.n_surrogates", self.properties.n_surrogates),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(config_err(format!("{name} must be positive")));
            }
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(config_err(format!(
                "subsample_fraction must be in (0, 1], got {}",
                self.subsample_fraction
            )));
        }
        if self.noise_percents.is_empty() {
            return Err(config_err("noise_percents is empty"));
        }
        for (i, &p) in self.noise_percents.iter().enumerate() {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(config_err(format!("noise percent must be finite and >= 0, got {p}")));
            }
            if self.noise_percents[..i].contains(&p) {
                return Err(config_err(format!("noise percent {p} listed twice")));
            }
        }
        if self.optimizers.is_empty() {
            return Err(config_err("optimizers is empty"));
        }
        for (i, o) in self.optimizers.iter().enumerate() {
            if self.optimizers[..i].contains(o) {
                return Err(config_err(format!("optimizer {o} listed twice")));
            }
        }
        if (self.properties.lyapunov_periods as f64) < MIN_LYAPUNOV_PERIODS {
            return Err(config_err(format!(
                "properties.lyapunov_periods must be at least {MIN_LYAPUNOV_PERIODS}"
            )));
        }
        if !(self.properties.renorm_periods > 0.0) {
            return Err(config_err("properties.renorm_periods must be positive"));
        }
        if !(self.properties.significance > 0.0 && self.properties.significance < 1.0) {
            return Err(config_err("properties.significance must be in (0, 1)"));
        }
        if let Some(s) = &self.stability {
            if s.n_trials == 0 || s.horizon_periods == 0 || !(s.perturbation >= 0.0) {
                return Err(config_err(
                    "stability needs n_trials > 0, horizon_periods > 0 and perturbation >= 0",
                ));
            }
        }
        self.weak.validate().map_err(|e| config_err(format!("weak: {e}")))?;
        let systems = self.resolve_systems()?;
        if systems.is_empty() {
            return Err(config_err("no systems selected"));
        }
        let needed = self.n_train_trajectories + self.n_test_trajectories;
        for (i, s) in systems.iter().enumerate() {
            if systems[..i].iter().any(|o| o.name() == s.name()) {
                return Err(config_err(format!("system {} listed twice", s.name())));
            }
            if s.reference_ics().len() < needed {
                return Err(config_err(format!(
                    "{} has {} reference initial conditions, {needed} trajectories requested",
                    s.name(),
                    s.reference_ics().len()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocol() {
        let cfg = BenchmarkConfig::from_toml("").unwrap();
        assert_eq!(cfg, BenchmarkConfig::default());
        assert_eq!(cfg.noise_percents, vec![0.0, 0.1, 1.0]);
        assert_eq!(cfg.weak.n_subdomains, 200);
        assert_eq!(cfg.grid_points, 300);
    }

    #[test]
    fn parses_names_and_optimizers() {
        let cfg = BenchmarkConfig::from_toml(
            r#"
            systems = ["Lorenz63", "Chen"]
            optimizers = ["stlsq", "weak_stlsq", "sr3_nu01"]
            noise_percents = [0.0]
            [weak]
            n_subdomains = 50
            [stability]
            n_trials = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.systems, SystemSelection::Names(vec!["Lorenz63".into(), "Chen".into()]));
        assert_eq!(
            cfg.optimizers,
            vec![OptimizerChoice::Stlsq, OptimizerChoice::WeakStlsq, OptimizerChoice::Sr3Nu01]
        );
        assert_eq!(cfg.weak.n_subdomains, 50);
        assert_eq!(cfg.stability.unwrap().n_trials, 4);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "systems = \"everything\"",
            "systems = [\"NoSuchSystem\"]",
            "optimizers = [\"ridge\"]",
            "subsample_fraction = 0.0",
            "subsample_fraction = 1.5",
            "n_models = 0",
            "noise_percents = [-1.0]",
            "noise_percents = []",
            "n_train_trajectories = 6\nn_test_trajectories = 5",
            "unknown_field = 1",
            "optimizers = [\"stlsq\", \"stlsq\"]",
            "[properties]\nlyapunov_periods = 50",
        ] {
            let err = BenchmarkConfig::from_toml(text).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err}");
        }
    }

    #[test]
    fn names_round_trip() {
        for o in OptimizerChoice::ALL {
            assert_eq!(OptimizerChoice::from_name(o.name()), Some(o));
        }
        assert_eq!(OptimizerChoice::Sr3Nu01.kind(), OptimizerKind::Sr3);
    }
}
