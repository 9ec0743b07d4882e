//! Experiment configuration: TOML with nested tables, defaults per
//! experiment, unknown keys rejected.

use std::fmt;
use std::path::Path;

use bilin_tf_core::grid::{ExponentTriple, GridSpec};
use serde::{Deserialize, Serialize};

/// Experiments the harness runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    /// Sharp partition of the Nyquist band: `‖f‖₂` against the square function.
    PlancherelCheck,
    /// Sharp disjoint non-covering collections: Bessel bound and `L^p` ratio.
    RdfSweep,
    /// Bilinear square-function ratio as `|Ω|` grows.
    BilinearSweep,
    /// Smooth against sharp cutoffs at `r = 2`.
    EndpointR2,
    /// Greedy against exhaustive energy and decrement post-conditions.
    EnergyAlgoAudit,
    /// Model sum against the level-by-level bound.
    ModelSumAudit,
    /// Per-level measurements of the bound.
    LambdaBoundAudit,
    /// Unit-translate buckets of directional symbols.
    PseudoBucket,
    /// Square function of a translated diagonal family.
    TranslatedFamily,
    /// Restricted weak-type constant of the model sum.
    WeakTypeEstimate,
    /// Decay of wave-packet inner products away from the diagonal.
    OffdiagDecay,
}

impl Experiment {
    /// Every experiment, in declaration order.
    pub const ALL: [Experiment; 11] = [
        Self::PlancherelCheck,
        Self::RdfSweep,
        Self::BilinearSweep,
        Self::EndpointR2,
        Self::EnergyAlgoAudit,
        Self::ModelSumAudit,
        Self::LambdaBoundAudit,
        Self::PseudoBucket,
        Self::TranslatedFamily,
        Self::WeakTypeEstimate,
        Self::OffdiagDecay,
    ];

    /// Snake-case name used in files and headers.
    pub fn name(self) -> &'static str {
        match self {
            Self::PlancherelCheck => "plancherel_check",
            Self::RdfSweep => "rdf_sweep",
            Self::BilinearSweep => "bilinear_sweep",
            Self::EndpointR2 => "endpoint_r2",
            Self::EnergyAlgoAudit => "energy_algo_audit",
            Self::ModelSumAudit => "model_sum_audit",
            Self::LambdaBoundAudit => "lambda_bound_audit",
            Self::PseudoBucket => "pseudo_bucket",
            Self::TranslatedFamily => "translated_family",
            Self::WeakTypeEstimate => "weak_type_estimate",
            Self::OffdiagDecay => "offdiag_decay",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    /// Period `L`.
    pub period: f64,
    /// Sample count `N`.
    pub samples: usize,
}

/// Random interval collections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionParams {
    /// Interval count.
    pub count: usize,
    /// Length band `[min, max]`.
    pub length: [f64; 2],
    /// Gap band between consecutive intervals.
    pub separation: [f64; 2],
    /// Seed of the collection stream.
    pub seed: u64,
}

/// Exponents: the pair `(p, q)` with `r` from Hölder, plus the trilinear
/// triple used by the model-sum experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentParams {
    /// `p`.
    pub p: f64,
    /// `q`.
    pub q: f64,
    /// Trilinear exponents `(p1, p2, p3)`.
    pub triple: [f64; 3],
}

/// Experiment-specific knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    /// Collection sizes swept by `bilinear_sweep`.
    pub sizes: Vec<usize>,
    /// Upper bound on tri-tiles per instance.
    pub max_tritiles: usize,
    /// Sobolev exponent of directional symbols.
    pub sobolev_s: f64,
    /// Translates `n ∈ [-translates, translates]`.
    pub translates: i64,
    /// Density of random measurable sets.
    pub density: f64,
}

/// Full configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment to run.
    pub experiment: Experiment,
    /// Number of trials.
    pub trials: usize,
    /// Seed fixing every random draw of the run.
    pub seed: u64,
    /// Output directory.
    pub output_path: String,
    /// Sampling grid.
    pub grid: GridParams,
    /// Interval collections.
    pub collection: CollectionParams,
    /// Exponents.
    pub exponents: ExponentParams,
    /// Experiment-specific knobs.
    pub sweep: SweepParams,
}

/// Invalid configuration with the offending field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted path of the field, or `config` for parse failures.
    pub field: String,
    /// What is wrong.
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_owned(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at {}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    /// Defaults of `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        use Experiment::*;
        let (trials, grid) = match experiment {
            PlancherelCheck => (50, GridParams { period: 64.0, samples: 4096 }),
            RdfSweep => (100, GridParams { period: 32.0, samples: 1024 }),
            BilinearSweep => (200, GridParams { period: 16.0, samples: 1024 }),
            EndpointR2 => (50, GridParams { period: 16.0, samples: 512 }),
            EnergyAlgoAudit | ModelSumAudit | LambdaBoundAudit | WeakTypeEstimate => {
                (100, GridParams { period: 64.0, samples: 512 })
            }
            PseudoBucket | TranslatedFamily => (20, GridParams { period: 16.0, samples: 64 }),
            OffdiagDecay => (20, GridParams { period: 4096.0, samples: 32768 }),
        };
        Self {
            experiment,
            trials,
            seed: 1,
            output_path: "out".into(),
            grid,
            collection: CollectionParams { count: 16, length: [1.0, 1.0], separation: [1.0, 2.0], seed: 7 },
            exponents: ExponentParams { p: 4.0, q: 4.0, triple: [4.0, 4.0, 4.0] },
            sweep: SweepParams {
                sizes: vec![4, 8, 16, 32, 64],
                max_tritiles: 500,
                sobolev_s: 1.5,
                translates: 4,
                density: 0.3,
            },
        }
    }

    /// Parses TOML text: `experiment` is required, every other key
    /// overrides the experiment defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::new("config", e.message()))?;
        let exp = user
            .get("experiment")
            .ok_or_else(|| ConfigError::new("experiment", "missing"))?
            .clone()
            .try_into::<Experiment>()
            .map_err(|e| ConfigError::new("experiment", e.to_string()))?;
        let mut merged = toml::Table::try_from(Self::defaults(exp)).expect("defaults serialize");
        merge(&mut merged, user);
        let cfg: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::new("config", e.message().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a TOML file.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("config", e.to_string()))?;
        Self::from_toml(&text)
    }

    /// Serialized form, accepted back by [`Self::from_toml`].
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Grid of the run.
    pub fn grid_spec(&self) -> Result<GridSpec<f64>, ConfigError> {
        GridSpec::new(self.grid.period, self.grid.samples).map_err(|e| ConfigError::new("grid", e.to_string()))
    }

    /// Exponent pair with `r` from Hölder.
    pub fn exponent_triple(&self) -> Result<ExponentTriple<f64>, ConfigError> {
        ExponentTriple::from_pq(self.exponents.p, self.exponents.q)
            .map_err(|e| ConfigError::new("exponents", e.to_string()))
    }

    /// Checks every guard.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        self.grid_spec()?;
        self.exponent_triple()?;
        let c = &self.collection;
        if c.count == 0 {
            return Err(ConfigError::new("collection.count", "must be at least 1"));
        }
        if !(c.length[0] > 0.0 && c.length[0] <= c.length[1]) {
            return Err(ConfigError::new("collection.length", "need 0 < min <= max"));
        }
        if !(c.separation[0] >= 0.0 && c.separation[0] <= c.separation[1]) {
            return Err(ConfigError::new("collection.separation", "need 0 <= min <= max"));
        }
        if self.exponents.triple.iter().any(|&p| !(p > 2.0 && p.is_finite())) {
            return Err(ConfigError::new("exponents.triple", "each p_i must lie in (2, ∞)"));
        }
        let s = &self.sweep;
        if s.sizes.is_empty() || s.sizes.contains(&0) {
            return Err(ConfigError::new("sweep.sizes", "need a nonempty list of positive sizes"));
        }
        if s.max_tritiles == 0 {
            return Err(ConfigError::new("sweep.max_tritiles", "must be at least 1"));
        }
        if !(s.sobolev_s > 1.0 && s.sobolev_s <= 2.0) {
            return Err(ConfigError::new("sweep.sobolev_s", "must lie in (1, 2]"));
        }
        if s.translates < 0 {
            return Err(ConfigError::new("sweep.translates", "must be nonnegative"));
        }
        if !(s.density > 0.0 && s.density <= 1.0) {
            return Err(ConfigError::new("sweep.density", "must lie in (0, 1]"));
        }
        if self.experiment == Experiment::EndpointR2 {
            let r = self.exponent_triple()?.r;
            if (r - 2.0).abs() > 1e-12 {
                return Err(ConfigError::new("exponents", format!("endpoint_r2 needs r = 2, got {r}")));
            }
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, user: toml::Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
