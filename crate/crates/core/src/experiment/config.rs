use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::FrequencyVector;
use crate::problems::{LossNormalization, PartitionPreset};

/// Relative cache paths in configs resolve against this directory when set.
pub const CACHE_ENV: &str = "BLOCKSMOO_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Alternates objectives and coordinate blocks.
    BlockSmoo,
    /// SGD on the weighted sum over the whole vector.
    WeightedSum,
    /// Alternates objectives, no blocks (`s = 1`).
    FunctionAlternate,
    /// Alternates blocks on the weighted sum as one objective (`q = 1`).
    BlockAlternate,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::BlockSmoo => "block-smoo",
            Algorithm::WeightedSum => "weighted-sum",
            Algorithm::FunctionAlternate => "function-alternate",
            Algorithm::BlockAlternate => "block-alternate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Reduced-rank regression on generated low-rank data.
    Synthetic {
        data_seed: u64,
        n_train: usize,
        n_test: usize,
        d: usize,
        q: usize,
        r: usize,
        noise_sigma: f64,
        /// Rank of the fitted model; defaults to `r`.
        rank: Option<usize>,
    },
    /// Reduced-rank regression on a dataset cache written by `ingest`.
    Cache {
        path: PathBuf,
        rank: usize,
        /// Response columns to keep, by name; all when absent.
        responses: Option<Vec<String>>,
        /// Keep only the earliest rows of each split.
        n_train: Option<usize>,
        n_test: Option<usize>,
    },
    /// Random convex quadratic objectives with Gaussian gradient noise;
    /// test loss is the objective itself.
    Quadratic {
        instance_seed: u64,
        n: usize,
        q: usize,
        eig_lo: f64,
        eig_hi: f64,
        center_scale: f64,
        noise_std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Budget {
    WorkUnits { value: u64 },
    /// `passes · N_train · n` work units: every sample touching every
    /// coordinate once per pass.
    DataPasses { passes: f64 },
    /// Wall-clock seconds per cell. Not reproducible; never used for acceptance.
    WallClock { seconds: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Inner-cycle length `p`; every `m` with entries summing to `p` is run.
    pub p: usize,
    #[serde(default = "default_sweep_step")]
    pub step: f64,
    #[serde(default = "default_sweep_passes")]
    pub data_passes: u64,
}

fn default_sweep_step() -> f64 {
    0.02
}

fn default_sweep_passes() -> u64 {
    20
}

fn default_checkpoints() -> usize {
    20
}

fn default_batch() -> usize {
    512
}

fn default_init_std() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Root seed; seed `i` of a cell is stream `i` under it.
    #[serde(default)]
    pub seed: u64,
    pub seeds: usize,
    pub problem: ProblemConfig,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub partition: PartitionPreset,
    /// Frequency vector; all ones when absent.
    #[serde(default)]
    pub m: Option<Vec<usize>>,
    pub step_sizes: Vec<f64>,
    pub budget: Budget,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
    #[serde(default)]
    pub normalization: LossNormalization,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let path = e.span().map_or_else(|| "<document>".to_string(), |s| key_at(text, s.start));
            Error::config(path, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn num_objectives(&self) -> usize {
        match &self.problem {
            ProblemConfig::Synthetic { q, .. } | ProblemConfig::Quadratic { q, .. } => *q,
            ProblemConfig::Cache { responses, .. } => responses.as_ref().map_or(0, Vec::len),
        }
    }

    /// The configured `m`, or all ones for `q` objectives.
    pub fn frequency_vector(&self, q: usize) -> Result<FrequencyVector> {
        let m = self.m.clone().unwrap_or_else(|| vec![1; q]);
        if m.len() != q {
            return Err(Error::config("m", format!("has {} entries for {q} objectives", m.len())));
        }
        FrequencyVector::new(m).map_err(|e| Error::config("m", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::config("seeds", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "list is empty"));
        }
        if self.step_sizes.is_empty() {
            return Err(Error::config("step_sizes", "list is empty"));
        }
        if let Some(i) = self.step_sizes.iter().position(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::config(format!("step_sizes[{i}]"), "must be positive and finite"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch", "must be positive"));
        }
        if self.checkpoints == 0 {
            return Err(Error::config("checkpoints", "must be positive"));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return Err(Error::config("init_std", "must be non-negative"));
        }
        match self.budget {
            Budget::WorkUnits { value: 0 } => return Err(Error::config("budget.value", "must be positive")),
            Budget::DataPasses { passes } if !(passes > 0.0 && passes.is_finite()) => {
                return Err(Error::config("budget.passes", "must be positive"))
            }
            Budget::WallClock { seconds } if !(seconds > 0.0 && seconds.is_finite()) => {
                return Err(Error::config("budget.seconds", "must be positive"))
            }
            _ => {}
        }
        if let Some(m) = &self.m {
            if m.iter().sum::<usize>() == 0 {
                return Err(Error::config("m", "entries sum to zero"));
            }
            let q = self.num_objectives();
            if q > 0 && m.len() != q {
                return Err(Error::config("m", format!("has {} entries for {q} objectives", m.len())));
            }
        }
        if let Some(s) = &self.sweep {
            if s.p == 0 {
                return Err(Error::config("sweep.p", "must be positive"));
            }
            if !(s.step > 0.0 && s.step.is_finite()) {
                return Err(Error::config("sweep.step", "must be positive"));
            }
        }
        Ok(())
    }

    /// Resolves a relative cache path: against `$BLOCKSMOO_CACHE` when set,
    /// otherwise against `base` (typically the config file's directory).
    pub fn resolve_cache_path(path: &Path, base: &Path) -> PathBuf {
        if path.is_absolute() {
            return path.to_path_buf();
        }
        match std::env::var_os(CACHE_ENV) {
            Some(root) => PathBuf::from(root).join(path),
            None => base.join(path),
        }
    }
}

/// Best-effort dotted key path for an error offset: the enclosing table
/// header plus the key on the offending line.
fn key_at(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let table = before
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')))
        .map(str::to_string);
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    if let Some(header) = line.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
        // errors inside tagged tables point at the table itself
        return header.to_string();
    }
    let key = line.split('=').next().map(str::trim).filter(|k| !k.is_empty() && !k.starts_with('['));
    match (table, key) {
        (Some(t), Some(k)) => format!("{t}.{k}"),
        (Some(t), None) => t,
        (None, Some(k)) => k.to_string(),
        (None, None) => "<document>".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
name = "synthetic-small"
seed = 7
seeds = 2
algorithms = ["block-smoo", "weighted-sum", "function-alternate", "block-alternate"]
partition = "row-blocks"
step_sizes = [0.01, 0.02]
checkpoints = 4
batch = 32

[problem]
kind = "synthetic"
data_seed = 3
n_train = 256
n_test = 64
d = 10
q = 3
r = 2
noise_sigma = 0.05

[budget]
kind = "work-units"
value = 200000
"#;

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.init_std, 0.1);
        assert_eq!(cfg.partition, PartitionPreset::RowBlocks);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = SAMPLE.replace("step_sizes = [0.01, 0.02]", "step_sizes = [0.01, -0.02]");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "step_sizes[1]"),
            other => panic!("{other:?}"),
        }
        let bad = SAMPLE.replace("value = 200000", "value = \"lots\"");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("budget"), "{path}"),
            other => panic!("{other:?}"),
        }
        let bad = SAMPLE.replace("batch = 32", "batch = 32\nbogus = 1");
        assert!(matches!(ExperimentConfig::from_toml_str(&bad), Err(Error::Config { .. })));
        let bad = SAMPLE.replace("checkpoints = 4", "m = [1, 2]");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "m"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relative_cache_paths() {
        let p = ExperimentConfig::resolve_cache_path(Path::new("/abs/c.bin"), Path::new("/base"));
        assert_eq!(p, PathBuf::from("/abs/c.bin"));
    }
}
