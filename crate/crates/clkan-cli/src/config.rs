//! TOML experiment configuration.
//!
//! One file describes one experiment: the model axes, optional training
//! overrides, sample counts, and (for `sweep`) the grid combinations to
//! iterate. Unknown keys are rejected so typos fail loudly.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use clkan::data::{sample_counts, Task};
use clkan::network::{ModelConfig, NormKind, RbfKind};
use clkan::{GridKind, GridSpec, Signature, TrainConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub task: String,
    /// (train+val, test) sample counts; defaults follow the task family.
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    #[serde(default)]
    pub data_seed: u64,
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Signature as [p, q, r].
    pub signature: [u32; 3],
    pub widths: Vec<usize>,
    pub grid_kind: GridKind,
    pub grid_points: usize,
    #[serde(default = "default_rbf")]
    pub rbf: RbfKind,
    #[serde(default = "default_norm")]
    pub norm: NormKind,
}

fn default_rbf() -> RbfKind {
    RbfKind::Clifford
}

fn default_norm() -> NormKind {
    NormKind::NodeWise
}

/// Optional overrides of the training protocol defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub initial_lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
}

/// Grid combinations for `sweep`: the cross product of kinds and sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub grid_kinds: Vec<GridKind>,
    pub grid_points: Vec<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.task()?;
        let (model, train) = self.resolve(self.model.grid_kind, self.model.grid_points);
        model
            .validate()
            .with_context(|| "invalid [model] section".to_string())?;
        train
            .validate()
            .with_context(|| "invalid [train] section".to_string())?;
        let task = self.task()?;
        if self.model.widths[0] != task.arity() {
            bail!(
                "[model] widths[0] = {} but task `{}` takes {} input(s)",
                self.model.widths[0],
                task.name(),
                task.arity()
            );
        }
        if let Some(sweep) = &self.sweep {
            if sweep.grid_kinds.is_empty() || sweep.grid_points.is_empty() {
                bail!("[sweep] grid_kinds and grid_points must be non-empty");
            }
        }
        Ok(())
    }

    pub fn task(&self) -> Result<Task> {
        Ok(Task::parse(&self.experiment.task)?)
    }

    pub fn signature(&self) -> Signature {
        let [p, q, r] = self.model.signature;
        Signature::new(p, q, r)
    }

    /// Sample counts, defaulting per task family.
    pub fn samples(&self) -> Result<(usize, usize)> {
        let (dt, de) = sample_counts(self.signature(), self.task()?);
        Ok((
            self.experiment.n_train.unwrap_or(dt),
            self.experiment.n_test.unwrap_or(de),
        ))
    }

    /// Concrete model and training configs for one grid combination.
    pub fn resolve(&self, kind: GridKind, points: usize) -> (ModelConfig, TrainConfig) {
        let t = &self.train;
        let base_seed = t.seed.unwrap_or(0);
        let grid = GridSpec {
            kind,
            points_per_dim: points,
            seed: base_seed,
            ..GridSpec::full(points)
        };
        let model = ModelConfig {
            signature: self.signature(),
            widths: self.model.widths.clone(),
            grid,
            rbf: self.model.rbf,
            norm: self.model.norm,
        };
        let defaults = TrainConfig::default();
        let train = TrainConfig {
            initial_lr: t.initial_lr.unwrap_or(defaults.initial_lr),
            batch_size: t.batch_size.unwrap_or(defaults.batch_size),
            max_epochs: t.max_epochs.unwrap_or(defaults.max_epochs),
            folds: t.folds.unwrap_or(defaults.folds),
            seed: base_seed,
            ..defaults
        };
        (model, train)
    }

    /// The (kind, points) combinations this config covers: the sweep cross
    /// product when present, else the single [model] grid.
    pub fn grid_combinations(&self) -> Vec<(GridKind, usize)> {
        match &self.sweep {
            Some(s) => s
                .grid_kinds
                .iter()
                .flat_map(|&k| s.grid_points.iter().map(move |&p| (k, p)))
                .collect(),
            None => vec![(self.model.grid_kind, self.model.grid_points)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
        [experiment]
        name = "square-f8"
        task = "square"

        [model]
        signature = [0, 1, 0]
        widths = [1, 2, 1]
        grid_kind = "full"
        grid_points = 8

        [train]
        max_epochs = 100
    "#;

    #[test]
    fn parses_and_resolves() {
        let c: ExperimentConfig = toml::from_str(EXAMPLE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.samples().unwrap(), (5000, 5000));
        let (model, train) = c.resolve(GridKind::Full, 8);
        assert_eq!(model.widths, vec![1, 2, 1]);
        assert_eq!(train.max_epochs, 100);
        assert_eq!(train.initial_lr, 0.1);
        assert_eq!(c.grid_combinations(), vec![(GridKind::Full, 8)]);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = EXAMPLE.replace("max_epochs", "max_epochz");
        let err = toml::from_str::<ExperimentConfig>(&bad).unwrap_err();
        assert!(err.to_string().contains("max_epochz"), "{err}");
    }

    #[test]
    fn rejects_arity_mismatch() {
        let bad = EXAMPLE.replace("\"square\"", "\"mult\"");
        let c: ExperimentConfig = toml::from_str(&bad).unwrap();
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("takes 2 input"), "{err}");
    }

    #[test]
    fn sweep_cross_product() {
        let with_sweep = format!(
            "{EXAMPLE}\n[sweep]\ngrid_kinds = [\"sobol\"]\ngrid_points = [2, 3, 4, 5, 6, 7, 8]\n"
        );
        let c: ExperimentConfig = toml::from_str(&with_sweep).unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid_combinations().len(), 7);
    }
}
