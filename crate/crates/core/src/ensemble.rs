//! The boosting loop with automatic termination.
//!
//! Each iteration grows a tree on the current derivatives and accepts it only
//! if `δ(2−δ)·R + δ·C̃_R > 0`, where `R` and `C̃_R` sum the per-split
//! reductions and optimisms of the tree. Shrinking a tree by `δ` scales its
//! training-loss reduction by `δ(2−δ)` and its optimism by `δ`.

use crate::criterion::{MaxCirEstimator, DEFAULT_N_SIM};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::tree::{GrowthMode, SortedColumns, Tree, TreeBuilder};

pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_MAX_ITERATIONS: usize = 30_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub mode: GrowthMode,
    pub seed: u64,
    pub n_sim: usize,
    pub max_iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            mode: GrowthMode::GlobalSubset,
            seed: 1,
            n_sim: DEFAULT_N_SIM,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.learning_rate;
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::Config(format!(
                "learning rate must lie in (0, 1], got {d}"
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.n_sim == 0 {
            return Err(Error::Config("n_sim must be at least 1".into()));
        }
        Ok(())
    }
}

/// One accepted boosting iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub leaves: usize,
    pub train_loss: f64,
    /// Training loss plus the accumulated shrunken optimism.
    pub gen_loss: f64,
}

/// Why boosting stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// The candidate tree at `iteration` failed the stopping test with `value <= 0`.
    Converged {
        iteration: usize,
        leaves: usize,
        value: f64,
    },
    /// The iteration cap was reached.
    IterationCap,
}

/// A trained additive model `f0 + δ·Σ_k tree_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub loss: LossSpec,
    pub initial_prediction: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub feature_names: Vec<String>,
    pub mode: GrowthMode,
    pub seed: u64,
    pub n_sim: usize,
    /// Per-iteration training log; empty for loaded models.
    pub log: Vec<IterationRecord>,
    pub termination: Option<Termination>,
}

impl EnsembleModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_arity(&self, actual: usize) -> Result<()> {
        if actual != self.n_features() {
            return Err(Error::Arity {
                expected: self.n_features(),
                actual,
            });
        }
        Ok(())
    }

    /// Link-scale prediction for one row.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        self.check_arity(row.len())?;
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        Ok(self.initial_prediction + self.learning_rate * sum)
    }

    /// Link-scale predictions for every row.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_arity(data.n_features())?;
        let mut row = vec![0.0; data.n_features()];
        (0..data.n_rows())
            .map(|i| {
                for (v, c) in row.iter_mut().zip(data.columns()) {
                    *v = c[i];
                }
                self.predict_row(&row)
            })
            .collect()
    }

    /// Response-scale predictions through the inverse link.
    pub fn predict_response(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.predict(data)?
            .into_iter()
            .map(|f| self.loss.inverse_link(f))
            .collect()
    }

    /// Link-scale predictions after each stage: `stages[0]` is the constant
    /// model and `stages[k]` includes the first `k` trees.
    pub fn staged_predict(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check_arity(data.n_features())?;
        let n = data.n_rows();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| data.row(i)).collect();
        let mut sums = vec![0.0; n];
        let mut stages = Vec::with_capacity(self.trees.len() + 1);
        stages.push(vec![self.initial_prediction; n]);
        for tree in &self.trees {
            for (s, row) in sums.iter_mut().zip(&rows) {
                *s += tree.predict_row(row);
            }
            stages.push(
                sums.iter()
                    .map(|s| self.initial_prediction + self.learning_rate * s)
                    .collect(),
            );
        }
        Ok(stages)
    }
}

/// Trains a model without progress reporting.
pub fn train(data: &Dataset, loss: LossSpec, config: &TrainConfig) -> Result<EnsembleModel> {
    train_with(data, loss, config, |_| {})
}

/// Trains a model, calling `observer` after every accepted iteration.
pub fn train_with<F>(
    data: &Dataset,
    loss: LossSpec,
    config: &TrainConfig,
    mut observer: F,
) -> Result<EnsembleModel>
where
    F: FnMut(&IterationRecord),
{
    config.validate()?;
    if !data.has_response() {
        return Err(Error::Input("training data has no response".into()));
    }
    if data.n_rows() < 2 {
        return Err(Error::Input("training needs at least two rows".into()));
    }
    if data.n_features() == 0 {
        return Err(Error::Input("training needs at least one feature".into()));
    }
    let y = data.response();
    let delta = config.learning_rate;
    let f0 = loss.initial_prediction(y)?;
    let mut pred = vec![f0; y.len()];
    let sorted = SortedColumns::new(data)?;
    let mut estimator = MaxCirEstimator::new(config.seed, config.n_sim)?;

    let mut optimism_acc = 0.0;
    let mut trees = Vec::new();
    let mut log = Vec::new();
    let mut termination = Termination::IterationCap;

    for iteration in 1..=config.max_iterations {
        let at = |e: Error| Error::Training {
            iteration,
            source: Box::new(e),
        };
        let gh = loss.grad_hess(y, &pred).map_err(at)?;
        let built = TreeBuilder::new(data, &sorted, &mut estimator, config.mode)
            .build(&gh.g, &gh.h)
            .map_err(at)?;
        let leaves = built.tree.n_leaves();
        let value = delta * (2.0 - delta) * built.total_reduction + delta * built.total_optimism;
        if value.is_nan() || value <= 0.0 {
            termination = Termination::Converged {
                iteration,
                leaves,
                value,
            };
            break;
        }
        for (p, w) in pred.iter_mut().zip(&built.row_weights) {
            *p += delta * w;
        }
        let train_loss = loss.mean_loss(y, &pred).map_err(at)?;
        optimism_acc -= delta * built.total_optimism;
        let record = IterationRecord {
            iteration,
            leaves,
            train_loss,
            gen_loss: train_loss + optimism_acc,
        };
        observer(&record);
        log.push(record);
        trees.push(built.tree);
    }
    if termination == Termination::IterationCap {
        log::warn!(
            "boosting stopped at the iteration cap of {} before the stopping test failed",
            config.max_iterations
        );
    }

    Ok(EnsembleModel {
        loss,
        initial_prediction: f0,
        learning_rate: delta,
        trees,
        feature_names: data.names().to_vec(),
        mode: config.mode,
        seed: config.seed,
        n_sim: config.n_sim,
        log,
        termination: Some(termination),
    })
}
