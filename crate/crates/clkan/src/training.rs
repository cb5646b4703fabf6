//! Gradient training with the experimental protocol: Adam at lr 0.1, a
//! validation-loss plateau scheduler (factor 0.9, patience 20, threshold
//! 0.001), early stopping once the validation loss has not improved by at
//! least 0.001 over the last 200 epochs, and 5-fold cross-validation with
//! fresh weights and Sobol grids per fold.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Error;
use crate::network::{ForwardCache, Model, ModelConfig};
use crate::norm::RunningStats;

/// Training hyperparameters. The defaults are the experimental protocol;
/// `max_epochs` and `batch_size` are implementation choices and recorded in
/// every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub initial_lr: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub plateau_threshold: f64,
    pub early_stop_window: usize,
    pub early_stop_min_delta: f64,
    pub folds: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.1,
            plateau_factor: 0.9,
            plateau_patience: 20,
            plateau_threshold: 0.001,
            early_stop_window: 200,
            early_stop_min_delta: 0.001,
            folds: 5,
            batch_size: 1024,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.initial_lr <= 0.0 {
            return Err(Error::InvalidTrainConfig("initial_lr must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.plateau_factor) || self.plateau_factor <= 0.0 {
            return Err(Error::InvalidTrainConfig(
                "plateau_factor must be in (0, 1)".into(),
            ));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.folds == 0 {
            return Err(Error::InvalidTrainConfig(
                "batch_size, max_epochs and folds must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// MSE and MAE over a batch: mean squared / plain Clifford norm of the error.
pub fn mse_mae(pred: &[f64], target: &[f64], dim: usize) -> Result<(f64, f64), Error> {
    if pred.is_empty() || pred.len() != target.len() {
        return Err(Error::EmptyBatch);
    }
    let n = pred.len() / dim;
    let mut mse = 0.0;
    let mut mae = 0.0;
    for i in 0..n {
        let mut sq = 0.0;
        for c in 0..dim {
            let e = pred[i * dim + c] - target[i * dim + c];
            sq += e * e;
        }
        mse += sq;
        mae += sq.sqrt();
    }
    Ok((mse / n as f64, mae / n as f64))
}

/// Adam with the conventional (0.9, 0.999, 1e-8) constants; one state slot
/// per real parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert!(params.len() == grads.len() && params.len() == self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Validation-loss plateau scheduler: multiplies the learning rate by
/// `factor` after `patience` epochs without an improvement of more than
/// `threshold` over the best loss seen so far.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    lr: f64,
    factor: f64,
    patience: usize,
    threshold: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, threshold: f64) -> Self {
        Self {
            lr,
            factor,
            patience,
            threshold,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    /// Called once per epoch with the current validation loss; returns the
    /// learning rate to use next.
    pub fn step(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best - self.threshold {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.best = self.best.min(val_loss);
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                self.lr *= self.factor;
                self.bad_epochs = 0;
            }
        }
        self.lr
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }
}

/// True once the best validation loss inside the trailing window has failed
/// to improve on the prior best by at least `min_delta`. Histories no longer
/// than the window never stop.
pub fn early_stop_check(history: &[f64], window: usize, min_delta: f64) -> bool {
    if history.len() <= window {
        return false;
    }
    let split = history.len() - window;
    let prior_best = history[..split].iter().cloned().fold(f64::INFINITY, f64::min);
    let recent_best = history[split..].iter().cloned().fold(f64::INFINITY, f64::min);
    recent_best > prior_best - min_delta
}

/// Per-fold outcome of cross-validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub epochs: usize,
    pub train_curve: Vec<f64>,
    pub val_curve: Vec<f64>,
    pub test_mse: f64,
    pub test_mae: f64,
}

/// Aggregate over the folds, reported as mean plus sample standard deviation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossValResult {
    pub folds: Vec<FoldResult>,
    pub test_mse_mean: f64,
    pub test_mse_std: f64,
    pub test_mae_mean: f64,
    pub test_mae_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Trains one model on a fixed train/validation split. Returns the model at
/// its best validation loss together with the loss curves.
pub fn train_fold(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    train: &Dataset,
    val: &Dataset,
    fold: usize,
    model_seed: u64,
) -> Result<(Model, Vec<f64>, Vec<f64>), Error> {
    train_config.validate()?;
    let mut model = Model::new(model_config.clone(), model_seed)?;
    let dim = model.algebra().dim();
    let arity = model_config.widths[0];
    let n_train = train.len();
    let in_stride = arity * dim;

    let mut adam = Adam::new(model.param_count());
    let mut sched = PlateauScheduler::new(
        train_config.initial_lr,
        train_config.plateau_factor,
        train_config.plateau_patience,
        train_config.plateau_threshold,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(train_config.seed, 7 + fold as u64));

    let mut cache = ForwardCache::default();
    let mut grads = vec![0.0; model.param_count()];
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut train_curve = Vec::new();
    let mut val_curve = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_snapshot: Option<(Vec<f64>, Vec<RunningStats>)> = None;

    let batch_size = train_config.batch_size.min(n_train).max(1);
    let mut batch_in = vec![0.0; batch_size * in_stride];
    let mut batch_tg = vec![0.0; batch_size * dim];

    for epoch in 0..train_config.max_epochs {
        order.shuffle(&mut rng);
        let mut lr = sched.lr();
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(batch_size) {
            // a trailing chunk of one sample cannot be batch-normalized
            if chunk.len() < 2 && batch_size > 1 {
                continue;
            }
            let b = chunk.len();
            for (row, &idx) in chunk.iter().enumerate() {
                batch_in[row * in_stride..(row + 1) * in_stride]
                    .copy_from_slice(&train.inputs[idx * in_stride..(idx + 1) * in_stride]);
                batch_tg[row * dim..(row + 1) * dim]
                    .copy_from_slice(&train.targets[idx * dim..(idx + 1) * dim]);
            }
            let bin = &batch_in[..b * in_stride];
            let btg = &batch_tg[..b * dim];

            let out = model.forward_train(bin, &mut cache)?;
            let (loss, _) = mse_mae(&out, btg, dim)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { fold, epoch, loss });
            }
            epoch_loss += loss * b as f64;
            seen += b;

            // d(MSE)/d(out) = 2 (out - target) / batch
            let scale = 2.0 / b as f64;
            let grad_out: Vec<f64> = out
                .iter()
                .zip(btg)
                .map(|(o, t)| scale * (o - t))
                .collect();
            grads.iter_mut().for_each(|g| *g = 0.0);
            model.backward(&cache, &grad_out, &mut grads);
            adam.step(model.params_mut(), &grads, lr);
        }
        train_curve.push(epoch_loss / seen.max(1) as f64);

        let val_out = model.forward(&val.inputs)?;
        let (val_loss, _) = mse_mae(&val_out, &val.targets, dim)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                fold,
                epoch,
                loss: val_loss,
            });
        }
        val_curve.push(val_loss);
        if val_loss < best_val {
            best_val = val_loss;
            best_snapshot = Some((model.params().to_vec(), model.stats().to_vec()));
        }
        lr = sched.step(val_loss);
        let _ = lr;

        if early_stop_check(
            &val_curve,
            train_config.early_stop_window,
            train_config.early_stop_min_delta,
        ) {
            break;
        }
    }

    if let Some((p, s)) = best_snapshot {
        model.params_mut().copy_from_slice(&p);
        model.stats_mut().clone_from_slice(&s);
    }
    Ok((model, train_curve, val_curve))
}

/// 5-fold cross-validation with per-fold re-initialization of weights and
/// Sobol grids. The fold partition is one seeded shuffle of the train/val
/// set split into k contiguous chunks; fold i validates on chunk i and the
/// final model is evaluated once on the fixed test set.
pub fn cross_validate(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    train_val: &Dataset,
    test: &Dataset,
) -> Result<CrossValResult, Error> {
    train_config.validate()?;
    model_config.validate()?;
    let k = train_config.folds;
    let n = train_val.len();
    if k > n {
        return Err(Error::TooManyFolds {
            samples: n,
            folds: k,
        });
    }
    let dim = model_config.signature.dim();

    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(train_config.seed, 1));
    perm.shuffle(&mut rng);

    // folds are fully independent (fresh weights, grids and split per fold),
    // so they run in parallel; each fold is deterministic on its own, which
    // keeps the aggregate identical to a sequential run
    let folds: Vec<FoldResult> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let lo = fold * n / k;
            let hi = (fold + 1) * n / k;
            let val_idx = &perm[lo..hi];
            let train_idx: Vec<usize> =
                perm[..lo].iter().chain(&perm[hi..]).cloned().collect();
            let train_set = train_val.subset(&train_idx);
            let val_set = train_val.subset(val_idx);

            let model_seed = mix_seed(train_config.seed, 100 + fold as u64);
            let (model, train_curve, val_curve) = train_fold(
                model_config,
                train_config,
                &train_set,
                &val_set,
                fold,
                model_seed,
            )?;

            let test_out = model.forward(&test.inputs)?;
            let (test_mse, test_mae) = mse_mae(&test_out, &test.targets, dim)?;
            Ok(FoldResult {
                fold,
                epochs: val_curve.len(),
                train_curve,
                val_curve,
                test_mse,
                test_mae,
            })
        })
        .collect::<Result<_, Error>>()?;

    let mses: Vec<f64> = folds.iter().map(|f| f.test_mse).collect();
    let maes: Vec<f64> = folds.iter().map(|f| f.test_mae).collect();
    let (test_mse_mean, test_mse_std) = mean_std(&mses);
    let (test_mae_mean, test_mae_std) = mean_std(&maes);
    Ok(CrossValResult {
        folds,
        test_mse_mean,
        test_mse_std,
        test_mae_mean,
        test_mae_std,
    })
}
