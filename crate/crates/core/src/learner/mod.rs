//! Training and evaluation of link-quality predictors.
//!
//! The main model is the feed-forward network in [`mlp`], trained here by
//! seeded mini-batch backpropagation: deterministic split, z-score scaling
//! fit on the training split only, 200 epochs of batch-10 updates by
//! default, and MSE/R² evaluation on the held-out split. Classical
//! baselines (ordinary least squares in [`linreg`], CART trees, bagged
//! forests and gradient-boosted ensembles in [`tree`]) share the same data
//! layout: three features per record (alpha, beta, distance) and one target.

pub mod linreg;
pub mod mlp;
pub mod model_io;
pub mod tree;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::profiler::Dataset;
use mlp::{backward_batch, LayerGradients, Mlp, INPUT_DIM};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("dataset is empty or too small to split")]
    EmptyDataset,
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {left} predictions vs {right} targets")]
    LengthMismatch { left: usize, right: usize },
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    #[error("non-finite loss at epoch {epoch} (diverged; lower the learning rate)")]
    NonFiniteLoss { epoch: usize },
    #[error("singular design matrix (collinear features); enable the ridge fallback")]
    SingularDesign,
    #[error("model file line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },
    #[error("unsupported model format version {0:?}")]
    VersionMismatch(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Extract the learner's data layout from a dataset: features
/// `[alpha_deg, beta_deg, distance_ft]` and the measured value as target.
pub fn features_and_targets(dataset: &Dataset) -> (Vec<[f64; INPUT_DIM]>, Vec<f64>) {
    let features = dataset
        .records
        .iter()
        .map(|r| [r.alpha_deg, r.beta_deg, r.distance_ft])
        .collect();
    let targets = dataset.records.iter().map(|r| r.value).collect();
    (features, targets)
}

// ── split ───────────────────────────────────────────────────────────────────

/// A deterministic train/test partition of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Seeded shuffle then split: the first `floor(n · train_fraction)` shuffled
/// records form the training set (clamped so both splits are non-empty).
pub fn split_dataset(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<Split, LearnerError> {
    let n = dataset.records.len();
    if n < 2 {
        return Err(LearnerError::EmptyDataset);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(LearnerError::InvalidHyperparameter(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let train_len = ((n as f64 * train_fraction).floor() as usize).clamp(1, n - 1);
    let (train_indices, test_indices) = indices.split_at(train_len);

    let subset = |idx: &[usize]| Dataset {
        profile_name: dataset.profile_name.clone(),
        seed: dataset.seed,
        records: idx.iter().map(|&i| dataset.records[i]).collect(),
    };
    Ok(Split {
        train: subset(train_indices),
        test: subset(test_indices),
        train_indices: train_indices.to_vec(),
        test_indices: test_indices.to_vec(),
    })
}

// ── scaling ─────────────────────────────────────────────────────────────────

/// Z-score scaler for the three features and the target, fit on the
/// training split only. Constant columns are rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub feature_mean: [f64; INPUT_DIM],
    pub feature_std: [f64; INPUT_DIM],
    pub target_mean: f64,
    pub target_std: f64,
}

impl Scaler {
    pub fn fit(features: &[[f64; INPUT_DIM]], targets: &[f64]) -> Result<Scaler, LearnerError> {
        if features.is_empty() || features.len() != targets.len() {
            return Err(LearnerError::EmptyDataset);
        }
        let n = features.len() as f64;
        let mut feature_mean = [0.0; INPUT_DIM];
        let mut feature_std = [0.0; INPUT_DIM];
        for j in 0..INPUT_DIM {
            let mean = features.iter().map(|x| x[j]).sum::<f64>() / n;
            let var = features.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if std == 0.0 {
                return Err(LearnerError::ZeroVariance(format!(
                    "feature {j} is constant on the training split"
                )));
            }
            feature_mean[j] = mean;
            feature_std[j] = std;
        }
        let target_mean = targets.iter().sum::<f64>() / n;
        let target_var = targets.iter().map(|&y| (y - target_mean).powi(2)).sum::<f64>() / n;
        let target_std = target_var.sqrt();
        if target_std == 0.0 {
            return Err(LearnerError::ZeroVariance(
                "target is constant on the training split".into(),
            ));
        }
        Ok(Scaler {
            feature_mean,
            feature_std,
            target_mean,
            target_std,
        })
    }

    pub fn scale_features(&self, x: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        let mut out = [0.0; INPUT_DIM];
        for j in 0..INPUT_DIM {
            out[j] = (x[j] - self.feature_mean[j]) / self.feature_std[j];
        }
        out
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn unscale_target(&self, y: f64) -> f64 {
        y * self.target_std + self.target_mean
    }
}

// ── metrics ─────────────────────────────────────────────────────────────────

/// Mean squared residual.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64, LearnerError> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(LearnerError::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    let n = predictions.len() as f64;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Coefficient of determination `1 − SS_res / SS_tot`. At most 1, with
/// equality exactly when predictions match targets.
pub fn r2(predictions: &[f64], targets: &[f64]) -> Result<f64, LearnerError> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(LearnerError::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|&t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(LearnerError::ZeroVariance("targets have zero variance".into()));
    }
    let ss_res: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

// ── training ────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }

    pub fn parse(s: &str) -> Option<OptimizerKind> {
        match s {
            "sgd" => Some(OptimizerKind::Sgd),
            "adam" => Some(OptimizerKind::Adam),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub train_fraction: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub hidden_widths: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 10,
            train_fraction: 0.8,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            hidden_widths: vec![32, 16, 8],
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), LearnerError> {
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(LearnerError::InvalidHyperparameter(
                "epochs and batch_size must be at least 1".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(LearnerError::InvalidHyperparameter(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(LearnerError::InvalidHyperparameter(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Training trace and held-out evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Per-epoch training MSE in scaled target units.
    pub loss_curve: Vec<f64>,
    /// Final test MSE in raw target units (primary) and in scaled units.
    pub final_test_mse: f64,
    pub final_test_mse_normalized: f64,
    pub final_test_r2: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub config: TrainConfig,
}

struct AdamState {
    m: Vec<LayerGradients>,
    v: Vec<LayerGradients>,
    step: usize,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_update(
    mlp: &mut Mlp,
    grads: &[LayerGradients],
    config: &TrainConfig,
    adam: &mut Option<AdamState>,
) {
    let lr = config.learning_rate;
    match adam {
        None => {
            for (layer, g) in mlp.layers.iter_mut().zip(grads) {
                for (w, gw) in layer.weights.iter_mut().zip(&g.d_weights) {
                    *w -= lr * gw;
                }
                for (b, gb) in layer.biases.iter_mut().zip(&g.d_biases) {
                    *b -= lr * gb;
                }
            }
        }
        Some(state) => {
            state.step += 1;
            let t = state.step as i32;
            let bias1 = 1.0 - ADAM_BETA1.powi(t);
            let bias2 = 1.0 - ADAM_BETA2.powi(t);
            for l in 0..mlp.layers.len() {
                let layer = &mut mlp.layers[l];
                let g = &grads[l];
                let (m, v) = (&mut state.m[l], &mut state.v[l]);
                for (i, w) in layer.weights.iter_mut().enumerate() {
                    let gw = g.d_weights[i];
                    m.d_weights[i] = ADAM_BETA1 * m.d_weights[i] + (1.0 - ADAM_BETA1) * gw;
                    v.d_weights[i] = ADAM_BETA2 * v.d_weights[i] + (1.0 - ADAM_BETA2) * gw * gw;
                    let m_hat = m.d_weights[i] / bias1;
                    let v_hat = v.d_weights[i] / bias2;
                    *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
                for (i, b) in layer.biases.iter_mut().enumerate() {
                    let gb = g.d_biases[i];
                    m.d_biases[i] = ADAM_BETA1 * m.d_biases[i] + (1.0 - ADAM_BETA1) * gb;
                    v.d_biases[i] = ADAM_BETA2 * v.d_biases[i] + (1.0 - ADAM_BETA2) * gb * gb;
                    let m_hat = m.d_biases[i] / bias1;
                    let v_hat = v.d_biases[i] / bias2;
                    *b -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Train `mlp` on the training split with seeded mini-batch optimization and
/// evaluate it on the test split. The scaler is fit on the training split
/// only and returned so callers can bundle it with the trained network.
/// Fully deterministic per `(mlp, datasets, config)`.
pub fn train(
    mlp: &mut Mlp,
    train_set: &Dataset,
    test_set: &Dataset,
    config: &TrainConfig,
) -> Result<(TrainReport, Scaler), LearnerError> {
    config.validate()?;
    if train_set.records.is_empty() || test_set.records.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    let (train_x_raw, train_y_raw) = features_and_targets(train_set);
    let (test_x_raw, test_y_raw) = features_and_targets(test_set);
    let scaler = Scaler::fit(&train_x_raw, &train_y_raw)?;

    let train_x: Vec<[f64; INPUT_DIM]> = train_x_raw.iter().map(|x| scaler.scale_features(x)).collect();
    let train_y: Vec<f64> = train_y_raw.iter().map(|&y| scaler.scale_target(y)).collect();

    let mut adam = match config.optimizer {
        OptimizerKind::Sgd => None,
        OptimizerKind::Adam => Some(AdamState {
            m: mlp.zero_gradients(),
            v: mlp.zero_gradients(),
            step: 0,
        }),
    };

    // decouple the shuffle stream from the init stream
    let mut shuffle_rng = ChaCha12Rng::seed_from_u64(config.seed ^ 0xA5A5_5A5A_C3C3_3C3C);
    let n = train_x.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut batch_x: Vec<[f64; INPUT_DIM]> = Vec::with_capacity(config.batch_size);
    let mut batch_y: Vec<f64> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_sse = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.push(train_x[i]);
                batch_y.push(train_y[i]);
            }
            let (grads, batch_mse) = backward_batch(mlp, &batch_x, &batch_y)?;
            if !batch_mse.is_finite() {
                return Err(LearnerError::NonFiniteLoss { epoch });
            }
            epoch_sse += batch_mse * chunk.len() as f64;
            apply_update(mlp, &grads, config, &mut adam);
        }
        let epoch_mse = epoch_sse / n as f64;
        if !epoch_mse.is_finite() {
            return Err(LearnerError::NonFiniteLoss { epoch });
        }
        loss_curve.push(epoch_mse);
    }

    let predictions: Vec<f64> = test_x_raw
        .iter()
        .map(|x| scaler.unscale_target(mlp.forward(&scaler.scale_features(x))))
        .collect();
    let final_test_mse = mse(&predictions, &test_y_raw)?;
    let final_test_r2 = r2(&predictions, &test_y_raw)?;
    let scaled_pred: Vec<f64> = predictions.iter().map(|&p| scaler.scale_target(p)).collect();
    let scaled_target: Vec<f64> = test_y_raw.iter().map(|&y| scaler.scale_target(y)).collect();
    let final_test_mse_normalized = mse(&scaled_pred, &scaled_target)?;

    Ok((
        TrainReport {
            loss_curve,
            final_test_mse,
            final_test_mse_normalized,
            final_test_r2,
            train_size: train_set.records.len(),
            test_size: test_set.records.len(),
            config: config.clone(),
        },
        scaler,
    ))
}

// ── tests ───────────────────────────────────────────────────────────────────
