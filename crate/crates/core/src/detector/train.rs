use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::features::{pool_mel, spec_augment, FeatureVector, FEATURE_DIM};
use super::model::{DetectorModel, Gradients, HIDDEN_DIM, OUTPUT_DIM};
use crate::effects::EffectKind;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// One training or evaluation example for the detector.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub features: FeatureVector,
    /// Log-mel matrix, kept only when SpecAugment needs it.
    pub mel: Option<Array2<f64>>,
    pub labels: [bool; OUTPUT_DIM],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fractions of total steps at which the learning rate is divided by 10.
    pub lr_drops: Vec<f64>,
    pub grad_clip_norm: f64,
    pub seed: u64,
    pub spec_augment: bool,
    pub hidden_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 3e-4,
            epochs: 300,
            batch_size: 64,
            lr_drops: vec![0.8, 0.95],
            grad_clip_norm: 10.0,
            seed: 0,
            spec_augment: false,
            hidden_dim: HIDDEN_DIM,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.lr.is_nan() || self.lr <= 0.0 || self.epochs == 0 || self.batch_size == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidConfig(
                "lr, epochs, batch_size and hidden_dim must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Step indices where each drop takes effect.
    pub fn drop_steps(&self, total_steps: usize) -> Vec<usize> {
        self.lr_drops
            .iter()
            .map(|f| (f * total_steps as f64).floor() as usize)
            .collect()
    }

    pub fn lr_at(&self, step: usize, total_steps: usize) -> f64 {
        let drops = self
            .drop_steps(total_steps)
            .into_iter()
            .filter(|&s| step >= s)
            .count();
        self.lr * 0.1f64.powi(drops as i32)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: DetectorModel,
    /// Mean minibatch loss at each step.
    pub losses: Vec<f64>,
    /// Learning rate used at each step.
    pub learning_rates: Vec<f64>,
    /// Classes whose label never varies in the training set.
    pub degenerate_classes: Vec<EffectKind>,
}

struct Adam {
    m: Gradients,
    v: Gradients,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn adam_update<D: ndarray::Dimension>(
    w: &mut ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    g: &ndarray::Array<f64, D>,
    lr: f64,
    c1: f64,
    c2: f64,
) {
    Zip::from(w).and(m).and(v).and(g).for_each(|w, m, v, &g| {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        *w -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
    });
}

impl Adam {
    fn new(model: &DetectorModel) -> Self {
        Adam {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut DetectorModel, g: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        adam_update(&mut model.w1, &mut self.m.w1, &mut self.v.w1, &g.w1, lr, c1, c2);
        adam_update(&mut model.b1, &mut self.m.b1, &mut self.v.b1, &g.b1, lr, c1, c2);
        adam_update(&mut model.w2, &mut self.m.w2, &mut self.v.w2, &g.w2, lr, c1, c2);
        adam_update(&mut model.b2, &mut self.m.b2, &mut self.v.b2, &g.b2, lr, c1, c2);
    }
}

/// Per-dimension mean and inverse standard deviation over the training set.
fn standardization(data: &[LabeledExample]) -> (Array1<f64>, Array1<f64>) {
    let n = data.len() as f64;
    let mut mean = Array1::<f64>::zeros(FEATURE_DIM);
    for ex in data {
        mean.iter_mut().zip(ex.features.values()).for_each(|(m, v)| *m += v / n);
    }
    let mut var = Array1::<f64>::zeros(FEATURE_DIM);
    for ex in data {
        var.iter_mut()
            .zip(ex.features.values().iter().zip(mean.iter()))
            .for_each(|(s, (v, m))| *s += (v - m).powi(2) / n);
    }
    let scale = var.mapv(|v| 1.0 / v.sqrt().max(1e-6));
    (mean, scale)
}

/// Trains the detector with Adam on shuffled minibatches, global-norm
/// gradient clipping and step learning-rate drops. Fully determined by the
/// data and `cfg.seed`. The returned weights are rounded to `f32`, matching
/// what a saved model file holds.
pub fn train(data: &[LabeledExample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;

    let degenerate_classes: Vec<EffectKind> = EffectKind::ALL
        .into_iter()
        .filter(|k| {
            let first = data[0].labels[k.code()];
            data.iter().all(|ex| ex.labels[k.code()] == first)
        })
        .collect();
    for k in &degenerate_classes {
        log::warn!("label {k} is constant across the training set");
    }

    let root = RngStream::new(cfg.seed, 0);
    let mut model = DetectorModel::init(cfg.hidden_dim, &mut root.derive(1));
    let (mean, scale) = standardization(data);
    model.feature_mean = mean;
    model.feature_scale = scale;
    model.train_seed = Some(cfg.seed);

    let mut shuffle_rng = root.derive(2);
    let mut augment_rng = root.derive(3);
    let mut adam = Adam::new(&model);

    let steps_per_epoch = data.len().div_ceil(cfg.batch_size);
    let total = cfg.epochs * steps_per_epoch;
    let mut losses = Vec::with_capacity(total);
    let mut learning_rates = Vec::with_capacity(total);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut step = 0;

    for _ in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros_like(&model);
            let mut batch_loss = 0.0;
            let w = 1.0 / batch.len() as f64;
            for &i in batch {
                let ex = &data[i];
                let augmented;
                let features = match (&ex.mel, cfg.spec_augment) {
                    (Some(mel), true) => {
                        augmented = pool_mel(&spec_augment(mel, &mut augment_rng));
                        &augmented
                    }
                    _ => &ex.features,
                };
                let (loss, g) = model.bce_loss_and_grads(features, &ex.labels);
                batch_loss += loss * w;
                grads.add_scaled(&g, w);
            }
            let norm = grads.global_norm();
            if norm > cfg.grad_clip_norm {
                grads.scale(cfg.grad_clip_norm / norm);
            }
            let lr = cfg.lr_at(step, total);
            adam.step(&mut model, &grads, lr);
            losses.push(batch_loss);
            learning_rates.push(lr);
            step += 1;
        }
    }

    model.round_to_f32();
    if !model.is_finite() {
        return Err(Error::InvalidConfig("training diverged to non-finite weights".into()));
    }
    Ok(TrainOutcome {
        model,
        losses,
        learning_rates,
        degenerate_classes,
    })
}
