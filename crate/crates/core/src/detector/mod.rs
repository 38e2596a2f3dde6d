//! Multi-label effect detection: pooled log-mel features, a small dense
//! network, its training loop, and thresholded effect selection.

mod features;
mod model;
mod train;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::effects::EffectKind;
use crate::error::{Error, Result};

pub use features::{
    detection_mel, detector_mel, extract_features, pool_mel, spec_augment, FeatureVector,
    FEATURE_DIM, MEL_BANDS,
};
pub use model::{probabilities, DetectorModel, Gradients, HIDDEN_DIM, OUTPUT_DIM};
pub use train::{train, LabeledExample, TrainConfig, TrainOutcome};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Features exactly as the detector sees them: loudness-normalized clip,
/// then pooled log-mel statistics.
pub fn detection_features(clip: &AudioClip) -> Result<FeatureVector> {
    Ok(pool_mel(&detection_mel(clip)?))
}

pub fn effect_probabilities(model: &DetectorModel, clip: &AudioClip) -> Result<[f64; OUTPUT_DIM]> {
    Ok(probabilities(&model.forward(&detection_features(clip)?)))
}

/// Kinds whose probability reaches `threshold` (inclusive), in code order.
pub fn select_effects(probs: &[f64; OUTPUT_DIM], threshold: f64) -> Vec<EffectKind> {
    EffectKind::ALL
        .into_iter()
        .filter(|k| probs[k.code()] >= threshold)
        .collect()
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("threshold {t} outside (0, 1)")))
    }
}

pub fn predict_effects(model: &DetectorModel, clip: &AudioClip, threshold: f64) -> Result<Vec<EffectKind>> {
    check_threshold(threshold)?;
    Ok(select_effects(&effect_probabilities(model, clip)?, threshold))
}

/// Per-class accuracy of binary decisions, and their mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClasswiseAccuracy {
    pub per_class: [f64; OUTPUT_DIM],
    pub mean: f64,
}

impl ClasswiseAccuracy {
    pub fn from_decisions(
        predicted: &[[bool; OUTPUT_DIM]],
        actual: &[[bool; OUTPUT_DIM]],
    ) -> Result<Self> {
        if predicted.is_empty() || predicted.len() != actual.len() {
            return Err(Error::EmptyDataset);
        }
        let n = predicted.len() as f64;
        let per_class: [f64; OUTPUT_DIM] = std::array::from_fn(|k| {
            predicted
                .iter()
                .zip(actual)
                .filter(|(p, a)| p[k] == a[k])
                .count() as f64
                / n
        });
        let mean = per_class.iter().sum::<f64>() / OUTPUT_DIM as f64;
        Ok(ClasswiseAccuracy { per_class, mean })
    }
}

impl fmt::Display for ClasswiseAccuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in EffectKind::ALL {
            write!(f, "{:>7}", k.name())?;
        }
        writeln!(f, "{:>7}", "AVG")?;
        for v in self.per_class {
            write!(f, "{v:>7.3}")?;
        }
        write!(f, "{:>7.3}", self.mean)
    }
}

pub fn classwise_accuracy(
    model: &DetectorModel,
    test: &[LabeledExample],
    threshold: f64,
) -> Result<ClasswiseAccuracy> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_threshold(threshold)?;
    let predicted: Vec<[bool; OUTPUT_DIM]> = test
        .iter()
        .map(|ex| probabilities(&model.forward(&ex.features)).map(|p| p >= threshold))
        .collect();
    let actual: Vec<[bool; OUTPUT_DIM]> = test.iter().map(|ex| ex.labels).collect();
    ClasswiseAccuracy::from_decisions(&predicted, &actual)
}
