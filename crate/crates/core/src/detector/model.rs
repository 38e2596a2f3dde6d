use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, FEATURE_DIM};
use crate::effects::EffectKind;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::spectral::SpectralConfig;

pub const HIDDEN_DIM: usize = 256;
pub const OUTPUT_DIM: usize = EffectKind::COUNT;

/// Two-layer ReLU network from pooled features to one logit per effect.
///
/// Inputs are standardized with the stored `feature_mean` / `feature_scale`
/// (fixed after training) before the first layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub feature_mean: Array1<f64>,
    pub feature_scale: Array1<f64>,
    pub spectral: SpectralConfig,
    pub train_seed: Option<u64>,
}

/// Gradients with the shapes of the four trainable tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &DetectorModel) -> Self {
        Gradients {
            w1: Array2::zeros(model.w1.dim()),
            b1: Array1::zeros(model.b1.len()),
            w2: Array2::zeros(model.w2.dim()),
            b2: Array1::zeros(model.b2.len()),
        }
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        self.w1.scaled_add(scale, &other.w1);
        self.b1.scaled_add(scale, &other.b1);
        self.w2.scaled_add(scale, &other.w2);
        self.b2.scaled_add(scale, &other.b2);
    }

    pub fn scale(&mut self, s: f64) {
        self.w1 *= s;
        self.b1 *= s;
        self.w2 *= s;
        self.b2 *= s;
    }

    pub fn global_norm(&self) -> f64 {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit, stable for large |z|.
fn bce_with_logit(z: f64, label: bool) -> f64 {
    let y = if label { 1.0 } else { 0.0 };
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

pub fn probabilities(logits: &[f64; OUTPUT_DIM]) -> [f64; OUTPUT_DIM] {
    logits.map(sigmoid)
}

impl DetectorModel {
    /// All-zero weights with identity standardization.
    pub fn zeros(hidden: usize) -> Self {
        DetectorModel {
            w1: Array2::zeros((hidden, FEATURE_DIM)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((OUTPUT_DIM, hidden)),
            b2: Array1::zeros(OUTPUT_DIM),
            feature_mean: Array1::zeros(FEATURE_DIM),
            feature_scale: Array1::ones(FEATURE_DIM),
            spectral: SpectralConfig::detector(),
            train_seed: None,
        }
    }

    /// Uniform init in `±1/sqrt(fan_in)` for weights and biases.
    pub fn init(hidden: usize, rng: &mut RngStream) -> Self {
        let mut model = DetectorModel::zeros(hidden);
        let k1 = 1.0 / (FEATURE_DIM as f64).sqrt();
        let k2 = 1.0 / (hidden as f64).sqrt();
        model.w1.iter_mut().for_each(|w| *w = rng.uniform(-k1, k1));
        model.b1.iter_mut().for_each(|w| *w = rng.uniform(-k1, k1));
        model.w2.iter_mut().for_each(|w| *w = rng.uniform(-k2, k2));
        model.b2.iter_mut().for_each(|w| *w = rng.uniform(-k2, k2));
        model
    }

    pub fn hidden_dim(&self) -> usize {
        self.b1.len()
    }

    fn standardize(&self, f: &FeatureVector) -> Array1<f64> {
        Array1::from_iter(
            f.values()
                .iter()
                .zip(self.feature_mean.iter().zip(self.feature_scale.iter()))
                .map(|(v, (m, s))| (v - m) * s),
        )
    }

    fn hidden_pre(&self, x: &Array1<f64>) -> Array1<f64> {
        self.w1.dot(x) + &self.b1
    }

    pub fn forward(&self, f: &FeatureVector) -> [f64; OUTPUT_DIM] {
        let h = self.hidden_pre(&self.standardize(f)).mapv(|a| a.max(0.0));
        let z = self.w2.dot(&h) + &self.b2;
        std::array::from_fn(|i| z[i])
    }

    /// Mean binary cross-entropy over the five outputs and its exact
    /// gradient with respect to every trainable tensor.
    pub fn bce_loss_and_grads(
        &self,
        f: &FeatureVector,
        labels: &[bool; OUTPUT_DIM],
    ) -> (f64, Gradients) {
        let x = self.standardize(f);
        let pre = self.hidden_pre(&x);
        let h = pre.mapv(|a| a.max(0.0));
        let z = self.w2.dot(&h) + &self.b2;

        let n = OUTPUT_DIM as f64;
        let mut loss = 0.0;
        let mut dz = Array1::zeros(OUTPUT_DIM);
        for i in 0..OUTPUT_DIM {
            loss += bce_with_logit(z[i], labels[i]);
            let y = if labels[i] { 1.0 } else { 0.0 };
            dz[i] = (sigmoid(z[i]) - y) / n;
        }
        loss /= n;

        let w2 = outer(&dz, &h);
        let mut da = self.w2.t().dot(&dz);
        da.iter_mut()
            .zip(pre.iter())
            .for_each(|(g, &a)| {
                if a <= 0.0 {
                    *g = 0.0
                }
            });
        let w1 = outer(&da, &x);
        (
            loss,
            Gradients {
                w1,
                b1: da,
                w2,
                b2: dz,
            },
        )
    }

    /// Rounds every stored value to single precision, the storage format of
    /// model files.
    pub fn round_to_f32(&mut self) {
        let r = |v: &mut f64| *v = *v as f32 as f64;
        self.w1.iter_mut().for_each(r);
        self.b1.iter_mut().for_each(r);
        self.w2.iter_mut().for_each(r);
        self.b2.iter_mut().for_each(r);
        self.feature_mean.iter_mut().for_each(r);
        self.feature_scale.iter_mut().for_each(r);
    }

    pub fn is_finite(&self) -> bool {
        [&self.b1, &self.b2, &self.feature_mean, &self.feature_scale]
            .iter()
            .all(|a| a.iter().all(|v| v.is_finite()))
            && self.w1.iter().chain(self.w2.iter()).all(|v| v.is_finite())
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.len(), b.len()));
    for (i, mut row) in out.outer_iter_mut().enumerate() {
        let ai = a[i];
        if ai != 0.0 {
            row.iter_mut().zip(b.iter()).for_each(|(o, &bj)| *o = ai * bj);
        }
    }
    out
}

pub const MODEL_FORMAT: &str = "remfx-detector";

#[derive(Serialize, Deserialize)]
struct TensorBlob {
    shape: Vec<usize>,
    /// Base64 of little-endian `f32` values, row major.
    data: String,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    spectral: SpectralConfig,
    train_seed: Option<u64>,
    tensors: BTreeMap<String, TensorBlob>,
}

fn encode_tensor<'a>(shape: Vec<usize>, values: impl Iterator<Item = &'a f64>) -> TensorBlob {
    let bytes: Vec<u8> = values.flat_map(|&v| (v as f32).to_le_bytes()).collect();
    TensorBlob {
        shape,
        data: BASE64.encode(bytes),
    }
}

fn decode_tensor(name: &str, blob: &TensorBlob, shape: &[usize]) -> Result<Vec<f64>> {
    if blob.shape != shape {
        return Err(Error::ModelFormat(format!(
            "tensor {name} has shape {:?}, expected {shape:?}",
            blob.shape
        )));
    }
    let bytes = BASE64
        .decode(&blob.data)
        .map_err(|e| Error::ModelFormat(format!("tensor {name}: {e}")))?;
    let expected: usize = shape.iter().product();
    if bytes.len() != 4 * expected {
        return Err(Error::ModelFormat(format!(
            "tensor {name} holds {} bytes, expected {}",
            bytes.len(),
            4 * expected
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::ModelFormat(format!("tensor {name} has non-finite values")));
    }
    Ok(values)
}

impl DetectorModel {
    pub fn to_json(&self) -> Result<String> {
        let hidden = self.hidden_dim();
        let mut tensors = BTreeMap::new();
        tensors.insert("w1".into(), encode_tensor(vec![hidden, FEATURE_DIM], self.w1.iter()));
        tensors.insert("b1".into(), encode_tensor(vec![hidden], self.b1.iter()));
        tensors.insert("w2".into(), encode_tensor(vec![OUTPUT_DIM, hidden], self.w2.iter()));
        tensors.insert("b2".into(), encode_tensor(vec![OUTPUT_DIM], self.b2.iter()));
        tensors.insert("feature_mean".into(), encode_tensor(vec![FEATURE_DIM], self.feature_mean.iter()));
        tensors.insert("feature_scale".into(), encode_tensor(vec![FEATURE_DIM], self.feature_scale.iter()));
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: 1,
            input_dim: FEATURE_DIM,
            hidden_dim: hidden,
            output_dim: OUTPUT_DIM,
            spectral: self.spectral.clone(),
            train_seed: self.train_seed,
            tensors,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != 1 {
            return Err(Error::ModelFormat(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        if file.input_dim != FEATURE_DIM || file.output_dim != OUTPUT_DIM || file.hidden_dim == 0 {
            return Err(Error::ModelFormat(format!(
                "shape {}x{}x{} does not match {FEATURE_DIM}xHx{OUTPUT_DIM}",
                file.input_dim, file.hidden_dim, file.output_dim
            )));
        }
        let h = file.hidden_dim;
        let get = |name: &str, shape: &[usize]| -> Result<Vec<f64>> {
            let blob = file
                .tensors
                .get(name)
                .ok_or_else(|| Error::ModelFormat(format!("missing tensor {name}")))?;
            decode_tensor(name, blob, shape)
        };
        let shaped = |v: Vec<f64>, r: usize, c: usize| {
            Array2::from_shape_vec((r, c), v).map_err(|e| Error::ModelFormat(e.to_string()))
        };
        Ok(DetectorModel {
            w1: shaped(get("w1", &[h, FEATURE_DIM])?, h, FEATURE_DIM)?,
            b1: Array1::from(get("b1", &[h])?),
            w2: shaped(get("w2", &[OUTPUT_DIM, h])?, OUTPUT_DIM, h)?,
            b2: Array1::from(get("b2", &[OUTPUT_DIM])?),
            feature_mean: Array1::from(get("feature_mean", &[FEATURE_DIM])?),
            feature_scale: Array1::from(get("feature_scale", &[FEATURE_DIM])?),
            spectral: file.spectral,
            train_seed: file.train_seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DetectorModel::from_json(&text)
    }
}
