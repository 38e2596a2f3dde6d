//! Seeded dataset generation, JSONL manifests, and detector training data.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, CLIP_LEN};
use crate::chain::{
    apply_chain_traced, sample_chain, sample_chain_of_len, sample_fxaug_example, AppliedStage,
    EffectChain,
};
use crate::detector::{detection_mel, pool_mel, LabeledExample};
use crate::effects::EffectKind;
use crate::error::{Error, Result};
use crate::loudness::{measure_integrated_loudness, normalize_loudness, TARGET_LUFS};
use crate::rng::{mix64, RngStream};
use crate::source::{synthesize_source, SourceFamily, SourceSpec};
use crate::wav::{load_wav, save_wav};

/// Stream id for chain sampling; source synthesis uses the family code.
const CHAIN_STREAM: u64 = 0x63_6861_696e;
/// Sub-seeds tried before a silent example is reported as an error.
pub const MAX_ATTEMPTS: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn manifest_name(self) -> String {
        format!("{}.jsonl", self.name())
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitCounts {
    fn default() -> Self {
        SplitCounts {
            train: 8000,
            val: 1000,
            test: 1000,
        }
    }
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

/// How the effect chain of an example is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainPlan {
    /// Length uniform on `0..=n_effects_max`.
    Random { n_effects_max: usize },
    /// Exactly this many effects.
    Fixed(usize),
    /// Distractors then the given target effect; the target audio keeps the
    /// distractors.
    FxAug(EffectKind),
}

impl ChainPlan {
    fn validate(&self) -> Result<()> {
        match *self {
            ChainPlan::Random { n_effects_max: n } | ChainPlan::Fixed(n) if n > EffectKind::COUNT => {
                Err(Error::InvalidConfig(format!("effect count {n} exceeds {}", EffectKind::COUNT)))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub counts: SplitCounts,
    pub n_effects_max: usize,
    pub seed: u64,
    pub fxaug: Option<EffectKind>,
    pub clip_len: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            counts: SplitCounts::default(),
            n_effects_max: EffectKind::COUNT,
            seed: 0,
            fxaug: None,
            clip_len: CLIP_LEN,
        }
    }
}

impl GenerationConfig {
    pub fn plan(&self) -> ChainPlan {
        match self.fxaug {
            Some(kind) => ChainPlan::FxAug(kind),
            None => ChainPlan::Random {
                n_effects_max: self.n_effects_max,
            },
        }
    }
}

/// One manifest line. Paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleRecord {
    pub id: u64,
    pub seed: u64,
    pub source: SourceSpec,
    pub chain: EffectChain,
    pub input_path: String,
    pub target_path: String,
    pub input_lufs: f64,
    pub target_lufs: f64,
    pub n_effects: usize,
    /// Linear loudness-normalization gain after each chain stage.
    pub stage_gains: Vec<f64>,
}

impl ExampleRecord {
    pub fn stages(&self) -> Result<Vec<AppliedStage>> {
        if self.stage_gains.len() != self.chain.len() {
            return Err(Error::InvalidConfig(format!(
                "record {}: {} stage gains for {} effects",
                self.id,
                self.stage_gains.len(),
                self.chain.len()
            )));
        }
        Ok(self
            .chain
            .instances()
            .iter()
            .zip(&self.stage_gains)
            .map(|(&effect, &post_gain)| AppliedStage { effect, post_gain })
            .collect())
    }

    pub fn resolve(&self, base: &Path) -> (PathBuf, PathBuf) {
        (base.join(&self.input_path), base.join(&self.target_path))
    }
}

/// A generated example held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub seed: u64,
    pub source: SourceSpec,
    pub chain: EffectChain,
    pub stages: Vec<AppliedStage>,
    pub input: AudioClip,
    pub target: AudioClip,
}

impl Example {
    pub fn labels(&self) -> [bool; EffectKind::COUNT] {
        self.chain.labels()
    }
}

/// Per-example seed; distinct splits and indices give unrelated streams.
pub fn example_seed(dataset_seed: u64, split: Split, index: u64, attempt: u64) -> u64 {
    mix64(mix64(mix64(dataset_seed, split as u64 + 1), index), attempt)
}

/// Builds one example from a fixed seed without retrying.
pub fn synthesize_example(
    seed: u64,
    family: SourceFamily,
    plan: ChainPlan,
    clip_len: usize,
) -> Result<Example> {
    plan.validate()?;
    let source = SourceSpec::synthetic(family, seed);
    let clean = normalize_loudness(&synthesize_source(&source, clip_len)?, TARGET_LUFS)?;
    let mut rng = RngStream::new(seed, CHAIN_STREAM);
    let (chain, stages, input, target) = match plan {
        ChainPlan::Random { n_effects_max } => {
            let chain = sample_chain(n_effects_max, &mut rng);
            let (input, stages) = apply_chain_traced(&clean, &chain)?;
            (chain, stages, input, clean)
        }
        ChainPlan::Fixed(n) => {
            let chain = sample_chain_of_len(n, &mut rng);
            let (input, stages) = apply_chain_traced(&clean, &chain)?;
            (chain, stages, input, clean)
        }
        ChainPlan::FxAug(kind) => {
            let ex = sample_fxaug_example(&clean, kind, &mut rng)?;
            (ex.full_chain(), ex.stages, ex.input, ex.target)
        }
    };
    Ok(Example {
        seed,
        source,
        chain,
        stages,
        input,
        target,
    })
}

/// Example `index` of a split. Sources cycle through the synthetic families;
/// an example that normalizes to silence is redrawn with the next sub-seed.
pub fn generate_example(
    dataset_seed: u64,
    split: Split,
    index: u64,
    plan: ChainPlan,
    clip_len: usize,
) -> Result<Example> {
    let family = SourceFamily::SYNTHETIC[(index % SourceFamily::SYNTHETIC.len() as u64) as usize];
    for attempt in 0..MAX_ATTEMPTS {
        let seed = example_seed(dataset_seed, split, index, attempt);
        match synthesize_example(seed, family, plan, clip_len) {
            Err(Error::GatedSilence) => {
                log::info!("{split} example {index}: silent at attempt {attempt}, resampling");
            }
            other => return other,
        }
    }
    Err(Error::GatedSilence)
}

fn wav_names(split: Split, index: u64) -> (String, String) {
    (
        format!("{}/{index:06}_input.wav", split.name()),
        format!("{}/{index:06}_target.wav", split.name()),
    )
}

fn write_example(out_dir: &Path, split: Split, index: u64, ex: &Example) -> Result<ExampleRecord> {
    let (input_path, target_path) = wav_names(split, index);
    save_wav(&ex.input, out_dir.join(&input_path))?;
    save_wav(&ex.target, out_dir.join(&target_path))?;
    Ok(ExampleRecord {
        id: index,
        seed: ex.seed,
        source: ex.source.clone(),
        chain: ex.chain.clone(),
        input_path,
        target_path,
        input_lufs: measure_integrated_loudness(&ex.input)?.lufs,
        target_lufs: measure_integrated_loudness(&ex.target)?.lufs,
        n_effects: ex.chain.len(),
        stage_gains: ex.stages.iter().map(|s| s.post_gain).collect(),
    })
}

/// Writes `{split}.jsonl` manifests and `{split}/NNNNNN_{input,target}.wav`
/// under `out_dir`. Output bytes depend only on the configuration, not on
/// thread count. Returns the manifest paths of non-empty splits.
pub fn generate_dataset(out_dir: &Path, cfg: &GenerationConfig) -> Result<Vec<PathBuf>> {
    let plan = cfg.plan();
    plan.validate()?;
    if cfg.clip_len == 0 {
        return Err(Error::InvalidConfig("clip length must be positive".into()));
    }
    let mut manifests = Vec::new();
    for split in Split::ALL {
        let count = cfg.counts.get(split);
        if count == 0 {
            continue;
        }
        let dir = out_dir.join(split.name());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let records = (0..count as u64)
            .into_par_iter()
            .map(|j| {
                let ex = generate_example(cfg.seed, split, j, plan, cfg.clip_len)?;
                write_example(out_dir, split, j, &ex)
            })
            .collect::<Result<Vec<_>>>()?;
        let path = out_dir.join(split.manifest_name());
        write_manifest(&path, &records)?;
        log::info!("wrote {} {split} examples to {}", records.len(), path.display());
        manifests.push(path);
    }
    Ok(manifests)
}

pub fn write_manifest(path: &Path, records: &[ExampleRecord]) -> Result<()> {
    let mut text = Vec::new();
    for r in records {
        serde_json::to_writer(&mut text, r)?;
        text.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ExampleRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| {
                Error::InvalidConfig(format!("{} line {}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

/// Directory that manifest paths are relative to.
pub fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Detector features of one input clip. The mel matrix is kept when
/// `keep_mel` is set, for SpecAugment during training.
pub fn labeled_example(
    input: &AudioClip,
    labels: [bool; EffectKind::COUNT],
    keep_mel: bool,
) -> Result<LabeledExample> {
    let mel = detection_mel(input)?;
    Ok(LabeledExample {
        features: pool_mel(&mel),
        mel: keep_mel.then_some(mel),
        labels,
    })
}

/// Loads every input clip of a manifest as a detector example.
pub fn load_training_examples(manifest: &Path, keep_mel: bool) -> Result<Vec<LabeledExample>> {
    let base = manifest_dir(manifest);
    read_manifest(manifest)?
        .par_iter()
        .map(|r| {
            let (input, _) = r.resolve(&base);
            labeled_example(&load_wav(input)?, r.chain.labels(), keep_mel)
        })
        .collect()
}

/// Runs `f` on a worker pool of `jobs` threads, or rayon's default pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidConfig("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}"))),
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown split {s:?}")))
    }
}
