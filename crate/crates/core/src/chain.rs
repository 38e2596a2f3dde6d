//! Random effect chains, chain application and FXAug examples.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::effects::{apply_effect, sample_params, EffectInstance, EffectKind};
use crate::error::{Error, Result};
use crate::loudness::{normalize_with_gain, TARGET_LUFS};
use crate::rng::RngStream;

/// An ordered chain of effects, at most one per kind. Serializes as a JSON
/// array of [`EffectInstance`] in application order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<EffectInstance>", into = "Vec<EffectInstance>")]
pub struct EffectChain {
    instances: Vec<EffectInstance>,
}

impl TryFrom<Vec<EffectInstance>> for EffectChain {
    type Error = Error;

    fn try_from(instances: Vec<EffectInstance>) -> Result<Self> {
        EffectChain::new(instances)
    }
}

impl From<EffectChain> for Vec<EffectInstance> {
    fn from(chain: EffectChain) -> Self {
        chain.instances
    }
}

impl EffectChain {
    pub fn new(instances: Vec<EffectInstance>) -> Result<Self> {
        let mut seen = [false; EffectKind::COUNT];
        for fx in &instances {
            let code = fx.kind().code();
            if seen[code] {
                return Err(Error::InvalidConfig(format!(
                    "effect {} appears twice in chain",
                    fx.kind()
                )));
            }
            seen[code] = true;
        }
        Ok(EffectChain { instances })
    }

    pub fn empty() -> Self {
        EffectChain::default()
    }

    pub fn instances(&self) -> &[EffectInstance] {
        &self.instances
    }

    pub fn kinds(&self) -> Vec<EffectKind> {
        self.instances.iter().map(EffectInstance::kind).collect()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn contains(&self, kind: EffectKind) -> bool {
        self.instances.iter().any(|fx| fx.kind() == kind)
    }

    pub fn get(&self, kind: EffectKind) -> Option<&EffectInstance> {
        self.instances.iter().find(|fx| fx.kind() == kind)
    }

    /// Multi-hot presence vector indexed by effect code.
    pub fn labels(&self) -> [bool; EffectKind::COUNT] {
        let mut out = [false; EffectKind::COUNT];
        for fx in &self.instances {
            out[fx.kind().code()] = true;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.instances.iter().try_for_each(EffectInstance::validate)
    }
}

/// Draws `count` kinds without replacement from `pool`, in draw order, each
/// followed by its parameters.
fn draw_chain(mut pool: Vec<EffectKind>, count: usize, rng: &mut RngStream) -> EffectChain {
    let mut instances = Vec::with_capacity(count);
    for _ in 0..count {
        let kind = pool.remove(rng.below(pool.len() as u64) as usize);
        instances.push(sample_params(kind, rng));
    }
    EffectChain { instances }
}

/// Draws the number of effects uniformly from `0..=n_effects_max`, then that
/// many distinct kinds with random parameters.
pub fn sample_chain(n_effects_max: usize, rng: &mut RngStream) -> EffectChain {
    assert!(n_effects_max <= EffectKind::COUNT, "n_effects_max > 5");
    let k = rng.range_inclusive(0, n_effects_max);
    draw_chain(EffectKind::ALL.to_vec(), k, rng)
}

/// A chain of exactly `n_effects` distinct kinds.
pub fn sample_chain_of_len(n_effects: usize, rng: &mut RngStream) -> EffectChain {
    assert!(n_effects <= EffectKind::COUNT, "n_effects > 5");
    draw_chain(EffectKind::ALL.to_vec(), n_effects, rng)
}

/// One stage of an applied chain: the effect and the loudness gain that
/// followed it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppliedStage {
    pub effect: EffectInstance,
    pub post_gain: f64,
}

impl AppliedStage {
    /// A stage with no gain after the effect.
    pub fn unit(effect: EffectInstance) -> Self {
        AppliedStage {
            effect,
            post_gain: 1.0,
        }
    }
}

/// Applies the chain in order, normalizing to the target loudness after
/// every effect.
pub fn apply_chain(clip: &AudioClip, chain: &EffectChain) -> Result<AudioClip> {
    Ok(apply_chain_traced(clip, chain)?.0)
}

/// [`apply_chain`] that also reports the normalization gain after each stage.
pub fn apply_chain_traced(
    clip: &AudioClip,
    chain: &EffectChain,
) -> Result<(AudioClip, Vec<AppliedStage>)> {
    let mut current = clip.clone();
    let mut stages = Vec::with_capacity(chain.len());
    for fx in chain.instances() {
        let (next, gain) = normalize_with_gain(&apply_effect(&current, fx)?, TARGET_LUFS)?;
        stages.push(AppliedStage {
            effect: *fx,
            post_gain: gain,
        });
        current = next;
    }
    Ok((current, stages))
}

/// A training pair for a single-effect remover with distractors present.
#[derive(Clone, Debug, PartialEq)]
pub struct FxAugExample {
    /// Distractors, then the target effect, normalized.
    pub input: AudioClip,
    /// Distractors only.
    pub target: AudioClip,
    pub target_kind: EffectKind,
    pub target_effect: EffectInstance,
    pub distractors: EffectChain,
    /// Every applied stage, distractors first, with its normalization gain.
    pub stages: Vec<AppliedStage>,
}

impl FxAugExample {
    /// The full chain that produced `input`: distractors then target effect.
    pub fn full_chain(&self) -> EffectChain {
        let mut instances = self.distractors.instances().to_vec();
        instances.push(self.target_effect);
        EffectChain { instances }
    }
}

/// Draws the distractors for an FXAug example: their number is uniform on
/// `0..=4`, kinds come from every effect except `target_kind`.
pub fn sample_distractors(target_kind: EffectKind, rng: &mut RngStream) -> EffectChain {
    let pool: Vec<EffectKind> = EffectKind::ALL
        .into_iter()
        .filter(|&k| k != target_kind)
        .collect();
    let count = rng.range_inclusive(0, pool.len());
    draw_chain(pool, count, rng)
}

pub fn sample_fxaug_example(
    source: &AudioClip,
    target_kind: EffectKind,
    rng: &mut RngStream,
) -> Result<FxAugExample> {
    let distractors = sample_distractors(target_kind, rng);
    let target_effect = sample_params(target_kind, rng);
    let (target, mut stages) = apply_chain_traced(source, &distractors)?;
    let (input, post_gain) =
        normalize_with_gain(&apply_effect(&target, &target_effect)?, TARGET_LUFS)?;
    stages.push(AppliedStage {
        effect: target_effect,
        post_gain,
    });
    Ok(FxAugExample {
        input,
        target,
        target_kind,
        target_effect,
        distractors,
        stages,
    })
}

/// Number of ordered, repetition-free effect configurations over `n` effects,
/// including the empty one: the sum over k of n!/(n-k)!.
pub fn count_effect_configurations(n: u32) -> u64 {
    assert!(n <= 20, "count overflows u64 beyond n = 20");
    let mut term = 1u64;
    let mut total = 1u64;
    for k in 1..=n as u64 {
        term *= n as u64 - k + 1;
        total += term;
    }
    total
}
