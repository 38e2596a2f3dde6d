//! Composition of per-effect removal backends into one removal graph.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::chain::AppliedStage;
use crate::detector::{predict_effects, DetectorModel, DEFAULT_THRESHOLD};
use crate::effects::{oracle_inverse, EffectKind};
use crate::error::{Error, Result};
use crate::rng::{mix64, RngStream};
use crate::wav::{load_wav, save_wav};

/// Environment variable telling an external backend which effect to remove.
pub const EFFECT_ENV: &str = "REMFX_EFFECT";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendFlavor {
    Identity,
    Oracle,
    External { command: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovalBackend {
    kind: EffectKind,
    flavor: BackendFlavor,
}

impl RemovalBackend {
    pub fn identity(kind: EffectKind) -> Self {
        RemovalBackend {
            kind,
            flavor: BackendFlavor::Identity,
        }
    }

    pub fn oracle(kind: EffectKind) -> Result<Self> {
        if !kind.has_oracle_inverse() {
            return Err(Error::UnsupportedOracle(kind));
        }
        Ok(RemovalBackend {
            kind,
            flavor: BackendFlavor::Oracle,
        })
    }

    pub fn external(kind: EffectKind, command: Vec<String>) -> Result<Self> {
        let program = command
            .first()
            .ok_or_else(|| Error::BadCommand(format!("empty command for {kind}")))?;
        if resolve_program(Path::new(program)).is_none() {
            return Err(Error::BadCommand(format!("{program:?} is not an executable file")));
        }
        Ok(RemovalBackend {
            kind,
            flavor: BackendFlavor::External { command },
        })
    }

    pub fn kind(&self) -> EffectKind {
        self.kind
    }

    pub fn flavor(&self) -> &BackendFlavor {
        &self.flavor
    }
}

fn is_executable(path: &Path) -> bool {
    let Ok(meta) = path.metadata() else {
        return false;
    };
    if !meta.is_file() {
        return false;
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        meta.permissions().mode() & 0o111 != 0
    }
    #[cfg(not(unix))]
    {
        true
    }
}

fn resolve_program(program: &Path) -> Option<PathBuf> {
    if program.components().count() > 1 || program.is_absolute() {
        return is_executable(program).then(|| program.to_path_buf());
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|dir| dir.join(program))
            .find(|p| is_executable(p))
    })
}

/// Exactly one backend per effect kind; immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackendRegistry {
    backends: Vec<RemovalBackend>,
}

impl BackendRegistry {
    /// Backends may be given in any order but must cover every kind once.
    pub fn new(backends: Vec<RemovalBackend>) -> Result<Self> {
        let mut slots: Vec<Option<RemovalBackend>> = vec![None; EffectKind::COUNT];
        for b in backends {
            let code = b.kind.code();
            if slots[code].is_some() {
                return Err(Error::InvalidConfig(format!("two backends for {}", b.kind)));
            }
            slots[code] = Some(b);
        }
        let backends = EffectKind::ALL
            .into_iter()
            .zip(slots)
            .map(|(k, b)| b.ok_or(Error::MissingBackend(k)))
            .collect::<Result<_>>()?;
        Ok(BackendRegistry { backends })
    }

    pub fn all_identity() -> Self {
        BackendRegistry {
            backends: EffectKind::ALL.into_iter().map(RemovalBackend::identity).collect(),
        }
    }

    /// Oracle backends for distortion and delay, identity for the rest.
    pub fn oracle_where_possible() -> Self {
        BackendRegistry {
            backends: EffectKind::ALL
                .into_iter()
                .map(|k| RemovalBackend::oracle(k).unwrap_or_else(|_| RemovalBackend::identity(k)))
                .collect(),
        }
    }

    pub fn get(&self, kind: EffectKind) -> &RemovalBackend {
        &self.backends[kind.code()]
    }

    /// Parses the JSON object `{"DST": {"flavor": ...}, ...}`. Relative
    /// program paths containing a directory are resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: BTreeMap<String, serde_json::Value> = serde_json::from_str(text)?;
        let mut backends = Vec::with_capacity(raw.len());
        for (name, value) in raw {
            let kind = EffectKind::from_str(&name)?;
            let flavor: BackendFlavor = serde_json::from_value(value)?;
            backends.push(match flavor {
                BackendFlavor::Identity => RemovalBackend::identity(kind),
                BackendFlavor::Oracle => RemovalBackend::oracle(kind)?,
                BackendFlavor::External { mut command } => {
                    if let Some(program) = command.first_mut() {
                        let p = Path::new(program.as_str());
                        if p.is_relative() && p.components().count() > 1 {
                            *program = base_dir.join(p).to_string_lossy().into_owned();
                        }
                    }
                    RemovalBackend::external(kind, command)?
                }
            });
        }
        BackendRegistry::new(backends)
    }

    pub fn to_json(&self) -> Result<String> {
        let map: BTreeMap<&str, &BackendFlavor> =
            self.backends.iter().map(|b| (b.kind.name(), &b.flavor)).collect();
        Ok(serde_json::to_string_pretty(&map)?)
    }
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<BackendRegistry> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    BackendRegistry::from_json(&text, base)
}

/// Runs one removal backend. `oracle` carries the applied effect and its
/// normalization gain and is required by oracle backends only.
pub fn run_backend(
    backend: &RemovalBackend,
    clip: &AudioClip,
    oracle: Option<&AppliedStage>,
) -> Result<AudioClip> {
    let kind = backend.kind;
    let out = match &backend.flavor {
        BackendFlavor::Identity => return Ok(clip.clone()),
        BackendFlavor::Oracle => {
            let stage = oracle
                .filter(|s| s.effect.kind() == kind)
                .ok_or(Error::OracleParamsMissing(kind))?;
            let unscaled = clip.scaled(1.0 / stage.post_gain)?;
            oracle_inverse(&unscaled, &stage.effect)?
        }
        BackendFlavor::External { command } => run_external(kind, command, clip)?,
    };
    if out.len() != clip.len() {
        return Err(Error::LengthChanged {
            kind,
            expected: clip.len(),
            actual: out.len(),
        });
    }
    Ok(out)
}

fn run_external(kind: EffectKind, command: &[String], clip: &AudioClip) -> Result<AudioClip> {
    let failed = |reason: String| Error::BackendFailed { kind, reason };
    let dir = tempfile::Builder::new()
        .prefix("remfx-")
        .tempdir()
        .map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let in_path = dir.path().join("input.wav");
    let out_path = dir.path().join("output.wav");
    save_wav(clip, &in_path)?;
    let output = Command::new(&command[0])
        .args(&command[1..])
        .arg(&in_path)
        .arg(&out_path)
        .env(EFFECT_ENV, kind.name())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .output()
        .map_err(|e| failed(format!("could not start {:?}: {e}", command[0])))?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(failed(format!("{} ({})", output.status, stderr.trim())));
    }
    load_wav(&out_path).map_err(|e| failed(format!("unreadable output: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    All,
    Oracle,
    Detect,
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeKind::All => "All",
            ModeKind::Oracle => "Oracle",
            ModeKind::Detect => "Detect",
        })
    }
}

impl FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(ModeKind::All),
            "oracle" => Ok(ModeKind::Oracle),
            "detect" => Ok(ModeKind::Detect),
            _ => Err(Error::InvalidConfig(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    /// Last-applied effect removed first.
    GroundTruth,
    Random(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrchestratorMode {
    kind: ModeKind,
    ordering: Ordering,
    threshold: f64,
}

impl OrchestratorMode {
    pub fn all(ordering_seed: u64) -> Self {
        OrchestratorMode {
            kind: ModeKind::All,
            ordering: Ordering::Random(ordering_seed),
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn oracle(ordering: Ordering) -> Self {
        OrchestratorMode {
            kind: ModeKind::Oracle,
            ordering,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn detect(threshold: f64, ordering_seed: u64) -> Result<Self> {
        Self::new(ModeKind::Detect, Ordering::Random(ordering_seed), threshold)
    }

    pub fn new(kind: ModeKind, ordering: Ordering, threshold: f64) -> Result<Self> {
        if ordering == Ordering::GroundTruth && kind != ModeKind::Oracle {
            return Err(Error::ModeMisconfigured(format!(
                "ground-truth ordering needs Oracle mode, not {kind}"
            )));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::ModeMisconfigured(format!("threshold {threshold} outside (0, 1)")));
        }
        Ok(OrchestratorMode {
            kind,
            ordering,
            threshold,
        })
    }

    pub fn kind(&self) -> ModeKind {
        self.kind
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Seeded order of a set of kinds; depends only on the seed and the set.
pub fn random_order(kinds: &[EffectKind], seed: u64) -> Vec<EffectKind> {
    let mut sorted = kinds.to_vec();
    sorted.sort();
    sorted.dedup();
    let set_mask = sorted.iter().fold(0u64, |m, k| m | 1 << k.code());
    RngStream::new(mix64(seed, set_mask), 0).shuffle(&mut sorted);
    sorted
}

#[derive(Clone, Debug, PartialEq)]
pub struct Composed {
    pub output: AudioClip,
    /// Backends run, in order.
    pub applied: Vec<EffectKind>,
}

/// Selects, orders and runs removal backends in series. `truth` is the
/// applied chain with its gains and is consulted only in Oracle mode.
pub fn compose_and_run(
    clip: &AudioClip,
    mode: &OrchestratorMode,
    registry: &BackendRegistry,
    detector: Option<&DetectorModel>,
    truth: Option<&[AppliedStage]>,
) -> Result<Composed> {
    let order = match mode.kind {
        ModeKind::All => ordered(&EffectKind::ALL, mode.ordering, None),
        ModeKind::Oracle => {
            let truth = truth.ok_or_else(|| {
                Error::ModeMisconfigured("Oracle mode needs the applied chain".into())
            })?;
            let kinds: Vec<EffectKind> = truth.iter().map(|s| s.effect.kind()).collect();
            ordered(&kinds, mode.ordering, Some(truth))
        }
        ModeKind::Detect => {
            let model = detector.ok_or_else(|| {
                Error::ModeMisconfigured("Detect mode needs a detector model".into())
            })?;
            let selected = predict_effects(model, clip, mode.threshold)?;
            if selected.is_empty() {
                return Ok(Composed {
                    output: clip.clone(),
                    applied: Vec::new(),
                });
            }
            ordered(&selected, mode.ordering, None)
        }
    };
    let oracle_truth = if mode.kind == ModeKind::Oracle { truth } else { None };
    let mut current = clip.clone();
    for &kind in &order {
        let stage = oracle_truth.and_then(|t| t.iter().find(|s| s.effect.kind() == kind));
        current = run_backend(registry.get(kind), &current, stage)?;
    }
    Ok(Composed {
        output: current,
        applied: order,
    })
}

fn ordered(kinds: &[EffectKind], ordering: Ordering, truth: Option<&[AppliedStage]>) -> Vec<EffectKind> {
    match (ordering, truth) {
        (Ordering::GroundTruth, Some(t)) => t.iter().rev().map(|s| s.effect.kind()).collect(),
        (Ordering::Random(seed), _) => random_order(kinds, seed),
        (Ordering::GroundTruth, None) => kinds.to_vec(),
    }
}
