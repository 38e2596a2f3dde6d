//! Per-N evaluation of a removal mode and its table rendering.

use std::cmp::Ordering as CmpOrdering;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::chain::AppliedStage;
use crate::dataset::{manifest_dir, read_manifest, Example};
use crate::detector::DetectorModel;
use crate::effects::EffectKind;
use crate::error::{Error, Result};
use crate::metrics::{float_or_inf, improvement, metric_pair, Direction, MetricPair};
use crate::orchestrator::{compose_and_run, BackendRegistry, OrchestratorMode};
use crate::wav::load_wav;

/// Buckets for N = 0..=5 effects.
pub const BUCKETS: usize = EffectKind::COUNT + 1;
/// Marker for an aggregate with no contributing example.
pub const EMPTY_CELL: &str = "—";

/// Everything needed to score one example.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalItem {
    pub id: u64,
    pub input: AudioClip,
    pub target: AudioClip,
    /// Applied chain with gains; its length is the example's N.
    pub truth: Vec<AppliedStage>,
}

impl EvalItem {
    pub fn from_example(id: u64, ex: &Example) -> Self {
        EvalItem {
            id,
            input: ex.input.clone(),
            target: ex.target.clone(),
            truth: ex.stages.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub id: u64,
    pub n_effects: usize,
    pub applied: Vec<EffectKind>,
    pub input: MetricPair,
    pub output: MetricPair,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub id: u64,
    pub n_effects: Option<usize>,
    pub error: String,
}

/// Means over one bucket; `None` when nothing contributed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    /// `None` for the all-examples row.
    pub n_effects: Option<usize>,
    pub count: usize,
    #[serde(with = "float_or_inf::option")]
    pub input_si_sdr: Option<f64>,
    pub input_mr_stft: Option<f64>,
    #[serde(with = "float_or_inf::option")]
    pub output_si_sdr: Option<f64>,
    pub output_mr_stft: Option<f64>,
    /// Excludes examples whose input SI-SDR is already infinite.
    #[serde(with = "float_or_inf::option")]
    pub si_sdri: Option<f64>,
    pub stfti: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl BucketSummary {
    fn from_results(n_effects: Option<usize>, results: &[&ExampleResult]) -> Self {
        let col = |f: fn(&ExampleResult) -> f64| mean(results.iter().map(|r| f(r)));
        BucketSummary {
            n_effects,
            count: results.len(),
            input_si_sdr: col(|r| r.input.si_sdr_db),
            input_mr_stft: col(|r| r.input.mr_stft),
            output_si_sdr: col(|r| r.output.si_sdr_db),
            output_mr_stft: col(|r| r.output.mr_stft),
            si_sdri: mean(
                results
                    .iter()
                    .filter(|r| r.input.si_sdr_db != f64::INFINITY)
                    .map(|r| improvement(r.output.si_sdr_db, r.input.si_sdr_db, Direction::HigherBetter)),
            ),
            stfti: col(|r| improvement(r.output.mr_stft, r.input.mr_stft, Direction::LowerBetter)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: String,
    /// Sorted by id.
    pub results: Vec<ExampleResult>,
    pub quarantined: Vec<Quarantined>,
    /// N = 0..=5 followed by the all-examples row.
    pub buckets: Vec<BucketSummary>,
}

fn result_order(a: &ExampleResult, b: &ExampleResult) -> CmpOrdering {
    a.id.cmp(&b.id)
        .then(a.n_effects.cmp(&b.n_effects))
        .then(a.input.si_sdr_db.total_cmp(&b.input.si_sdr_db))
        .then(a.input.mr_stft.total_cmp(&b.input.mr_stft))
        .then(a.output.si_sdr_db.total_cmp(&b.output.si_sdr_db))
        .then(a.output.mr_stft.total_cmp(&b.output.mr_stft))
}

impl EvalReport {
    /// Aggregates in a canonical order, so the input order never matters.
    pub fn new(mode: String, mut results: Vec<ExampleResult>, mut quarantined: Vec<Quarantined>) -> Self {
        results.sort_by(result_order);
        quarantined.sort_by(|a, b| a.id.cmp(&b.id).then(a.error.cmp(&b.error)));
        let mut buckets: Vec<BucketSummary> = (0..BUCKETS)
            .map(|n| {
                let members: Vec<&ExampleResult> = results.iter().filter(|r| r.n_effects == n).collect();
                BucketSummary::from_results(Some(n), &members)
            })
            .collect();
        let all: Vec<&ExampleResult> = results.iter().collect();
        buckets.push(BucketSummary::from_results(None, &all));
        EvalReport {
            mode,
            results,
            quarantined,
            buckets,
        }
    }

    pub fn bucket(&self, n_effects: usize) -> &BucketSummary {
        &self.buckets[n_effects]
    }

    pub fn overall(&self) -> &BucketSummary {
        &self.buckets[BUCKETS]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn score(
    item: &EvalItem,
    mode: &OrchestratorMode,
    registry: &BackendRegistry,
    detector: Option<&DetectorModel>,
) -> Result<ExampleResult> {
    let composed = compose_and_run(&item.input, mode, registry, detector, Some(&item.truth))?;
    Ok(ExampleResult {
        id: item.id,
        n_effects: item.truth.len(),
        applied: composed.applied,
        input: metric_pair(&item.input, &item.target)?,
        output: metric_pair(&composed.output, &item.target)?,
    })
}

/// Scores `count` items produced on demand by `load`. Failures, whether
/// loading or removal, are quarantined and left out of every aggregate.
pub fn evaluate_with<F>(
    count: usize,
    load: F,
    mode: &OrchestratorMode,
    registry: &BackendRegistry,
    detector: Option<&DetectorModel>,
) -> EvalReport
where
    F: Fn(usize) -> std::result::Result<EvalItem, (u64, Option<usize>, Error)> + Sync,
{
    let outcomes: Vec<std::result::Result<ExampleResult, Quarantined>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let item = load(i).map_err(|(id, n_effects, e)| Quarantined {
                id,
                n_effects,
                error: e.to_string(),
            })?;
            score(&item, mode, registry, detector).map_err(|e| Quarantined {
                id: item.id,
                n_effects: Some(item.truth.len()),
                error: e.to_string(),
            })
        })
        .collect();
    let mut results = Vec::with_capacity(count);
    let mut quarantined = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(q) => {
                log::warn!("example {} quarantined: {}", q.id, q.error);
                quarantined.push(q);
            }
        }
    }
    EvalReport::new(mode.kind().to_string(), results, quarantined)
}

pub fn evaluate_items(
    items: &[EvalItem],
    mode: &OrchestratorMode,
    registry: &BackendRegistry,
    detector: Option<&DetectorModel>,
) -> EvalReport {
    evaluate_with(items.len(), |i| Ok(items[i].clone()), mode, registry, detector)
}

/// Evaluates every record of a manifest; only an unreadable manifest is a
/// hard error.
pub fn evaluate(
    manifest: &Path,
    mode: &OrchestratorMode,
    registry: &BackendRegistry,
    detector: Option<&DetectorModel>,
) -> Result<EvalReport> {
    let records = read_manifest(manifest)?;
    let base = manifest_dir(manifest);
    let load = |i: usize| {
        let r = &records[i];
        let fail = |e| (r.id, Some(r.n_effects), e);
        let (input, target) = r.resolve(&base);
        Ok(EvalItem {
            id: r.id,
            input: load_wav(input).map_err(fail)?,
            target: load_wav(target).map_err(fail)?,
            truth: r.stages().map_err(fail)?,
        })
    };
    Ok(evaluate_with(records.len(), load, mode, registry, detector))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Text,
    Json,
}

fn cell(v: Option<f64>, decimals: usize) -> String {
    match v {
        None => EMPTY_CELL.to_string(),
        Some(v) if v == f64::INFINITY => "Inf".to_string(),
        Some(v) if v == f64::NEG_INFINITY => "-Inf".to_string(),
        Some(v) => format!("{v:.decimals$}"),
    }
}

/// Table with one SI-SDR and one MR-STFT column per N = 0..5 plus AVG.
pub fn render_table(report: &EvalReport) -> String {
    const LABEL: usize = 12;
    const CELL: usize = 8;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mode: {}  examples: {}  quarantined: {}",
        report.mode,
        report.results.len(),
        report.quarantined.len()
    );
    let _ = write!(out, "{:<LABEL$}", "");
    for b in &report.buckets {
        let name = b.n_effects.map_or("AVG".to_string(), |n| format!("N={n}"));
        let _ = write!(out, " {:^w$}", name, w = 2 * CELL + 1);
    }
    out.push('\n');
    let _ = write!(out, "{:<LABEL$}", "");
    for _ in &report.buckets {
        let _ = write!(out, " {:>CELL$} {:>CELL$}", "SI-SDR", "STFT");
    }
    out.push('\n');
    type Cells = fn(&BucketSummary) -> (Option<f64>, Option<f64>);
    let rows: [(&str, Cells); 3] = [
        ("Input", |b| (b.input_si_sdr, b.input_mr_stft)),
        ("Output", |b| (b.output_si_sdr, b.output_mr_stft)),
        ("Improvement", |b| (b.si_sdri, b.stfti)),
    ];
    for (label, get) in rows {
        let label = if label == "Output" { report.mode.as_str() } else { label };
        let _ = write!(out, "{label:<LABEL$}");
        for b in &report.buckets {
            let (sdr, stft) = get(b);
            let _ = write!(out, " {:>CELL$} {:>CELL$}", cell(sdr, 2), cell(stft, 3));
        }
        out.push('\n');
    }
    if !report.quarantined.is_empty() {
        out.push_str("quarantined:\n");
        for q in &report.quarantined {
            let _ = writeln!(out, "  {}: {}", q.id, q.error);
        }
    }
    out
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> Result<String> {
    if report.results.is_empty() && report.quarantined.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match format {
        ReportFormat::Text => Ok(render_table(report)),
        ReportFormat::Json => report.to_json(),
    }
}
