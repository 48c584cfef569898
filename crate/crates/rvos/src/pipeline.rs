//! End-to-end orchestration.
//!
//! For every (video, target) unit the pipeline collects per-model
//! per-expression mask sequences, fuses them by pixel voting, selects the
//! keyframe from the reference model's confidences, propagates the fused
//! keyframe mask, ensemble-fuses the propagated variants, and writes one
//! result sequence per expression. Units run independently under a
//! configurable parallelism bound and fail in isolation: a broken unit is
//! reported and the run continues.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{
    load_precomputed, run_propagator, run_segmenter, BackendDescriptor, BackendKind,
    PropagationRequest, SegmenterOutput,
};
use crate::dataset::{write_results, DatasetError, ExpressionRecord, ResultsLayout, VideoRecord};
use crate::fusion::{fuse_group, fuse_sequences, group_by_target, target_key, FusionConfig};
use crate::keyframe::select_keyframe;
use crate::mask::{ConfidenceSeries, MaskSequence};
use crate::metrics::BoundaryParams;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("failed to read config {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("failed to build worker pool: {0}")]
    WorkerPool(#[from] rayon::ThreadPoolBuildError),
}

/// Where a unit's member sequences come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SourceKind {
    /// Invoke a segmenter backend per (video, expression).
    #[serde(rename = "backend")]
    Backend { backend: BackendDescriptor },
    /// Read masks (plus optional `scores.json`) from a results-shaped
    /// directory.
    #[serde(rename = "precomputed-dir")]
    PrecomputedDir { path: PathBuf },
}

/// One model feeding the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub model_id: String,
    #[serde(flatten)]
    pub kind: SourceKind,
    /// When set, this source's own propagated sequences join the final
    /// ensemble alongside the propagated fusion result.
    #[serde(default)]
    pub ensemble: bool,
}

/// Declarative description of a full pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub sources: Vec<SourceConfig>,
    /// Model whose confidences drive keyframe selection.
    pub reference_model: String,
    #[serde(default)]
    pub fusion: FusionConfig,
    pub propagator: BackendDescriptor,
    #[serde(default)]
    pub boundary: BoundaryParams,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Root of the results tree. May be supplied on the command line instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Keyframe scores below this floor produce a warning (0 disables).
    #[serde(default)]
    pub keyframe_floor: f64,
    /// Include the propagated fusion mask as an ensemble variant.
    #[serde(default = "default_true")]
    pub fused_variant: bool,
}

fn default_parallelism() -> usize {
    1
}

fn default_true() -> bool {
    true
}

impl PipelineConfig {
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let file = File::open(path).map_err(|e| PipelineError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| PipelineError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.sources.is_empty() {
            return Err(PipelineError::Config(
                "at least one source is required".into(),
            ));
        }
        if !self
            .sources
            .iter()
            .any(|s| s.model_id == self.reference_model)
        {
            return Err(PipelineError::Config(format!(
                "reference model {:?} does not appear among the sources",
                self.reference_model
            )));
        }
        let mut seen = Vec::new();
        for source in &self.sources {
            if seen.contains(&&source.model_id) {
                return Err(PipelineError::Config(format!(
                    "duplicate model id {:?}",
                    source.model_id
                )));
            }
            seen.push(&source.model_id);
            if let SourceKind::Backend { backend } = &source.kind {
                if backend.kind == BackendKind::ExternalProcess
                    && backend.command_template.as_deref().unwrap_or("").trim().is_empty()
                {
                    return Err(PipelineError::Config(format!(
                        "source {:?} uses an external backend without a command template",
                        source.model_id
                    )));
                }
            }
        }
        self.fusion
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.parallelism == 0 {
            return Err(PipelineError::Config("parallelism must be positive".into()));
        }
        if !self.fused_variant && !self.sources.iter().any(|s| s.ensemble) {
            return Err(PipelineError::Config(
                "no ensemble variants: enable fused_variant or mark a source with ensemble".into(),
            ));
        }
        if self.keyframe_floor < 0.0 || self.keyframe_floor > 1.0 {
            return Err(PipelineError::Config(format!(
                "keyframe_floor {} must lie in [0, 1]",
                self.keyframe_floor
            )));
        }
        Ok(())
    }
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Segment,
    Fuse1,
    Keyframe,
    Propagate,
    Fuse2,
    Write,
}

/// One log line of the run report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub video_id: String,
    pub target: String,
    pub stage: Stage,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// All stage records of a run, in unit order.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub records: Vec<StageRecord>,
}

impl RunReport {
    /// (video_id, target, error) for every unit that aborted.
    pub fn failed_units(&self) -> Vec<(&str, &str, &str)> {
        self.records
            .iter()
            .filter_map(|r| {
                r.error
                    .as_deref()
                    .map(|e| (r.video_id.as_str(), r.target.as_str(), e))
            })
            .collect()
    }

    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.error.is_some())
    }

    pub fn warnings(&self) -> impl Iterator<Item = (&StageRecord, &str)> {
        self.records
            .iter()
            .flat_map(|r| r.warnings.iter().map(move |w| (r, w.as_str())))
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut writer, record)?;
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// One unit of work: all expressions of a video that describe one target.
struct Unit<'a> {
    video: &'a VideoRecord,
    target: String,
    expressions: Vec<&'a ExpressionRecord>,
}

fn units_of<'a>(meta: &'a [VideoRecord]) -> Vec<Unit<'a>> {
    let mut units = Vec::new();
    for video in meta {
        let mut keys: Vec<String> = Vec::new();
        let mut grouped: Vec<Vec<&ExpressionRecord>> = Vec::new();
        for expr in &video.expressions {
            let key = target_key(expr);
            match keys.iter().position(|k| k == &key) {
                Some(i) => grouped[i].push(expr),
                None => {
                    keys.push(key);
                    grouped.push(vec![expr]);
                }
            }
        }
        for (target, expressions) in keys.into_iter().zip(grouped) {
            units.push(Unit {
                video,
                target,
                expressions,
            });
        }
    }
    units
}

/// Runs the full pipeline over `meta`, writing results into the configured
/// output layout. Stage errors abort only their own unit; inspect the report
/// for failures.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    meta: &[VideoRecord],
    frames_root: &Path,
) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let output_root = cfg.output.clone().ok_or_else(|| {
        PipelineError::Config("output root is not set (config `output` or --out)".into())
    })?;
    let layout = ResultsLayout::new(output_root);

    let units = units_of(meta);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()?;
    let per_unit: Vec<Vec<StageRecord>> = pool.install(|| {
        units
            .par_iter()
            .map(|unit| run_unit(cfg, unit, frames_root, &layout))
            .collect()
    });
    Ok(RunReport {
        records: per_unit.into_iter().flatten().collect(),
    })
}

/// Log builder for one unit.
struct UnitLog {
    video_id: String,
    target: String,
    records: Vec<StageRecord>,
}

impl UnitLog {
    fn push(&mut self, stage: Stage, started: Instant, warnings: Vec<String>) {
        self.records.push(StageRecord {
            video_id: self.video_id.clone(),
            target: self.target.clone(),
            stage,
            duration_ms: started.elapsed().as_millis() as u64,
            warnings,
            error: None,
        });
    }

    fn fail(&mut self, stage: Stage, started: Instant, error: String) {
        self.records.push(StageRecord {
            video_id: self.video_id.clone(),
            target: self.target.clone(),
            stage,
            duration_ms: started.elapsed().as_millis() as u64,
            warnings: Vec::new(),
            error: Some(error),
        });
    }
}

fn run_unit(
    cfg: &PipelineConfig,
    unit: &Unit<'_>,
    frames_root: &Path,
    layout: &ResultsLayout,
) -> Vec<StageRecord> {
    let mut log = UnitLog {
        video_id: unit.video.video_id.clone(),
        target: unit.target.clone(),
        records: Vec::new(),
    };
    let frames_dir = frames_root.join(&unit.video.video_id);

    // segment: collect every (source, expression) sequence
    let started = Instant::now();
    let mut collected: Vec<(String, ExpressionRecord, SegmenterOutput)> = Vec::new();
    for source in &cfg.sources {
        for expr in &unit.expressions {
            match collect_source(cfg, source, unit.video, expr, &frames_dir) {
                Ok(output) => collected.push((source.model_id.clone(), (*expr).clone(), output)),
                Err(message) => {
                    log.fail(Stage::Segment, started, message);
                    return log.records;
                }
            }
        }
    }
    log.push(Stage::Segment, started, Vec::new());

    // fuse1: pixel-vote the collected sequences for this target
    let started = Instant::now();
    let records: Vec<(String, ExpressionRecord, MaskSequence)> = collected
        .iter()
        .map(|(model, expr, output)| (model.clone(), expr.clone(), output.masks.clone()))
        .collect();
    let group = match group_by_target(records) {
        Ok(mut groups) if groups.len() == 1 => groups.remove(0),
        Ok(groups) => {
            log.fail(
                Stage::Fuse1,
                started,
                format!("expected one fusion group for the unit, found {}", groups.len()),
            );
            return log.records;
        }
        Err(e) => {
            log.fail(Stage::Fuse1, started, e.to_string());
            return log.records;
        }
    };
    let fused = fuse_group(&group, &cfg.fusion);
    log.push(Stage::Fuse1, started, Vec::new());

    // keyframe: argmax of the reference model's confidences, per-frame max
    // across the unit's expressions
    let started = Instant::now();
    let mut reference_scores = vec![0.0f64; unit.video.frame_ids.len()];
    let mut reference_seen = false;
    for (model, _, output) in &collected {
        if model == &cfg.reference_model {
            reference_seen = true;
            for (slot, &score) in reference_scores
                .iter_mut()
                .zip(output.confidences.scores())
            {
                *slot = slot.max(score);
            }
        }
    }
    if !reference_seen {
        log.fail(
            Stage::Keyframe,
            started,
            format!("reference model {:?} produced no output", cfg.reference_model),
        );
        return log.records;
    }
    let series = ConfidenceSeries::new(reference_scores).expect("scores validated at source");
    let choice = match select_keyframe(&series) {
        Ok(choice) => choice,
        Err(e) => {
            log.fail(Stage::Keyframe, started, e.to_string());
            return log.records;
        }
    };
    let mut warnings = Vec::new();
    if cfg.keyframe_floor > 0.0 && choice.score < cfg.keyframe_floor {
        warnings.push(format!(
            "keyframe score {:.4} is below the configured floor {:.4}",
            choice.score, cfg.keyframe_floor
        ));
    }
    log.push(Stage::Keyframe, started, warnings);

    // propagate: the fused keyframe mask, then any per-source variants
    let started = Instant::now();
    let mut warnings = Vec::new();
    let key_mask = fused.frame(choice.index).clone();
    let mut variants: Vec<MaskSequence> = Vec::new();
    if cfg.fused_variant {
        if key_mask.is_empty() {
            warnings.push("fused keyframe mask is empty; propagating an empty mask".to_string());
        }
        let request = match PropagationRequest::new(
            key_mask,
            choice.index,
            unit.video.frame_ids.clone(),
        ) {
            Ok(request) => request,
            Err(e) => {
                log.fail(Stage::Propagate, started, e.to_string());
                return log.records;
            }
        };
        match run_propagator(&cfg.propagator, &request, &frames_dir) {
            Ok(seq) => variants.push(seq),
            Err(e) => {
                log.fail(Stage::Propagate, started, e.to_string());
                return log.records;
            }
        }
    }
    for source in cfg.sources.iter().filter(|s| s.ensemble) {
        for (model, _, output) in &collected {
            if model != &source.model_id {
                continue;
            }
            let own_choice = match select_keyframe(&output.confidences) {
                Ok(choice) => choice,
                Err(e) => {
                    log.fail(Stage::Propagate, started, e.to_string());
                    return log.records;
                }
            };
            let own_key = output.masks.frame(own_choice.index).clone();
            if own_key.is_empty() {
                warnings.push(format!(
                    "source {model:?} keyframe mask is empty; propagating an empty mask"
                ));
            }
            let request = match PropagationRequest::new(
                own_key,
                own_choice.index,
                unit.video.frame_ids.clone(),
            ) {
                Ok(request) => request,
                Err(e) => {
                    log.fail(Stage::Propagate, started, e.to_string());
                    return log.records;
                }
            };
            match run_propagator(&cfg.propagator, &request, &frames_dir) {
                Ok(seq) => variants.push(seq),
                Err(e) => {
                    log.fail(Stage::Propagate, started, e.to_string());
                    return log.records;
                }
            }
        }
    }
    log.push(Stage::Propagate, started, warnings);

    // fuse2: ensemble-fuse the propagated variants
    let started = Instant::now();
    let thr = cfg.fusion.ensemble_threshold(variants.len());
    let variant_refs: Vec<&MaskSequence> = variants.iter().collect();
    let finished = match fuse_sequences(&variant_refs, thr) {
        Ok(seq) => seq,
        Err(e) => {
            log.fail(Stage::Fuse2, started, e.to_string());
            return log.records;
        }
    };
    log.push(Stage::Fuse2, started, Vec::new());

    // write: every expression in the group receives the group's final masks
    let started = Instant::now();
    for expr in &unit.expressions {
        if let Err(e) = write_results(layout, unit.video, &expr.expression_id, &finished) {
            log.fail(Stage::Write, started, e.to_string());
            return log.records;
        }
    }
    log.push(Stage::Write, started, Vec::new());
    log.records
}

fn collect_source(
    cfg: &PipelineConfig,
    source: &SourceConfig,
    video: &VideoRecord,
    expr: &ExpressionRecord,
    frames_dir: &Path,
) -> Result<SegmenterOutput, String> {
    match &source.kind {
        SourceKind::Backend { backend } => {
            run_segmenter(backend, video, expr, frames_dir).map_err(|e| {
                format!(
                    "source {:?} failed on expression {:?}: {e}",
                    source.model_id, expr.expression_id
                )
            })
        }
        SourceKind::PrecomputedDir { path } => {
            let dir = path.join(&video.video_id).join(&expr.expression_id);
            if source.model_id == cfg.reference_model && !dir.join("scores.json").is_file() {
                return Err(format!(
                    "precomputed reference source {:?} lacks scores.json under {}",
                    source.model_id,
                    dir.display()
                ));
            }
            load_precomputed(&dir, &video.frame_ids).map_err(|e| {
                format!(
                    "precomputed source {:?} failed on expression {:?}: {e}",
                    source.model_id, expr.expression_id
                )
            })
        }
    }
}
