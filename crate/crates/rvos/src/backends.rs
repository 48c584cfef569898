//! Segmenter and propagator backends.
//!
//! A segmenter turns (video, expression) into per-frame masks plus
//! confidences; a propagator spreads a trusted keyframe mask to every frame.
//! Real models run as external processes behind a file-exchange protocol;
//! deterministic built-ins (oracle, identity, translation) exist for tests
//! and dry runs.
//!
//! External exchange protocol, per invocation:
//!
//! * the harness creates a private request directory holding `request.json`
//!   (`video_id`, `expression`, `frame_ids`, and `key_index` when
//!   propagating), the frame images, and `key.png` for propagation;
//! * the backend writes one `<frame_id>.png` mask per frame into the
//!   response directory, plus `scores.json` (a JSON array of reals in
//!   [0, 1], frame order) when segmenting;
//! * the process inherits a clean environment plus the variables configured
//!   on the descriptor.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{read_mask_png, write_mask_png, DatasetError, ExpressionRecord, VideoRecord};
use crate::mask::{BinaryMask, ConfidenceSeries, MaskError, MaskSequence};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend kind {kind:?} cannot act as a segmenter")]
    NotASegmenter { kind: BackendKind },
    #[error("backend kind {kind:?} cannot act as a propagator")]
    NotAPropagator { kind: BackendKind },
    #[error("external backend requires a non-empty command template")]
    MissingCommand,
    #[error("backend parameter {name:?} is missing or invalid: {message}")]
    Parameter { name: String, message: String },
    #[error("frame image for {frame_id:?} not found under {dir}")]
    MissingFrameImage { frame_id: String, dir: PathBuf },
    #[error("backend process exited with {status}{diagnostics}")]
    ProcessFailed { status: String, diagnostics: String },
    #[error("backend process timed out after {seconds}s{diagnostics}")]
    Timeout { seconds: f64, diagnostics: String },
    #[error("backend protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("backend workspace error: {0}")]
    Workspace(#[from] std::io::Error),
}

/// Which implementation a descriptor selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// Spawn the configured command and exchange files.
    ExternalProcess,
    /// Read masks (and optional scores) from a results-shaped directory.
    Oracle,
    /// Broadcast the key mask to every frame.
    Identity,
    /// Shift the key mask by a constant per-frame velocity, both directions.
    Translation,
}

/// Declarative description of a backend instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    /// Command for `external-process` backends. Split on whitespace; the
    /// tokens `{request_dir}` and `{response_dir}` are substituted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_template: Option<String>,
    /// Wall-clock budget for one invocation; unlimited when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<f64>,
    /// Backend-specific settings (`masks_dir` for oracle, `dx`/`dy` for
    /// translation).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, String>,
    /// Extra environment variables handed to external processes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub env: BTreeMap<String, String>,
}

impl BackendDescriptor {
    pub fn identity() -> Self {
        Self {
            kind: BackendKind::Identity,
            command_template: None,
            timeout_secs: None,
            parameters: BTreeMap::new(),
            env: BTreeMap::new(),
        }
    }

    pub fn translation(dx: i64, dy: i64) -> Self {
        let mut parameters = BTreeMap::new();
        parameters.insert("dx".to_string(), dx.to_string());
        parameters.insert("dy".to_string(), dy.to_string());
        Self {
            kind: BackendKind::Translation,
            command_template: None,
            timeout_secs: None,
            parameters,
            env: BTreeMap::new(),
        }
    }

    pub fn oracle(masks_dir: impl Into<PathBuf>) -> Self {
        let mut parameters = BTreeMap::new();
        parameters.insert(
            "masks_dir".to_string(),
            masks_dir.into().to_string_lossy().into_owned(),
        );
        Self {
            kind: BackendKind::Oracle,
            command_template: None,
            timeout_secs: None,
            parameters,
            env: BTreeMap::new(),
        }
    }

    pub fn external(command_template: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::ExternalProcess,
            command_template: Some(command_template.into()),
            timeout_secs: None,
            parameters: BTreeMap::new(),
            env: BTreeMap::new(),
        }
    }

    pub fn with_timeout(mut self, seconds: f64) -> Self {
        self.timeout_secs = Some(seconds);
        self
    }

    fn int_parameter(&self, name: &str) -> Result<i64, BackendError> {
        let raw = self
            .parameters
            .get(name)
            .ok_or_else(|| BackendError::Parameter {
                name: name.to_string(),
                message: "not set".to_string(),
            })?;
        raw.parse().map_err(|e| BackendError::Parameter {
            name: name.to_string(),
            message: format!("{raw:?} is not an integer: {e}"),
        })
    }

    fn path_parameter(&self, name: &str) -> Result<PathBuf, BackendError> {
        self.parameters
            .get(name)
            .map(PathBuf::from)
            .ok_or_else(|| BackendError::Parameter {
                name: name.to_string(),
                message: "not set".to_string(),
            })
    }
}

/// Per-frame masks and confidences produced by a segmenter.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmenterOutput {
    pub masks: MaskSequence,
    pub confidences: ConfidenceSeries,
}

impl SegmenterOutput {
    pub fn new(masks: MaskSequence, confidences: ConfidenceSeries) -> Result<Self, BackendError> {
        if masks.len() != confidences.len() {
            return Err(BackendError::Protocol(format!(
                "{} masks but {} confidence scores",
                masks.len(),
                confidences.len()
            )));
        }
        Ok(Self { masks, confidences })
    }
}

/// Input to a propagation run: the trusted mask, its frame position, and the
/// full frame list.
#[derive(Debug, Clone)]
pub struct PropagationRequest {
    pub key_mask: BinaryMask,
    pub key_index: usize,
    pub frame_ids: Vec<String>,
}

impl PropagationRequest {
    pub fn new(
        key_mask: BinaryMask,
        key_index: usize,
        frame_ids: Vec<String>,
    ) -> Result<Self, BackendError> {
        if key_index >= frame_ids.len() {
            return Err(BackendError::Protocol(format!(
                "key index {key_index} out of range for {} frames",
                frame_ids.len()
            )));
        }
        Ok(Self {
            key_mask,
            key_index,
            frame_ids,
        })
    }
}

/// Runs a segmenter backend over one (video, expression). `frames_dir` holds
/// the video's frame images named `<frame_id>.<ext>`.
pub fn run_segmenter(
    backend: &BackendDescriptor,
    video: &VideoRecord,
    expr: &ExpressionRecord,
    frames_dir: &Path,
) -> Result<SegmenterOutput, BackendError> {
    match backend.kind {
        BackendKind::Oracle => {
            let dir = backend
                .path_parameter("masks_dir")?
                .join(&video.video_id)
                .join(&expr.expression_id);
            load_precomputed(&dir, &video.frame_ids)
        }
        BackendKind::ExternalProcess => {
            let exchange = run_external(
                backend,
                &video.video_id,
                &expr.text,
                &video.frame_ids,
                None,
                frames_dir,
            )?;
            let scores = exchange
                .scores
                .ok_or_else(|| BackendError::Protocol("response lacks scores.json".to_string()))?;
            let masks = MaskSequence::new(exchange.masks, video.frame_ids.clone())?;
            let confidences = ConfidenceSeries::new(scores)
                .map_err(|e| BackendError::Protocol(format!("bad scores.json: {e}")))?;
            SegmenterOutput::new(masks, confidences)
        }
        kind => Err(BackendError::NotASegmenter { kind }),
    }
}

/// Reads masks and the optional `scores.json` from one expression directory.
/// Absent scores default to 1.0 per frame.
pub fn load_precomputed(
    dir: &Path,
    frame_ids: &[String],
) -> Result<SegmenterOutput, BackendError> {
    let mut frames = Vec::with_capacity(frame_ids.len());
    for frame_id in frame_ids {
        frames.push(read_mask_png(&dir.join(format!("{frame_id}.png")))?);
    }
    let masks = MaskSequence::new(frames, frame_ids.to_vec())?;
    let scores_path = dir.join("scores.json");
    let confidences = if scores_path.is_file() {
        let text = fs::read_to_string(&scores_path)?;
        let scores: Vec<f64> = serde_json::from_str(&text)
            .map_err(|e| BackendError::Protocol(format!("bad scores.json in {dir:?}: {e}")))?;
        if scores.len() != frame_ids.len() {
            return Err(BackendError::Protocol(format!(
                "scores.json in {dir:?} has {} entries for {} frames",
                scores.len(),
                frame_ids.len()
            )));
        }
        ConfidenceSeries::new(scores)
            .map_err(|e| BackendError::Protocol(format!("bad scores.json in {dir:?}: {e}")))?
    } else {
        ConfidenceSeries::uniform(frame_ids.len())
    };
    SegmenterOutput::new(masks, confidences)
}

/// Runs a propagator backend. The returned sequence always satisfies the
/// keyframe fixpoint: its mask at `key_index` equals the submitted key mask.
pub fn run_propagator(
    backend: &BackendDescriptor,
    request: &PropagationRequest,
    frames_dir: &Path,
) -> Result<MaskSequence, BackendError> {
    match backend.kind {
        BackendKind::Identity => {
            let frames = vec![request.key_mask.clone(); request.frame_ids.len()];
            Ok(MaskSequence::new(frames, request.frame_ids.clone())?)
        }
        BackendKind::Translation => {
            let dx = backend.int_parameter("dx")?;
            let dy = backend.int_parameter("dy")?;
            let key = request.key_index as i64;
            let mut frames = vec![request.key_mask.clone(); request.frame_ids.len()];
            // signed offsets: frames after the key advance, frames before it retrace
            for (t, frame) in frames.iter_mut().enumerate() {
                if t == request.key_index {
                    continue;
                }
                let steps = t as i64 - key;
                *frame = request.key_mask.translated(steps * dx, steps * dy);
            }
            Ok(MaskSequence::new(frames, request.frame_ids.clone())?)
        }
        BackendKind::ExternalProcess => {
            let exchange = run_external(
                backend,
                "",
                "",
                &request.frame_ids,
                Some(request),
                frames_dir,
            )?;
            let key_frame = &exchange.masks[request.key_index];
            if key_frame != &request.key_mask {
                return Err(BackendError::Protocol(format!(
                    "mask for key frame {:?} differs from the submitted key mask",
                    request.frame_ids[request.key_index]
                )));
            }
            Ok(MaskSequence::new(
                exchange.masks,
                request.frame_ids.clone(),
            )?)
        }
        kind => Err(BackendError::NotAPropagator { kind }),
    }
}

struct ExchangeResult {
    masks: Vec<BinaryMask>,
    scores: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct RequestDoc<'a> {
    video_id: &'a str,
    expression: &'a str,
    frame_ids: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    key_index: Option<usize>,
}

fn run_external(
    backend: &BackendDescriptor,
    video_id: &str,
    expression: &str,
    frame_ids: &[String],
    propagation: Option<&PropagationRequest>,
    frames_dir: &Path,
) -> Result<ExchangeResult, BackendError> {
    let template = backend
        .command_template
        .as_deref()
        .filter(|t| !t.trim().is_empty())
        .ok_or(BackendError::MissingCommand)?;

    let work = tempfile::tempdir()?;
    let request_dir = work.path().join("request");
    let response_dir = work.path().join("response");
    fs::create_dir(&request_dir)?;
    fs::create_dir(&response_dir)?;

    let doc = RequestDoc {
        video_id,
        expression,
        frame_ids,
        key_index: propagation.map(|p| p.key_index),
    };
    fs::write(
        request_dir.join("request.json"),
        serde_json::to_vec_pretty(&doc).expect("request doc serializes"),
    )?;
    if let Some(request) = propagation {
        write_mask_png(&request.key_mask, &request_dir.join("key.png"))?;
    }
    stage_frames(frames_dir, frame_ids, &request_dir)?;

    let stdout_path = work.path().join("stdout.log");
    let stderr_path = work.path().join("stderr.log");
    let request_str = request_dir.to_string_lossy();
    let response_str = response_dir.to_string_lossy();
    let mut tokens = template.split_whitespace().map(|token| {
        token
            .replace("{request_dir}", &request_str)
            .replace("{response_dir}", &response_str)
    });
    let program = tokens.next().ok_or(BackendError::MissingCommand)?;
    let mut child = Command::new(&program)
        .args(tokens)
        .env_clear()
        .envs(&backend.env)
        .stdin(Stdio::null())
        .stdout(fs::File::create(&stdout_path)?)
        .stderr(fs::File::create(&stderr_path)?)
        .spawn()
        .map_err(|source| BackendError::ProcessFailed {
            status: format!("spawn failure for {program:?}"),
            diagnostics: format!(": {source}"),
        })?;

    let status = match backend.timeout_secs {
        None => child.wait()?,
        Some(seconds) => {
            let deadline = Instant::now() + Duration::from_secs_f64(seconds.max(0.0));
            loop {
                if let Some(status) = child.try_wait()? {
                    break status;
                }
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(BackendError::Timeout {
                        seconds,
                        diagnostics: diagnostics_from(&stderr_path),
                    });
                }
                std::thread::sleep(Duration::from_millis(5));
            }
        }
    };
    if !status.success() {
        return Err(BackendError::ProcessFailed {
            status: status.to_string(),
            diagnostics: diagnostics_from(&stderr_path),
        });
    }

    let mut masks = Vec::with_capacity(frame_ids.len());
    for frame_id in frame_ids {
        let path = response_dir.join(format!("{frame_id}.png"));
        if !path.is_file() {
            return Err(BackendError::Protocol(format!(
                "response is missing a mask for frame {frame_id:?}"
            )));
        }
        masks.push(read_mask_png(&path)?);
    }
    let scores = if propagation.is_none() {
        let scores_path = response_dir.join("scores.json");
        if scores_path.is_file() {
            let text = fs::read_to_string(&scores_path)?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| BackendError::Protocol(format!("bad scores.json: {e}")))?,
            )
        } else {
            None
        }
    } else {
        None
    };
    Ok(ExchangeResult { masks, scores })
}

/// Copies each frame image into the request directory. Frames may be stored
/// as jpg, jpeg, or png.
fn stage_frames(
    frames_dir: &Path,
    frame_ids: &[String],
    request_dir: &Path,
) -> Result<(), BackendError> {
    for frame_id in frame_ids {
        let mut staged = false;
        for ext in ["jpg", "jpeg", "png"] {
            let candidate = frames_dir.join(format!("{frame_id}.{ext}"));
            if candidate.is_file() {
                fs::copy(&candidate, request_dir.join(format!("{frame_id}.{ext}")))?;
                staged = true;
                break;
            }
        }
        if !staged {
            return Err(BackendError::MissingFrameImage {
                frame_id: frame_id.clone(),
                dir: frames_dir.to_path_buf(),
            });
        }
    }
    Ok(())
}

/// Tail of the captured stderr, for error messages.
fn diagnostics_from(stderr_path: &Path) -> String {
    match fs::read_to_string(stderr_path) {
        Ok(text) if !text.trim().is_empty() => {
            let tail: String = text
                .lines()
                .rev()
                .take(20)
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect::<Vec<_>>()
                .join("\n");
            format!("; stderr:\n{tail}")
        }
        _ => String::new(),
    }
}
