//! Toolkit for assembling referring video object segmentation results.
//!
//! External segmenters produce per-frame masks and confidences for each
//! (video, referring expression) pair; this crate turns those raw outputs
//! into final mask sequences and scores them:
//!
//! * [`mask`] — binary masks, mask sequences, confidence series, and the
//!   pixel-vote grid.
//! * [`dataset`] — meta-document ingestion, palette PNG mask codec, and the
//!   `root/<video>/<expression>/<frame>.png` results layout.
//! * [`keyframe`] — picks the most confident frame as the propagation seed.
//! * [`fusion`] — groups sequences that describe one target and fuses them
//!   by pixel voting.
//! * [`backends`] — segmenter/propagator contracts, the external-process
//!   file-exchange protocol, and deterministic built-ins (oracle, identity,
//!   translation).
//! * [`pipeline`] — the run orchestration: segment, fuse, select the
//!   keyframe, propagate, ensemble, write.
//! * [`metrics`] — region similarity J, boundary F, and J&F evaluation with
//!   CSV reporting.
//! * [`overlay`] — blends result masks over frames for inspection.
//!
//! Each major capability has a runnable example under `examples/`; start
//! with `synthetic_pipeline` for the end-to-end flow. The `rvos` binary
//! exposes the same flows as `run`, `evaluate`, `visualize`, and `fuse`
//! subcommands.

pub mod backends;
pub mod dataset;
pub mod fusion;
pub mod keyframe;
pub mod mask;
pub mod metrics;
pub mod overlay;
pub mod pipeline;

pub use backends::{BackendDescriptor, BackendKind, PropagationRequest, SegmenterOutput};
pub use dataset::{ExpressionRecord, ResultsLayout, VideoRecord};
pub use fusion::{FusionConfig, FusionGroup};
pub use keyframe::{select_keyframe, KeyframeChoice};
pub use mask::{BinaryMask, ConfidenceSeries, MaskSequence, VoteGrid};
pub use metrics::{BoundaryParams, SequenceScore};
pub use pipeline::{run_pipeline, PipelineConfig, RunReport};
