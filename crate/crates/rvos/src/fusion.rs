//! Pixel-vote fusion of mask sequences that describe the same target.
//!
//! Sequences are grouped by the dataset's per-object annotation when present
//! (expressions annotated on one object vote for one target) and by
//! expression otherwise. Within a group, frames are fused pixel-wise: a pixel
//! becomes foreground when at least `thr` members vote for it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ExpressionRecord;
use crate::mask::{MaskError, MaskSequence, VoteGrid};

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("fusion group must contain at least one member")]
    EmptyGroup,
    #[error("member {label} is misaligned with its group: {message}")]
    MisalignedMember { label: String, message: String },
    #[error("threshold ratio {value} must be in (0, 1]")]
    RatioRange { value: f64 },
    #[error(transparent)]
    Mask(#[from] MaskError),
}

/// Provenance of one fusion-group member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberLabel {
    pub model_id: String,
    pub expression_id: String,
}

impl std::fmt::Display for MemberLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.model_id, self.expression_id)
    }
}

/// Mask sequences (across models and expressions) that vote for one target.
#[derive(Debug, Clone)]
pub struct FusionGroup {
    key: String,
    members: Vec<MaskSequence>,
    labels: Vec<MemberLabel>,
}

impl FusionGroup {
    /// Builds a group, checking every member against the first for frame-id
    /// and dimension alignment.
    pub fn new(
        key: String,
        members: Vec<MaskSequence>,
        labels: Vec<MemberLabel>,
    ) -> Result<Self, FusionError> {
        if members.is_empty() {
            return Err(FusionError::EmptyGroup);
        }
        debug_assert_eq!(members.len(), labels.len());
        let first = &members[0];
        for (member, label) in members.iter().zip(&labels).skip(1) {
            if member.frame_ids() != first.frame_ids() {
                return Err(FusionError::MisalignedMember {
                    label: label.to_string(),
                    message: format!(
                        "frame ids {:?} differ from {:?}",
                        member.frame_ids(),
                        first.frame_ids()
                    ),
                });
            }
            if member.dimensions() != first.dimensions() {
                return Err(FusionError::MisalignedMember {
                    label: label.to_string(),
                    message: format!(
                        "dimensions {:?} differ from {:?}",
                        member.dimensions(),
                        first.dimensions()
                    ),
                });
            }
        }
        Ok(Self {
            key,
            members,
            labels,
        })
    }

    /// Grouping key: the shared object id, or the expression id for
    /// expressions without one.
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn members(&self) -> &[MaskSequence] {
        &self.members
    }

    pub fn labels(&self) -> &[MemberLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distinct expression ids in first-seen order.
    pub fn expression_ids(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for label in &self.labels {
            if !seen.contains(&label.expression_id.as_str()) {
                seen.push(label.expression_id.as_str());
            }
        }
        seen
    }
}

/// Grouping key for an expression: the annotated object when present,
/// otherwise the expression itself. The prefixes keep the two namespaces
/// from colliding.
pub fn target_key(expr: &ExpressionRecord) -> String {
    match &expr.object_id {
        Some(obj) => format!("obj:{obj}"),
        None => format!("expr:{}", expr.expression_id),
    }
}

/// Groups per-(model, expression) sequences of one video by target.
/// Group order follows first appearance in the input.
pub fn group_by_target(
    records: Vec<(String, ExpressionRecord, MaskSequence)>,
) -> Result<Vec<FusionGroup>, FusionError> {
    let mut keys: Vec<String> = Vec::new();
    let mut buckets: Vec<(Vec<MaskSequence>, Vec<MemberLabel>)> = Vec::new();
    for (model_id, expr, seq) in records {
        let key = target_key(&expr);
        let slot = match keys.iter().position(|k| k == &key) {
            Some(i) => i,
            None => {
                keys.push(key);
                buckets.push((Vec::new(), Vec::new()));
                buckets.len() - 1
            }
        };
        buckets[slot].0.push(seq);
        buckets[slot].1.push(MemberLabel {
            model_id,
            expression_id: expr.expression_id,
        });
    }
    keys.into_iter()
        .zip(buckets)
        .map(|(key, (members, labels))| FusionGroup::new(key, members, labels))
        .collect()
}

/// Vote-threshold ratios. `thr_ratio` applies to multi-member groups at the
/// language-prior stage; `thr_s_ratio` applies against the model-ensemble
/// member count at the final ensemble stage (and degenerates to 1 for
/// single-member groups).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    #[serde(default = "default_ratio")]
    pub thr_ratio: f64,
    #[serde(default = "default_ratio")]
    pub thr_s_ratio: f64,
}

fn default_ratio() -> f64 {
    0.5
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            thr_ratio: 0.5,
            thr_s_ratio: 0.5,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        for value in [self.thr_ratio, self.thr_s_ratio] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(FusionError::RatioRange { value });
            }
        }
        Ok(())
    }

    /// Integer threshold for a group of `n` members at the language-prior
    /// stage: `ceil(thr_ratio * n)` for n >= 2, the `thr_s` rule for n = 1.
    pub fn group_threshold(&self, n: usize) -> u32 {
        if n >= 2 {
            ratio_threshold(self.thr_ratio, n)
        } else {
            ratio_threshold(self.thr_s_ratio, n)
        }
    }

    /// Integer threshold for the final ensemble over `n` propagated variants.
    pub fn ensemble_threshold(&self, n: usize) -> u32 {
        ratio_threshold(self.thr_s_ratio, n)
    }
}

/// Ceiling of `ratio * n`, clamped to `[1, n]`. Products within 1e-9 of an
/// integer count as that integer so that e.g. 0.5 * 6 cannot ceil to 4.
fn ratio_threshold(ratio: f64, n: usize) -> u32 {
    let raw = ratio * n as f64;
    let snapped = if (raw - raw.round()).abs() < 1e-9 {
        raw.round()
    } else {
        raw.ceil()
    };
    (snapped as u32).clamp(1, (n as u32).max(1))
}

/// Fuses aligned sequences by pixel voting at an absolute threshold.
pub fn fuse_sequences(members: &[&MaskSequence], thr: u32) -> Result<MaskSequence, FusionError> {
    let first = *members.first().ok_or(FusionError::EmptyGroup)?;
    for member in &members[1..] {
        if member.frame_ids() != first.frame_ids() || member.dimensions() != first.dimensions() {
            return Err(FusionError::MisalignedMember {
                label: "<member>".to_string(),
                message: "sequences must share frame ids and dimensions".to_string(),
            });
        }
    }
    let mut fused = Vec::with_capacity(first.len());
    for t in 0..first.len() {
        let grid = VoteGrid::from_masks(members.iter().map(|m| m.frame(t)))?;
        fused.push(grid.threshold(thr)?);
    }
    Ok(MaskSequence::new(fused, first.frame_ids().to_vec())?)
}

/// Fuses one group with the threshold derived from its member count.
pub fn fuse_group(group: &FusionGroup, cfg: &FusionConfig) -> MaskSequence {
    let thr = cfg.group_threshold(group.len());
    let members: Vec<&MaskSequence> = group.members().iter().collect();
    fuse_sequences(&members, thr).expect("group invariants guarantee alignment")
}
