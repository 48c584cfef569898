//! Region similarity (J), contour accuracy (F), and sequence evaluation.
//!
//! J is plain intersection-over-union. F matches the DAVIS-style boundary
//! protocol: extract 4-connected boundary pixels of prediction and ground
//! truth, dilate each boundary by a Euclidean disk whose radius defaults to
//! 0.008 of the image diagonal, and score boundary precision/recall through
//! the dilated maps. Per-sequence scores average frames; the global score
//! averages sequences (or frames, behind a flag).

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{read_mask_png, DatasetError, ResultsLayout, VideoRecord};
use crate::mask::{BinaryMask, MaskError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{count} mask files are missing:\n{}", format_missing(missing))]
    MissingFiles {
        count: usize,
        missing: Vec<MissingMask>,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("failed to write report {path}: {source}")]
    Report {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One absent (video, expression, frame) mask noted during evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    pub video_id: String,
    pub expression_id: String,
    pub frame_id: String,
    /// "prediction" or "ground-truth".
    pub side: &'static str,
}

fn format_missing(missing: &[MissingMask]) -> String {
    missing
        .iter()
        .map(|m| {
            format!(
                "  {} {}/{}/{}.png",
                m.side, m.video_id, m.expression_id, m.frame_id
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Distance tolerance for boundary matching, as a fraction of the image
/// diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    #[serde(default = "default_tolerance")]
    pub tolerance_ratio: f64,
}

fn default_tolerance() -> f64 {
    0.008
}

impl Default for BoundaryParams {
    fn default() -> Self {
        Self {
            tolerance_ratio: 0.008,
        }
    }
}

impl BoundaryParams {
    /// Pixel radius for the given image size; never below 1.
    pub fn radius(&self, width: u32, height: u32) -> u32 {
        let diagonal = f64::from(width).hypot(f64::from(height));
        ((self.tolerance_ratio * diagonal).round() as u32).max(1)
    }
}

/// Intersection-over-union of two masks; 1.0 when both are empty.
pub fn region_similarity(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64, MaskError> {
    let intersection = pred.intersection_count(gt)?;
    let union = pred.union_count(gt)?;
    if union == 0 {
        Ok(1.0)
    } else {
        Ok(intersection as f64 / union as f64)
    }
}

/// Foreground pixels that touch background through 4-adjacency or lie on the
/// image border.
pub fn boundary_pixels(mask: &BinaryMask) -> BinaryMask {
    let (width, height) = mask.dimensions();
    let mut out = BinaryMask::new(width, height).expect("mask dims are positive");
    for y in 0..height {
        for x in 0..width {
            if !mask.get(x, y) {
                continue;
            }
            let on_border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
            let exposed = on_border
                || !mask.get(x - 1, y)
                || !mask.get(x + 1, y)
                || !mask.get(x, y - 1)
                || !mask.get(x, y + 1);
            if exposed {
                out.set(x, y, true);
            }
        }
    }
    out
}

/// Dilates foreground by a Euclidean disk: output pixel is set iff some input
/// pixel lies within `radius` of it (center distance).
fn dilate_disk(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let r = radius as i64;
    let r2 = r * r;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r2 {
                offsets.push((dx, dy));
            }
        }
    }
    let (width, height) = mask.dimensions();
    let mut out = BinaryMask::new(width, height).expect("mask dims are positive");
    for (x, y) in mask.foreground_pixels() {
        for &(dx, dy) in &offsets {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64 {
                out.set(nx as u32, ny as u32, true);
            }
        }
    }
    out
}

/// Boundary F-measure between prediction and ground truth.
///
/// Precision is the fraction of prediction-boundary pixels within the
/// tolerance radius of some ground-truth-boundary pixel; recall is symmetric;
/// F is their harmonic mean. Both boundaries empty gives 1.0; exactly one
/// empty gives 0.0.
pub fn contour_accuracy(
    pred: &BinaryMask,
    gt: &BinaryMask,
    params: &BoundaryParams,
) -> Result<f64, MaskError> {
    // surface the shape error before looking at emptiness
    pred.intersection_count(gt)?;
    let pred_boundary = boundary_pixels(pred);
    let gt_boundary = boundary_pixels(gt);
    let pred_total = pred_boundary.pixel_count();
    let gt_total = gt_boundary.pixel_count();
    match (pred_total, gt_total) {
        (0, 0) => return Ok(1.0),
        (0, _) | (_, 0) => return Ok(0.0),
        _ => {}
    }
    let radius = params.radius(pred.width(), pred.height());
    let gt_dilated = dilate_disk(&gt_boundary, radius);
    let pred_dilated = dilate_disk(&pred_boundary, radius);
    let matched_pred = pred_boundary.intersection_count(&gt_dilated)?;
    let matched_gt = gt_boundary.intersection_count(&pred_dilated)?;
    let precision = matched_pred as f64 / pred_total as f64;
    let recall = matched_gt as f64 / gt_total as f64;
    if precision + recall == 0.0 {
        Ok(0.0)
    } else {
        Ok(2.0 * precision * recall / (precision + recall))
    }
}

/// Mean J and F of one sequence (or of a whole evaluation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceScore {
    pub j_mean: f64,
    pub f_mean: f64,
}

impl SequenceScore {
    /// The ranking statistic: arithmetic mean of J and F.
    pub fn jf(&self) -> f64 {
        (self.j_mean + self.f_mean) / 2.0
    }
}

/// How the global score weights its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Every (video, expression) sequence counts equally.
    #[default]
    Sequence,
    /// Every frame counts equally.
    Frame,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequence" => Ok(Self::Sequence),
            "frame" => Ok(Self::Frame),
            other => Err(format!(
                "unknown aggregation {other:?}, expected \"sequence\" or \"frame\""
            )),
        }
    }
}

/// Scores for one (video, expression) sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceResult {
    pub video_id: String,
    pub expression_id: String,
    pub frames: usize,
    pub score: SequenceScore,
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub sequences: Vec<SequenceResult>,
    pub global: SequenceScore,
    pub aggregation: Aggregation,
}

/// Scores every (video, expression) in `meta` by comparing `pred` against
/// `gt`. All required files are checked up front; any absent mask aborts the
/// evaluation with the full list of missing triples.
pub fn evaluate(
    pred: &ResultsLayout,
    gt: &ResultsLayout,
    meta: &[VideoRecord],
    params: &BoundaryParams,
    aggregation: Aggregation,
) -> Result<EvaluationReport, MetricsError> {
    let mut missing = Vec::new();
    let mut units = Vec::new();
    for video in meta {
        for expr in &video.expressions {
            units.push((video, expr));
            for frame_id in &video.frame_ids {
                for (layout, side) in [(pred, "prediction"), (gt, "ground-truth")] {
                    if !layout
                        .mask_path(&video.video_id, &expr.expression_id, frame_id)
                        .is_file()
                    {
                        missing.push(MissingMask {
                            video_id: video.video_id.clone(),
                            expression_id: expr.expression_id.clone(),
                            frame_id: frame_id.clone(),
                            side,
                        });
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(MetricsError::MissingFiles {
            count: missing.len(),
            missing,
        });
    }

    let sequences: Vec<SequenceResult> = units
        .par_iter()
        .map(|(video, expr)| -> Result<SequenceResult, MetricsError> {
            let mut j_sum = 0.0;
            let mut f_sum = 0.0;
            for frame_id in &video.frame_ids {
                let p = read_mask_png(&pred.mask_path(
                    &video.video_id,
                    &expr.expression_id,
                    frame_id,
                ))?;
                let g = read_mask_png(&gt.mask_path(
                    &video.video_id,
                    &expr.expression_id,
                    frame_id,
                ))?;
                j_sum += region_similarity(&p, &g)?;
                f_sum += contour_accuracy(&p, &g, params)?;
            }
            let frames = video.frame_ids.len();
            Ok(SequenceResult {
                video_id: video.video_id.clone(),
                expression_id: expr.expression_id.clone(),
                frames,
                score: SequenceScore {
                    j_mean: j_sum / frames as f64,
                    f_mean: f_sum / frames as f64,
                },
            })
        })
        .collect::<Result<_, _>>()?;

    let global = aggregate(&sequences, aggregation);
    Ok(EvaluationReport {
        sequences,
        global,
        aggregation,
    })
}

fn aggregate(sequences: &[SequenceResult], aggregation: Aggregation) -> SequenceScore {
    if sequences.is_empty() {
        return SequenceScore {
            j_mean: 0.0,
            f_mean: 0.0,
        };
    }
    let (mut j_sum, mut f_sum, mut weight_sum) = (0.0, 0.0, 0.0);
    for seq in sequences {
        let weight = match aggregation {
            Aggregation::Sequence => 1.0,
            Aggregation::Frame => seq.frames as f64,
        };
        j_sum += seq.score.j_mean * weight;
        f_sum += seq.score.f_mean * weight;
        weight_sum += weight;
    }
    SequenceScore {
        j_mean: j_sum / weight_sum,
        f_mean: f_sum / weight_sum,
    }
}

/// Writes the report as CSV with columns video_id, expression_id, J, F, JF
/// and a final GLOBAL row.
pub fn write_report_csv(report: &EvaluationReport, path: &Path) -> Result<(), MetricsError> {
    let report_err = |source: std::io::Error| MetricsError::Report {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(report_err)?;
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => report_err(source),
        other => report_err(std::io::Error::other(format!("{other:?}"))),
    })?;
    writer
        .write_record(["video_id", "expression_id", "J", "F", "JF"])
        .map_err(|e| report_err(std::io::Error::other(e)))?;
    let mut write_row = |video: &str, expr: &str, score: &SequenceScore| {
        writer
            .write_record([
                video,
                expr,
                &format!("{:.6}", score.j_mean),
                &format!("{:.6}", score.f_mean),
                &format!("{:.6}", score.jf()),
            ])
            .map_err(|e| report_err(std::io::Error::other(e)))
    };
    for seq in &report.sequences {
        write_row(&seq.video_id, &seq.expression_id, &seq.score)?;
    }
    write_row("GLOBAL", "", &report.global)?;
    writer.flush().map_err(report_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{write_results, ExpressionRecord};
    use crate::mask::MaskSequence;
    use proptest::prelude::*;

    fn mask(rows: &[&[u8]]) -> BinaryMask {
        BinaryMask::from_rows(rows).unwrap()
    }

    fn square(side: u32, x0: u32, y0: u32, len: u32) -> BinaryMask {
        let mut m = BinaryMask::new(side, side).unwrap();
        for y in y0..y0 + len {
            for x in x0..x0 + len {
                m.set(x, y, true);
            }
        }
        m
    }

    #[test]
    fn region_similarity_examples() {
        let a = square(8, 1, 1, 3);
        assert_eq!(region_similarity(&a, &a).unwrap(), 1.0);

        let b = square(8, 5, 5, 2);
        assert_eq!(region_similarity(&a, &b).unwrap(), 0.0);

        // 2 pixels fully inside a 4-pixel ground truth
        let gt = mask(&[&[1, 1], &[1, 1]]);
        let pred = mask(&[&[1, 1], &[0, 0]]);
        assert_eq!(region_similarity(&pred, &gt).unwrap(), 0.5);
    }

    #[test]
    fn region_similarity_empty_conventions() {
        let empty = BinaryMask::new(4, 4).unwrap();
        assert_eq!(region_similarity(&empty, &empty).unwrap(), 1.0);
        let nonempty = square(4, 0, 0, 2);
        assert_eq!(region_similarity(&empty, &nonempty).unwrap(), 0.0);
    }

    #[test]
    fn region_similarity_shape_error() {
        let a = BinaryMask::new(2, 2).unwrap();
        let b = BinaryMask::new(3, 3).unwrap();
        assert!(region_similarity(&a, &b).is_err());
    }

    #[test]
    fn boundary_of_single_pixel_is_itself() {
        let m = mask(&[&[1]]);
        assert_eq!(boundary_pixels(&m), m);
    }

    #[test]
    fn boundary_of_solid_square_is_its_ring() {
        // 4x4 square centered in a 6x6 image: 16 pixels, 4 interior
        let m = square(6, 1, 1, 4);
        let boundary = boundary_pixels(&m);
        assert_eq!(boundary.pixel_count(), 12);
        // enumerate the expected ring by hand: all square pixels except the 2x2 interior
        let mut expected = BinaryMask::new(6, 6).unwrap();
        for y in 1..5 {
            for x in 1..5 {
                if x == 1 || x == 4 || y == 1 || y == 4 {
                    expected.set(x, y, true);
                }
            }
        }
        assert_eq!(boundary, expected);
    }

    #[test]
    fn boundary_of_empty_mask_is_empty() {
        let m = BinaryMask::new(5, 5).unwrap();
        assert!(boundary_pixels(&m).is_empty());
    }

    #[test]
    fn boundary_counts_image_border_as_exposed() {
        let m = mask(&[&[1, 1], &[1, 1]]);
        assert_eq!(boundary_pixels(&m), m);
    }

    #[test]
    fn contour_accuracy_identity() {
        let m = square(16, 3, 3, 6);
        assert_eq!(
            contour_accuracy(&m, &m, &BoundaryParams::default()).unwrap(),
            1.0
        );
    }

    #[test]
    fn contour_accuracy_far_apart_is_zero() {
        // radius for 32x32 is max(1, round(0.008 * 45.25)) = 1; squares 10 px apart
        let a = square(32, 2, 2, 3);
        let b = square(32, 20, 20, 3);
        assert_eq!(
            contour_accuracy(&a, &b, &BoundaryParams::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn contour_accuracy_one_pixel_shift_within_radius() {
        let a = square(32, 5, 5, 6);
        let b = square(32, 6, 5, 6);
        assert_eq!(
            contour_accuracy(&a, &b, &BoundaryParams::default()).unwrap(),
            1.0
        );
    }

    #[test]
    fn contour_accuracy_empty_conventions() {
        let empty = BinaryMask::new(8, 8).unwrap();
        let solid = square(8, 2, 2, 3);
        let params = BoundaryParams::default();
        assert_eq!(contour_accuracy(&empty, &empty, &params).unwrap(), 1.0);
        assert_eq!(contour_accuracy(&empty, &solid, &params).unwrap(), 0.0);
        assert_eq!(contour_accuracy(&solid, &empty, &params).unwrap(), 0.0);
    }

    #[test]
    fn radius_floor_is_one() {
        let params = BoundaryParams::default();
        assert_eq!(params.radius(16, 16), 1);
        // 480p-ish frame: 0.008 * sqrt(854^2 + 480^2) = 7.84 -> 8
        assert_eq!(params.radius(854, 480), 8);
    }

    /// All-pairs oracle: a boundary pixel matches if any opposite boundary
    /// pixel lies within the radius.
    fn brute_force_contour(pred: &BinaryMask, gt: &BinaryMask, params: &BoundaryParams) -> f64 {
        let pb: Vec<(u32, u32)> = boundary_pixels(pred).foreground_pixels().collect();
        let gb: Vec<(u32, u32)> = boundary_pixels(gt).foreground_pixels().collect();
        if pb.is_empty() && gb.is_empty() {
            return 1.0;
        }
        if pb.is_empty() || gb.is_empty() {
            return 0.0;
        }
        let r2 = i64::from(params.radius(pred.width(), pred.height())).pow(2);
        let within = |a: &(u32, u32), b: &(u32, u32)| {
            let dx = i64::from(a.0) - i64::from(b.0);
            let dy = i64::from(a.1) - i64::from(b.1);
            dx * dx + dy * dy <= r2
        };
        let matched_p = pb.iter().filter(|p| gb.iter().any(|g| within(p, g))).count();
        let matched_g = gb.iter().filter(|g| pb.iter().any(|p| within(p, g))).count();
        let precision = matched_p as f64 / pb.len() as f64;
        let recall = matched_g as f64 / gb.len() as f64;
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn contour_accuracy_matches_all_pairs_oracle(
            a in proptest::collection::vec(0u8..=1, 24 * 24),
            b in proptest::collection::vec(0u8..=1, 24 * 24),
        ) {
            let pred = BinaryMask::from_bits(24, 24, a).unwrap();
            let gt = BinaryMask::from_bits(24, 24, b).unwrap();
            let params = BoundaryParams::default();
            let fast = contour_accuracy(&pred, &gt, &params).unwrap();
            let slow = brute_force_contour(&pred, &gt, &params);
            prop_assert!((fast - slow).abs() < 1e-9, "fast {fast} vs oracle {slow}");
        }

        #[test]
        fn contour_accuracy_is_symmetric(
            a in proptest::collection::vec(0u8..=1, 16 * 16),
            b in proptest::collection::vec(0u8..=1, 16 * 16),
        ) {
            let x = BinaryMask::from_bits(16, 16, a).unwrap();
            let y = BinaryMask::from_bits(16, 16, b).unwrap();
            let params = BoundaryParams::default();
            let xy = contour_accuracy(&x, &y, &params).unwrap();
            let yx = contour_accuracy(&y, &x, &params).unwrap();
            prop_assert!((xy - yx).abs() < 1e-12);
            let jxy = region_similarity(&x, &y).unwrap();
            let jyx = region_similarity(&y, &x).unwrap();
            prop_assert_eq!(jxy, jyx);
            prop_assert!((0.0..=1.0).contains(&jxy));
            prop_assert!((0.0..=1.0).contains(&xy));
        }

        #[test]
        fn widening_tolerance_never_decreases_f(
            a in proptest::collection::vec(0u8..=1, 16 * 16),
            b in proptest::collection::vec(0u8..=1, 16 * 16),
        ) {
            let x = BinaryMask::from_bits(16, 16, a).unwrap();
            let y = BinaryMask::from_bits(16, 16, b).unwrap();
            // ratios chosen to give radii 1, 2, 4 on a 16x16 image
            let mut last = -1.0;
            for ratio in [0.01, 0.09, 0.18] {
                let f = contour_accuracy(&x, &y, &BoundaryParams { tolerance_ratio: ratio }).unwrap();
                prop_assert!(f >= last - 1e-12);
                last = f;
            }
        }
    }

    fn video(id: &str, frames: usize, expressions: &[&str]) -> VideoRecord {
        VideoRecord {
            video_id: id.to_string(),
            frame_ids: (0..frames).map(|i| format!("{:05}", i * 5)).collect(),
            expressions: expressions
                .iter()
                .map(|e| ExpressionRecord {
                    expression_id: e.to_string(),
                    text: format!("expr {e}"),
                    object_id: None,
                })
                .collect(),
        }
    }

    fn write_seq(layout: &ResultsLayout, video: &VideoRecord, expr: &str, m: &BinaryMask) {
        let seq = MaskSequence::new(
            vec![m.clone(); video.frame_ids.len()],
            video.frame_ids.clone(),
        )
        .unwrap();
        write_results(layout, video, expr, &seq).unwrap();
    }

    #[test]
    fn evaluate_perfect_and_total_miss_and_mean() {
        let dir = tempfile::tempdir().unwrap();
        let pred = ResultsLayout::new(dir.path().join("pred"));
        let gt = ResultsLayout::new(dir.path().join("gt"));
        let meta = vec![video("v1", 2, &["0"]), video("v2", 2, &["0"])];
        let shape = square(8, 1, 1, 3);
        let far = square(8, 5, 5, 2);

        // v1 predicted perfectly, v2 disjoint (J=0, F=0 since radius 1 < distance)
        write_seq(&pred, &meta[0], "0", &shape);
        write_seq(&gt, &meta[0], "0", &shape);
        write_seq(&pred, &meta[1], "0", &far);
        write_seq(&gt, &meta[1], "0", &shape);

        let report = evaluate(
            &pred,
            &gt,
            &meta,
            &BoundaryParams::default(),
            Aggregation::Sequence,
        )
        .unwrap();
        assert_eq!(report.sequences.len(), 2);
        assert_eq!(report.sequences[0].score.jf(), 1.0);
        assert_eq!(report.sequences[1].score.jf(), 0.0);
        assert_eq!(report.global.jf(), 0.5);
    }

    #[test]
    fn evaluate_empty_predictions_score_zero() {
        let dir = tempfile::tempdir().unwrap();
        let pred = ResultsLayout::new(dir.path().join("pred"));
        let gt = ResultsLayout::new(dir.path().join("gt"));
        let meta = vec![video("v", 3, &["0"])];
        write_seq(&pred, &meta[0], "0", &BinaryMask::new(8, 8).unwrap());
        write_seq(&gt, &meta[0], "0", &square(8, 2, 2, 4));
        let report = evaluate(
            &pred,
            &gt,
            &meta,
            &BoundaryParams::default(),
            Aggregation::Sequence,
        )
        .unwrap();
        assert_eq!(report.global.jf(), 0.0);
    }

    #[test]
    fn evaluate_lists_every_missing_triple() {
        let dir = tempfile::tempdir().unwrap();
        let pred = ResultsLayout::new(dir.path().join("pred"));
        let gt = ResultsLayout::new(dir.path().join("gt"));
        let meta = vec![video("v", 2, &["0"])];
        // only ground truth present
        write_seq(&gt, &meta[0], "0", &square(8, 1, 1, 2));
        let err = evaluate(
            &pred,
            &gt,
            &meta,
            &BoundaryParams::default(),
            Aggregation::Sequence,
        )
        .unwrap_err();
        match err {
            MetricsError::MissingFiles { count, missing } => {
                assert_eq!(count, 2);
                assert!(missing.iter().all(|m| m.side == "prediction"));
                let frames: Vec<&str> = missing.iter().map(|m| m.frame_id.as_str()).collect();
                assert_eq!(frames, vec!["00000", "00005"]);
            }
            other => panic!("expected MissingFiles, got {other}"),
        }
    }

    #[test]
    fn frame_weighted_aggregation_differs_from_sequence_weighted() {
        let sequences = vec![
            SequenceResult {
                video_id: "a".into(),
                expression_id: "0".into(),
                frames: 1,
                score: SequenceScore {
                    j_mean: 1.0,
                    f_mean: 1.0,
                },
            },
            SequenceResult {
                video_id: "b".into(),
                expression_id: "0".into(),
                frames: 3,
                score: SequenceScore {
                    j_mean: 0.0,
                    f_mean: 0.0,
                },
            },
        ];
        let by_seq = aggregate(&sequences, Aggregation::Sequence);
        let by_frame = aggregate(&sequences, Aggregation::Frame);
        assert_eq!(by_seq.jf(), 0.5);
        assert_eq!(by_frame.jf(), 0.25);
    }

    #[test]
    fn csv_report_has_global_row_and_consistent_jf() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let report = EvaluationReport {
            sequences: vec![SequenceResult {
                video_id: "v".into(),
                expression_id: "0".into(),
                frames: 2,
                score: SequenceScore {
                    j_mean: 0.75,
                    f_mean: 0.25,
                },
            }],
            global: SequenceScore {
                j_mean: 0.75,
                f_mean: 0.25,
            },
            aggregation: Aggregation::Sequence,
        };
        write_report_csv(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "video_id,expression_id,J,F,JF");
        assert_eq!(lines[1], "v,0,0.750000,0.250000,0.500000");
        assert_eq!(lines[2], "GLOBAL,,0.750000,0.250000,0.500000");
    }
}
