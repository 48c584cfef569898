//! Region similarity (J) and boundary accuracy (F) on hand-built masks,
//! plus a full evaluation over a small results tree.
//!
//! ```bash
//! cargo run -p rvos --example evaluate_metrics
//! ```

use anyhow::Result;
use rvos::dataset::{write_results, ExpressionRecord, ResultsLayout, VideoRecord};
use rvos::mask::{BinaryMask, MaskSequence};
use rvos::metrics::{
    boundary_pixels, contour_accuracy, evaluate, region_similarity, write_report_csv,
    Aggregation, BoundaryParams,
};

fn square(side: u32, x0: u32, y0: u32, len: u32) -> Result<BinaryMask> {
    let mut mask = BinaryMask::new(side, side)?;
    for y in y0..y0 + len {
        for x in x0..x0 + len {
            mask.set(x, y, true);
        }
    }
    Ok(mask)
}

fn main() -> Result<()> {
    let params = BoundaryParams::default();
    let gt = square(64, 20, 20, 16)?;

    println!("prediction vs a 16x16 ground-truth square (64x64 image, radius {}):", params.radius(64, 64));
    for (label, pred) in [
        ("exact match       ", square(64, 20, 20, 16)?),
        ("shifted by 1 px   ", square(64, 21, 20, 16)?),
        ("shifted by 8 px   ", square(64, 28, 20, 16)?),
        ("half the size     ", square(64, 20, 20, 8)?),
        ("empty prediction  ", BinaryMask::new(64, 64)?),
    ] {
        let j = region_similarity(&pred, &gt)?;
        let f = contour_accuracy(&pred, &gt, &params)?;
        println!("  {label} J {j:.4}  F {f:.4}  J&F {:.4}", (j + f) / 2.0);
    }
    println!(
        "boundary of the ground-truth square: {} of {} pixels",
        boundary_pixels(&gt).pixel_count(),
        gt.pixel_count()
    );

    // Evaluate a two-video results tree against ground truth.
    let work = tempfile::tempdir()?;
    let pred_layout = ResultsLayout::new(work.path().join("pred"));
    let gt_layout = ResultsLayout::new(work.path().join("gt"));
    let meta: Vec<VideoRecord> = (0..2)
        .map(|v| VideoRecord {
            video_id: format!("video{v}"),
            frame_ids: (0..3).map(|f| format!("{:05}", 5 * f)).collect(),
            expressions: vec![ExpressionRecord {
                expression_id: "0".into(),
                text: "the square".into(),
                object_id: None,
            }],
        })
        .collect();
    for (v, video) in meta.iter().enumerate() {
        let truth = square(32, 8, 8, 10)?;
        // video0 is predicted perfectly, video1 one pixel off
        let guess = if v == 0 {
            truth.clone()
        } else {
            square(32, 9, 8, 10)?
        };
        let ids = video.frame_ids.clone();
        write_results(
            &gt_layout,
            video,
            "0",
            &MaskSequence::new(vec![truth; 3], ids.clone())?,
        )?;
        write_results(
            &pred_layout,
            video,
            "0",
            &MaskSequence::new(vec![guess; 3], ids)?,
        )?;
    }
    let report = evaluate(
        &pred_layout,
        &gt_layout,
        &meta,
        &params,
        Aggregation::Sequence,
    )?;
    for seq in &report.sequences {
        println!(
            "{}/{}: J {:.4}  F {:.4}  J&F {:.4}",
            seq.video_id,
            seq.expression_id,
            seq.score.j_mean,
            seq.score.f_mean,
            seq.score.jf()
        );
    }
    println!("global J&F {:.4}", report.global.jf());
    let csv_path = work.path().join("report.csv");
    write_report_csv(&report, &csv_path)?;
    println!("\n{}", std::fs::read_to_string(&csv_path)?);
    Ok(())
}
