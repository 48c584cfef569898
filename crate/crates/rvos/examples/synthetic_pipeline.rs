//! The full pipeline on a generated dataset: oracle segmenter, pixel-vote
//! fusion, keyframe selection, identity propagation, evaluation, overlays.
//!
//! ```bash
//! cargo run -p rvos --example synthetic_pipeline
//! ```
//!
//! The same run works through the CLI; this example prints the equivalent
//! `rvos run` / `rvos evaluate` invocations at the end.

use std::fs;
use std::path::Path;

use anyhow::Result;
use image::RgbImage;
use rvos::backends::BackendDescriptor;
use rvos::dataset::{save_meta, write_results, ExpressionRecord, ResultsLayout, VideoRecord};
use rvos::fusion::FusionConfig;
use rvos::mask::{BinaryMask, MaskSequence};
use rvos::metrics::{evaluate, Aggregation, BoundaryParams};
use rvos::overlay::{render_overlays, OverlayStyle};
use rvos::pipeline::{run_pipeline, PipelineConfig, SourceConfig, SourceKind};

const WIDTH: u32 = 48;
const HEIGHT: u32 = 32;
const FRAMES: usize = 8;

/// A solid rectangle standing in for one annotated object.
fn object_mask(x0: u32, y0: u32, w: u32, h: u32) -> Result<BinaryMask> {
    let mut mask = BinaryMask::new(WIDTH, HEIGHT)?;
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            mask.set(x, y, true);
        }
    }
    Ok(mask)
}

fn main() -> Result<()> {
    let work = tempfile::tempdir()?;
    let root = work.path();

    // Two videos, two objects each, two expressions per object.
    let mut meta = Vec::new();
    for v in 0..2 {
        let mut expressions = Vec::new();
        for obj in 1..=2 {
            for variant in 0..2 {
                expressions.push(ExpressionRecord {
                    expression_id: (2 * (obj - 1) + variant).to_string(),
                    text: format!("description {variant} of object {obj}"),
                    object_id: Some(obj.to_string()),
                });
            }
        }
        meta.push(VideoRecord {
            video_id: format!("video{v}"),
            frame_ids: (0..FRAMES).map(|f| format!("{:05}", 5 * f)).collect(),
            expressions,
        });
    }
    let meta_path = root.join("meta.json");
    save_meta(&meta_path, &meta)?;

    // Ground truth: object 1 on the left, object 2 on the right, constant
    // over time. Frame images are flat gray pictures with the objects drawn.
    let gt_root = root.join("gt");
    let frames_root = root.join("frames");
    let gt_layout = ResultsLayout::new(&gt_root);
    for video in &meta {
        for expr in &video.expressions {
            let object = match expr.object_id.as_deref() {
                Some("1") => object_mask(4, 8, 12, 12)?,
                _ => object_mask(28, 10, 14, 10)?,
            };
            let seq = MaskSequence::new(
                vec![object; FRAMES],
                video.frame_ids.clone(),
            )?;
            write_results(&gt_layout, video, &expr.expression_id, &seq)?;
        }
        let frame_dir = frames_root.join(&video.video_id);
        fs::create_dir_all(&frame_dir)?;
        for frame_id in &video.frame_ids {
            let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, image::Rgb([96, 96, 96]));
            for mask in [object_mask(4, 8, 12, 12)?, object_mask(28, 10, 14, 10)?] {
                for (x, y) in mask.foreground_pixels() {
                    img.put_pixel(x, y, image::Rgb([200, 180, 40]));
                }
            }
            img.save(frame_dir.join(format!("{frame_id}.png")))?;
        }
    }

    // Pipeline: the oracle source reads the ground truth back, so the final
    // masks must reproduce it exactly.
    let out_root = root.join("results");
    let cfg = PipelineConfig {
        sources: vec![SourceConfig {
            model_id: "oracle".into(),
            kind: SourceKind::Backend {
                backend: BackendDescriptor::oracle(&gt_root),
            },
            ensemble: false,
        }],
        reference_model: "oracle".into(),
        fusion: FusionConfig::default(),
        propagator: BackendDescriptor::identity(),
        boundary: BoundaryParams::default(),
        parallelism: 2,
        output: Some(out_root.clone()),
        keyframe_floor: 0.0,
        fused_variant: true,
    };
    let config_path = root.join("config.json");
    fs::write(&config_path, serde_json::to_vec_pretty(&cfg)?)?;

    let report = run_pipeline(&cfg, &meta, &frames_root)?;
    println!("pipeline stages:");
    report.write_jsonl(std::io::stdout().lock())?;
    assert!(!report.has_failures());

    let scores = evaluate(
        &ResultsLayout::new(&out_root),
        &gt_layout,
        &meta,
        &cfg.boundary,
        Aggregation::Sequence,
    )?;
    println!(
        "\nglobal J {:.4}  F {:.4}  J&F {:.4} over {} sequences",
        scores.global.j_mean,
        scores.global.f_mean,
        scores.global.jf(),
        scores.sequences.len()
    );

    let overlays = render_overlays(
        &ResultsLayout::new(&out_root),
        &frames_root,
        &root.join("overlays"),
        &OverlayStyle::default(),
    )?;
    println!("rendered {overlays} overlay images");

    println!("\nequivalent CLI invocations:");
    print_cli(&config_path, &meta_path, &frames_root, &out_root, &gt_root);
    Ok(())
}

fn print_cli(config: &Path, meta: &Path, frames: &Path, out: &Path, gt: &Path) {
    println!(
        "  rvos run --config {} --meta {} --frames {} --out {}",
        config.display(),
        meta.display(),
        frames.display(),
        out.display()
    );
    println!(
        "  rvos evaluate --pred {} --gt {} --meta {} --report report.csv",
        out.display(),
        gt.display(),
        meta.display()
    );
    println!(
        "  rvos visualize --results {} --frames {} --out overlays/",
        out.display(),
        frames.display()
    );
}
