use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rvos::dataset::{load_meta, read_mask_png, write_mask_png, ResultsLayout};
use rvos::fusion::fuse_sequences;
use rvos::mask::MaskSequence;
use rvos::metrics::{evaluate, write_report_csv, Aggregation, BoundaryParams};
use rvos::overlay::{render_overlays, OverlayStyle};
use rvos::pipeline::{run_pipeline, PipelineConfig};

#[derive(Parser)]
#[command(name = "rvos", version, about = "Referring video segmentation pipeline toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a config file.
    Run {
        /// Pipeline config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Meta document listing videos, expressions, and frames.
        #[arg(long)]
        meta: PathBuf,
        /// Root of per-video frame image directories.
        #[arg(long)]
        frames: PathBuf,
        /// Results root; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker count; overrides the config's `parallelism`.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Write the JSON-lines run report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score predictions against ground truth and write a CSV report.
    Evaluate {
        /// Prediction results root.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth results root.
        #[arg(long)]
        gt: PathBuf,
        /// Meta document.
        #[arg(long)]
        meta: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        report: PathBuf,
        /// Weight the global score by sequence or by frame.
        #[arg(long, default_value = "sequence")]
        aggregation: Aggregation,
        /// Boundary tolerance as a fraction of the image diagonal.
        #[arg(long, default_value_t = 0.008)]
        tolerance_ratio: f64,
    },
    /// Render mask overlays on top of the source frames.
    Visualize {
        /// Results root to visualize.
        #[arg(long)]
        results: PathBuf,
        /// Root of per-video frame image directories.
        #[arg(long)]
        frames: PathBuf,
        /// Output directory for overlay images.
        #[arg(long)]
        out: PathBuf,
        /// Blend weight of the mask color, in [0, 1].
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Mask color as RRGGBB hex.
        #[arg(long, default_value = "ff4040")]
        color: String,
    },
    /// Pixel-vote masks from aligned directories into a fused directory.
    Fuse {
        /// Output directory for the fused masks.
        #[arg(long)]
        out: PathBuf,
        /// Vote-threshold ratio in (0, 1]; the integer threshold is
        /// ceil(ratio * number of directories).
        #[arg(long, default_value_t = 0.5)]
        thr_ratio: f64,
        /// Mask directories to fuse; all must hold the same PNG file names.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            config,
            meta,
            frames,
            out,
            parallelism,
            report,
        } => cmd_run(&config, &meta, &frames, out, parallelism, report),
        Command::Evaluate {
            pred,
            gt,
            meta,
            report,
            aggregation,
            tolerance_ratio,
        } => cmd_evaluate(&pred, &gt, &meta, &report, aggregation, tolerance_ratio),
        Command::Visualize {
            results,
            frames,
            out,
            alpha,
            color,
        } => cmd_visualize(&results, &frames, &out, alpha, &color),
        Command::Fuse {
            out,
            thr_ratio,
            dirs,
        } => cmd_fuse(&out, thr_ratio, &dirs),
    }
}

fn cmd_run(
    config: &Path,
    meta_path: &Path,
    frames: &Path,
    out: Option<PathBuf>,
    parallelism: Option<usize>,
    report_path: Option<PathBuf>,
) -> Result<ExitCode> {
    let mut cfg = PipelineConfig::from_path(config)?;
    if let Some(out) = out {
        cfg.output = Some(out);
    }
    if let Some(parallelism) = parallelism {
        cfg.parallelism = parallelism;
    }
    let meta = load_meta(meta_path)?;
    let report = run_pipeline(&cfg, &meta, frames)?;
    match &report_path {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("cannot create report {}", path.display()))?;
            report.write_jsonl(BufWriter::new(file))?;
        }
        None => report.write_jsonl(std::io::stdout().lock())?,
    }
    for (record, warning) in report.warnings() {
        eprintln!(
            "warning: {}/{} [{:?}]: {warning}",
            record.video_id, record.target, record.stage
        );
    }
    if report.has_failures() {
        for (video, target, error) in report.failed_units() {
            eprintln!("failed: {video}/{target}: {error}");
        }
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(
    pred: &Path,
    gt: &Path,
    meta_path: &Path,
    report_path: &Path,
    aggregation: Aggregation,
    tolerance_ratio: f64,
) -> Result<ExitCode> {
    let meta = load_meta(meta_path)?;
    let params = BoundaryParams { tolerance_ratio };
    let report = evaluate(
        &ResultsLayout::new(pred),
        &ResultsLayout::new(gt),
        &meta,
        &params,
        aggregation,
    )?;
    write_report_csv(&report, report_path)?;
    println!(
        "global J {:.6}  F {:.6}  J&F {:.6}  ({} sequences)",
        report.global.j_mean,
        report.global.f_mean,
        report.global.jf(),
        report.sequences.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_visualize(
    results: &Path,
    frames: &Path,
    out: &Path,
    alpha: f64,
    color: &str,
) -> Result<ExitCode> {
    let style = OverlayStyle {
        color: parse_color(color)?,
        alpha,
    };
    let count = render_overlays(&ResultsLayout::new(results), frames, out, &style)?;
    println!("wrote {count} overlays to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn parse_color(hex: &str) -> Result<[u8; 3]> {
    let hex = hex.trim_start_matches('#');
    if hex.len() != 6 {
        bail!("color must be RRGGBB hex, got {hex:?}");
    }
    let mut channels = [0u8; 3];
    for (i, channel) in channels.iter_mut().enumerate() {
        *channel = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
            .with_context(|| format!("color must be RRGGBB hex, got {hex:?}"))?;
    }
    Ok(channels)
}

fn cmd_fuse(out: &Path, thr_ratio: f64, dirs: &[PathBuf]) -> Result<ExitCode> {
    if !(thr_ratio > 0.0 && thr_ratio <= 1.0) {
        bail!("--thr-ratio must lie in (0, 1], got {thr_ratio}");
    }
    // the first directory fixes the frame set; every other must match it
    let mut names: Vec<String> = Vec::new();
    for entry in fs::read_dir(&dirs[0])
        .with_context(|| format!("cannot read {}", dirs[0].display()))?
    {
        let path = entry?.path();
        if path.extension().map(|e| e == "png").unwrap_or(false) {
            if let Some(stem) = path.file_stem() {
                names.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    names.sort();
    if names.is_empty() {
        bail!("{} contains no PNG masks", dirs[0].display());
    }

    let mut sequences = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let mut masks = Vec::with_capacity(names.len());
        for name in &names {
            let path = dir.join(format!("{name}.png"));
            let mask = read_mask_png(&path)
                .with_context(|| format!("every directory must hold {name}.png"))?;
            masks.push(mask);
        }
        sequences.push(MaskSequence::new(masks, names.clone())?);
    }
    let refs: Vec<&MaskSequence> = sequences.iter().collect();
    let thr = ((thr_ratio * dirs.len() as f64).ceil() as u32).clamp(1, dirs.len() as u32);
    let fused = fuse_sequences(&refs, thr)?;
    fs::create_dir_all(out)?;
    for (name, mask) in fused.iter() {
        write_mask_png(mask, &out.join(format!("{name}.png")))?;
    }
    println!(
        "fused {} masks from {} directories at threshold {thr} into {}",
        names.len(),
        dirs.len(),
        out.display()
    );
    std::io::stdout().flush().ok();
    Ok(ExitCode::SUCCESS)
}
