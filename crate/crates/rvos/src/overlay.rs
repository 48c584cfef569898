//! Blends result masks over their source frames for visual inspection.

use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;
use thiserror::Error;

use crate::dataset::{read_mask_png, DatasetError, ResultsLayout};
use crate::mask::BinaryMask;

#[derive(Debug, Error)]
pub enum OverlayError {
    #[error("frame image for {frame_id:?} of video {video_id:?} not found under {dir}")]
    MissingFrame {
        video_id: String,
        frame_id: String,
        dir: PathBuf,
    },
    #[error("mask {mask} is {mask_w}x{mask_h} but the frame is {frame_w}x{frame_h}")]
    ShapeMismatch {
        mask: PathBuf,
        mask_w: u32,
        mask_h: u32,
        frame_w: u32,
        frame_h: u32,
    },
    #[error("blend weight {0} must lie in [0, 1]")]
    BadAlpha(f64),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("image error for {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Mask color and blend weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayStyle {
    pub color: [u8; 3],
    /// 0 leaves the frame untouched, 1 paints the solid color.
    pub alpha: f64,
}

impl Default for OverlayStyle {
    fn default() -> Self {
        Self {
            color: [255, 64, 64],
            alpha: 0.5,
        }
    }
}

/// Blends one mask over one frame.
pub fn blend(frame: &RgbImage, mask: &BinaryMask, style: &OverlayStyle) -> RgbImage {
    let mut out = frame.clone();
    for (x, y) in mask.foreground_pixels() {
        let pixel = out.get_pixel_mut(x, y);
        for (channel, &target) in pixel.0.iter_mut().zip(&style.color) {
            let blended =
                (1.0 - style.alpha) * f64::from(*channel) + style.alpha * f64::from(target);
            *channel = blended.round() as u8;
        }
    }
    out
}

/// Renders an overlay PNG for every mask in the results tree, mirroring its
/// layout under `out_dir`. Returns the number of overlays written.
pub fn render_overlays(
    results: &ResultsLayout,
    frames_root: &Path,
    out_dir: &Path,
    style: &OverlayStyle,
) -> Result<usize, OverlayError> {
    if !(0.0..=1.0).contains(&style.alpha) {
        return Err(OverlayError::BadAlpha(style.alpha));
    }
    let mut count = 0;
    for video_dir in sorted_dirs(results.root())? {
        let video_id = name_of(&video_dir);
        for expr_dir in sorted_dirs(&video_dir)? {
            let expression_id = name_of(&expr_dir);
            for mask_path in sorted_files(&expr_dir, "png")? {
                let frame_id = mask_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let mask = read_mask_png(&mask_path)?;
                let frame_path = find_frame(frames_root, &video_id, &frame_id).ok_or_else(|| {
                    OverlayError::MissingFrame {
                        video_id: video_id.clone(),
                        frame_id: frame_id.clone(),
                        dir: frames_root.join(&video_id),
                    }
                })?;
                let frame = image::open(&frame_path)
                    .map_err(|e| OverlayError::Image {
                        path: frame_path.clone(),
                        message: e.to_string(),
                    })?
                    .to_rgb8();
                if frame.dimensions() != mask.dimensions() {
                    return Err(OverlayError::ShapeMismatch {
                        mask: mask_path.clone(),
                        mask_w: mask.width(),
                        mask_h: mask.height(),
                        frame_w: frame.width(),
                        frame_h: frame.height(),
                    });
                }
                let blended = blend(&frame, &mask, style);
                let out_path = out_dir
                    .join(&video_id)
                    .join(&expression_id)
                    .join(format!("{frame_id}.png"));
                if let Some(parent) = out_path.parent() {
                    fs::create_dir_all(parent).map_err(|source| OverlayError::Io {
                        path: parent.to_path_buf(),
                        source,
                    })?;
                }
                blended.save(&out_path).map_err(|e| OverlayError::Image {
                    path: out_path.clone(),
                    message: e.to_string(),
                })?;
                count += 1;
            }
        }
    }
    Ok(count)
}

fn name_of(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn sorted_dirs(root: &Path) -> Result<Vec<PathBuf>, OverlayError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|source| OverlayError::Io {
            path: root.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn sorted_files(root: &Path, extension: &str) -> Result<Vec<PathBuf>, OverlayError> {
    let mut files: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|source| OverlayError::Io {
            path: root.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().map(|e| e == extension).unwrap_or(false))
        .collect();
    files.sort();
    Ok(files)
}

fn find_frame(frames_root: &Path, video_id: &str, frame_id: &str) -> Option<PathBuf> {
    for ext in ["jpg", "jpeg", "png"] {
        let candidate = frames_root.join(video_id).join(format!("{frame_id}.{ext}"));
        if candidate.is_file() {
            return Some(candidate);
        }
    }
    None
}
