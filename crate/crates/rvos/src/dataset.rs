//! Challenge-style dataset ingestion and results layout.
//!
//! The meta document is a UTF-8 JSON file with a top-level `videos` map; each
//! video carries an `expressions` map (`exp` text plus optional `obj_id`) and
//! a `frames` list. Masks travel as 8-bit palette PNGs with index 0 for
//! background and index 1 for foreground, and results directories follow the
//! scheme `root/<video_id>/<expression_id>/<frame_id>.png`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use crate::mask::{BinaryMask, MaskError, MaskSequence};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("meta document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("meta schema error{}: {message}", location_suffix(.video_id, .expression_id))]
    Schema {
        video_id: Option<String>,
        expression_id: Option<String>,
        message: String,
    },
    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("failed to encode {path}: {message}")]
    Encode { path: PathBuf, message: String },
    #[error("sequence frame ids do not match video {video_id}: {message}")]
    FrameIdMismatch { video_id: String, message: String },
    #[error(transparent)]
    Mask(#[from] MaskError),
}

fn location_suffix(video_id: &Option<String>, expression_id: &Option<String>) -> String {
    match (video_id, expression_id) {
        (Some(v), Some(e)) => format!(" in video {v:?}, expression {e:?}"),
        (Some(v), None) => format!(" in video {v:?}"),
        _ => String::new(),
    }
}

/// One referring expression annotated on a video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpressionRecord {
    /// Key of the expression inside its video; unique within the video.
    pub expression_id: String,
    /// The referring sentence.
    pub text: String,
    /// Identifier of the annotated target object, when the split provides it.
    pub object_id: Option<String>,
}

/// One video with its frame list and expressions, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoRecord {
    pub video_id: String,
    /// Frame identifiers, unique and sorted ascending.
    pub frame_ids: Vec<String>,
    pub expressions: Vec<ExpressionRecord>,
}

impl VideoRecord {
    pub fn expression(&self, expression_id: &str) -> Option<&ExpressionRecord> {
        self.expressions
            .iter()
            .find(|e| e.expression_id == expression_id)
    }
}

fn schema_error(
    video_id: Option<&str>,
    expression_id: Option<&str>,
    message: impl Into<String>,
) -> DatasetError {
    DatasetError::Schema {
        video_id: video_id.map(str::to_string),
        expression_id: expression_id.map(str::to_string),
        message: message.into(),
    }
}

/// Loads the meta document, preserving video and expression order.
pub fn load_meta(path: &Path) -> Result<Vec<VideoRecord>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: Value = serde_json::from_reader(BufReader::new(file))?;
    parse_meta(&doc)
}

/// Parses an already-deserialized meta document.
pub fn parse_meta(doc: &Value) -> Result<Vec<VideoRecord>, DatasetError> {
    let videos = doc
        .get("videos")
        .ok_or_else(|| schema_error(None, None, "missing top-level \"videos\" map"))?
        .as_object()
        .ok_or_else(|| schema_error(None, None, "\"videos\" must be an object"))?;

    let mut records = Vec::with_capacity(videos.len());
    for (video_id, video) in videos {
        let video = video
            .as_object()
            .ok_or_else(|| schema_error(Some(video_id), None, "video entry must be an object"))?;

        let frames = video
            .get("frames")
            .ok_or_else(|| schema_error(Some(video_id), None, "missing \"frames\" list"))?
            .as_array()
            .ok_or_else(|| schema_error(Some(video_id), None, "\"frames\" must be an array"))?;
        let mut frame_ids = Vec::with_capacity(frames.len());
        for frame in frames {
            let id = frame.as_str().ok_or_else(|| {
                schema_error(Some(video_id), None, "frame ids must be strings")
            })?;
            frame_ids.push(id.to_string());
        }
        if frame_ids.is_empty() {
            return Err(schema_error(Some(video_id), None, "frame list is empty"));
        }
        for pair in frame_ids.windows(2) {
            if pair[0] >= pair[1] {
                return Err(schema_error(
                    Some(video_id),
                    None,
                    format!(
                        "frame ids must be unique and sorted ascending, found {:?} before {:?}",
                        pair[0], pair[1]
                    ),
                ));
            }
        }

        let expressions = video
            .get("expressions")
            .ok_or_else(|| schema_error(Some(video_id), None, "missing \"expressions\" map"))?
            .as_object()
            .ok_or_else(|| schema_error(Some(video_id), None, "\"expressions\" must be an object"))?;
        let mut expression_records = Vec::with_capacity(expressions.len());
        for (expression_id, expression) in expressions {
            let expression = expression.as_object().ok_or_else(|| {
                schema_error(Some(video_id), Some(expression_id), "expression must be an object")
            })?;
            let text = expression
                .get("exp")
                .and_then(Value::as_str)
                .ok_or_else(|| {
                    schema_error(
                        Some(video_id),
                        Some(expression_id),
                        "missing required \"exp\" string",
                    )
                })?;
            let object_id = match expression.get("obj_id") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                // Some annotation dumps store obj_id as a number.
                Some(Value::Number(n)) => Some(n.to_string()),
                Some(_) => {
                    return Err(schema_error(
                        Some(video_id),
                        Some(expression_id),
                        "\"obj_id\" must be a string or number",
                    ))
                }
            };
            expression_records.push(ExpressionRecord {
                expression_id: expression_id.clone(),
                text: text.to_string(),
                object_id,
            });
        }

        records.push(VideoRecord {
            video_id: video_id.clone(),
            frame_ids,
            expressions: expression_records,
        });
    }
    Ok(records)
}

/// Serializes records back into the meta document shape.
pub fn meta_to_json(records: &[VideoRecord]) -> Value {
    let mut videos = serde_json::Map::new();
    for video in records {
        let mut expressions = serde_json::Map::new();
        for expr in &video.expressions {
            let mut entry = serde_json::Map::new();
            entry.insert("exp".into(), Value::String(expr.text.clone()));
            if let Some(obj_id) = &expr.object_id {
                entry.insert("obj_id".into(), Value::String(obj_id.clone()));
            }
            expressions.insert(expr.expression_id.clone(), Value::Object(entry));
        }
        let mut entry = serde_json::Map::new();
        entry.insert("expressions".into(), Value::Object(expressions));
        entry.insert(
            "frames".into(),
            Value::Array(
                video
                    .frame_ids
                    .iter()
                    .map(|f| Value::String(f.clone()))
                    .collect(),
            ),
        );
        videos.insert(video.video_id.clone(), Value::Object(entry));
    }
    let mut doc = serde_json::Map::new();
    doc.insert("videos".into(), Value::Object(videos));
    Value::Object(doc)
}

/// Writes records as a meta document.
pub fn save_meta(path: &Path, records: &[VideoRecord]) -> Result<(), DatasetError> {
    let doc = meta_to_json(records);
    let file = File::create(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::to_writer_pretty(BufWriter::new(file), &doc)?;
    Ok(())
}

/// RGB entries written into the palette of encoded masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskPalette {
    pub background: [u8; 3],
    pub foreground: [u8; 3],
}

impl Default for MaskPalette {
    fn default() -> Self {
        Self {
            background: [0, 0, 0],
            foreground: [255, 255, 255],
        }
    }
}

/// Decodes a mask PNG. Grayscale and palette-indexed images are accepted;
/// any nonzero stored value counts as foreground, so both {0,1} and {0,255}
/// encodings produce the same mask.
pub fn read_mask_png(path: &Path) -> Result<BinaryMask, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    // Keep palette indices as stored instead of expanding to RGB.
    decoder.set_transformations(png::Transformations::IDENTITY);
    let decode_err = |message: String| DatasetError::Decode {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = decoder.read_info().map_err(|e| decode_err(e.to_string()))?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| decode_err(e.to_string()))?;

    match info.color_type {
        png::ColorType::Grayscale | png::ColorType::Indexed => {}
        other => {
            return Err(decode_err(format!(
                "unsupported color type {other:?}; expected grayscale or palette-indexed"
            )))
        }
    }
    let depth = info.bit_depth as u8;
    if !matches!(depth, 1 | 2 | 4 | 8) {
        return Err(decode_err(format!(
            "unsupported bit depth {depth}; expected 1, 2, 4, or 8"
        )));
    }

    let (width, height) = (info.width, info.height);
    let mut bits = Vec::with_capacity(width as usize * height as usize);
    let row_bytes = info.line_size;
    for row in 0..height as usize {
        let row_data = &buf[row * row_bytes..(row + 1) * row_bytes];
        unpack_row(row_data, depth, width as usize, &mut bits);
    }
    BinaryMask::from_bits(width, height, bits).map_err(|e| decode_err(e.to_string()))
}

/// Expands one packed scanline of `depth`-bit samples into 0/1 values.
fn unpack_row(row: &[u8], depth: u8, width: usize, out: &mut Vec<u8>) {
    match depth {
        8 => out.extend(row[..width].iter().map(|&v| u8::from(v != 0))),
        _ => {
            let per_byte = 8 / depth as usize;
            let mask = (1u16 << depth) - 1;
            for i in 0..width {
                let byte = row[i / per_byte];
                let shift = 8 - depth as usize * (i % per_byte + 1);
                let value = (u16::from(byte) >> shift) & mask;
                out.push(u8::from(value != 0));
            }
        }
    }
}

/// Encodes a mask as an 8-bit palette-indexed PNG with the default palette.
pub fn write_mask_png(mask: &BinaryMask, path: &Path) -> Result<(), DatasetError> {
    write_mask_png_with_palette(mask, path, &MaskPalette::default())
}

/// Encodes a mask as an 8-bit palette-indexed PNG: index 0 background,
/// index 1 foreground. Decoding the file recovers the mask bit-exactly.
pub fn write_mask_png_with_palette(
    mask: &BinaryMask,
    path: &Path,
    palette: &MaskPalette,
) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| DatasetError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let file = File::create(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let encode_err = |message: String| DatasetError::Encode {
        path: path.to_path_buf(),
        message,
    };
    let mut encoder = png::Encoder::new(BufWriter::new(file), mask.width(), mask.height());
    encoder.set_color(png::ColorType::Indexed);
    encoder.set_depth(png::BitDepth::Eight);
    let mut plte = Vec::with_capacity(6);
    plte.extend_from_slice(&palette.background);
    plte.extend_from_slice(&palette.foreground);
    encoder.set_palette(plte);
    let mut writer = encoder
        .write_header()
        .map_err(|e| encode_err(e.to_string()))?;
    writer
        .write_image_data(mask.as_bits())
        .map_err(|e| encode_err(e.to_string()))?;
    writer.finish().map_err(|e| encode_err(e.to_string()))?;
    Ok(())
}

/// Results directory with the scheme `root/<video_id>/<expression_id>/<frame_id>.png`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsLayout {
    root: PathBuf,
}

impl ResultsLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn expression_dir(&self, video_id: &str, expression_id: &str) -> PathBuf {
        self.root.join(video_id).join(expression_id)
    }

    pub fn mask_path(&self, video_id: &str, expression_id: &str, frame_id: &str) -> PathBuf {
        self.expression_dir(video_id, expression_id)
            .join(format!("{frame_id}.png"))
    }

    /// Reads the full sequence stored for one (video, expression).
    pub fn read_sequence(
        &self,
        video: &VideoRecord,
        expression_id: &str,
    ) -> Result<MaskSequence, DatasetError> {
        let mut frames = Vec::with_capacity(video.frame_ids.len());
        for frame_id in &video.frame_ids {
            frames.push(read_mask_png(&self.mask_path(
                &video.video_id,
                expression_id,
                frame_id,
            ))?);
        }
        Ok(MaskSequence::new(frames, video.frame_ids.clone())?)
    }
}

/// Writes one PNG per frame at the layout's scheme path. Overwrites are
/// idempotent: rewriting the same sequence produces byte-identical files.
pub fn write_results(
    layout: &ResultsLayout,
    video: &VideoRecord,
    expression_id: &str,
    seq: &MaskSequence,
) -> Result<(), DatasetError> {
    if seq.frame_ids() != video.frame_ids.as_slice() {
        return Err(DatasetError::FrameIdMismatch {
            video_id: video.video_id.clone(),
            message: format!(
                "sequence has frames {:?}, video lists {:?}",
                seq.frame_ids(),
                video.frame_ids
            ),
        });
    }
    for (frame_id, mask) in seq.iter() {
        write_mask_png(
            mask,
            &layout.mask_path(&video.video_id, expression_id, frame_id),
        )?;
    }
    Ok(())
}
