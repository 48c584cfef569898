//! Binary masks, mask sequences, confidence series, and pixel-vote grids.
//!
//! These are the value types the rest of the crate operates on. A mask is a
//! dense row-major grid of 0/1 bytes; a [`VoteGrid`] accumulates per-pixel
//! foreground votes from any number of same-shaped masks and thresholds the
//! counts back into a mask.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("mask dimensions must be positive, got {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
    #[error("expected {expected} pixel values for a {width}x{height} mask, got {actual}")]
    BitCount {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("pixel value {value} at index {index} is not 0 or 1")]
    NonBinaryBit { index: usize, value: u8 },
    #[error("shape mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    ShapeMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },
    #[error("vote threshold must be at least 1")]
    ZeroThreshold,
    #[error("mask sequence must contain at least one frame")]
    EmptySequence,
    #[error("sequence has {frames} frames but {ids} frame ids")]
    FrameIdCount { frames: usize, ids: usize },
    #[error("frame ids must be unique and strictly ascending, found {previous:?} before {current:?}")]
    UnorderedFrameIds { previous: String, current: String },
    #[error("confidence score {value} at position {index} is outside [0, 1]")]
    ConfidenceRange { index: usize, value: f64 },
}

/// A fixed-size H×W grid of foreground indicators for one object in one frame.
///
/// Bits are stored row-major with the origin at the top-left, matching image
/// file row order. Two masks are equal iff their dimensions and all bits are
/// equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<u8>,
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BinaryMask({}x{}, {} foreground)",
            self.width,
            self.height,
            self.pixel_count()
        )
    }
}

impl BinaryMask {
    /// Creates an all-background mask.
    pub fn new(width: u32, height: u32) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        Ok(Self {
            width,
            height,
            bits: vec![0; width as usize * height as usize],
        })
    }

    /// Builds a mask from row-major 0/1 values.
    pub fn from_bits(width: u32, height: u32, bits: Vec<u8>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(MaskError::BitCount {
                width,
                height,
                expected,
                actual: bits.len(),
            });
        }
        if let Some((index, &value)) = bits.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(MaskError::NonBinaryBit { index, value });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Builds a mask from equal-length rows of 0/1 values. Handy for literals.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self, MaskError> {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len()) as u32;
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for row in rows {
            if row.len() as u32 != width {
                return Err(MaskError::BitCount {
                    width,
                    height,
                    expected: width as usize,
                    actual: row.len(),
                });
            }
            bits.extend_from_slice(row);
        }
        Self::from_bits(width, height, bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Row-major 0/1 pixel values.
    pub fn as_bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.bits[(y * self.width + x) as usize] != 0
    }

    pub fn set(&mut self, x: u32, y: u32, foreground: bool) {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.bits[(y * self.width + x) as usize] = u8::from(foreground);
    }

    /// Number of foreground pixels.
    pub fn pixel_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Coordinates of all foreground pixels in row-major order.
    pub fn foreground_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let width = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(move |(i, _)| ((i as u32) % width, (i as u32) / width))
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn ensure_same_shape(&self, other: &BinaryMask) -> Result<(), MaskError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(MaskError::ShapeMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    /// Count of pixels set in both masks.
    pub fn intersection_count(&self, other: &BinaryMask) -> Result<usize, MaskError> {
        self.ensure_same_shape(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a != 0 && b != 0)
            .count())
    }

    /// Count of pixels set in either mask.
    pub fn union_count(&self, other: &BinaryMask) -> Result<usize, MaskError> {
        self.ensure_same_shape(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a != 0 || b != 0)
            .count())
    }

    /// The mask shifted by `(dx, dy)` pixels, with content clipped at borders.
    pub fn translated(&self, dx: i64, dy: i64) -> BinaryMask {
        let mut out = BinaryMask {
            width: self.width,
            height: self.height,
            bits: vec![0; self.bits.len()],
        };
        for y in 0..self.height as i64 {
            let src_y = y - dy;
            if src_y < 0 || src_y >= self.height as i64 {
                continue;
            }
            for x in 0..self.width as i64 {
                let src_x = x - dx;
                if src_x < 0 || src_x >= self.width as i64 {
                    continue;
                }
                let src = (src_y as u32 * self.width + src_x as u32) as usize;
                if self.bits[src] != 0 {
                    out.bits[(y as u32 * self.width + x as u32) as usize] = 1;
                }
            }
        }
        out
    }
}

/// T aligned masks for one (video, expression) unit, keyed by frame id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSequence {
    frames: Vec<BinaryMask>,
    frame_ids: Vec<String>,
}

impl MaskSequence {
    /// Builds a sequence, checking that frames share one shape and that frame
    /// ids are unique and strictly ascending.
    pub fn new(frames: Vec<BinaryMask>, frame_ids: Vec<String>) -> Result<Self, MaskError> {
        if frames.is_empty() {
            return Err(MaskError::EmptySequence);
        }
        if frames.len() != frame_ids.len() {
            return Err(MaskError::FrameIdCount {
                frames: frames.len(),
                ids: frame_ids.len(),
            });
        }
        let first = &frames[0];
        for frame in &frames[1..] {
            first.ensure_same_shape(frame)?;
        }
        for pair in frame_ids.windows(2) {
            if pair[0] >= pair[1] {
                return Err(MaskError::UnorderedFrameIds {
                    previous: pair[0].clone(),
                    current: pair[1].clone(),
                });
            }
        }
        Ok(Self { frames, frame_ids })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.frames[0].dimensions()
    }

    pub fn frames(&self) -> &[BinaryMask] {
        &self.frames
    }

    pub fn frame_ids(&self) -> &[String] {
        &self.frame_ids
    }

    pub fn frame(&self, index: usize) -> &BinaryMask {
        &self.frames[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BinaryMask)> {
        self.frame_ids
            .iter()
            .map(String::as_str)
            .zip(self.frames.iter())
    }
}

/// Per-frame confidence scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSeries {
    scores: Vec<f64>,
}

impl ConfidenceSeries {
    pub fn new(scores: Vec<f64>) -> Result<Self, MaskError> {
        for (index, &value) in scores.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(MaskError::ConfidenceRange { index, value });
            }
        }
        Ok(Self { scores })
    }

    /// A series of the given length with every score 1.0.
    pub fn uniform(len: usize) -> Self {
        Self {
            scores: vec![1.0; len],
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Per-pixel accumulator of foreground votes.
///
/// After accumulating N masks every count lies in `[0, N]`; accumulation is
/// order-independent, so any permutation of the same mask set yields an
/// identical grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteGrid {
    width: u32,
    height: u32,
    counts: Vec<u32>,
}

impl VoteGrid {
    pub fn new(width: u32, height: u32) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        Ok(Self {
            width,
            height,
            counts: vec![0; width as usize * height as usize],
        })
    }

    /// Builds a grid by accumulating every mask in the iterator.
    pub fn from_masks<'a, I>(masks: I) -> Result<Self, MaskError>
    where
        I: IntoIterator<Item = &'a BinaryMask>,
    {
        let mut iter = masks.into_iter();
        let first = iter.next().ok_or(MaskError::EmptySequence)?;
        let mut grid = Self::new(first.width(), first.height())?;
        grid.accumulate(first)?;
        for mask in iter {
            grid.accumulate(mask)?;
        }
        Ok(grid)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Adds one vote at every foreground pixel of `mask`.
    pub fn accumulate(&mut self, mask: &BinaryMask) -> Result<(), MaskError> {
        if self.width != mask.width() || self.height != mask.height() {
            return Err(MaskError::ShapeMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: mask.width(),
                right_height: mask.height(),
            });
        }
        for (count, &bit) in self.counts.iter_mut().zip(mask.as_bits()) {
            *count += u32::from(bit);
        }
        Ok(())
    }

    /// Pixels with at least `thr` votes become foreground.
    pub fn threshold(&self, thr: u32) -> Result<BinaryMask, MaskError> {
        if thr == 0 {
            return Err(MaskError::ZeroThreshold);
        }
        let bits = self
            .counts
            .iter()
            .map(|&c| u8::from(c >= thr))
            .collect::<Vec<_>>();
        BinaryMask::from_bits(self.width, self.height, bits)
    }
}
