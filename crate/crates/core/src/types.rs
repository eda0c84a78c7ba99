//! Shared domain vocabulary: samples, canonical images, detection results,
//! and the per-evaluation record that every other module produces or consumes.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Input modality of a query sample. The tag determines which preprocessing
/// operation is legal for the sample's source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    RgbImage,
    PointCloud,
    TimeSeries,
    VideoFrames,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Modality::RgbImage => "rgb_image",
            Modality::PointCloud => "point_cloud",
            Modality::TimeSeries => "time_series",
            Modality::VideoFrames => "video_frames",
        };
        f.write_str(s)
    }
}

/// Binary ground-truth / prediction label. Serializes as the integer 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Anomalous => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_u8() as f64
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Normal => Label::Anomalous,
            Label::Anomalous => Label::Normal,
        }
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        label.as_u8()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0 => Ok(Label::Normal),
            1 => Ok(Label::Anomalous),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Where a sample's raw bytes live: a file on disk or an inline payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Path(PathBuf),
    Inline(#[serde(with = "base64_bytes")] Vec<u8>),
}

/// One evaluable item: raw source of any modality, the category it belongs
/// to, and an optional ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySample {
    pub id: String,
    pub modality: Modality,
    pub source: SampleSource,
    pub category: String,
    pub ground_truth: Option<Label>,
}

/// Transform parameters recorded alongside every canonical image. The variant
/// identifies the originating modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Decoded raster input, possibly downscaled.
    Raster { original_width: u32, original_height: u32 },
    /// Orthographic depth render of a point cloud.
    DepthRender {
        bbox_min: [f64; 3],
        bbox_max: [f64; 3],
        resolution: u32,
        /// Depth polarity: the nearest surface (minimum z) renders as 255.
        near_is_bright: bool,
    },
    /// Polyline chart render of a time series.
    Chart { t_range: (f64, f64), v_range: (f64, f64) },
    /// Row-major grid of video frames.
    Tiling { frames: usize, columns: u32 },
}

impl Provenance {
    /// Originating modality tag for this image.
    pub fn modality(&self) -> Modality {
        match self {
            Provenance::Raster { .. } => Modality::RgbImage,
            Provenance::DepthRender { .. } => Modality::PointCloud,
            Provenance::Chart { .. } => Modality::TimeSeries,
            Provenance::Tiling { .. } => Modality::VideoFrames,
        }
    }
}

/// The unified 2D representation all modalities reduce to: a row-major RGB
/// grid, 8 bits per channel, plus a provenance record.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalImage {
    pub width: u32,
    pub height: u32,
    #[serde(with = "base64_bytes")]
    pub pixels: Vec<u8>,
    pub provenance: Provenance,
}

impl CanonicalImage {
    /// Wraps a pixel buffer. Panics if the dimensions are zero or the buffer
    /// length is not `width * height * 3`.
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>, provenance: Provenance) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        assert_eq!(
            pixels.len(),
            width as usize * height as usize * 3,
            "pixel buffer length must be width * height * 3"
        );
        CanonicalImage { width, height, pixels, provenance }
    }

    /// RGB triple at (x, y). Panics out of bounds.
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub(crate) fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Mean over all channel bytes, in [0, 255]. Equals the mean gray
    /// intensity since every pixel contributes its three channels equally.
    pub fn mean_intensity(&self) -> f64 {
        let sum: u64 = self.pixels.iter().map(|&b| b as u64).sum();
        sum as f64 / self.pixels.len() as f64
    }

    /// Encodes the image as PNG for caching and wire transmission.
    pub fn to_png_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let img = image::RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("pixel buffer matches dimensions");
        image::DynamicImage::ImageRgb8(img)
            .write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png)
            .expect("png encoding of an in-memory image cannot fail");
        out
    }
}

impl fmt::Debug for CanonicalImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CanonicalImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("pixels", &format_args!("[{} bytes]", self.pixels.len()))
            .field("provenance", &self.provenance)
            .finish()
    }
}

/// Which stage of the response-parsing cascade produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsePath {
    Structured,
    FallbackKeyword,
    FallbackDigit,
}

/// Binary detection verdict plus the reasoning text, the derived score, and
/// the untouched backend output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub label: Label,
    pub reasoning: String,
    pub score: f64,
    pub raw_response: String,
    pub parse_path: ParsePath,
}

impl DetectionResult {
    /// Builds a result whose score is derived from the label (score = label).
    pub fn from_label(label: Label, reasoning: String, raw_response: String, parse_path: ParsePath) -> Self {
        DetectionResult { label, reasoning, score: label.as_f64(), raw_response, parse_path }
    }

    /// Builds a result with an averaged score in [0, 1]. Panics if the score
    /// is out of range.
    pub fn with_score(mut self, score: f64) -> Self {
        assert!((0.0..=1.0).contains(&score) && score.is_finite(), "score must lie in [0, 1]");
        self.score = score;
        self
    }
}

/// One line of the run log: a sample, the strategy and backend that judged
/// it, the prediction, and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sample_id: String,
    pub category: String,
    pub strategy_id: String,
    pub backend_id: String,
    pub prediction: DetectionResult,
    pub ground_truth: Label,
    pub latency_ms: f64,
    pub cached: bool,
}

impl EvalRecord {
    /// Panics if `latency_ms` is negative or is zero for a non-cached record.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sample_id: String,
        category: String,
        strategy_id: String,
        backend_id: String,
        prediction: DetectionResult,
        ground_truth: Label,
        latency_ms: f64,
        cached: bool,
    ) -> Self {
        assert!(latency_ms >= 0.0 && latency_ms.is_finite(), "latency must be a finite non-negative value");
        assert!(latency_ms > 0.0 || cached, "zero latency is only legal for cached records");
        EvalRecord {
            sample_id,
            category,
            strategy_id,
            backend_id,
            prediction,
            ground_truth,
            latency_ms,
            cached,
        }
    }
}

/// Serde adapter storing `Vec<u8>` as standard base64 text.
pub(crate) mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(de)?;
        STANDARD.decode(text.as_bytes()).map_err(serde::de::Error::custom)
    }
}
