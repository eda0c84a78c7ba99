//! Unified preprocessing: every input modality reduces to a [`CanonicalImage`].
//!
//! Raster inputs are decoded and bounded, point clouds become orthographic
//! depth renders, time series become polyline charts, and video frames tile
//! into a grid. All renderers are deterministic: identical inputs produce
//! bit-identical images.

mod chart;
mod pointcloud;
mod tile;

pub use chart::{render_time_series, ChartSpec, TimeSeries};
pub use pointcloud::{render_point_cloud, PointCloud};
pub use tile::tile_video_frames;

use std::path::Path;

use thiserror::Error;

use crate::types::{CanonicalImage, Modality, Provenance};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("failed to decode raster input: {0}")]
    DecodeFailed(String),
    #[error("unsupported raster container: {0}")]
    UnsupportedFormat(String),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point cloud contains a non-finite coordinate at index {0}")]
    NonFiniteCoordinate(usize),
    #[error("time series needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("time series contains a non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("time stamps must be strictly increasing (violated at index {0})")]
    NonMonotonicTime(usize),
    #[error("frames have mixed dimensions: {0}x{1} vs {2}x{3}")]
    MixedFrameSizes(u32, u32, u32, u32),
    #[error("frame list is empty")]
    EmptyFrameList,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Decodes an encoded raster file and bounds its longest side to `max_dim`
/// pixels, preserving aspect ratio. Downscale only; images already within the
/// bound pass through unscaled. The scaled short side is floored (and clamped
/// to at least 1 pixel).
pub fn canonicalize_image(bytes: &[u8], max_dim: u32) -> Result<CanonicalImage, PreprocessError> {
    if max_dim < 64 {
        return Err(PreprocessError::InvalidParam(format!("max_dim must be >= 64, got {max_dim}")));
    }
    let decoded = image::load_from_memory(bytes).map_err(|e| match e {
        image::ImageError::Unsupported(u) => PreprocessError::UnsupportedFormat(u.to_string()),
        other => PreprocessError::DecodeFailed(other.to_string()),
    })?;
    let rgb = decoded.to_rgb8();
    let (ow, oh) = (rgb.width(), rgb.height());
    let longest = ow.max(oh);
    let rgb = if longest > max_dim {
        let (nw, nh) = if ow >= oh {
            (max_dim, ((oh as u64 * max_dim as u64) / ow as u64).max(1) as u32)
        } else {
            (((ow as u64 * max_dim as u64) / oh as u64).max(1) as u32, max_dim)
        };
        image::imageops::resize(&rgb, nw, nh, image::imageops::FilterType::Triangle)
    } else {
        rgb
    };
    let (w, h) = (rgb.width(), rgb.height());
    Ok(CanonicalImage::from_pixels(
        w,
        h,
        rgb.into_raw(),
        Provenance::Raster { original_width: ow, original_height: oh },
    ))
}

/// Rendering parameters shared by the modality dispatch below.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessParams {
    /// Longest-side bound for raster inputs.
    pub max_dim: u32,
    /// Grid size for point-cloud depth renders.
    pub resolution: u32,
    pub chart: ChartSpec,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        PreprocessParams { max_dim: 512, resolution: 256, chart: ChartSpec::default() }
    }
}

/// Infers the modality of a dataset file from its extension. Directories are
/// treated as frame sequences.
pub fn modality_for_path(path: &Path) -> Option<Modality> {
    if path.is_dir() {
        return Some(Modality::VideoFrames);
    }
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "png" | "jpg" | "jpeg" | "bmp" | "tif" | "tiff" => Some(Modality::RgbImage),
        "xyz" | "xyzb" => Some(Modality::PointCloud),
        "csv" => Some(Modality::TimeSeries),
        _ => None,
    }
}

/// Reads and converts one source file (or frame directory) into a canonical
/// image, dispatching on the inferred modality.
pub fn preprocess_path(path: &Path, params: &PreprocessParams) -> Result<CanonicalImage, PreprocessError> {
    let modality = modality_for_path(path).ok_or_else(|| {
        PreprocessError::UnsupportedFormat(path.display().to_string())
    })?;
    match modality {
        Modality::RgbImage => {
            let bytes = read_file(path)?;
            canonicalize_image(&bytes, params.max_dim)
        }
        Modality::PointCloud => {
            let bytes = read_file(path)?;
            let cloud = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xyzb")) {
                PointCloud::from_binary_le(&bytes)?
            } else {
                PointCloud::from_ascii_xyz(std::str::from_utf8(&bytes).map_err(|e| {
                    PreprocessError::DecodeFailed(format!("{}: {e}", path.display()))
                })?)?
            };
            render_point_cloud(&cloud, params.resolution)
        }
        Modality::TimeSeries => {
            let bytes = read_file(path)?;
            let series = TimeSeries::from_csv(&bytes)?;
            render_time_series(&series, &params.chart)
        }
        Modality::VideoFrames => preprocess_frame_dir(path, params),
    }
}

/// Loads every raster file in `dir` (sorted by file name), canonicalizes each
/// frame, and tiles them into a near-square grid.
pub fn preprocess_frame_dir(dir: &Path, params: &PreprocessParams) -> Result<CanonicalImage, PreprocessError> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| PreprocessError::Io { path: dir.display().to_string(), source: e })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && modality_for_path(p) == Some(Modality::RgbImage))
        .collect();
    names.sort();
    let mut frames = Vec::with_capacity(names.len());
    for path in &names {
        let bytes = read_file(path)?;
        frames.push(canonicalize_image(&bytes, params.max_dim)?);
    }
    let columns = (frames.len() as f64).sqrt().ceil() as u32;
    tile_video_frames(&frames, columns.max(1))
}

fn read_file(path: &Path) -> Result<Vec<u8>, PreprocessError> {
    std::fs::read(path).map_err(|e| PreprocessError::Io { path: path.display().to_string(), source: e })
}
