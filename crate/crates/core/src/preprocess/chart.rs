//! Polyline chart rendering for time-series inputs.
//!
//! Self-contained rasterization: a background canvas, left/bottom axis
//! lines, and Bresenham segments between consecutive samples. No tick labels
//! or numerals.

use super::PreprocessError;
use crate::types::{CanonicalImage, Provenance};

/// A sequence of (t, v) samples with strictly increasing t.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<(f64, f64)>,
    pub t_label: Option<String>,
    pub v_label: Option<String>,
}

impl TimeSeries {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, PreprocessError> {
        if samples.len() < 2 {
            return Err(PreprocessError::TooFewSamples(samples.len()));
        }
        for (i, (t, v)) in samples.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(PreprocessError::NonFiniteValue(i));
            }
            if i > 0 && *t <= samples[i - 1].0 {
                return Err(PreprocessError::NonMonotonicTime(i));
            }
        }
        Ok(TimeSeries { samples, t_label: None, v_label: None })
    }

    /// Parses CSV bytes with header `t,v`.
    pub fn from_csv(bytes: &[u8]) -> Result<Self, PreprocessError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = reader
            .headers()
            .map_err(|e| PreprocessError::InvalidParam(format!("bad csv header: {e}")))?
            .clone();
        if headers.len() < 2 || headers[0].to_ascii_lowercase() != "t" || headers[1].to_ascii_lowercase() != "v"
        {
            return Err(PreprocessError::InvalidParam(format!(
                "time-series csv must start with header t,v (got {headers:?})"
            )));
        }
        let mut samples = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| PreprocessError::InvalidParam(format!("bad csv row {i}: {e}")))?;
            let parse = |field: &str| -> Result<f64, PreprocessError> {
                field
                    .parse()
                    .map_err(|_| PreprocessError::InvalidParam(format!("bad csv value {field:?} in row {i}")))
            };
            samples.push((parse(&row[0])?, parse(&row[1])?));
        }
        TimeSeries::new(samples)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    pub fn v_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, v) in &self.samples {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }
}

/// Canvas geometry and colors for chart rendering.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChartSpec {
    pub canvas_width: u32,
    pub canvas_height: u32,
    /// Margin in pixels on each of the four sides.
    pub margin: u32,
    pub line_color: [u8; 3],
    pub background_color: [u8; 3],
    pub axis_color: [u8; 3],
}

impl Default for ChartSpec {
    fn default() -> Self {
        ChartSpec {
            canvas_width: 512,
            canvas_height: 256,
            margin: 24,
            line_color: [31, 119, 180],
            background_color: [255, 255, 255],
            axis_color: [0, 0, 0],
        }
    }
}

impl ChartSpec {
    /// Plot-area width and height (canvas minus margins). Errors unless the
    /// plot area is at least 16x16 pixels.
    pub fn plot_area(&self) -> Result<(u32, u32), PreprocessError> {
        let w = self.canvas_width.checked_sub(2 * self.margin).unwrap_or(0);
        let h = self.canvas_height.checked_sub(2 * self.margin).unwrap_or(0);
        if w < 16 || h < 16 {
            return Err(PreprocessError::InvalidParam(format!(
                "plot area must be at least 16x16 pixels, got {w}x{h}"
            )));
        }
        Ok((w, h))
    }
}

/// Renders the series onto a fresh canvas: t spans the plot area left to
/// right, v bottom to top (a constant series centers vertically), consecutive
/// samples connect with 1-pixel line segments, and the left and bottom plot
/// edges are drawn in the axis color underneath the data.
pub fn render_time_series(series: &TimeSeries, spec: &ChartSpec) -> Result<CanonicalImage, PreprocessError> {
    let (plot_w, plot_h) = spec.plot_area()?;
    let (t_min, t_max) = series.t_range();
    let (v_min, v_max) = series.v_range();

    let mut pixels = Vec::with_capacity(spec.canvas_width as usize * spec.canvas_height as usize * 3);
    for _ in 0..spec.canvas_width as usize * spec.canvas_height as usize {
        pixels.extend_from_slice(&spec.background_color);
    }
    let mut img = CanonicalImage::from_pixels(
        spec.canvas_width,
        spec.canvas_height,
        pixels,
        Provenance::Chart { t_range: (t_min, t_max), v_range: (v_min, v_max) },
    );

    let left = spec.margin;
    let top = spec.margin;
    let bottom = spec.margin + plot_h - 1;
    let right = spec.margin + plot_w - 1;
    for y in top..=bottom {
        img.set_pixel(left, y, spec.axis_color);
    }
    for x in left..=right {
        img.set_pixel(x, bottom, spec.axis_color);
    }

    let map_t = |t: f64| -> u32 {
        // t_max > t_min by the strictly-increasing invariant
        left + ((t - t_min) / (t_max - t_min) * (plot_w - 1) as f64).round() as u32
    };
    let map_v = |v: f64| -> u32 {
        let frac = if v_max > v_min { (v - v_min) / (v_max - v_min) } else { 0.5 };
        bottom - (frac * (plot_h - 1) as f64).round() as u32
    };

    let mapped: Vec<(u32, u32)> = series.samples().iter().map(|&(t, v)| (map_t(t), map_v(v))).collect();
    for pair in mapped.windows(2) {
        draw_segment(&mut img, pair[0], pair[1], spec.line_color);
    }

    Ok(img)
}

/// Bresenham line between two pixel centers, endpoints included.
fn draw_segment(img: &mut CanonicalImage, from: (u32, u32), to: (u32, u32), color: [u8; 3]) {
    let (mut x0, mut y0) = (from.0 as i64, from.1 as i64);
    let (x1, y1) = (to.0 as i64, to.1 as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.set_pixel(x0 as u32, y0 as u32, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}
