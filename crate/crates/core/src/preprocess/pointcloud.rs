//! Orthographic depth rendering of point clouds.

use super::PreprocessError;
use crate::types::{CanonicalImage, Provenance};

/// An unordered set of 3D points in arbitrary but consistent length units,
/// with optional per-point intensity in [0, 1]. Intensity is carried for
/// callers that need it; the depth render uses geometry only.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    intensity: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>, intensity: Option<Vec<f64>>) -> Result<Self, PreprocessError> {
        if points.is_empty() {
            return Err(PreprocessError::EmptyCloud);
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(PreprocessError::NonFiniteCoordinate(i));
            }
        }
        if let Some(ints) = &intensity {
            if ints.len() != points.len() {
                return Err(PreprocessError::InvalidParam(format!(
                    "intensity length {} does not match point count {}",
                    ints.len(),
                    points.len()
                )));
            }
            if let Some(i) = ints.iter().position(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
                return Err(PreprocessError::InvalidParam(format!(
                    "intensity at index {i} must lie in [0, 1]"
                )));
            }
        }
        Ok(PointCloud { points, intensity })
    }

    /// Parses ASCII XYZ text: one `x y z` (optionally `x y z intensity`)
    /// triple per line, whitespace-separated. Blank lines and `#` comment
    /// lines are skipped.
    pub fn from_ascii_xyz(text: &str) -> Result<Self, PreprocessError> {
        let mut points = Vec::new();
        let mut intensity = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 && fields.len() != 4 {
                return Err(PreprocessError::InvalidParam(format!(
                    "expected 3 or 4 fields per line, got {}: {line:?}",
                    fields.len()
                )));
            }
            let mut coords = [0.0f64; 3];
            for (slot, field) in coords.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| {
                    PreprocessError::InvalidParam(format!("bad coordinate {field:?}"))
                })?;
            }
            points.push(coords);
            if fields.len() == 4 {
                intensity.push(fields[3].parse().map_err(|_| {
                    PreprocessError::InvalidParam(format!("bad intensity {:?}", fields[3]))
                })?);
            }
        }
        let intensity = if intensity.is_empty() {
            None
        } else if intensity.len() == points.len() {
            Some(intensity)
        } else {
            return Err(PreprocessError::InvalidParam(
                "intensity column present on some lines but not all".to_string(),
            ));
        };
        PointCloud::new(points, intensity)
    }

    /// Parses packed little-endian `f32` triples.
    pub fn from_binary_le(bytes: &[u8]) -> Result<Self, PreprocessError> {
        if bytes.len() % 12 != 0 {
            return Err(PreprocessError::InvalidParam(format!(
                "binary cloud length {} is not a multiple of 12 bytes",
                bytes.len()
            )));
        }
        let points = bytes
            .chunks_exact(12)
            .map(|chunk| {
                let f = |i: usize| {
                    f32::from_le_bytes([chunk[i], chunk[i + 1], chunk[i + 2], chunk[i + 3]]) as f64
                };
                [f(0), f(4), f(8)]
            })
            .collect();
        PointCloud::new(points, None)
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn intensity(&self) -> Option<&[f64]> {
        self.intensity.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for axis in 0..3 {
                min[axis] = min[axis].min(p[axis]);
                max[axis] = max[axis].max(p[axis]);
            }
        }
        (min, max)
    }
}

/// Projects the cloud orthographically along +z onto the xy-plane and rasters
/// a depth image: x and y map linearly from the bounding box onto a
/// `resolution`-square grid (a zero-extent axis maps to the center
/// column/row), each covered pixel keeps the minimum z among its points, and
/// depth normalizes linearly so the nearest surface (z_min) renders 255 and
/// the farthest (z_max) renders 0. Uncovered pixels stay black. The single
/// gray channel replicates to RGB.
pub fn render_point_cloud(cloud: &PointCloud, resolution: u32) -> Result<CanonicalImage, PreprocessError> {
    if resolution == 0 {
        return Err(PreprocessError::InvalidParam("resolution must be >= 1".to_string()));
    }
    if cloud.is_empty() {
        return Err(PreprocessError::EmptyCloud);
    }
    let (min, max) = cloud.bounding_box();
    let res = resolution as usize;
    let last = (resolution - 1) as f64;

    let map_axis = |v: f64, lo: f64, hi: f64| -> u32 {
        if hi > lo {
            // linear map onto [0, res-1], rounded to the nearest cell
            (((v - lo) / (hi - lo) * last).round() as u32).min(resolution - 1)
        } else {
            resolution / 2
        }
    };

    let mut depth: Vec<Option<f64>> = vec![None; res * res];
    for p in cloud.points() {
        let col = map_axis(p[0], min[0], max[0]);
        // world y grows upward; image rows grow downward
        let row = resolution - 1 - map_axis(p[1], min[1], max[1]);
        let cell = &mut depth[row as usize * res + col as usize];
        *cell = Some(match cell {
            Some(existing) => existing.min(p[2]),
            None => p[2],
        });
    }

    let (z_min, z_max) = (min[2], max[2]);
    let z_extent = z_max - z_min;
    let mut pixels = vec![0u8; res * res * 3];
    for (i, cell) in depth.iter().enumerate() {
        if let Some(z) = cell {
            let value = if z_extent > 0.0 {
                ((z_max - z) / z_extent * 255.0).round() as u8
            } else {
                255
            };
            pixels[i * 3..i * 3 + 3].copy_from_slice(&[value; 3]);
        }
    }

    Ok(CanonicalImage::from_pixels(
        resolution,
        resolution,
        pixels,
        Provenance::DepthRender { bbox_min: min, bbox_max: max, resolution, near_is_bright: true },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_lights_the_grid_center() {
        let cloud = PointCloud::new(vec![[0.0, 0.0, 5.0]], None).unwrap();
        let img = render_point_cloud(&cloud, 64).unwrap();
        let mut lit = Vec::new();
        for y in 0..64 {
            for x in 0..64 {
                if img.pixel(x, y) != [0, 0, 0] {
                    lit.push((x, y, img.pixel(x, y)));
                }
            }
        }
        // degenerate bbox on x and y maps to the center column/row (res / 2)
        assert_eq!(lit, vec![(32, 31, [255, 255, 255])]);
    }

    #[test]
    fn two_point_diagonal_hits_opposite_corners() {
        // Hand-traced 2x2 raster: (0,0,0) -> column 0, bottom row, nearest
        // depth (255); (1,1,1) -> column 1, top row, farthest depth (0); the
        // remaining two corners stay black.
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]], None).unwrap();
        let img = render_point_cloud(&cloud, 2).unwrap();
        assert_eq!(img.pixel(0, 1), [255, 255, 255]);
        assert_eq!(img.pixel(1, 0), [0, 0, 0]);
        assert_eq!(img.pixel(0, 0), [0, 0, 0]);
        assert_eq!(img.pixel(1, 1), [0, 0, 0]);
    }

    #[test]
    fn constant_depth_plane_renders_near_white() {
        let mut points = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                points.push([i as f64, j as f64, 3.25]);
            }
        }
        let cloud = PointCloud::new(points, None).unwrap();
        let img = render_point_cloud(&cloud, 16).unwrap();
        let mut covered = 0;
        for y in 0..16 {
            for x in 0..16 {
                let px = img.pixel(x, y);
                if px != [0, 0, 0] {
                    assert_eq!(px, [255, 255, 255]);
                    covered += 1;
                }
            }
        }
        assert!(covered > 0);
    }

    #[test]
    fn z_shift_leaves_render_bit_identical() {
        let cloud = PointCloud::new(
            vec![[0.0, 0.0, 0.5], [2.0, 1.0, 1.5], [1.0, 2.0, -0.25]],
            None,
        )
        .unwrap();
        let shifted = PointCloud::new(
            cloud.points().iter().map(|p| [p[0], p[1], p[2] + 42.0]).collect(),
            None,
        )
        .unwrap();
        let a = render_point_cloud(&cloud, 32).unwrap();
        let b = render_point_cloud(&shifted, 32).unwrap();
        assert_eq!(a.pixels, b.pixels);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(PointCloud::new(vec![], None), Err(PreprocessError::EmptyCloud)));
        assert!(matches!(
            PointCloud::new(vec![[0.0, f64::NAN, 0.0]], None),
            Err(PreprocessError::NonFiniteCoordinate(0))
        ));
    }

    #[test]
    fn ascii_xyz_parses_comments_and_intensity() {
        let text = "# header\n0 0 0 0.5\n1.5 2 -3 1.0\n";
        let cloud = PointCloud::from_ascii_xyz(text).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.points()[1], [1.5, 2.0, -3.0]);
        assert_eq!(cloud.intensity().unwrap(), &[0.5, 1.0]);
    }

    #[test]
    fn binary_triples_round_trip() {
        let mut bytes = Vec::new();
        for v in [0.0f32, 1.0, 2.0, -3.5, 4.25, 5.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let cloud = PointCloud::from_binary_le(&bytes).unwrap();
        assert_eq!(cloud.points(), &[[0.0, 1.0, 2.0], [-3.5, 4.25, 5.0]]);
        assert!(PointCloud::from_binary_le(&bytes[..7]).is_err());
    }
}
