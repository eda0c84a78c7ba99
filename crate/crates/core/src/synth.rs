//! Synthetic dataset generators for demos, tests, and benches.
//!
//! The mock backend decides labels from mean intensity, so trees built from
//! uniform-shade images have analytically predetermined verdicts: a uniform
//! PNG's mean intensity is exactly its shade, and canonicalization never
//! rescales these small images.

use std::path::Path;

/// Tree and threshold constants for the 12-image mock benchmark set.
/// With `MOCK_TAU = 10` and the reference at shade 128, the reference
/// strategy gets 4/6 good and 5/6 defect images right (ACC 9/12), while the
/// naive strategy answers 0 everywhere (ACC 6/12).
pub const MOCK_CATEGORY: &str = "bottle";
pub const MOCK_TAU: f64 = 10.0;
pub const MOCK_REFERENCE_SHADE: u8 = 128;
pub const MOCK_GOOD_SHADES: [u8; 6] = [128, 132, 134, 137, 150, 100];
pub const MOCK_DEFECT_SHADES: [u8; 6] = [160, 90, 200, 60, 145, 135];

/// Shades for the 30-sample replay tree (15 normal, 15 anomalous).
pub const REPLAY_CATEGORY: &str = "bottle";
pub const REPLAY_GOOD_SHADES: [u8; 15] =
    [100, 102, 104, 106, 108, 110, 112, 114, 116, 118, 120, 122, 124, 126, 128];
pub const REPLAY_DEFECT_SHADES: [u8; 15] =
    [140, 142, 144, 146, 148, 150, 152, 154, 156, 158, 160, 162, 164, 166, 168];

/// PNG bytes of a uniform gray image.
pub fn uniform_png_bytes(width: u32, height: u32, shade: u8) -> Vec<u8> {
    let img = image::RgbImage::from_pixel(width, height, image::Rgb([shade; 3]));
    let mut out = Vec::new();
    image::DynamicImage::ImageRgb8(img)
        .write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png)
        .expect("png encoding of an in-memory image cannot fail");
    out
}

pub fn write_uniform_png(path: &Path, width: u32, height: u32, shade: u8) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, uniform_png_bytes(width, height, shade))
}

/// Writes the 12-image mock benchmark tree under `root`:
/// `bottle/train/good/000.png` (the reference) plus six `test/good` and six
/// `test/dent` images with the shades above.
pub fn write_mock_benchmark_tree(root: &Path) -> std::io::Result<()> {
    let category = root.join(MOCK_CATEGORY);
    write_uniform_png(&category.join("train/good/000.png"), 48, 48, MOCK_REFERENCE_SHADE)?;
    for (i, shade) in MOCK_GOOD_SHADES.iter().enumerate() {
        write_uniform_png(&category.join(format!("test/good/{i:03}.png")), 48, 48, *shade)?;
    }
    for (i, shade) in MOCK_DEFECT_SHADES.iter().enumerate() {
        write_uniform_png(&category.join(format!("test/dent/{i:03}.png")), 48, 48, *shade)?;
    }
    Ok(())
}

/// Writes the 30-sample replay tree under `root`: one reference plus fifteen
/// `test/good` and fifteen `test/broken` images. Content is fixed so request
/// digests stay stable across machines and runs.
pub fn write_replay_tree(root: &Path) -> std::io::Result<()> {
    let category = root.join(REPLAY_CATEGORY);
    write_uniform_png(&category.join("train/good/000.png"), 32, 32, MOCK_REFERENCE_SHADE)?;
    for (i, shade) in REPLAY_GOOD_SHADES.iter().enumerate() {
        write_uniform_png(&category.join(format!("test/good/{i:03}.png")), 32, 32, *shade)?;
    }
    for (i, shade) in REPLAY_DEFECT_SHADES.iter().enumerate() {
        write_uniform_png(&category.join(format!("test/broken/{i:03}.png")), 32, 32, *shade)?;
    }
    Ok(())
}

/// Expected mock verdict for a uniform image of the given shade against the
/// mock reference shade and threshold.
pub fn expected_mock_verdict(shade: u8) -> u8 {
    let deviation = (shade as f64 - MOCK_REFERENCE_SHADE as f64).abs();
    u8::from(deviation > MOCK_TAU)
}
