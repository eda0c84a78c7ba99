//! Row-major tiling of video frames into a single canonical image.

use super::PreprocessError;
use crate::types::{CanonicalImage, Provenance};

/// Arranges equally-sized frames left-to-right, top-to-bottom into a grid
/// with the given column count. The last row may be partial; unused cells
/// stay black. Output is `columns * frame_width` by
/// `ceil(n / columns) * frame_height` pixels.
pub fn tile_video_frames(frames: &[CanonicalImage], columns: u32) -> Result<CanonicalImage, PreprocessError> {
    if frames.is_empty() {
        return Err(PreprocessError::EmptyFrameList);
    }
    if columns == 0 {
        return Err(PreprocessError::InvalidParam("columns must be >= 1".to_string()));
    }
    let (fw, fh) = (frames[0].width, frames[0].height);
    for frame in &frames[1..] {
        if frame.width != fw || frame.height != fh {
            return Err(PreprocessError::MixedFrameSizes(fw, fh, frame.width, frame.height));
        }
    }
    let rows = (frames.len() as u32).div_ceil(columns);
    let width = columns * fw;
    let height = rows * fh;
    let mut pixels = vec![0u8; width as usize * height as usize * 3];
    for (k, frame) in frames.iter().enumerate() {
        let cell_x = (k as u32 % columns) * fw;
        let cell_y = (k as u32 / columns) * fh;
        for y in 0..fh {
            let src = (y as usize * fw as usize) * 3;
            let dst = ((cell_y + y) as usize * width as usize + cell_x as usize) * 3;
            pixels[dst..dst + fw as usize * 3]
                .copy_from_slice(&frame.pixels[src..src + fw as usize * 3]);
        }
    }
    Ok(CanonicalImage::from_pixels(
        width,
        height,
        pixels,
        Provenance::Tiling { frames: frames.len(), columns },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Modality;

    fn frame(w: u32, h: u32, shade: u8) -> CanonicalImage {
        CanonicalImage::from_pixels(
            w,
            h,
            vec![shade; (w * h * 3) as usize],
            Provenance::Raster { original_width: w, original_height: h },
        )
    }

    #[test]
    fn single_frame_identity() {
        let f = frame(16, 16, 77);
        let tiled = tile_video_frames(&[f.clone()], 1).unwrap();
        assert_eq!(tiled.pixels, f.pixels);
        assert_eq!((tiled.width, tiled.height), (16, 16));
        assert_eq!(tiled.provenance.modality(), Modality::VideoFrames);
    }

    #[test]
    fn four_frames_two_columns() {
        let frames: Vec<_> = (0..4).map(|k| frame(64, 64, (k * 60) as u8)).collect();
        let tiled = tile_video_frames(&frames, 2).unwrap();
        assert_eq!((tiled.width, tiled.height), (128, 128));
        // frame k lands at cell (k mod 2, k div 2)
        for (k, shade) in [(0u32, 0u8), (1, 60), (2, 120), (3, 180)] {
            let x = (k % 2) * 64 + 10;
            let y = (k / 2) * 64 + 10;
            assert_eq!(tiled.pixel(x, y), [shade; 3], "frame {k}");
        }
    }

    #[test]
    fn partial_last_row_pads_black() {
        let frames: Vec<_> = (0..5).map(|_| frame(64, 64, 200)).collect();
        let tiled = tile_video_frames(&frames, 3).unwrap();
        assert_eq!((tiled.width, tiled.height), (192, 128));
        // bottom-right cell (column 2, row 1) is entirely black
        for y in 64..128 {
            for x in 128..192 {
                assert_eq!(tiled.pixel(x, y), [0, 0, 0], "({x},{y})");
            }
        }
        // bottom-middle cell holds frame 4
        assert_eq!(tiled.pixel(64 + 5, 64 + 5), [200; 3]);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(tile_video_frames(&[], 2), Err(PreprocessError::EmptyFrameList)));
        let mixed = [frame(8, 8, 0), frame(8, 9, 0)];
        assert!(matches!(
            tile_video_frames(&mixed, 2),
            Err(PreprocessError::MixedFrameSizes(8, 8, 8, 9))
        ));
    }
}
