//! Turning user input into a query image framed like the stored contours.

use serde::{Deserialize, Serialize};

use super::image::LineImage;
use super::raster::{draw_segments, stamp, MARGIN, PEN_WIDTH};
use super::skeleton::skeletonize;

/// One pen stroke: points in canvas pixels, x right, y down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub points: Vec<[f64; 2]>,
}

/// Bounds `(min, max)` of all stroke points.
pub fn stroke_bounds(strokes: &[Stroke]) -> Option<([f64; 2], [f64; 2])> {
    let mut it = strokes.iter().flat_map(|s| s.points.iter());
    let first = *it.next()?;
    Some(it.fold((first, first), |(lo, hi), p| {
        (
            [lo[0].min(p[0]), lo[1].min(p[1])],
            [hi[0].max(p[0]), hi[1].max(p[1])],
        )
    }))
}

/// Rasterizes strokes, scaled and centered like a fitted render, then thins.
/// Blank input gives a blank image.
pub fn normalize_strokes(strokes: &[Stroke], size: usize) -> LineImage {
    let mut img = LineImage::blank(size, size);
    let Some((lo, hi)) = stroke_bounds(strokes) else {
        return img;
    };
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if side > 0.0 {
        size as f64 * (1.0 - 2.0 * MARGIN) / side
    } else {
        1.0
    };
    let c = size as f64 / 2.0;
    let (cx, cy) = ((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0);
    let map = |p: &[f64; 2]| [c + (p[0] - cx) * scale, c + (p[1] - cy) * scale];
    for s in strokes {
        let pts: Vec<[f64; 2]> = s.points.iter().map(map).collect();
        if pts.len() == 1 {
            stamp(&mut img, pts[0][0], pts[0][1], PEN_WIDTH);
        }
        let segs: Vec<[[f64; 2]; 2]> = pts.windows(2).map(|w| [w[0], w[1]]).collect();
        draw_segments(&mut img, &segs, PEN_WIDTH);
    }
    skeletonize(&img)
}

/// Crops a raster sketch to its ink, rescales it into the fitted frame and
/// thins it.
pub fn normalize_image(img: &LineImage, size: usize) -> LineImage {
    let Some(b) = img.ink_bounds() else {
        return LineImage::blank(size, size);
    };
    let (w, h) = (b.width() as f64, b.height() as f64);
    let side = w.max(h) / (1.0 - 2.0 * MARGIN);
    let (cx, cy) = (b.x0 as f64 + w / 2.0, b.y0 as f64 + h / 2.0);
    let out = img.resample((cx - side / 2.0, cy - side / 2.0, side, side), size, size);
    skeletonize(&out)
}
