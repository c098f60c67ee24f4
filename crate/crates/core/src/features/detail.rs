//! Detail window: the centered sub-window holding interior lines.

use crate::render::{skeletonize, LineImage};

/// Side scale of the window relative to the ink bounding box, giving 2/3 of
/// its area.
pub fn window_scale() -> f64 {
    (2.0f64 / 3.0).sqrt()
}

/// Window `(x, y, w, h)` in pixel coordinates centered on the ink bounding
/// box, `None` for a blank image.
pub fn detail_window(img: &LineImage) -> Option<(f64, f64, f64, f64)> {
    let b = img.ink_bounds()?;
    let (w, h) = (b.width() as f64, b.height() as f64);
    let (cx, cy) = (b.x0 as f64 + w / 2.0, b.y0 as f64 + h / 2.0);
    let s = window_scale();
    let (ww, wh) = (w * s, h * s);
    Some((cx - ww / 2.0, cy - wh / 2.0, ww, wh))
}

/// Crops the detail window and rescales it, aspect preserved, to fill the
/// same image size with the usual margin, then thins the result.
pub fn detail_crop(img: &LineImage) -> LineImage {
    let Some((x, y, w, h)) = detail_window(img) else {
        return LineImage::blank(img.width, img.height);
    };
    let mut inside = LineImage::blank(img.width, img.height);
    for (px, py) in img.ink_pixels() {
        let (fx, fy) = (px as f64 + 0.5, py as f64 + 0.5);
        if fx >= x && fx < x + w && fy >= y && fy < y + h {
            inside.set(px, py, true);
        }
    }
    let side = w.max(h) / (1.0 - 2.0 * crate::render::raster::MARGIN);
    let (sx, sy) = (x + w / 2.0 - side / 2.0, y + h / 2.0 - side / 2.0);
    let mut out = skeletonize(&inside.resample((sx, sy, side, side), img.width, img.height));
    out.view = img.view;
    out.part = img.part.clone();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_ink_window_is_scaled_by_root_two_thirds() {
        let mut img = LineImage::blank(300, 300);
        for i in 0..300 {
            img.set(i, 0, true);
            img.set(i, 299, true);
        }
        let (x, y, w, h) = detail_window(&img).unwrap();
        assert!((w / 300.0 - 0.816_496_58).abs() < 1e-6 && (h / 300.0 - 0.816_496_58).abs() < 1e-6);
        assert!((x + w / 2.0 - 150.0).abs() < 1e-9 && (y + h / 2.0 - 150.0).abs() < 1e-9);
    }

    #[test]
    fn centered_dot_survives() {
        let mut img = LineImage::blank(320, 320);
        img.set(160, 160, true);
        let out = detail_crop(&img);
        assert_eq!(out.ink_count(), 1);
    }

    #[test]
    fn frame_is_dropped_and_slats_are_kept() {
        // Outer frame 2 px thick around [20, 300), four vertical slats inside.
        let mut img = LineImage::blank(320, 320);
        let mut frame = Vec::new();
        let mut slats = Vec::new();
        for i in 20..300 {
            for t in 0..2 {
                frame.extend([(i, 20 + t), (i, 298 + t), (20 + t, i), (298 + t, i)]);
            }
        }
        for k in 0..4 {
            let x = 110 + k * 33;
            for y in 80..240 {
                slats.push((x, y));
            }
        }
        for &(x, y) in frame.iter().chain(&slats) {
            img.set(x, y, true);
        }
        let (x, y, w, h) = detail_window(&img).unwrap();
        let inside = |&(px, py): &(usize, usize)| {
            let (fx, fy) = (px as f64 + 0.5, py as f64 + 0.5);
            fx >= x && fx < x + w && fy >= y && fy < y + h
        };
        let kept_slats = slats.iter().filter(|p| inside(p)).count() as f64 / slats.len() as f64;
        let kept_frame = frame.iter().filter(|p| inside(p)).count() as f64 / frame.len() as f64;
        assert!(kept_slats >= 0.9, "{kept_slats}");
        assert!(kept_frame <= 0.2, "{kept_frame}");
        assert!(!detail_crop(&img).is_blank());
    }
}
