//! View sampling, line drawings, thinning and category views.

pub mod common_view;
pub mod image;
pub mod raster;
pub mod skeleton;
pub mod sketch;
pub mod views;

pub use common_view::common_view;
pub use image::{LineImage, PixelRect};
pub use raster::{
    render_contour, render_in_frame, render_line_drawing, visible_segments, Frame, Segment,
};
pub use skeleton::skeletonize;
pub use sketch::{normalize_image, normalize_strokes, stroke_bounds, Stroke};
pub use views::{nearest_view, sample_viewpoints, ViewDirection};
