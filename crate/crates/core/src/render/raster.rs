//! Orthographic line drawings: silhouettes and creases with hidden lines
//! removed.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use super::image::LineImage;
use super::views::ViewDirection;
use crate::geometry::TriangleMesh;

/// Fraction of the image side left empty around a fitted drawing.
pub const MARGIN: f64 = 0.05;
/// Pen width used for rasterizing lines before thinning.
pub const PEN_WIDTH: f64 = 2.0;
/// Sampling step along projected edges, in pixels.
const EDGE_STEP: f64 = 0.25;
/// Depth tolerance for the visibility test, in pixels.
const DEPTH_TOLERANCE_PX: f64 = 2.0;

/// Orthographic camera mapping model space onto a square image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub view: ViewDirection,
    /// Model-space image-plane coordinates (along right, up) of the image center.
    pub center: [f64; 2],
    /// Pixels per model unit.
    pub scale: f64,
    pub size: usize,
}

impl Frame {
    /// Fits the projected bounding square of `points` with a 5% margin on
    /// each side.
    pub fn fit<'a, I>(points: I, view: ViewDirection, size: usize) -> Frame
    where
        I: IntoIterator<Item = &'a Point3<f64>>,
    {
        let (r, u) = (view.right(), view.up);
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            let q = [p.coords.dot(&r), p.coords.dot(&u)];
            for k in 0..2 {
                lo[k] = lo[k].min(q[k]);
                hi[k] = hi[k].max(q[k]);
            }
        }
        if !lo[0].is_finite() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let side = if side > 0.0 { side } else { 1.0 };
        Frame {
            view,
            center: [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0],
            scale: size as f64 * (1.0 - 2.0 * MARGIN) / side,
            size,
        }
    }

    /// Pixel coordinates (x right, y down) and depth toward the camera in
    /// model units.
    pub fn project(&self, p: &Point3<f64>) -> [f64; 3] {
        let c = self.size as f64 / 2.0;
        let x = c + (p.coords.dot(&self.view.right()) - self.center[0]) * self.scale;
        let y = c - (p.coords.dot(&self.view.up) - self.center[1]) * self.scale;
        [x, y, p.coords.dot(&self.view.direction)]
    }

    /// Model-space point on the image plane (depth 0) under pixel `(x, y)`.
    pub fn unproject(&self, x: f64, y: f64) -> Point3<f64> {
        let c = self.size as f64 / 2.0;
        let a = (x - c) / self.scale + self.center[0];
        let b = (c - y) / self.scale + self.center[1];
        Point3::from(self.view.right() * a + self.view.up * b)
    }
}

/// A 2D segment in pixel coordinates.
pub type Segment = [[f64; 2]; 2];

/// Per-pixel maximum depth (closest to the camera) of all triangles.
pub struct DepthBuffer {
    size: usize,
    depth: Vec<f64>,
}

impl DepthBuffer {
    pub fn new(meshes: &[&TriangleMesh], frame: &Frame) -> DepthBuffer {
        let size = frame.size;
        let mut depth = vec![f64::NEG_INFINITY; size * size];
        for mesh in meshes {
            let proj: Vec<[f64; 3]> = mesh.vertices.iter().map(|v| frame.project(v)).collect();
            for t in &mesh.triangles {
                let [a, b, c] = t.map(|i| proj[i as usize]);
                raster_triangle(&mut depth, size, a, b, c);
            }
        }
        DepthBuffer { size, depth }
    }

    pub fn covered(&self, x: usize, y: usize) -> bool {
        self.depth[y * self.size + x].is_finite()
    }

    fn occluded(&self, x: f64, y: f64, z: f64, tolerance: f64) -> bool {
        let (ix, iy) = (x.floor() as isize, y.floor() as isize);
        let mut lowest = f64::INFINITY;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (px, py) = (ix + dx, iy + dy);
                let d = if px < 0 || py < 0 || px as usize >= self.size || py as usize >= self.size
                {
                    f64::NEG_INFINITY
                } else {
                    self.depth[py as usize * self.size + px as usize]
                };
                lowest = lowest.min(d);
            }
        }
        lowest > z + tolerance
    }
}

fn raster_triangle(depth: &mut [f64], size: usize, a: [f64; 3], b: [f64; 3], c: [f64; 3]) {
    let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    if area.abs() < 1e-12 {
        return;
    }
    let min_x = a[0].min(b[0]).min(c[0]).floor().max(0.0) as usize;
    let min_y = a[1].min(b[1]).min(c[1]).floor().max(0.0) as usize;
    let max_x = (a[0].max(b[0]).max(c[0]).ceil() as isize).min(size as isize - 1);
    let max_y = (a[1].max(b[1]).max(c[1]).ceil() as isize).min(size as isize - 1);
    if max_x < 0 || max_y < 0 {
        return;
    }
    for py in min_y..=max_y as usize {
        for px in min_x..=max_x as usize {
            let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
            let w0 = ((b[0] - x) * (c[1] - y) - (b[1] - y) * (c[0] - x)) / area;
            let w1 = ((c[0] - x) * (a[1] - y) - (c[1] - y) * (a[0] - x)) / area;
            let w2 = 1.0 - w0 - w1;
            if w0 < -1e-9 || w1 < -1e-9 || w2 < -1e-9 {
                continue;
            }
            let z = w0 * a[2] + w1 * b[2] + w2 * c[2];
            let slot = &mut depth[py * size + px];
            if z > *slot {
                *slot = z;
            }
        }
    }
}

/// Edges of `mesh` that a line drawing shows from `view`: silhouettes,
/// boundary edges, and creases sharper than `crease_deg` next to a
/// front-facing triangle.
pub fn feature_edges(mesh: &TriangleMesh, view: &ViewDirection, crease_deg: f64) -> Vec<[u32; 2]> {
    let mut faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            faces.entry((i.min(j), i.max(j))).or_default().push(t);
        }
    }
    let normals: Vec<Vector3<f64>> = (0..mesh.triangles.len())
        .map(|t| mesh.face_normal(t))
        .collect();
    let front: Vec<bool> = normals
        .iter()
        .map(|n| n.dot(&view.direction) > 1e-12)
        .collect();
    let cos_crease = crease_deg.to_radians().cos();
    let mut edges: Vec<[u32; 2]> = faces
        .into_iter()
        .filter(|(_, fs)| {
            if fs.len() == 1 {
                return true;
            }
            let any_front = fs.iter().any(|&f| front[f]);
            if !any_front {
                return false;
            }
            if fs.iter().any(|&f| !front[f]) {
                return true;
            }
            fs.iter().enumerate().any(|(i, &f)| {
                fs[i + 1..]
                    .iter()
                    .any(|&g| normals[f].dot(&normals[g]) < cos_crease)
            })
        })
        .map(|(k, _)| [k.0, k.1])
        .collect();
    edges.sort_unstable();
    edges
}

/// Visible pieces of the feature edges of each mesh in `meshes`, with all
/// meshes acting as occluders.
pub fn visible_segments(
    meshes: &[&TriangleMesh],
    frame: &Frame,
    crease_deg: f64,
) -> Vec<Vec<Segment>> {
    let depth = DepthBuffer::new(meshes, frame);
    let tolerance = DEPTH_TOLERANCE_PX / frame.scale;
    meshes
        .iter()
        .map(|mesh| {
            let proj: Vec<[f64; 3]> = mesh.vertices.iter().map(|v| frame.project(v)).collect();
            let mut out = Vec::new();
            for [i, j] in feature_edges(mesh, &frame.view, crease_deg) {
                let (a, b) = (proj[i as usize], proj[j as usize]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                let n = ((len / EDGE_STEP).ceil() as usize).max(1);
                let mut run: Option<([f64; 2], [f64; 2])> = None;
                for k in 0..=n {
                    let t = k as f64 / n as f64;
                    let p = [
                        a[0] + (b[0] - a[0]) * t,
                        a[1] + (b[1] - a[1]) * t,
                        a[2] + (b[2] - a[2]) * t,
                    ];
                    if depth.occluded(p[0], p[1], p[2], tolerance) {
                        if let Some((s, e)) = run.take() {
                            out.push([s, e]);
                        }
                    } else {
                        let q = [p[0], p[1]];
                        run = Some(match run {
                            Some((s, _)) => (s, q),
                            None => (q, q),
                        });
                    }
                }
                if let Some((s, e)) = run {
                    out.push([s, e]);
                }
            }
            out
        })
        .collect()
}

/// Stamps a square pen of width `pen` centered on `(x, y)`.
pub fn stamp(img: &mut LineImage, x: f64, y: f64, pen: f64) {
    let lo_x = (x - pen / 2.0 - 0.5).ceil().max(0.0) as usize;
    let lo_y = (y - pen / 2.0 - 0.5).ceil().max(0.0) as usize;
    let hi_x = (x + pen / 2.0 - 0.5).floor();
    let hi_y = (y + pen / 2.0 - 0.5).floor();
    if hi_x < 0.0 || hi_y < 0.0 {
        return;
    }
    let hi_x = (hi_x as usize).min(img.width.saturating_sub(1));
    let hi_y = (hi_y as usize).min(img.height.saturating_sub(1));
    for py in lo_y..=hi_y {
        for px in lo_x..=hi_x {
            img.set(px, py, true);
        }
    }
}

/// Rasterizes segments with the given pen width.
pub fn draw_segments(img: &mut LineImage, segments: &[Segment], pen: f64) {
    for &[a, b] in segments {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let n = ((len / EDGE_STEP).ceil() as usize).max(1);
        for k in 0..=n {
            let t = k as f64 / n as f64;
            stamp(img, a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, pen);
        }
    }
}

/// Line drawing of a mesh fit to a `size`×`size` image, before thinning.
pub fn render_line_drawing(
    mesh: &TriangleMesh,
    view: &ViewDirection,
    size: usize,
    crease_deg: f64,
) -> LineImage {
    let frame = Frame::fit(&mesh.vertices, *view, size);
    render_in_frame(&[mesh], &frame, crease_deg)
}

/// Line drawing of several meshes in a fixed frame, before thinning.
pub fn render_in_frame(meshes: &[&TriangleMesh], frame: &Frame, crease_deg: f64) -> LineImage {
    let mut img = LineImage::blank(frame.size, frame.size);
    for segs in visible_segments(meshes, frame, crease_deg) {
        draw_segments(&mut img, &segs, PEN_WIDTH);
    }
    img.view = Some(frame.view);
    img
}

/// Thinned line drawing, as stored for retrieval.
pub fn render_contour(
    mesh: &TriangleMesh,
    view: &ViewDirection,
    size: usize,
    crease_deg: f64,
) -> LineImage {
    let img = render_line_drawing(mesh, view, size, crease_deg);
    super::skeleton::skeletonize(&img)
}
