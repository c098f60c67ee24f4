//! Anisotropic fit of a part's projected box to a sketch box.

use log::warn;
use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::TriangleMesh;
use crate::render::ViewDirection;

/// Axis-aligned box in image-plane model coordinates (along the view's
/// right and up vectors).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl PlaneBox {
    pub fn of_points<'a, I: IntoIterator<Item = &'a Point3<f64>>>(
        points: I,
        view: &ViewDirection,
    ) -> Option<PlaneBox> {
        let (r, u) = (view.right(), view.up);
        let mut b: Option<PlaneBox> = None;
        for p in points {
            let q = [p.coords.dot(&r), p.coords.dot(&u)];
            b = Some(match b {
                None => PlaneBox { min: q, max: q },
                Some(b) => PlaneBox {
                    min: [b.min[0].min(q[0]), b.min[1].min(q[1])],
                    max: [b.max[0].max(q[0]), b.max[1].max(q[1])],
                },
            });
        }
        b
    }

    pub fn size(&self) -> [f64; 2] {
        [self.max[0] - self.min[0], self.max[1] - self.min[1]]
    }

    pub fn center(&self) -> [f64; 2] {
        [
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
        ]
    }

    pub fn iou(&self, other: &PlaneBox) -> f64 {
        let w = (self.max[0].min(other.max[0]) - self.min[0].max(other.min[0])).max(0.0);
        let h = (self.max[1].min(other.max[1]) - self.min[1].max(other.min[1])).max(0.0);
        let inter = w * h;
        let area = |b: &PlaneBox| b.size()[0] * b.size()[1];
        let union = area(self) + area(other) - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }
}

/// Scales `mesh` along the view's right and up axes so its projected box
/// matches `target`, scales depth by the geometric mean of the two, and
/// translates in the image plane only. A degenerate dimension borrows the
/// other dimension's scale; blank input gives the identity.
pub fn fit_to_sketch(
    mesh: &TriangleMesh,
    target: Option<&PlaneBox>,
    view: &ViewDirection,
) -> Matrix4<f64> {
    let Some(target) = target else {
        warn!("fit_to_sketch: blank strokes, keeping the part unchanged");
        return Matrix4::identity();
    };
    let Some(src) = PlaneBox::of_points(&mesh.vertices, view) else {
        return Matrix4::identity();
    };
    let (ss, ts) = (src.size(), target.size());
    let tiny = 1e-9 * mesh.diagonal().max(1e-12);
    let mut scale = [0.0; 2];
    for k in 0..2 {
        scale[k] = if ss[k] > tiny && ts[k] > tiny {
            ts[k] / ss[k]
        } else {
            f64::NAN
        };
    }
    match (scale[0].is_nan(), scale[1].is_nan()) {
        (true, true) => scale = [1.0, 1.0],
        (true, false) => scale[0] = scale[1],
        (false, true) => scale[1] = scale[0],
        _ => {}
    }
    let depth_scale = (scale[0] * scale[1]).sqrt();
    let (r, u, d) = (view.right(), view.up, view.direction);
    let basis = Matrix3::from_columns(&[r, u, d]);
    let diag = Matrix3::from_diagonal(&Vector3::new(scale[0], scale[1], depth_scale));
    let linear = basis * diag * basis.transpose();
    let aabb = mesh.aabb().center();
    let sc = src.center();
    let depth = aabb.coords.dot(&d);
    let pivot = r * sc[0] + u * sc[1] + d * depth;
    let tc = target.center();
    let dest = r * tc[0] + u * tc[1] + d * depth;
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&linear);
    let t = dest - linear * pivot;
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::primitives::cuboid;

    fn front() -> ViewDirection {
        ViewDirection::new(Vector3::z())
    }

    #[test]
    fn tracing_the_projection_is_identity() {
        let m = cuboid(Point3::new(0.1, 0.2, 0.3), Point3::new(0.7, 1.0, 0.5));
        let b = PlaneBox::of_points(&m.vertices, &front()).unwrap();
        let f = fit_to_sketch(&m, Some(&b), &front());
        assert!((f - Matrix4::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn twice_as_wide() {
        let m = cuboid(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        let v = front();
        let b = PlaneBox::of_points(&m.vertices, &v).unwrap();
        let c = b.center();
        let wide = PlaneBox {
            min: [c[0] - 1.0, b.min[1]],
            max: [c[0] + 1.0, b.max[1]],
        };
        let f = fit_to_sketch(&m, Some(&wide), &v);
        let lin = f.fixed_view::<3, 3>(0, 0);
        assert!((lin * v.right() - v.right() * 2.0).norm() < 1e-12);
        assert!((lin * v.up - v.up).norm() < 1e-12);
        assert!((lin * v.direction - v.direction * 2f64.sqrt()).norm() < 1e-12);
        let placed = m.transformed(&f);
        let pb = PlaneBox::of_points(&placed.vertices, &v).unwrap();
        assert!((pb.min[0] - wide.min[0]).abs() < 1e-12 && (pb.max[0] - wide.max[0]).abs() < 1e-12);
    }

    #[test]
    fn translation_stays_in_the_image_plane() {
        let m = cuboid(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 2.0, 3.0));
        let v = ViewDirection::new(Vector3::new(1.0, 0.5, 0.2));
        let b = PlaneBox::of_points(&m.vertices, &v).unwrap();
        let shifted = PlaneBox {
            min: [b.min[0] + 0.5, b.min[1]],
            max: [b.max[0] + 0.5, b.max[1]],
        };
        let f = fit_to_sketch(&m, Some(&shifted), &v);
        let t = Vector3::new(f[(0, 3)], f[(1, 3)], f[(2, 3)]);
        assert!((t.dot(&v.right()) - 0.5).abs() < 1e-12);
        assert!(t.dot(&v.direction).abs() < 1e-12 && t.dot(&v.up).abs() < 1e-12);
    }

    #[test]
    fn flat_sketch_borrows_the_other_scale() {
        let m = cuboid(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        let v = front();
        let line = PlaneBox {
            min: [0.0, 0.5],
            max: [3.0, 0.5],
        };
        let f = fit_to_sketch(&m, Some(&line), &v);
        assert!(f.fixed_view::<3, 3>(0, 0).determinant() > 0.0);
        assert!((f[(1, 1)] - 3.0).abs() < 1e-12);
        assert_eq!(fit_to_sketch(&m, None, &v), Matrix4::identity());
    }
}
