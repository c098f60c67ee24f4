//! Per-category common view.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::views::ViewDirection;
use crate::geometry::OrientedBoundingBox;

/// Direction of smallest extent of the category's averaged box, taken from
/// the average of the extent tensors Σ e_i² a_i a_iᵀ. The sign is chosen so
/// the largest component is positive; callers use both orientations.
pub fn common_view(boxes: &[OrientedBoundingBox]) -> Option<ViewDirection> {
    if boxes.is_empty() {
        return None;
    }
    let mut t = Matrix3::zeros();
    for b in boxes {
        let e = b.extents();
        for i in 0..3 {
            t += b.axes[i] * b.axes[i].transpose() * (e[i] * e[i]);
        }
    }
    t /= boxes.len() as f64;
    let eig = SymmetricEigen::new(t);
    let k = (0..3)
        .min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
        .unwrap();
    let mut d: Vector3<f64> = eig.eigenvectors.column(k).into_owned();
    let m = (0..3)
        .max_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()))
        .unwrap();
    if d[m] < 0.0 {
        d = -d;
    }
    Some(ViewDirection::new(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_obb;
    use crate::geometry::mesh::primitives::cuboid;
    use nalgebra::{Point3, Rotation3};

    #[test]
    fn slabs_look_down_their_normal() {
        let seat = cuboid(Point3::new(-0.5, 0.4, -0.5), Point3::new(0.5, 0.5, 0.5));
        let thin = cuboid(Point3::new(-0.4, 0.0, -0.6), Point3::new(0.4, 0.05, 0.6));
        let v = common_view(&[compute_obb(&seat), compute_obb(&thin)]).unwrap();
        assert!((v.direction - Vector3::y()).norm() < 1e-9);
    }

    #[test]
    fn single_part_uses_its_shortest_axis() {
        let b = compute_obb(&cuboid(Point3::origin(), Point3::new(3.0, 1.0, 0.2)));
        let v = common_view(&[b.clone()]).unwrap();
        assert!(v.direction.dot(&b.axes[2]).abs() > 1.0 - 1e-9);
    }

    #[test]
    fn two_tilted_slabs_average_their_normals() {
        let slab = cuboid(Point3::new(-1.0, -1.0, -0.05), Point3::new(1.0, 1.0, 0.05));
        let rot = Rotation3::from_axis_angle(&Vector3::x_axis(), 5f64.to_radians());
        let tilted = slab.transformed(&rot.to_homogeneous());
        let v = common_view(&[compute_obb(&slab), compute_obb(&tilted)]).unwrap();
        let angle = v.direction.dot(&Vector3::z()).abs().acos().to_degrees();
        assert!((angle - 2.5).abs() < 1e-6, "{angle}");
    }
}
