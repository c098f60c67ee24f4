//! Reflective symmetry: global planes, inter-part pairs and self-symmetric
//! parts.

use nalgebra::{Matrix4, Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use super::obb::compute_obb;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionPlane {
    pub point: Point3<f64>,
    /// Unit normal.
    pub normal: Vector3<f64>,
}

impl ReflectionPlane {
    pub fn new(point: Point3<f64>, normal: Vector3<f64>) -> Self {
        ReflectionPlane {
            point,
            normal: normal.normalize(),
        }
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    pub fn reflect(&self, p: &Point3<f64>) -> Point3<f64> {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Homogeneous reflection matrix.
    pub fn matrix(&self) -> Matrix4<f64> {
        let n = self.normal;
        let d = n.dot(&self.point.coords);
        let mut m = Matrix4::identity();
        let lin = nalgebra::Matrix3::identity() - n * n.transpose() * 2.0;
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&lin);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&(n * (2.0 * d)));
        m
    }

    /// Image of the plane under an affine map.
    pub fn transformed(&self, m: &Matrix4<f64>) -> ReflectionPlane {
        let lin = m.fixed_view::<3, 3>(0, 0).into_owned();
        let normal = lin
            .try_inverse()
            .map(|inv| inv.transpose() * self.normal)
            .unwrap_or(self.normal);
        ReflectionPlane::new(m.transform_point(&self.point), normal)
    }

    /// Planes coincide when normals are parallel and points lie on both.
    pub fn coincides(&self, other: &ReflectionPlane, tol: f64) -> bool {
        self.normal.dot(&other.normal).abs() > 1.0 - 1e-6
            && other.signed_distance(&self.point).abs() <= tol
    }
}

/// Mean distance from reflected samples of `from` to the surface of `onto`.
pub fn reflection_distance(
    plane: &ReflectionPlane,
    from_samples: &[Point3<f64>],
    onto: &TriangleMesh,
) -> f64 {
    if from_samples.is_empty() {
        return f64::INFINITY;
    }
    from_samples
        .iter()
        .map(|p| onto.distance_to(&plane.reflect(p)))
        .sum::<f64>()
        / from_samples.len() as f64
}

/// Result of a successful global symmetry search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryMatch {
    pub plane: ReflectionPlane,
    pub distance: f64,
}

/// Tries the three planes through the OBB center normal to the OBB axes and
/// keeps the best one if its reflection distance is below `tau`.
pub fn detect_global_symmetry(
    mesh: &TriangleMesh,
    tau: f64,
    samples: usize,
    seed: u64,
) -> Option<SymmetryMatch> {
    let obb = compute_obb(mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = mesh.sample_surface(samples, &mut rng);
    obb.axes
        .iter()
        .map(|axis| {
            let plane = ReflectionPlane::new(obb.center, *axis);
            SymmetryMatch {
                plane,
                distance: reflection_distance(&plane, &pts, mesh),
            }
        })
        .filter(|m| m.distance < tau)
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
}

/// Inter-part symmetry analysis for one model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartSymmetry {
    /// Index pairs `(a, b)` with `a < b`.
    pub pairs: Vec<(usize, usize)>,
    /// Parts mapped onto themselves by the global plane.
    pub self_symmetric: Vec<bool>,
}

/// Matches parts whose reflection across `plane` lands on another part (a
/// pair) or on themselves (self-symmetric).
pub fn detect_inter_part_symmetry(
    parts: &[&TriangleMesh],
    plane: &ReflectionPlane,
    tau: f64,
    samples: usize,
    seed: u64,
) -> PartSymmetry {
    let sampled: Vec<Vec<Point3<f64>>> = parts
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            m.sample_surface(samples, &mut rng)
        })
        .collect();
    let n = parts.len();
    let self_symmetric: Vec<bool> = (0..n)
        .map(|i| reflection_distance(plane, &sampled[i], parts[i]) < tau)
        .collect();

    let mut candidates = Vec::new();
    for a in 0..n {
        if self_symmetric[a] {
            continue;
        }
        for b in (a + 1)..n {
            if self_symmetric[b] {
                continue;
            }
            // Cheap rejection: reflected centroid far from b's bounds.
            let ca = parts[a].aabb().center();
            if !parts[b]
                .aabb()
                .expanded(2.0 * tau + parts[a].diagonal())
                .contains(&plane.reflect(&ca))
            {
                continue;
            }
            let dab = reflection_distance(plane, &sampled[a], parts[b]);
            if dab >= tau {
                continue;
            }
            let dba = reflection_distance(plane, &sampled[b], parts[a]);
            if dba < tau {
                candidates.push((dab.max(dba), a, b));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used = vec![false; n];
    let mut pairs = Vec::new();
    for (_, a, b) in candidates {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            pairs.push((a, b));
        }
    }
    pairs.sort();
    PartSymmetry {
        pairs,
        self_symmetric,
    }
}
