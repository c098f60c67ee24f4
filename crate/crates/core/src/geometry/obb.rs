//! Oriented bounding boxes from surface PCA, and the insertion ratios used by
//! context-aware placement.

use nalgebra::{Matrix3, Matrix4, Point3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;

/// Relative eigenvalue gap below which principal axes are treated as
/// undetermined and resolved by a search over candidate frames.
const DEGENERATE_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedBoundingBox {
    pub center: Point3<f64>,
    /// Orthonormal, right-handed, ordered by descending extent.
    pub axes: [Vector3<f64>; 3],
    pub half_extents: Vector3<f64>,
    /// Set when at least one extent was floored.
    pub degenerate: bool,
}

/// Per-axis penetration of one box into another, relative to the second
/// box's full extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionRatios {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl InsertionRatios {
    pub fn as_array(&self) -> [f64; 3] {
        [self.rx, self.ry, self.rz]
    }

    pub fn max_abs_diff(&self, other: &InsertionRatios) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl OrientedBoundingBox {
    pub fn extents(&self) -> Vector3<f64> {
        self.half_extents * 2.0
    }

    pub fn diagonal(&self) -> f64 {
        self.extents().norm()
    }

    /// Half-width of the box's projection onto unit direction `d`.
    pub fn support_radius(&self, d: &Vector3<f64>) -> f64 {
        (0..3)
            .map(|i| d.dot(&self.axes[i]).abs() * self.half_extents[i])
            .sum()
    }

    /// Projection interval of the box onto direction `d`.
    pub fn interval(&self, d: &Vector3<f64>) -> (f64, f64) {
        let c = self.center.coords.dot(d);
        let r = self.support_radius(d);
        (c - r, c + r)
    }

    /// Index of the axis with the smallest extent.
    pub fn shortest_axis(&self) -> usize {
        2
    }

    pub fn corners(&self) -> [Point3<f64>; 8] {
        let mut out = [self.center; 8];
        for (k, c) in out.iter_mut().enumerate() {
            for i in 0..3 {
                let s = if k >> i & 1 == 1 { 1.0 } else { -1.0 };
                *c += self.axes[i] * (s * self.half_extents[i]);
            }
        }
        out
    }

    pub fn translated(&self, t: &Vector3<f64>) -> OrientedBoundingBox {
        OrientedBoundingBox {
            center: self.center + t,
            ..self.clone()
        }
    }

    /// Image under a rigid motion (rotation + translation). The linear part
    /// must be orthonormal.
    pub fn rigid_transformed(&self, m: &Matrix4<f64>) -> OrientedBoundingBox {
        let r = m.fixed_view::<3, 3>(0, 0).into_owned();
        let mut axes = self.axes.map(|a| r * a);
        if r.determinant() < 0.0 {
            axes[2] = axes[0].cross(&axes[1]);
        }
        OrientedBoundingBox {
            center: m.transform_point(&self.center),
            axes,
            half_extents: self.half_extents,
            degenerate: self.degenerate,
        }
    }

    /// Coordinates of `p` in the box frame (origin at center).
    pub fn local(&self, p: &Point3<f64>) -> Vector3<f64> {
        let d = p - self.center;
        Vector3::new(
            d.dot(&self.axes[0]),
            d.dot(&self.axes[1]),
            d.dot(&self.axes[2]),
        )
    }

    pub fn contains(&self, p: &Point3<f64>, tol: f64) -> bool {
        let l = self.local(p);
        (0..3).all(|i| l[i].abs() <= self.half_extents[i] + tol)
    }
}

/// Exact area-weighted mean and covariance of the surface.
fn surface_moments(mesh: &TriangleMesh) -> Option<(Point3<f64>, Matrix3<f64>)> {
    let mut area = 0.0;
    let mut first = Vector3::zeros();
    let mut second = Matrix3::zeros();
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.corners(t);
        let at = mesh.triangle_area(t);
        if at <= 0.0 {
            continue;
        }
        let s = a.coords + b.coords + c.coords;
        area += at;
        first += s * (at / 3.0);
        second += (a.coords * a.coords.transpose()
            + b.coords * b.coords.transpose()
            + c.coords * c.coords.transpose()
            + s * s.transpose())
            * (at / 12.0);
    }
    if area <= 0.0 {
        return None;
    }
    let mean = first / area;
    Some((Point3::from(mean), second / area - mean * mean.transpose()))
}

fn vertex_moments(mesh: &TriangleMesh) -> (Point3<f64>, Matrix3<f64>) {
    let n = mesh.vertices.len().max(1) as f64;
    let mean = mesh
        .vertices
        .iter()
        .fold(Vector3::zeros(), |acc, v| acc + v.coords)
        / n;
    let cov = mesh.vertices.iter().fold(Matrix3::zeros(), |acc, v| {
        let d = v.coords - mean;
        acc + d * d.transpose()
    }) / n;
    (Point3::from(mean), cov)
}

/// Box of the vertices in a given orthonormal frame: (center, half extents).
fn fit_in_frame(mesh: &TriangleMesh, axes: &[Vector3<f64>; 3]) -> (Point3<f64>, Vector3<f64>) {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for v in &mesh.vertices {
        for i in 0..3 {
            let p = v.coords.dot(&axes[i]);
            lo[i] = lo[i].min(p);
            hi[i] = hi[i].max(p);
        }
    }
    let mid = (lo + hi) * 0.5;
    let center = axes[0] * mid[0] + axes[1] * mid[1] + axes[2] * mid[2];
    (Point3::from(center), (hi - lo) * 0.5)
}

fn frame_cost(mesh: &TriangleMesh, axes: &[Vector3<f64>; 3]) -> f64 {
    let (_, h) = fit_in_frame(mesh, axes);
    // Surface area of the box; unlike volume it stays informative for flat parts.
    h.x * h.y + h.y * h.z + h.z * h.x
}

fn unique_face_normals(mesh: &TriangleMesh, cap: usize) -> Vec<Vector3<f64>> {
    let mut out: Vec<Vector3<f64>> = Vec::new();
    for t in 0..mesh.triangles.len() {
        let n = mesh.face_normal_raw(t);
        let len = n.norm();
        if len <= 0.0 {
            continue;
        }
        let n = n / len;
        if out.iter().all(|m| m.dot(&n).abs() < 1.0 - 1e-9) {
            out.push(n);
            if out.len() >= cap {
                break;
            }
        }
    }
    out
}

fn complete_frame(a: Vector3<f64>, b: Vector3<f64>) -> [Vector3<f64>; 3] {
    let a = a.normalize();
    let b = (b - a * a.dot(&b)).normalize();
    [a, b, a.cross(&b)]
}

/// Search over rotations inside a degenerate eigen-subspace for the frame
/// with the smallest box.
fn resolve_degenerate(
    mesh: &TriangleMesh,
    vecs: [Vector3<f64>; 3],
    vals: [f64; 3],
) -> [Vector3<f64>; 3] {
    let scale = vals[0].abs().max(1e-300);
    let eq01 = (vals[0] - vals[1]).abs() <= DEGENERATE_GAP * scale;
    let eq12 = (vals[1] - vals[2]).abs() <= DEGENERATE_GAP * scale;
    if !eq01 && !eq12 {
        return vecs;
    }
    let normals = unique_face_normals(mesh, 64);
    let mut best = vecs;
    let mut best_cost = frame_cost(mesh, &vecs);
    let mut consider = |axes: [Vector3<f64>; 3], best: &mut [Vector3<f64>; 3]| {
        let c = frame_cost(mesh, &axes);
        if c < best_cost - 1e-12 * best_cost.abs() {
            best_cost = c;
            *best = axes;
        }
    };
    if eq01 && eq12 {
        for (i, n) in normals.iter().enumerate() {
            for m in normals.iter().skip(i + 1) {
                if n.cross(m).norm() > 1e-6 {
                    consider(complete_frame(*n, *m), &mut best);
                }
            }
            let helper = if n.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            consider(complete_frame(*n, helper), &mut best);
        }
    } else {
        // Fixed axis plus a rotation angle in the plane of the other two.
        let (fixed, p0, p1) = if eq01 {
            (vecs[2], vecs[0], vecs[1])
        } else {
            (vecs[0], vecs[1], vecs[2])
        };
        let mut angles: Vec<f64> = (0..90)
            .map(|k| k as f64 * std::f64::consts::FRAC_PI_2 / 90.0)
            .collect();
        for n in &normals {
            let (x, y) = (n.dot(&p0), n.dot(&p1));
            if x.hypot(y) > 1e-6 {
                angles.push(y.atan2(x));
            }
        }
        for a in angles {
            let u = p0 * a.cos() + p1 * a.sin();
            consider(complete_frame(fixed, u), &mut best);
        }
    }
    best
}

/// Oriented bounding box from PCA of the area-weighted surface.
///
/// The surface covariance is integrated exactly per triangle, which is the
/// infinite-sample limit of area-weighted sampling and keeps the result
/// deterministic and exactly equivariant under rigid motion.
pub fn compute_obb(mesh: &TriangleMesh) -> OrientedBoundingBox {
    assert!(!mesh.vertices.is_empty(), "compute_obb on an empty mesh");
    let (_, cov) = surface_moments(mesh).unwrap_or_else(|| vertex_moments(mesh));
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vecs = order.map(|i| eig.eigenvectors.column(i).into_owned());
    let vals = order.map(|i| eig.eigenvalues[i]);
    let axes = resolve_degenerate(mesh, vecs, vals);
    let axes = complete_frame(axes[0], axes[1]);

    let (center, half) = fit_in_frame(mesh, &axes);
    // Order by descending extent; keep right-handed.
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| half[j].total_cmp(&half[i]));
    let mut axes = idx.map(|i| canonical_sign(axes[i]));
    axes[2] = axes[0].cross(&axes[1]);
    let mut half_extents = Vector3::new(half[idx[0]], half[idx[1]], half[idx[2]]);

    let floor = 0.5e-6 * mesh.diagonal().max(1e-12);
    let mut degenerate = false;
    for i in 0..3 {
        if half_extents[i] < floor {
            half_extents[i] = floor;
            degenerate = true;
        }
    }
    OrientedBoundingBox {
        center,
        axes,
        half_extents,
        degenerate,
    }
}

/// Flip so the largest-magnitude component is positive.
fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    let i = v.iamax();
    if v[i] < 0.0 {
        -v
    } else {
        v
    }
}

/// Overlap of interval `p` with interval `q`, clamped to `q`'s length.
pub fn interval_overlap(p: (f64, f64), q: (f64, f64)) -> f64 {
    let o = p.1.min(q.1) - p.0.max(q.0);
    o.clamp(0.0, q.1 - q.0)
}

/// Insertion ratios of `bp` into `bq`: penetration depth along each of
/// `bq`'s axes divided by `bq`'s full extent on that axis.
pub fn insertion_ratios(bp: &OrientedBoundingBox, bq: &OrientedBoundingBox) -> InsertionRatios {
    let r: [f64; 3] = std::array::from_fn(|i| {
        let a = bq.axes[i];
        let q = bq.interval(&a);
        let p = bp.interval(&a);
        let ext = q.1 - q.0;
        (interval_overlap(p, q) / ext).clamp(0.0, 1.0)
    });
    InsertionRatios {
        rx: r[0],
        ry: r[1],
        rz: r[2],
    }
}
