//! Contact snapping by clustered shape matching.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{compute_obb, TriangleMesh};

/// A point to move (near the part's surface) and where it should go.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapHandle {
    pub source: Point3<f64>,
    pub target: Point3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapParams {
    pub max_iter: usize,
    /// Absolute residual tolerance.
    pub tolerance: f64,
    /// Blend between the best linear (1) and best rigid (0) cluster goal.
    pub beta: f64,
    /// Vertex displacement cap as a multiple of the largest handle move.
    pub clamp_factor: f64,
}

impl SnapParams {
    pub fn new(max_iter: usize, tolerance: f64, beta: f64) -> SnapParams {
        SnapParams {
            max_iter,
            tolerance,
            beta,
            clamp_factor: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapReport {
    pub handles: usize,
    pub clusters: usize,
    pub anchored: bool,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub max_displacement: f64,
    pub displacement_bound: f64,
    pub converged: bool,
}

struct Cluster {
    members: Vec<usize>,
    rest_centroid: Point3<f64>,
    aqq_inv: Option<Matrix3<f64>>,
}

struct Bound {
    tri: [usize; 3],
    bary: [f64; 3],
    target: Point3<f64>,
}

fn build_clusters(rest: &[Point3<f64>], mesh: &TriangleMesh) -> (Vec<Cluster>, f64) {
    let obb = compute_obb(mesh);
    let axis = obb.axes[0];
    let half = obb.half_extents[0].max(1e-12);
    let m = 4.max(rest.len().div_ceil(500));
    let t: Vec<f64> = rest
        .iter()
        .map(|v| ((v - obb.center).dot(&axis) + half) / (2.0 * half))
        .collect();
    let mut clusters = Vec::new();
    for j in 0..m {
        let lo = (j as f64 - 0.25) / m as f64;
        let hi = (j as f64 + 1.25) / m as f64;
        let members: Vec<usize> = (0..rest.len())
            .filter(|&i| t[i] >= lo && t[i] <= hi)
            .collect();
        if members.is_empty() {
            continue;
        }
        let c = members
            .iter()
            .fold(Vector3::zeros(), |s, &i| s + rest[i].coords)
            / members.len() as f64;
        let mut aqq = Matrix3::zeros();
        for &i in &members {
            let q = rest[i].coords - c;
            aqq += q * q.transpose();
        }
        let scale = aqq.trace().max(1e-300);
        let aqq_inv = if aqq.determinant().abs() > 1e-9 * scale.powi(3) {
            aqq.try_inverse()
        } else {
            None
        };
        clusters.push(Cluster {
            members,
            rest_centroid: Point3::from(c),
            aqq_inv,
        });
    }
    (clusters, 2.0 * half)
}

fn polar_rotation(a: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = a.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * vt
}

fn goal_positions(
    clusters: &[Cluster],
    rest: &[Point3<f64>],
    x: &[Point3<f64>],
    anchor: Option<usize>,
    beta: f64,
) -> Vec<Point3<f64>> {
    let mut sum = vec![Vector3::zeros(); x.len()];
    let mut count = vec![0u32; x.len()];
    for (k, cl) in clusters.iter().enumerate() {
        if Some(k) == anchor {
            for &i in &cl.members {
                sum[i] += rest[i].coords;
                count[i] += 1;
            }
            continue;
        }
        let c = cl
            .members
            .iter()
            .fold(Vector3::zeros(), |s, &i| s + x[i].coords)
            / cl.members.len() as f64;
        let mut apq = Matrix3::zeros();
        for &i in &cl.members {
            apq += (x[i].coords - c) * (rest[i] - cl.rest_centroid).transpose();
        }
        let r = polar_rotation(&apq);
        let mut g = r;
        if let Some(inv) = cl.aqq_inv {
            let a = apq * inv;
            let det = a.determinant();
            if det > 1e-12 {
                g = a / det.cbrt() * beta + r * (1.0 - beta);
            }
        }
        for &i in &cl.members {
            sum[i] += g * (rest[i] - cl.rest_centroid) + c;
            count[i] += 1;
        }
    }
    sum.into_iter()
        .zip(count)
        .enumerate()
        .map(|(i, (s, n))| {
            if n > 0 {
                Point3::from(s / n as f64)
            } else {
                x[i]
            }
        })
        .collect()
}

fn handle_position(x: &[Point3<f64>], h: &Bound) -> Point3<f64> {
    Point3::from(
        x[h.tri[0]].coords * h.bary[0]
            + x[h.tri[1]].coords * h.bary[1]
            + x[h.tri[2]].coords * h.bary[2],
    )
}

/// Smallest vertex correction putting each handle on its target.
fn project_handles(x: &mut [Point3<f64>], handles: &[Bound]) {
    for h in handles {
        let d = h.target - handle_position(x, h);
        let mut weights = [0.0; 3];
        for k in 0..3 {
            let first = h.tri.iter().position(|&v| v == h.tri[k]).unwrap();
            weights[first] += h.bary[k];
        }
        let norm: f64 = weights.iter().map(|w| w * w).sum();
        if norm <= 0.0 {
            continue;
        }
        for k in 0..3 {
            if weights[k] != 0.0 {
                x[h.tri[k]] += d * (weights[k] / norm);
            }
        }
    }
}

fn clamp_displacement(x: &mut [Point3<f64>], rest: &[Point3<f64>], bound: f64) {
    for (p, r) in x.iter_mut().zip(rest) {
        let d = *p - r;
        let n = d.norm();
        if n > bound {
            *p = r + d * (bound / n);
        }
    }
}

/// Deforms `mesh` so every handle lands on its target. Handles are bound to
/// their closest surface point and activated one at a time, each stage
/// starting from the previous result.
pub fn snap_contacts(
    mesh: &mut TriangleMesh,
    handles: &[SnapHandle],
    params: &SnapParams,
) -> SnapReport {
    let rest = mesh.vertices.clone();
    let mut report = SnapReport {
        handles: handles.len(),
        clusters: 0,
        anchored: false,
        iterations: 0,
        residuals: Vec::new(),
        max_residual: 0.0,
        max_displacement: 0.0,
        displacement_bound: 0.0,
        converged: true,
    };
    if handles.is_empty() || mesh.triangles.is_empty() {
        return report;
    }
    let bound: Vec<Bound> = handles
        .iter()
        .filter_map(|h| {
            let s = mesh.closest_point(&h.source)?;
            let t = mesh.triangles[s.triangle];
            Some(Bound {
                tri: [t[0] as usize, t[1] as usize, t[2] as usize],
                bary: s.barycentric,
                target: h.target,
            })
        })
        .collect();
    let largest = bound
        .iter()
        .map(|b| (b.target - handle_position(&rest, b)).norm())
        .fold(0.0, f64::max);
    let cap = params.clamp_factor * largest;
    report.displacement_bound = cap;
    if largest <= params.tolerance * 1e-3 {
        report.residuals = vec![largest; bound.len()];
        report.max_residual = largest;
        return report;
    }
    let (clusters, length) = build_clusters(&rest, mesh);
    report.clusters = clusters.len();
    let mut x = rest.clone();
    for stage in 0..bound.len() {
        let active = &bound[..=stage];
        let anchor = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                !active
                    .iter()
                    .any(|h| h.tri.iter().any(|v| c.members.contains(v)))
            })
            .map(|(k, c)| {
                let d = active
                    .iter()
                    .map(|h| (handle_position(&rest, h) - c.rest_centroid).norm())
                    .fold(f64::INFINITY, f64::min);
                (k, d)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .filter(|&(_, d)| d > 0.5 * length)
            .map(|(k, _)| k);
        report.anchored |= anchor.is_some();
        project_handles(&mut x, active);
        for _ in 0..params.max_iter {
            report.iterations += 1;
            let mut next = goal_positions(&clusters, &rest, &x, anchor, params.beta);
            clamp_displacement(&mut next, &rest, cap);
            project_handles(&mut next, active);
            let change = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            x = next;
            let residual = active
                .iter()
                .map(|h| (handle_position(&x, h) - h.target).norm())
                .fold(0.0, f64::max);
            if change < 1e-3 * params.tolerance && residual < params.tolerance {
                break;
            }
        }
    }
    project_handles(&mut x, &bound);
    clamp_displacement(&mut x, &rest, cap);
    report.residuals = bound
        .iter()
        .map(|h| (handle_position(&x, h) - h.target).norm())
        .collect();
    report.max_residual = report.residuals.iter().copied().fold(0.0, f64::max);
    report.max_displacement = x
        .iter()
        .zip(&rest)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    report.converged = report.max_residual < params.tolerance;
    mesh.vertices = x;
    mesh.normals = None;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::primitives::{cuboid, cylinder};

    fn params(tol: f64) -> SnapParams {
        SnapParams::new(200, tol, 0.5)
    }

    fn subdivided_bar(length: f64, segments: usize) -> TriangleMesh {
        let mut bar = TriangleMesh::default();
        for k in 0..segments {
            let x0 = length * k as f64 / segments as f64;
            let x1 = length * (k + 1) as f64 / segments as f64;
            bar.append(&cuboid(
                Point3::new(x0, 0.0, 0.0),
                Point3::new(x1, 0.05, 0.05),
            ));
        }
        bar.cleanup();
        bar
    }

    #[test]
    fn dragging_one_end_bends_locally() {
        let mut bar = subdivided_bar(1.0, 40);
        let end = Point3::new(1.0, 0.025, 0.025);
        let h = SnapHandle {
            source: end,
            target: end + Vector3::new(0.0, 0.1, 0.0),
        };
        let before = bar.clone();
        let r = snap_contacts(&mut bar, &[h], &params(1e-3));
        assert!(r.converged && r.anchored, "{r:?}");
        let far = before
            .vertices
            .iter()
            .zip(&bar.vertices)
            .filter(|(v, _)| v.x < 1e-9)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(far < 0.02, "far end moved {far}");
        assert!(r.max_displacement <= 1.5 * 0.1 + 1e-12);
    }

    #[test]
    fn two_handles_both_reach_targets() {
        let mut tube = cylinder(Point3::origin(), 0.05, 1.0, 12, 20);
        let a = Point3::new(0.05, 0.0, 0.0);
        let b = Point3::new(0.05, 1.0, 0.0);
        let handles = [
            SnapHandle {
                source: a,
                target: a + Vector3::new(0.03, -0.02, 0.0),
            },
            SnapHandle {
                source: b,
                target: b + Vector3::new(-0.02, 0.04, 0.01),
            },
        ];
        let r = snap_contacts(&mut tube, &handles, &params(1e-3));
        assert!(r.max_residual < 1e-3, "{r:?}");
        assert!(r.max_displacement <= r.displacement_bound + 1e-12);
    }

    #[test]
    fn satisfied_handles_leave_the_mesh_alone() {
        let mut m = cuboid(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        let before = m.clone();
        let p = Point3::new(1.0, 0.5, 0.5);
        let r = snap_contacts(
            &mut m,
            &[SnapHandle {
                source: p,
                target: p,
            }],
            &params(1e-3),
        );
        assert_eq!(m.vertices, before.vertices);
        assert!(r.converged);
    }
}
