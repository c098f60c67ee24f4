//! Connector scaling and vertex welding between an incoming part and a
//! placed neighbor.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::geometry::contact::{connector_extents, points_aabb};
use crate::geometry::{compute_obb, TriangleMesh};

/// Relative extent mismatch tolerated without scaling.
pub const MATCH_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StitchReport {
    pub neighbor: String,
    pub smooth: bool,
    /// Cross-section scale factors applied at the contact, or `[1, 1]`.
    pub scale: [f64; 2],
    pub welded: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct StitchParams {
    pub connector_radius: f64,
    pub weld_distance: f64,
    pub match_tolerance: f64,
}

/// Scales the connector cross-section of `p` toward `ratio` times `q`'s,
/// blended to no change at `connector_radius` from the contact along the
/// connector normal. Returns the applied factors.
fn match_connector(
    p: &mut TriangleMesh,
    p_contacts: &[Point3<f64>],
    q: &TriangleMesh,
    q_contacts: &[Point3<f64>],
    ratio: [f64; 2],
    radius: f64,
    tolerance: f64,
) -> [f64; 2] {
    let (Some(ep), Some(eq)) = (
        connector_extents(p, p_contacts, radius),
        connector_extents(q, q_contacts, radius),
    ) else {
        return [1.0, 1.0];
    };
    let region: Vec<Point3<f64>> = p
        .vertices
        .iter()
        .filter(|v| p_contacts.iter().any(|c| (*v - c).norm() <= radius))
        .copied()
        .chain(p_contacts.iter().copied())
        .collect();
    let obb = compute_obb(&TriangleMesh::new(region, Vec::new()));
    let factor: [f64; 2] = std::array::from_fn(|k| {
        let want = eq[k] * ratio[k];
        let m = ep[k].max(want);
        if ep[k] <= 0.0 || m <= 0.0 || (ep[k] - want).abs() / m <= tolerance {
            1.0
        } else {
            want / ep[k]
        }
    });
    if factor == [1.0, 1.0] {
        return factor;
    }
    let Some(plane) = points_aabb(p_contacts) else {
        return [1.0, 1.0];
    };
    let center = plane.center();
    let normal = obb.axes[2];
    let (a0, a1) = (obb.axes[0], obb.axes[1]);
    for v in p.vertices.iter_mut() {
        let d = *v - center;
        let along = d.dot(&normal);
        let w = (1.0 - along.abs() / radius).max(0.0);
        if w <= 0.0 {
            continue;
        }
        let c0 = d.dot(&a0) * (1.0 + (factor[0] - 1.0) * w);
        let c1 = d.dot(&a1) * (1.0 + (factor[1] - 1.0) * w);
        *v = center + a0 * c0 + a1 * c1 + normal * along;
    }
    p.normals = None;
    factor
}

/// Closes the gaps between `p` and `q` that exceed each vertex's clearance
/// in its source model (`clearance[i]`, zero when absent). A vertex within
/// `distance` of `q` is pulled toward `q` by the excess; a vertex that
/// touched its source neighbor lands on a vertex of `q` no farther than
/// twice the surface distance, otherwise on the nearest surface point.
/// Returns how many vertices moved.
fn weld(p: &mut TriangleMesh, q: &TriangleMesh, distance: f64, clearance: &[f64]) -> usize {
    if distance <= 0.0 || q.triangles.is_empty() {
        return 0;
    }
    let region = p.aabb().expanded(distance);
    let tris = q.triangles_near(&region);
    if tris.is_empty() {
        return 0;
    }
    let q_verts: Vec<Point3<f64>> = q
        .vertices
        .iter()
        .filter(|v| region.contains(v))
        .copied()
        .collect();
    let mut moved = 0;
    let tiny = distance * 1e-6;
    for (i, v) in p.vertices.iter_mut().enumerate() {
        let Some(s) = q.closest_point_among(v, &tris) else {
            continue;
        };
        let keep = clearance.get(i).copied().unwrap_or(0.0);
        if s.distance > distance || s.distance - keep <= tiny {
            continue;
        }
        if keep > tiny {
            *v += (s.point - *v) * ((s.distance - keep) / s.distance);
            moved += 1;
            continue;
        }
        let vertex = q_verts
            .iter()
            .map(|w| (w, (w - *v).norm()))
            .filter(|(_, d)| *d <= distance.min(2.0 * s.distance))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(w, _)| *w);
        let to = vertex.unwrap_or(s.point);
        if to != *v {
            *v = to;
            moved += 1;
        }
    }
    if moved > 0 {
        p.normals = None;
    }
    moved
}

/// Joins `p` to the placed neighbor `q`. Only `p` is modified. On a smooth
/// joint `p`'s connector is resized to `ratio` times `q`'s, per
/// cross-section axis. `clearance` holds each vertex's distance to its
/// source neighbor; welding keeps it.
#[allow(clippy::too_many_arguments)]
pub fn stitch(
    p: &mut TriangleMesh,
    p_contacts: &[Point3<f64>],
    q: &TriangleMesh,
    q_contacts: &[Point3<f64>],
    smooth: bool,
    ratio: [f64; 2],
    clearance: &[f64],
    neighbor: &str,
    params: &StitchParams,
) -> StitchReport {
    let scale = if smooth {
        match_connector(
            p,
            p_contacts,
            q,
            q_contacts,
            ratio,
            params.connector_radius,
            params.match_tolerance,
        )
    } else {
        [1.0, 1.0]
    };
    let welded = weld(p, q, params.weld_distance, clearance);
    StitchReport {
        neighbor: neighbor.to_string(),
        smooth,
        scale,
        welded,
    }
}
