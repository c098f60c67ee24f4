//! Contact extraction between adjacent parts and connector smoothness.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::mesh::{Aabb, TriangleMesh};
use super::obb::compute_obb;

/// Maximum number of points kept per contact cluster.
pub const POINTS_PER_CLUSTER: usize = 16;

/// One connected contact region between two parts. The same cluster is
/// stored on both parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactCluster {
    /// Index of the neighbor part within the owning model.
    pub neighbor: usize,
    /// Representative points; the first one is closest to the cluster
    /// centroid and serves as the snapping handle.
    pub points: Vec<Point3<f64>>,
}

impl ContactCluster {
    pub fn representative(&self) -> Point3<f64> {
        self.points[0]
    }
}

/// Contact candidates of `a` against `b`: midpoints between points of `a`
/// within `eps` of `b` and their closest points on `b`. Triangles of `a`
/// near `b` are sampled on a barycentric grid with step at most `h`, so
/// samples of one connected region are linked at distance `h`.
fn one_sided(a: &TriangleMesh, b: &TriangleMesh, eps: f64, h: f64) -> Vec<Point3<f64>> {
    let region = b.aabb().expanded(eps);
    let near_b = b.triangles_near(&a.aabb().expanded(eps));
    if near_b.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for t in 0..a.triangles.len() {
        let [p0, p1, p2] = a.corners(t);
        let tb = Aabb::triangle(&p0, &p1, &p2);
        if !tb.intersects(&region) {
            continue;
        }
        let longest = (p1 - p0).norm().max((p2 - p1).norm()).max((p0 - p2).norm());
        let n = ((longest / h).ceil() as usize).max(1);
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                let p = p0 + (p1 - p0) * u + (p2 - p0) * v;
                if !region.contains(&p) {
                    continue;
                }
                if let Some(s) = b.closest_point_among(&p, &near_b) {
                    if s.distance < eps {
                        out.push(nalgebra::center(&p, &s.point));
                    }
                }
            }
        }
    }
    out
}

/// Single-linkage clustering with link distance `link`, using a uniform
/// grid of cell size `link`.
fn cluster_points(points: &[Point3<f64>], link: f64) -> Vec<Vec<usize>> {
    use std::collections::HashMap;
    let key = |p: &Point3<f64>| {
        (
            (p.x / link).floor() as i64,
            (p.y / link).floor() as i64,
            (p.z / link).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let n = points.len();
    let mut label = vec![usize::MAX; n];
    let mut clusters = Vec::new();
    for seed in 0..n {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![seed];
        label[seed] = id;
        let mut head = 0;
        while head < members.len() {
            let cur = members[head];
            head += 1;
            let (kx, ky, kz) = key(&points[cur]);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(cell) = grid.get(&(kx + dx, ky + dy, kz + dz)) else {
                            continue;
                        };
                        for &j in cell {
                            if label[j] == usize::MAX && (points[j] - points[cur]).norm() <= link {
                                label[j] = id;
                                members.push(j);
                            }
                        }
                    }
                }
            }
        }
        clusters.push(members);
    }
    clusters
}

/// Farthest-point subsample starting from the point nearest the centroid.
fn representatives(points: &[Point3<f64>], members: &[usize], cap: usize) -> Vec<Point3<f64>> {
    let centroid = members
        .iter()
        .fold(nalgebra::Vector3::zeros(), |acc, &i| acc + points[i].coords)
        / members.len() as f64;
    let first = *members
        .iter()
        .min_by(|&&i, &&j| {
            (points[i].coords - centroid)
                .norm()
                .total_cmp(&(points[j].coords - centroid).norm())
        })
        .unwrap();
    let mut chosen = vec![points[first]];
    let mut dist: Vec<f64> = members
        .iter()
        .map(|&i| (points[i] - points[first]).norm())
        .collect();
    while chosen.len() < cap.min(members.len()) {
        let (k, &d) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        if d <= 0.0 {
            break;
        }
        let p = points[members[k]];
        chosen.push(p);
        for (m, dm) in members.iter().zip(dist.iter_mut()) {
            *dm = dm.min((points[*m] - p).norm());
        }
    }
    chosen
}

/// Contact clusters between two adjacent parts. An empty result means the
/// parts do not come within `eps` of each other.
pub fn detect_pair_contacts(
    a: &TriangleMesh,
    b: &TriangleMesh,
    eps: f64,
    spacing: f64,
) -> Vec<Vec<Point3<f64>>> {
    if !a.aabb().expanded(eps).intersects(&b.aabb()) {
        return Vec::new();
    }
    let h = spacing.max(0.25 * eps);
    let mut pts = one_sided(a, b, eps, h);
    pts.extend(one_sided(b, a, eps, h));
    if pts.is_empty() {
        return Vec::new();
    }
    let link = (2.5 * eps).max(1.5 * h);
    let mut clusters: Vec<Vec<Point3<f64>>> = cluster_points(&pts, link)
        .into_iter()
        .map(|m| representatives(&pts, &m, POINTS_PER_CLUSTER))
        .collect();
    clusters.sort_by(|x, y| {
        let (p, q) = (x[0], y[0]);
        (p.x, p.y, p.z).partial_cmp(&(q.x, q.y, q.z)).unwrap()
    });
    clusters
}

/// Cross-section box of the connector region: vertices within `radius` of
/// any contact point.
pub fn connector_extents(
    mesh: &TriangleMesh,
    contacts: &[Point3<f64>],
    radius: f64,
) -> Option<[f64; 2]> {
    let region: Vec<Point3<f64>> = mesh
        .vertices
        .iter()
        .filter(|v| contacts.iter().any(|c| (*v - c).norm() <= radius))
        .copied()
        .chain(contacts.iter().copied())
        .collect();
    if region.len() < 3 {
        return None;
    }
    let cloud = TriangleMesh::new(region, Vec::new());
    let obb = compute_obb(&cloud);
    let e = obb.extents();
    Some([e[0], e[1]])
}

/// True iff both connector cross-sections exist and their two largest
/// extents agree within `band` relative difference.
pub fn connector_smoothness(
    a: &TriangleMesh,
    a_contacts: &[Point3<f64>],
    b: &TriangleMesh,
    b_contacts: &[Point3<f64>],
    radius: f64,
    band: f64,
) -> bool {
    if a_contacts.is_empty() || b_contacts.is_empty() {
        return false;
    }
    match (
        connector_extents(a, a_contacts, radius),
        connector_extents(b, b_contacts, radius),
    ) {
        (Some(ea), Some(eb)) => (0..2).all(|i| {
            let m = ea[i].max(eb[i]);
            m <= 0.0 || (ea[i] - eb[i]).abs() / m <= band
        }),
        _ => false,
    }
}

/// Bounds of a set of points.
pub fn points_aabb(points: &[Point3<f64>]) -> Option<Aabb> {
    let first = points.first()?;
    Some(points.iter().fold(
        Aabb {
            min: *first,
            max: *first,
        },
        |b, p| Aabb {
            min: b.min.inf(p),
            max: b.max.sup(p),
        },
    ))
}
