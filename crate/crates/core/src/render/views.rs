//! View directions on the unit sphere.

use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// A viewing direction (pointing from the object toward the camera) with
/// its image-plane up vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewDirection {
    pub direction: Vector3<f64>,
    pub up: Vector3<f64>,
}

impl ViewDirection {
    /// Normalizes `direction` and derives a deterministic up vector from
    /// world +Y (or −Z when looking straight up or down).
    pub fn new(direction: Vector3<f64>) -> ViewDirection {
        let d = direction.normalize();
        let reference = if d.y.abs() > 0.999 {
            -Vector3::z()
        } else {
            Vector3::y()
        };
        let up = (reference - d * reference.dot(&d)).normalize();
        ViewDirection { direction: d, up }
    }

    pub fn right(&self) -> Vector3<f64> {
        self.up.cross(&self.direction)
    }

    pub fn opposite(&self) -> ViewDirection {
        ViewDirection::new(-self.direction)
    }

    /// Angle to another view in radians.
    pub fn angle_to(&self, other: &ViewDirection) -> f64 {
        self.direction.dot(&other.direction).clamp(-1.0, 1.0).acos()
    }
}

/// Index of the view in `views` nearest to `query` by angle; ties go to the
/// lower index.
pub fn nearest_view(views: &[ViewDirection], query: &ViewDirection) -> usize {
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (i, v) in views.iter().enumerate() {
        let d = v.direction.dot(&query.direction);
        if d > best_dot {
            best_dot = d;
            best = i;
        }
    }
    best
}

/// Vertices of an icosahedron subdivided `level` times, projected to the
/// sphere: 10·4^level + 2 directions.
pub fn sample_viewpoints(level: u32) -> Vec<ViewDirection> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    verts.into_iter().map(ViewDirection::new).collect()
}
