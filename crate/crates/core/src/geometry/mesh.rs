//! Triangle meshes, OBJ input/output and surface queries.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix4, Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Indexed triangle mesh in model units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    pub normals: Option<Vec<Vector3<f64>>>,
}

/// Axis-aligned bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn expanded(&self, by: f64) -> Aabb {
        let d = Vector3::repeat(by);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn triangle(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Aabb {
        Aabb {
            min: a.inf(b).inf(c),
            max: a.sup(b).sup(c),
        }
    }
}

/// Closest point on a mesh surface.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub point: Point3<f64>,
    pub triangle: usize,
    /// Barycentric weights of `point` with respect to the triangle's corners.
    pub barycentric: [f64; 3],
    pub distance: f64,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Self {
        TriangleMesh {
            vertices,
            triangles,
            normals: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unnormalized face normal (length = 2 × area).
    pub fn face_normal_raw(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn face_normal(&self, t: usize) -> Vector3<f64> {
        self.face_normal_raw(t).normalize()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_normal_raw(t).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn aabb(&self) -> Aabb {
        let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        Aabb { min, max }
    }

    pub fn diagonal(&self) -> f64 {
        self.aabb().diagonal()
    }

    /// Checks index ranges and rejects meshes without triangles.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.triangles.is_empty() {
            return Err("mesh has no triangles".into());
        }
        let n = self.vertices.len() as u32;
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(format!("triangle {t:?} references a vertex outside 0..{n}"));
        }
        if let Some(normals) = &self.normals {
            if normals.len() != self.vertices.len() {
                return Err("normal count differs from vertex count".into());
            }
        }
        Ok(())
    }

    /// Merges vertices with identical positions, then drops zero-area and
    /// repeated-index triangles. Unreferenced vertices are kept.
    pub fn cleanup(&mut self) {
        let mut remap = Vec::with_capacity(self.vertices.len());
        let mut seen: HashMap<[u64; 3], u32> = HashMap::new();
        let mut merged = Vec::new();
        let mut merged_normals = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
            let idx = *seen.entry(key).or_insert_with(|| {
                merged.push(*v);
                if let Some(n) = &self.normals {
                    merged_normals.push(n[i]);
                }
                (merged.len() - 1) as u32
            });
            remap.push(idx);
        }
        self.vertices = merged;
        if self.normals.is_some() {
            self.normals = Some(merged_normals);
        }
        let triangles = std::mem::take(&mut self.triangles);
        self.triangles = triangles
            .into_iter()
            .map(|t| t.map(|i| remap[i as usize]))
            .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
            .collect();
        let scale = self.diagonal().max(1e-300);
        let min_area = 1e-14 * scale * scale;
        let keep: Vec<bool> = (0..self.triangles.len())
            .map(|t| self.triangle_area(t) > min_area)
            .collect();
        let mut k = keep.iter();
        self.triangles.retain(|_| *k.next().unwrap());
    }

    /// Appends another mesh, offsetting its indices.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        self.normals = None;
    }

    /// Applies an affine transform (homogeneous 4×4) to all vertices.
    pub fn transformed(&self, m: &Matrix4<f64>) -> TriangleMesh {
        let mut out = self.clone();
        out.transform_in_place(m);
        out
    }

    pub fn transform_in_place(&mut self, m: &Matrix4<f64>) {
        for v in &mut self.vertices {
            *v = m.transform_point(v);
        }
        if m.fixed_view::<3, 3>(0, 0).determinant() < 0.0 {
            for t in &mut self.triangles {
                t.swap(1, 2);
            }
        }
        self.normals = None;
    }

    /// Area-weighted random surface samples.
    pub fn sample_surface<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Point3<f64>> {
        let mut cdf = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            total += self.triangle_area(t);
            cdf.push(total);
        }
        if total <= 0.0 {
            return Vec::new();
        }
        (0..count)
            .map(|_| {
                let r = rng.random::<f64>() * total;
                let t = cdf.partition_point(|&c| c < r).min(cdf.len() - 1);
                let [a, b, c] = self.corners(t);
                let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }

    /// Closest point on the surface to `p`, by exhaustive search.
    pub fn closest_point(&self, p: &Point3<f64>) -> Option<SurfacePoint> {
        let mut best: Option<SurfacePoint> = None;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            let (q, bary) = closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if best.as_ref().is_none_or(|s| d < s.distance) {
                best = Some(SurfacePoint {
                    point: q,
                    triangle: t,
                    barycentric: bary,
                    distance: d,
                });
            }
        }
        best
    }

    /// Distance from `p` to the surface, or infinity for an empty mesh.
    pub fn distance_to(&self, p: &Point3<f64>) -> f64 {
        self.closest_point(p).map_or(f64::INFINITY, |s| s.distance)
    }

    /// Returns triangle indices whose bounds intersect `region`.
    pub fn triangles_near(&self, region: &Aabb) -> Vec<usize> {
        (0..self.triangles.len())
            .filter(|&t| {
                let [a, b, c] = self.corners(t);
                Aabb::triangle(&a, &b, &c).intersects(region)
            })
            .collect()
    }

    /// Closest point restricted to a subset of triangles.
    pub fn closest_point_among(&self, p: &Point3<f64>, tris: &[usize]) -> Option<SurfacePoint> {
        let mut best: Option<SurfacePoint> = None;
        for &t in tris {
            let [a, b, c] = self.corners(t);
            let (q, bary) = closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if best.as_ref().is_none_or(|s| d < s.distance) {
                best = Some(SurfacePoint {
                    point: q,
                    triangle: t,
                    barycentric: bary,
                    distance: d,
                });
            }
        }
        best
    }

    /// Evaluates a barycentric surface location on this mesh.
    pub fn eval_barycentric(&self, triangle: usize, bary: &[f64; 3]) -> Point3<f64> {
        let [a, b, c] = self.corners(triangle);
        Point3::from(a.coords * bary[0] + b.coords * bary[1] + c.coords * bary[2])
    }

    /// Parses ASCII OBJ. Polygons are fan-triangulated; texture and normal
    /// indices are ignored.
    pub fn parse_obj(text: &str) -> std::result::Result<TriangleMesh, String> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let coords: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| format!("line {}: {e}", lineno + 1))?;
                    if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
                        return Err(format!("line {}: malformed vertex", lineno + 1));
                    }
                    vertices.push(Point3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let mut idx = Vec::new();
                    for tok in it {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first
                            .parse()
                            .map_err(|_| format!("line {}: bad face index `{tok}`", lineno + 1))?;
                        let resolved = if i < 0 {
                            vertices.len() as i64 + i
                        } else {
                            i - 1
                        };
                        if resolved < 0 || resolved >= vertices.len() as i64 {
                            return Err(format!(
                                "line {}: face index {i} out of range",
                                lineno + 1
                            ));
                        }
                        idx.push(resolved as u32);
                    }
                    if idx.len() < 3 {
                        return Err(format!(
                            "line {}: face with fewer than 3 vertices",
                            lineno + 1
                        ));
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        let mesh = TriangleMesh::new(vertices, triangles);
        mesh.validate()?;
        Ok(mesh)
    }

    /// Loads, triangulates and cleans an OBJ file.
    pub fn load_obj(path: &Path) -> Result<TriangleMesh> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut mesh = TriangleMesh::parse_obj(&text).map_err(|message| Error::MeshParse {
            path: path.to_path_buf(),
            message,
        })?;
        mesh.cleanup();
        if mesh.triangles.is_empty() {
            return Err(Error::MeshParse {
                path: path.to_path_buf(),
                message: "no non-degenerate triangles".into(),
            });
        }
        Ok(mesh)
    }

    /// Writes the mesh body (vertices and faces) with a given index base,
    /// so several meshes can share one OBJ document.
    pub fn write_obj_body(&self, out: &mut String, index_base: usize) {
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.9} {:.9} {:.9}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(
                out,
                "f {} {} {}",
                t[0] as usize + index_base + 1,
                t[1] as usize + index_base + 1,
                t[2] as usize + index_base + 1
            );
        }
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        self.write_obj_body(&mut s, 0);
        s
    }
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection 5.1.5), with barycentric weights.
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> (Point3<f64>, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Primitive builders used by tests and the synthetic corpus generator.
pub mod primitives {
    use super::*;

    /// Axis-aligned box spanning `min..max`, 8 shared vertices, outward
    /// winding.
    pub fn cuboid(min: Point3<f64>, max: Point3<f64>) -> TriangleMesh {
        let v = |x: bool, y: bool, z: bool| {
            Point3::new(
                if x { max.x } else { min.x },
                if y { max.y } else { min.y },
                if z { max.z } else { min.z },
            )
        };
        let vertices = vec![
            v(false, false, false),
            v(true, false, false),
            v(true, true, false),
            v(false, true, false),
            v(false, false, true),
            v(true, false, true),
            v(true, true, true),
            v(false, true, true),
        ];
        let triangles = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [3, 7, 6],
            [3, 6, 2],
            [0, 4, 7],
            [0, 7, 3],
            [1, 2, 6],
            [1, 6, 5],
        ];
        TriangleMesh::new(vertices, triangles)
    }

    pub fn unit_cube() -> TriangleMesh {
        cuboid(Point3::origin(), Point3::new(1.0, 1.0, 1.0))
    }

    /// Closed cylinder along +Y with `segments` sides and `rings` evenly
    /// spaced vertex rings along the height.
    pub fn cylinder(
        center_bottom: Point3<f64>,
        radius: f64,
        height: f64,
        segments: usize,
        rings: usize,
    ) -> TriangleMesh {
        let rings = rings.max(2);
        let mut vertices = Vec::new();
        for r in 0..rings {
            let y = center_bottom.y + height * r as f64 / (rings - 1) as f64;
            for s in 0..segments {
                let a = std::f64::consts::TAU * s as f64 / segments as f64;
                vertices.push(Point3::new(
                    center_bottom.x + radius * a.cos(),
                    y,
                    center_bottom.z + radius * a.sin(),
                ));
            }
        }
        let bottom = vertices.len() as u32;
        vertices.push(center_bottom);
        let top = vertices.len() as u32;
        vertices.push(center_bottom + Vector3::new(0.0, height, 0.0));
        let seg = segments as u32;
        let mut triangles = Vec::new();
        for r in 0..(rings as u32 - 1) {
            for s in 0..seg {
                let a = r * seg + s;
                let b = r * seg + (s + 1) % seg;
                let c = a + seg;
                let d = b + seg;
                triangles.push([a, c, b]);
                triangles.push([b, c, d]);
            }
        }
        let last = (rings as u32 - 1) * seg;
        for s in 0..seg {
            triangles.push([bottom, s, (s + 1) % seg]);
            triangles.push([top, last + (s + 1) % seg, last + s]);
        }
        TriangleMesh::new(vertices, triangles)
    }

    /// UV sphere.
    pub fn sphere(center: Point3<f64>, radius: f64, stacks: usize, slices: usize) -> TriangleMesh {
        let mut vertices = vec![center + Vector3::new(0.0, radius, 0.0)];
        for i in 1..stacks {
            let phi = std::f64::consts::PI * i as f64 / stacks as f64;
            for j in 0..slices {
                let theta = std::f64::consts::TAU * j as f64 / slices as f64;
                vertices.push(
                    center
                        + Vector3::new(
                            radius * phi.sin() * theta.cos(),
                            radius * phi.cos(),
                            radius * phi.sin() * theta.sin(),
                        ),
                );
            }
        }
        let south = vertices.len() as u32;
        vertices.push(center - Vector3::new(0.0, radius, 0.0));
        let sl = slices as u32;
        let mut triangles = Vec::new();
        for j in 0..sl {
            triangles.push([0, 1 + (j + 1) % sl, 1 + j]);
        }
        for i in 0..(stacks as u32 - 2) {
            for j in 0..sl {
                let a = 1 + i * sl + j;
                let b = 1 + i * sl + (j + 1) % sl;
                let c = a + sl;
                let d = b + sl;
                triangles.push([a, b, c]);
                triangles.push([b, d, c]);
            }
        }
        let base = 1 + (stacks as u32 - 2) * sl;
        for j in 0..sl {
            triangles.push([south, base + j, base + (j + 1) % sl]);
        }
        TriangleMesh::new(vertices, triangles)
    }

    /// Union of several meshes.
    pub fn union(parts: &[TriangleMesh]) -> TriangleMesh {
        let mut out = TriangleMesh::new(Vec::new(), Vec::new());
        for p in parts {
            out.append(p);
        }
        out
    }
}
