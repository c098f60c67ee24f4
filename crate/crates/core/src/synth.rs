//! Procedural segmented furniture corpora for demos and tests.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix4, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Manifest, ManifestModel, ManifestPart, Thresholds};
use crate::error::{Error, Result};
use crate::geometry::mesh::primitives::{cuboid, cylinder};
use crate::geometry::TriangleMesh;

/// A generated corpus: manifest plus one mesh per part in manifest order.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub manifest: Manifest,
    pub meshes: Vec<TriangleMesh>,
}

impl SynthCorpus {
    /// Writes `manifest.json` and `meshes/*.obj` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mesh_dir = dir.join("meshes");
        std::fs::create_dir_all(&mesh_dir).map_err(|e| Error::io(&mesh_dir, e))?;
        let files = self
            .manifest
            .models
            .iter()
            .flat_map(|m| m.parts.iter().map(|p| &p.file));
        for (file, mesh) in files.zip(&self.meshes) {
            let path = dir.join(file);
            std::fs::write(&path, mesh.to_obj()).map_err(|e| Error::io(&path, e))?;
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn boxed(x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> TriangleMesh {
    cuboid(Point3::new(x.0, y.0, z.0), Point3::new(x.1, y.1, z.1))
}

fn signed_volume(m: &TriangleMesh) -> f64 {
    (0..m.triangles.len())
        .map(|t| {
            let [a, b, c] = m.corners(t);
            a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
        })
        .sum()
}

fn flip(m: &mut TriangleMesh) {
    for t in &mut m.triangles {
        t.swap(1, 2);
    }
}

/// Prism over a convex polygon. `axis` is the extrusion axis (0, 1 or 2);
/// polygon coordinates fill the other two axes in increasing order.
fn prism(poly: &[[f64; 2]], axis: usize, lo: f64, hi: f64) -> TriangleMesh {
    let place = |p: [f64; 2], h: f64| {
        let mut v = [0.0; 3];
        let others: Vec<usize> = (0..3).filter(|&k| k != axis).collect();
        v[axis] = h;
        v[others[0]] = p[0];
        v[others[1]] = p[1];
        Point3::from(v)
    };
    let n = poly.len() as u32;
    let mut vertices: Vec<Point3<f64>> = poly.iter().map(|&p| place(p, lo)).collect();
    vertices.extend(poly.iter().map(|&p| place(p, hi)));
    let c = poly
        .iter()
        .fold([0.0, 0.0], |s, p| [s[0] + p[0], s[1] + p[1]]);
    let c = [c[0] / n as f64, c[1] / n as f64];
    vertices.push(place(c, lo));
    vertices.push(place(c, hi));
    let (cb, ct) = (2 * n, 2 * n + 1);
    let mut triangles = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([i, j, j + n]);
        triangles.push([i, j + n, i + n]);
        triangles.push([cb, j, i]);
        triangles.push([ct, i + n, j + n]);
    }
    let mut m = TriangleMesh::new(vertices, triangles);
    if signed_volume(&m) < 0.0 {
        flip(&mut m);
    }
    m
}

fn rounded_rect(w: f64, h: f64, r: f64, cx: f64, cy: f64, steps: usize) -> Vec<[f64; 2]> {
    let r = r.min(w / 2.0).min(h / 2.0);
    let corners = [
        (cx + w / 2.0 - r, cy + h / 2.0 - r, 0.0),
        (cx - w / 2.0 + r, cy + h / 2.0 - r, 90.0),
        (cx - w / 2.0 + r, cy - h / 2.0 + r, 180.0),
        (cx + w / 2.0 - r, cy - h / 2.0 + r, 270.0),
    ];
    let mut out = Vec::new();
    for (x, y, start) in corners {
        for s in 0..=steps {
            let a = (start + 90.0 * s as f64 / steps as f64).to_radians();
            out.push([x + r * a.cos(), y + r * a.sin()]);
        }
    }
    out
}

fn circle(r: f64, cx: f64, cy: f64, steps: usize) -> Vec<[f64; 2]> {
    (0..steps)
        .map(|s| {
            let a = std::f64::consts::TAU * s as f64 / steps as f64;
            [cx + r * a.cos(), cy + r * a.sin()]
        })
        .collect()
}

fn union(parts: Vec<TriangleMesh>) -> TriangleMesh {
    let mut out = TriangleMesh::default();
    for p in &parts {
        out.append(p);
    }
    out
}

fn mirror_x(m: &TriangleMesh) -> TriangleMesh {
    let mut out = m.transformed(&Matrix4::new_nonuniform_scaling(&Vector3::new(
        -1.0, 1.0, 1.0,
    )));
    flip(&mut out);
    out
}

/// Rounds to a grid far finer than any feature so written meshes reload
/// bit-identically.
fn q(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

struct Chair {
    w: f64,
    d: f64,
    t: f64,
    leg_h: f64,
}

impl Chair {
    fn random(rng: &mut ChaCha8Rng) -> Chair {
        Chair {
            w: q(rng.random_range(0.8..1.2)),
            d: q(rng.random_range(0.75..1.1)),
            t: q(rng.random_range(0.05..0.12)),
            leg_h: q(rng.random_range(0.7..1.0)),
        }
    }

    fn top(&self) -> f64 {
        self.leg_h + self.t
    }
}

fn seat(c: &Chair, rng: &mut ChaCha8Rng) -> TriangleMesh {
    let (hw, hd) = (c.w / 2.0, c.d / 2.0);
    match rng.random_range(0..3) {
        0 => boxed((-hw, hw), (c.leg_h, c.top()), (-hd, hd)),
        1 => {
            let r = q(rng.random_range(0.05..0.2));
            prism(&rounded_rect(c.w, c.d, r, 0.0, 0.0, 4), 1, c.leg_h, c.top())
        }
        _ => {
            let lip = q(rng.random_range(0.03..0.06));
            let mut m = boxed((-hw, hw), (c.leg_h, c.top()), (-hd, hd));
            // Front lip hanging below the seat board.
            m.append(&boxed((-hw, hw), (c.leg_h - lip, c.leg_h), (hd - 0.04, hd)));
            m
        }
    }
}

fn legs(c: &Chair, rng: &mut ChaCha8Rng, style: Option<usize>) -> TriangleMesh {
    let (hw, hd) = (c.w / 2.0, c.d / 2.0);
    let inset = q(rng.random_range(0.03..0.1));
    let s = q(rng.random_range(0.04..0.09));
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let style = style.unwrap_or_else(|| rng.random_range(0..4));
    match style {
        0 | 2 => {
            let mut parts: Vec<TriangleMesh> = corners
                .iter()
                .map(|&(sx, sz)| {
                    let x = sx * (hw - inset - s / 2.0);
                    let z = sz * (hd - inset - s / 2.0);
                    boxed(
                        (x - s / 2.0, x + s / 2.0),
                        (0.0, c.leg_h),
                        (z - s / 2.0, z + s / 2.0),
                    )
                })
                .collect();
            if style == 2 {
                let y = q(rng.random_range(0.15..0.4) * c.leg_h);
                let bar = s * 0.6;
                for sx in [-1.0, 1.0] {
                    let x = sx * (hw - inset - s / 2.0);
                    let z0 = -(hd - inset - s);
                    parts.push(boxed(
                        (x - bar / 2.0, x + bar / 2.0),
                        (y, y + bar),
                        (z0, -z0),
                    ));
                }
                let x0 = hw - inset - s;
                parts.push(boxed((-x0, x0), (y, y + bar), (-bar / 2.0, bar / 2.0)));
            }
            union(parts)
        }
        1 => {
            let r = s / 2.0;
            union(
                corners
                    .iter()
                    .map(|&(sx, sz)| {
                        let x = sx * (hw - inset - r);
                        let z = sz * (hd - inset - r);
                        cylinder(Point3::new(x, 0.0, z), r, c.leg_h, 12, 2)
                    })
                    .collect(),
            )
        }
        _ => {
            let r = q(rng.random_range(0.04..0.08));
            let foot = q(rng.random_range(0.3..0.45));
            let ft = q(rng.random_range(0.04..0.07));
            let mut parts = vec![cylinder(Point3::new(0.0, ft, 0.0), r, c.leg_h - ft, 16, 2)];
            parts.push(boxed((-foot, foot), (0.0, ft), (-ft, ft)));
            parts.push(boxed((-ft, ft), (0.0, ft), (-foot, -ft)));
            parts.push(boxed((-ft, ft), (0.0, ft), (ft, foot)));
            union(parts)
        }
    }
}

struct BackFrame {
    hw: f64,
    y0: f64,
    h: f64,
    z0: f64,
    tb: f64,
}

fn back(c: &Chair, rng: &mut ChaCha8Rng) -> (TriangleMesh, f64) {
    let f = BackFrame {
        hw: q(c.w / 2.0 * rng.random_range(0.85..1.0)),
        y0: c.top(),
        h: q(rng.random_range(0.7..1.1)),
        z0: -c.d / 2.0,
        tb: q(rng.random_range(0.04..0.08)),
    };
    let (y1, z1) = (f.y0 + f.h, f.z0 + f.tb);
    let post = q(rng.random_range(0.05..0.09));
    let rail = q(rng.random_range(0.06..0.12));
    let frame = |parts: &mut Vec<TriangleMesh>| {
        parts.push(boxed((-f.hw, -f.hw + post), (f.y0, y1), (f.z0, z1)));
        parts.push(boxed((f.hw - post, f.hw), (f.y0, y1), (f.z0, z1)));
        parts.push(boxed(
            (-f.hw + post, f.hw - post),
            (y1 - rail, y1),
            (f.z0, z1),
        ));
    };
    let mesh = match rng.random_range(0..5) {
        0 => boxed((-f.hw, f.hw), (f.y0, y1), (f.z0, z1)),
        1 => {
            let mut parts = Vec::new();
            frame(&mut parts);
            parts.push(boxed(
                (-f.hw + post, f.hw - post),
                (f.y0, f.y0 + rail),
                (f.z0, z1),
            ));
            let n = rng.random_range(2..=6);
            let inner = 2.0 * (f.hw - post);
            let sw = q(inner / (2 * n + 1) as f64);
            for k in 0..n {
                let x = -f.hw + post + sw * (2 * k + 1) as f64;
                parts.push(boxed(
                    (x, x + sw),
                    (f.y0 + rail, y1 - rail),
                    (f.z0 + f.tb * 0.2, z1 - f.tb * 0.2),
                ));
            }
            union(parts)
        }
        2 => {
            let mut parts = Vec::new();
            frame(&mut parts);
            let n = rng.random_range(1..=4);
            let gap = (f.h - rail) / (n as f64 + 1.0);
            for k in 1..=n {
                let y = q(f.y0 + gap * k as f64);
                parts.push(boxed(
                    (-f.hw + post, f.hw - post),
                    (y, y + rail * 0.6),
                    (f.z0 + f.tb * 0.2, z1 - f.tb * 0.2),
                ));
            }
            union(parts)
        }
        3 => {
            let r = q(rng.random_range(0.15..0.5) * f.hw);
            let poly = rounded_rect(2.0 * f.hw, 2.0 * f.h, r, 0.0, f.y0, 4)
                .into_iter()
                .map(|p| [p[0], p[1].max(f.y0)])
                .collect::<Vec<_>>();
            let mut dedup: Vec<[f64; 2]> = Vec::new();
            for p in poly {
                if dedup.last() != Some(&p) && dedup.first() != Some(&p) {
                    dedup.push(p);
                }
            }
            prism(&dedup, 2, f.z0, z1)
        }
        _ => {
            let mut parts = Vec::new();
            frame(&mut parts);
            let splat = q(rng.random_range(0.25..0.5) * f.hw);
            parts.push(boxed(
                (-splat, splat),
                (f.y0, y1 - rail),
                (f.z0 + f.tb * 0.25, z1 - f.tb * 0.25),
            ));
            union(parts)
        }
    };
    (mesh, z1)
}

fn armrest(c: &Chair, back_front: f64, rng: &mut ChaCha8Rng) -> TriangleMesh {
    let aw = q(rng.random_range(0.04..0.08));
    let ah = q(rng.random_range(0.2..0.35));
    let at = q(rng.random_range(0.03..0.06));
    let x1 = c.w / 2.0;
    let x0 = x1 - aw;
    let zf = c.d / 2.0 - q(rng.random_range(0.0..0.1));
    let zb = back_front + q(rng.random_range(0.05..0.15));
    let y0 = c.top();
    let support = if rng.random_bool(0.5) {
        boxed((x0, x1), (y0, y0 + ah), (zf - aw - 0.05, zf - 0.05))
    } else {
        let r = aw / 2.0;
        cylinder(Point3::new(x0 + r, y0, zf - 0.05 - r), r, ah, 10, 2)
    };
    let rest = boxed((x0, x1), (y0 + ah, y0 + ah + at), (zb, zf));
    union(vec![support, rest])
}

fn push_part(
    parts: &mut Vec<ManifestPart>,
    meshes: &mut Vec<TriangleMesh>,
    model: &str,
    name: &str,
    category: &str,
    mut mesh: TriangleMesh,
) {
    mesh.cleanup();
    parts.push(ManifestPart {
        id: format!("{model}_{name}"),
        file: format!("meshes/{model}_{name}.obj"),
        category: category.to_string(),
        contacts: None,
    });
    meshes.push(mesh);
}

fn adjacency(model: &str, pairs: &[(&str, &str)]) -> Vec<[String; 2]> {
    pairs
        .iter()
        .map(|(a, b)| [format!("{model}_{a}"), format!("{model}_{b}")])
        .collect()
}

/// Chairs with a seat, a back, one multi-piece `legs` part and, for about
/// half of them, a mirrored pair of armrests. Every part has continuous
/// random dimensions, so no two parts coincide. The representative is the
/// first chair with armrests.
pub fn desk_corpus(chairs: usize, seed: u64) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models = Vec::new();
    let mut meshes = Vec::new();
    for i in 0..chairs {
        let id = format!("chair{i:03}");
        let c = Chair::random(&mut rng);
        let mut parts = Vec::new();
        push_part(
            &mut parts,
            &mut meshes,
            &id,
            "seat",
            "seat",
            seat(&c, &mut rng),
        );
        let (b, back_front) = back(&c, &mut rng);
        push_part(&mut parts, &mut meshes, &id, "back", "back", b);
        push_part(
            &mut parts,
            &mut meshes,
            &id,
            "legs",
            "legs",
            legs(&c, &mut rng, None),
        );
        let mut adj = vec![("seat", "back"), ("seat", "legs")];
        if rng.random_bool(0.5) {
            let right = armrest(&c, back_front, &mut rng);
            let left = mirror_x(&right);
            push_part(&mut parts, &mut meshes, &id, "arm_r", "armrest", right);
            push_part(&mut parts, &mut meshes, &id, "arm_l", "armrest", left);
            adj.push(("seat", "arm_r"));
            adj.push(("seat", "arm_l"));
        }
        models.push(ManifestModel {
            adjacency: adjacency(&id, &adj),
            id,
            class: "chair".into(),
            parts,
        });
    }
    let armed = models.iter().find(|m| m.parts.len() > 3).or(models.first());
    let representative = armed
        .map(|m| ("chair".to_string(), m.id.clone()))
        .into_iter()
        .collect();
    SynthCorpus {
        manifest: Manifest {
            name: format!("desk-{chairs}-{seed}"),
            upright: [0.0, 1.0, 0.0],
            representative,
            thresholds: Thresholds::default(),
            models,
        },
        meshes,
    }
}

/// Family of a chair in [`style_corpus`].
pub fn style_family(model_id: &str) -> Option<&'static str> {
    if model_id.starts_with("round") {
        Some("round")
    } else if model_id.starts_with("square") {
        Some("square")
    } else {
        None
    }
}

/// Two style families sharing proportions: round seats with an inner ring
/// and round backs with horizontal bars, against square seats with an inner
/// square and square backs with vertical bars.
pub fn style_corpus(per_family: usize, seed: u64) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models = Vec::new();
    let mut meshes = Vec::new();
    for family in ["round", "square"] {
        for i in 0..per_family {
            let id = format!("{family}{i:02}");
            let size = q(rng.random_range(0.8..1.1));
            let c = Chair {
                w: size,
                d: size,
                t: q(rng.random_range(0.05..0.1)),
                leg_h: q(rng.random_range(0.7..0.9)),
            };
            let half = size / 2.0;
            let plate = q(rng.random_range(0.55..0.8)) * half;
            let lift = 0.02;
            let seat = if family == "round" {
                let mut m = prism(&circle(half, 0.0, 0.0, 32), 1, c.leg_h, c.top());
                m.append(&prism(
                    &circle(plate, 0.0, 0.0, 32),
                    1,
                    c.top(),
                    c.top() + lift,
                ));
                m
            } else {
                let mut m = boxed((-half, half), (c.leg_h, c.top()), (-half, half));
                m.append(&boxed(
                    (-plate, plate),
                    (c.top(), c.top() + lift),
                    (-plate, plate),
                ));
                m
            };
            let bh = q(rng.random_range(0.4..0.5)) * 2.0;
            let bt = q(rng.random_range(0.04..0.07));
            let (z0, z1) = (-half, -half + bt);
            let y0 = c.top();
            let bars = rng.random_range(3..=5);
            let bar = q(rng.random_range(0.03..0.05));
            let back = if family == "round" {
                let r = bh / 2.0;
                let mut parts = vec![prism(&circle(r, 0.0, y0 + r, 32), 2, z0, z1)];
                for k in 1..=bars {
                    let y = y0 + bh * k as f64 / (bars + 1) as f64;
                    let hw = (r * r - (y - y0 - r).powi(2)).max(0.0).sqrt() * 0.8;
                    parts.push(boxed(
                        (-hw, hw),
                        (y - bar / 2.0, y + bar / 2.0),
                        (z1, z1 + lift),
                    ));
                }
                union(parts)
            } else {
                let hw = bh / 2.0;
                let mut parts = vec![boxed((-hw, hw), (y0, y0 + bh), (z0, z1))];
                for k in 1..=bars {
                    let x = -hw + bh * k as f64 / (bars + 1) as f64;
                    parts.push(boxed(
                        (x - bar / 2.0, x + bar / 2.0),
                        (y0 + 0.1 * bh, y0 + 0.9 * bh),
                        (z1, z1 + lift),
                    ));
                }
                union(parts)
            };
            let style = rng.random_range(0..2);
            let legs = legs(&c, &mut rng, Some(style));
            let mut parts = Vec::new();
            push_part(&mut parts, &mut meshes, &id, "seat", "seat", seat);
            push_part(&mut parts, &mut meshes, &id, "back", "back", back);
            push_part(&mut parts, &mut meshes, &id, "legs", "legs", legs);
            models.push(ManifestModel {
                adjacency: adjacency(&id, &[("seat", "back"), ("seat", "legs")]),
                id,
                class: "chair".into(),
                parts,
            });
        }
    }
    let representative = [("chair".to_string(), "round00".to_string())]
        .into_iter()
        .collect();
    SynthCorpus {
        manifest: Manifest {
            name: format!("styles-{per_family}-{seed}"),
            upright: [0.0, 1.0, 0.0],
            representative,
            thresholds: Thresholds::default(),
            models,
        },
        meshes,
    }
}
