//! Segmented-model datasets: manifest ingestion and offline analysis.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::{Point3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{
    compute_obb, connector_smoothness, detect_global_symmetry, detect_inter_part_symmetry,
    detect_pair_contacts, OrientedBoundingBox, ReflectionPlane, TriangleMesh,
};
use crate::render::{common_view, ViewDirection};

/// Analysis thresholds, relative to each model's bounding-box diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub contact_eps: f64,
    pub symmetry_tau: f64,
    pub connector_radius: f64,
    pub smoothness_band: f64,
    pub symmetry_samples: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            contact_eps: 0.005,
            symmetry_tau: 0.02,
            connector_radius: 0.05,
            smoothness_band: 0.2,
            symmetry_samples: 1024,
        }
    }
}

/// On-disk manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    /// Upright direction of the stored meshes; rotated to +Y on load.
    #[serde(default = "default_upright")]
    pub upright: [f64; 3],
    /// Representative model id per class.
    pub representative: BTreeMap<String, String>,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub models: Vec<ManifestModel>,
}

fn default_upright() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestModel {
    pub id: String,
    pub class: String,
    pub parts: Vec<ManifestPart>,
    #[serde(default)]
    pub adjacency: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestPart {
    pub id: String,
    /// OBJ path relative to the manifest.
    pub file: String,
    pub category: String,
    /// Declared contacts; detected when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contacts: Option<Vec<ManifestContact>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestContact {
    pub neighbor: String,
    pub points: Vec<[f64; 3]>,
}

/// Contact cluster on a part, tagged with the neighbor's global index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartContact {
    pub neighbor: usize,
    /// First point is the cluster's handle.
    pub points: Vec<Point3<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub id: String,
    pub index: usize,
    pub model: usize,
    pub category: String,
    pub mesh: TriangleMesh,
    pub obb: OrientedBoundingBox,
    pub self_symmetric: bool,
    /// The model's global plane when the part is self-symmetric.
    pub plane: Option<ReflectionPlane>,
    pub contacts: Vec<PartContact>,
    /// Whether each connector (keyed by neighbor) is locally smooth.
    pub smooth: BTreeMap<usize, bool>,
}

impl Part {
    pub fn contacts_with(&self, neighbor: usize) -> impl Iterator<Item = &PartContact> {
        self.contacts.iter().filter(move |c| c.neighbor == neighbor)
    }

    pub fn contact_points_with(&self, neighbor: usize) -> Vec<Point3<f64>> {
        self.contacts_with(neighbor)
            .flat_map(|c| c.points.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedModel {
    pub id: String,
    pub class: String,
    pub index: usize,
    /// Global part indices.
    pub parts: Vec<usize>,
    /// Global index pairs, `a < b`.
    pub adjacency: Vec<(usize, usize)>,
    pub plane: Option<ReflectionPlane>,
    /// Inter-part symmetric pairs as global indices.
    pub symmetric_pairs: Vec<(usize, usize)>,
    pub diagonal: f64,
}

impl SegmentedModel {
    pub fn neighbors(&self, part: usize) -> Vec<usize> {
        self.adjacency
            .iter()
            .filter_map(|&(a, b)| {
                if a == part {
                    Some(b)
                } else if b == part {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn counterpart(&self, part: usize) -> Option<usize> {
        self.symmetric_pairs.iter().find_map(|&(a, b)| {
            if a == part {
                Some(b)
            } else if b == part {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency.contains(&(a.min(b), a.max(b)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartDatabase {
    pub name: String,
    pub models: Vec<SegmentedModel>,
    pub parts: Vec<Part>,
    pub by_category: BTreeMap<String, Vec<usize>>,
    pub common_views: BTreeMap<String, ViewDirection>,
    /// Representative model index per class.
    pub representatives: BTreeMap<String, usize>,
    pub thresholds: Thresholds,
    /// SHA-256 over the manifest and every mesh file.
    pub content_hash: String,
}

impl PartDatabase {
    pub fn part_index(&self, id: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.id == id)
    }

    pub fn model_index(&self, id: &str) -> Option<usize> {
        self.models.iter().position(|m| m.id == id)
    }

    pub fn categories(&self) -> Vec<String> {
        self.by_category.keys().cloned().collect()
    }

    pub fn classes(&self) -> Vec<String> {
        self.representatives.keys().cloned().collect()
    }

    pub fn category_parts(&self, category: &str) -> Result<&[usize]> {
        self.by_category
            .get(category)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownCategory {
                category: category.to_string(),
                available: self.categories(),
            })
    }

    /// The part of `model` in `category`, lowest index first.
    pub fn model_part_in(&self, model: usize, category: &str) -> Option<usize> {
        self.models[model]
            .parts
            .iter()
            .copied()
            .find(|&p| self.parts[p].category == category)
    }

    pub fn neighbors(&self, part: usize) -> Vec<usize> {
        self.models[self.parts[part].model].neighbors(part)
    }
}

/// Per-model analysis results, cached next to the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelAnalysis {
    plane: Option<ReflectionPlane>,
    pairs: Vec<(usize, usize)>,
    self_symmetric: Vec<bool>,
    obbs: Vec<OrientedBoundingBox>,
    contacts: Vec<Vec<PartContact>>,
    smooth: Vec<BTreeMap<usize, bool>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnalysisCache {
    magic: [u8; 8],
    key: String,
    models: Vec<ModelAnalysis>,
}

const CACHE_MAGIC: [u8; 8] = *b"PSKANAL1";

/// Path of the analysis sidecar for a manifest.
pub fn analysis_cache_path(manifest: &Path) -> PathBuf {
    let mut s = manifest.as_os_str().to_owned();
    s.push(".analysis.bin");
    PathBuf::from(s)
}

fn rotation_to_up(upright: [f64; 3]) -> Result<Rotation3<f64>> {
    let u = Vector3::from(upright);
    if u.norm() < 1e-12 {
        return Err(Error::Manifest("upright must be a non-zero vector".into()));
    }
    let u = u.normalize();
    Ok(
        Rotation3::rotation_between(&u, &Vector3::y()).unwrap_or_else(|| {
            // Opposite vectors: half turn about x.
            Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::x()), std::f64::consts::PI)
        }),
    )
}

/// Loads a manifest, its meshes, and the offline analysis (from the sidecar
/// cache when its key matches).
pub fn load_dataset(manifest_path: &Path) -> Result<PartDatabase> {
    load_dataset_with(manifest_path, true)
}

pub fn load_dataset_with(manifest_path: &Path, use_cache: bool) -> Result<PartDatabase> {
    let text = std::fs::read(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_slice(&text)
        .map_err(|e| Error::Manifest(format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut hasher = Sha256::new();
    hasher.update(&text);

    let rot = rotation_to_up(manifest.upright)?.to_homogeneous();
    let mut meshes = Vec::new();
    for m in &manifest.models {
        for p in &m.parts {
            let path = base.join(&p.file);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
            let mut mesh =
                TriangleMesh::parse_obj(&String::from_utf8_lossy(&bytes)).map_err(|message| {
                    Error::MeshParse {
                        path: path.clone(),
                        message,
                    }
                })?;
            mesh.cleanup();
            if mesh.triangles.is_empty() {
                return Err(Error::MeshParse {
                    path,
                    message: "mesh has no triangles".into(),
                });
            }
            mesh.transform_in_place(&rot);
            meshes.push(mesh);
        }
    }
    let content_hash = hex::encode(hasher.finalize());
    let cache_path = analysis_cache_path(manifest_path);
    let cached = if use_cache {
        read_cache(&cache_path, &content_hash)
    } else {
        None
    };
    let db = assemble(manifest, meshes, content_hash.clone(), cached.as_deref())?;
    if use_cache && cached.is_none() {
        write_cache(&cache_path, &content_hash, &db);
    }
    Ok(db)
}

fn read_cache(path: &Path, key: &str) -> Option<Vec<ModelAnalysis>> {
    let bytes = std::fs::read(path).ok()?;
    let cache: AnalysisCache = bincode::deserialize(&bytes).ok()?;
    if cache.magic != CACHE_MAGIC || cache.key != key {
        info!("analysis cache {} is stale", path.display());
        return None;
    }
    info!("analysis cache hit: {}", path.display());
    Some(cache.models)
}

fn write_cache(path: &Path, key: &str, db: &PartDatabase) {
    let models = db
        .models
        .iter()
        .map(|m| ModelAnalysis {
            plane: m.plane,
            pairs: m.symmetric_pairs.clone(),
            self_symmetric: m
                .parts
                .iter()
                .map(|&p| db.parts[p].self_symmetric)
                .collect(),
            obbs: m.parts.iter().map(|&p| db.parts[p].obb.clone()).collect(),
            contacts: m
                .parts
                .iter()
                .map(|&p| db.parts[p].contacts.clone())
                .collect(),
            smooth: m
                .parts
                .iter()
                .map(|&p| db.parts[p].smooth.clone())
                .collect(),
        })
        .collect();
    let cache = AnalysisCache {
        magic: CACHE_MAGIC,
        key: key.to_string(),
        models,
    };
    match bincode::serialize(&cache) {
        Ok(bytes) => {
            if let Err(e) = std::fs::write(path, bytes) {
                warn!("could not write analysis cache {}: {e}", path.display());
            }
        }
        Err(e) => warn!("could not encode analysis cache: {e}"),
    }
}

/// Builds and analyzes a database from a parsed manifest and its meshes (in
/// manifest order, already upright).
pub fn build_database(manifest: Manifest, meshes: Vec<TriangleMesh>) -> Result<PartDatabase> {
    assemble(manifest, meshes, String::new(), None)
}

fn assemble(
    manifest: Manifest,
    mut meshes: Vec<TriangleMesh>,
    content_hash: String,
    cached: Option<&[ModelAnalysis]>,
) -> Result<PartDatabase> {
    let th = manifest.thresholds;
    if manifest.models.is_empty() {
        return Err(Error::Manifest("manifest lists no models".into()));
    }
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut model_ids = BTreeSet::new();
    let mut parts = Vec::new();
    let mut models = Vec::new();
    let mut mesh_iter = meshes.drain(..);
    for (mi, m) in manifest.models.iter().enumerate() {
        let fail = |message: String| Error::Dataset {
            model: m.id.clone(),
            message,
        };
        if !model_ids.insert(m.id.clone()) {
            return Err(fail("duplicate model id".into()));
        }
        if m.class.is_empty() {
            return Err(fail("empty class".into()));
        }
        if m.parts.is_empty() {
            return Err(fail("model has no parts".into()));
        }
        let mut indices = Vec::new();
        for p in &m.parts {
            if p.category.is_empty() {
                return Err(fail(format!("part `{}` has an empty category", p.id)));
            }
            if ids.contains_key(&p.id) {
                return Err(fail(format!("duplicate part id `{}`", p.id)));
            }
            let mesh = mesh_iter
                .next()
                .ok_or_else(|| fail("missing mesh".into()))?;
            let index = parts.len();
            ids.insert(p.id.clone(), index);
            indices.push(index);
            parts.push(Part {
                id: p.id.clone(),
                index,
                model: mi,
                category: p.category.clone(),
                obb: compute_obb(&mesh),
                mesh,
                self_symmetric: false,
                plane: None,
                contacts: Vec::new(),
                smooth: BTreeMap::new(),
            });
        }
        let mut adjacency = BTreeSet::new();
        for [a, b] in &m.adjacency {
            let lookup = |id: &String| {
                ids.get(id)
                    .copied()
                    .filter(|i| parts[*i].model == mi)
                    .ok_or_else(|| fail(format!("adjacency names unknown part `{id}`")))
            };
            let (ia, ib) = (lookup(a)?, lookup(b)?);
            if ia == ib {
                return Err(fail(format!("part `{a}` is adjacent to itself")));
            }
            adjacency.insert((ia.min(ib), ia.max(ib)));
        }
        let diagonal = indices
            .iter()
            .map(|&i| parts[i].mesh.aabb())
            .reduce(|a, b| a.union(&b))
            .unwrap()
            .diagonal();
        models.push(SegmentedModel {
            id: m.id.clone(),
            class: m.class.clone(),
            index: mi,
            parts: indices,
            adjacency: adjacency.into_iter().collect(),
            plane: None,
            symmetric_pairs: Vec::new(),
            diagonal,
        });
    }

    match cached {
        Some(c) if c.len() == models.len() => {
            for (m, a) in models.iter_mut().zip(c) {
                m.plane = a.plane;
                m.symmetric_pairs = a.pairs.clone();
                for (k, &p) in m.parts.iter().enumerate() {
                    let part = &mut parts[p];
                    part.obb = a.obbs[k].clone();
                    part.self_symmetric = a.self_symmetric[k];
                    part.plane = if part.self_symmetric { a.plane } else { None };
                    part.contacts = a.contacts[k].clone();
                    part.smooth = a.smooth[k].clone();
                }
            }
        }
        _ => {
            for (mi, m) in manifest.models.iter().enumerate() {
                analyze_model(&mut models[mi], &mut parts, m, &ids, &th)?;
            }
        }
    }

    let mut by_category: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for p in &parts {
        by_category
            .entry(p.category.clone())
            .or_default()
            .push(p.index);
    }
    let common_views = by_category
        .iter()
        .map(|(c, list)| {
            let boxes: Vec<OrientedBoundingBox> =
                list.iter().map(|&i| parts[i].obb.clone()).collect();
            (
                c.clone(),
                common_view(&boxes).expect("category is non-empty"),
            )
        })
        .collect();
    let classes: BTreeSet<&String> = models.iter().map(|m| &m.class).collect();
    let mut representatives = BTreeMap::new();
    for class in classes {
        let rep = manifest.representative.get(class).ok_or_else(|| {
            Error::Manifest(format!("class `{class}` has no representative model"))
        })?;
        let mi = models
            .iter()
            .position(|m| &m.id == rep && &m.class == class)
            .ok_or_else(|| {
                Error::Manifest(format!(
                    "representative `{rep}` of class `{class}` is not a model of that class"
                ))
            })?;
        representatives.insert(class.clone(), mi);
    }
    for class in manifest.representative.keys() {
        if !representatives.contains_key(class) {
            return Err(Error::Manifest(format!(
                "representative given for unknown class `{class}`"
            )));
        }
    }
    info!(
        "loaded dataset `{}`: {} models, {} parts, {} categories",
        manifest.name,
        models.len(),
        parts.len(),
        by_category.len()
    );
    Ok(PartDatabase {
        name: manifest.name,
        models,
        parts,
        by_category,
        common_views,
        representatives,
        thresholds: th,
        content_hash,
    })
}

fn analyze_model(
    model: &mut SegmentedModel,
    parts: &mut [Part],
    manifest: &ManifestModel,
    ids: &HashMap<String, usize>,
    th: &Thresholds,
) -> Result<()> {
    let diag = model.diagonal;
    let mut union = TriangleMesh::default();
    for &p in &model.parts {
        union.append(&parts[p].mesh);
    }
    let seed = model.index as u64;
    let tau = th.symmetry_tau * diag;
    model.plane = detect_global_symmetry(&union, tau, th.symmetry_samples, seed).map(|m| m.plane);
    if let Some(plane) = model.plane {
        let meshes: Vec<&TriangleMesh> = model.parts.iter().map(|&p| &parts[p].mesh).collect();
        let sym = detect_inter_part_symmetry(&meshes, &plane, tau, th.symmetry_samples, seed);
        model.symmetric_pairs = sym
            .pairs
            .iter()
            .map(|&(a, b)| (model.parts[a], model.parts[b]))
            .collect();
        for (k, &p) in model.parts.iter().enumerate() {
            parts[p].self_symmetric = sym.self_symmetric[k];
            parts[p].plane = sym.self_symmetric[k].then_some(plane);
        }
    }

    let eps = th.contact_eps * diag;
    let spacing = (diag / 200.0).max(eps);
    let declared: BTreeMap<usize, &Vec<ManifestContact>> = manifest
        .parts
        .iter()
        .zip(&model.parts)
        .filter_map(|(mp, &gi)| mp.contacts.as_ref().map(|c| (gi, c)))
        .collect();
    for &(a, b) in &model.adjacency.clone() {
        let clusters: Vec<Vec<Point3<f64>>> =
            if let Some(list) = declared.get(&a).or(declared.get(&b)) {
                let owner = if declared.contains_key(&a) { a } else { b };
                let other = if owner == a { b } else { a };
                list.iter()
                    .filter(|c| ids.get(&c.neighbor) == Some(&other))
                    .map(|c| c.points.iter().map(|p| Point3::from(*p)).collect())
                    .collect()
            } else {
                detect_pair_contacts(&parts[a].mesh, &parts[b].mesh, eps, spacing)
            };
        if clusters.is_empty() {
            warn!(
                "model `{}`: adjacent parts `{}` and `{}` have no contacts",
                model.id, parts[a].id, parts[b].id
            );
        }
        for pts in &clusters {
            parts[a].contacts.push(PartContact {
                neighbor: b,
                points: pts.clone(),
            });
            parts[b].contacts.push(PartContact {
                neighbor: a,
                points: pts.clone(),
            });
        }
        let pa = parts[a].contact_points_with(b);
        let pb = parts[b].contact_points_with(a);
        let smooth = connector_smoothness(
            &parts[a].mesh,
            &pa,
            &parts[b].mesh,
            &pb,
            th.connector_radius * diag,
            th.smoothness_band,
        );
        parts[a].smooth.insert(b, smooth);
        parts[b].smooth.insert(a, smooth);
    }
    Ok(())
}
