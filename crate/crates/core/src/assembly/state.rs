//! The model under construction: slots taken from a reference model and the
//! parts placed into them.

use nalgebra::{Matrix4, Point3};
use serde::{Deserialize, Serialize};

use super::fit::{fit_to_sketch, PlaneBox};
use super::place::{
    mirror_transform, offset_translation, plane_alignment, relative_translation,
    translation_matrix, within_slack,
};
use super::snap::{snap_contacts, SnapHandle, SnapParams, SnapReport};
use super::stitch::{stitch, StitchParams, StitchReport};
use crate::config::AssemblyConfig;
use crate::dataset::{Part, PartDatabase};
use crate::geometry::contact::connector_extents;
use crate::geometry::{
    compute_obb, insertion_ratios, OrientedBoundingBox, ReflectionPlane, TriangleMesh,
};
use crate::render::ViewDirection;
use crate::retrieval::ContextSet;
use crate::{Error, Result};

/// Fraction of the model diagonal within which a neighbor's stored contact
/// is preferred over its nearest surface point as a snap target.
const CONTACT_TARGET_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub category: String,
    /// Part of the reference model this slot stands for.
    pub reference: Option<usize>,
    pub neighbors: Vec<usize>,
    pub counterpart: Option<usize>,
    /// Projected bounds of the reference part in the working view.
    pub shadow: Option<PlaneBox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementRule {
    /// Only fitted to the sketch; no placed neighbor to relate to.
    FitOnly,
    /// Insertion ratios transferred from the source neighbor.
    Relative,
    /// Box-relative offset kept because the source has no adjacent part in
    /// the neighbor's category.
    Offset,
    /// Reflected from the counterpart slot.
    Mirrored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub slot: usize,
    pub category: String,
    pub part_id: String,
    pub rule: PlacementRule,
    /// Placed part the rule was evaluated against.
    pub anchor: Option<String>,
    pub source_ratios: Option<[f64; 3]>,
    pub achieved_ratios: Option<[f64; 3]>,
    pub fallback: bool,
    pub plane_aligned: bool,
    pub snap: Option<SnapReport>,
    pub stitch: Vec<StitchReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedPart {
    pub part: usize,
    pub part_id: String,
    /// Rigid-plus-scale map from the part's source pose; excludes snapping
    /// and stitching deformations, which are baked into `mesh`.
    pub transform: Matrix4<f64>,
    pub mesh: TriangleMesh,
    pub obb: OrientedBoundingBox,
    pub plane: Option<ReflectionPlane>,
    pub mirrored_from: Option<usize>,
    pub report: PlacementReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyState {
    pub reference_model: usize,
    pub view: ViewDirection,
    /// Global symmetry plane of the target, inherited from the reference.
    pub plane: Option<ReflectionPlane>,
    pub diagonal: f64,
    pub slots: Vec<Slot>,
    pub placed: Vec<Option<PlacedPart>>,
    /// Slots in the order they were (re)filled.
    pub order: Vec<usize>,
}

impl AssemblyState {
    pub fn new(db: &PartDatabase, reference_model: usize, view: ViewDirection) -> AssemblyState {
        let model = &db.models[reference_model];
        let slots: Vec<Slot> = model
            .parts
            .iter()
            .map(|&p| Slot {
                category: db.parts[p].category.clone(),
                reference: Some(p),
                neighbors: model
                    .neighbors(p)
                    .into_iter()
                    .filter_map(|n| model.parts.iter().position(|&x| x == n))
                    .collect(),
                counterpart: model
                    .counterpart(p)
                    .and_then(|c| model.parts.iter().position(|&x| x == c)),
                shadow: PlaneBox::of_points(&db.parts[p].mesh.vertices, &view),
            })
            .collect();
        AssemblyState {
            reference_model,
            view,
            plane: model.plane,
            diagonal: model.diagonal,
            placed: vec![None; slots.len()],
            slots,
            order: Vec::new(),
        }
    }

    /// Changes the working view and reprojects the reference shadows.
    pub fn set_view(&mut self, db: &PartDatabase, view: ViewDirection) {
        self.view = view;
        for slot in &mut self.slots {
            if let Some(r) = slot.reference {
                slot.shadow = PlaneBox::of_points(&db.parts[r].mesh.vertices, &view);
            }
        }
    }

    pub fn filled(&self) -> impl Iterator<Item = (usize, &PlacedPart)> {
        self.order
            .iter()
            .filter_map(|&s| self.placed[s].as_ref().map(|p| (s, p)))
    }

    /// Empty slots adjacent to a filled one; every empty slot while nothing
    /// is placed.
    pub fn open_slots(&self) -> Vec<usize> {
        let any = self.placed.iter().any(|p| p.is_some());
        (0..self.slots.len())
            .filter(|&s| self.placed[s].is_none())
            .filter(|&s| {
                !any || self.slots[s]
                    .neighbors
                    .iter()
                    .any(|&n| self.placed[n].is_some())
            })
            .collect()
    }

    /// Slot a sketch of `category` goes to: an empty slot of that category
    /// first, the one whose shadow overlaps the sketch most; a new slot when
    /// the reference has no such category.
    pub fn slot_for(&mut self, category: &str, sketch: Option<&PlaneBox>) -> usize {
        let candidates: Vec<usize> = (0..self.slots.len())
            .filter(|&s| self.slots[s].category == category)
            .collect();
        if candidates.is_empty() {
            self.slots.push(Slot {
                category: category.to_string(),
                reference: None,
                neighbors: Vec::new(),
                counterpart: None,
                shadow: sketch.copied(),
            });
            self.placed.push(None);
            return self.slots.len() - 1;
        }
        let overlap = |s: usize| match (sketch, &self.slots[s].shadow) {
            (Some(a), Some(b)) => a.iou(b),
            _ => 0.0,
        };
        let pick = |pool: &[usize]| {
            pool.iter()
                .copied()
                .max_by(|&a, &b| overlap(a).total_cmp(&overlap(b)).then(b.cmp(&a)))
        };
        let empty: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&s| self.placed[s].is_none())
            .collect();
        if sketch.is_none() {
            if let Some(&s) = empty.first() {
                return s;
            }
        }
        if let Some(s) = pick(&empty).filter(|&s| overlap(s) > 0.0 || sketch.is_none()) {
            return s;
        }
        if let Some(s) = pick(&empty) {
            if candidates.iter().all(|&c| overlap(c) <= 0.0) {
                return s;
            }
        }
        pick(&candidates).unwrap()
    }

    /// Context for retrieval into `slot`: parts placed in adjacent slots.
    pub fn context(&self, slot: usize) -> ContextSet {
        let mut parts: Vec<usize> = self.slots[slot]
            .neighbors
            .iter()
            .filter_map(|&n| self.placed[n].as_ref().map(|p| p.part))
            .collect();
        if self.slots[slot].reference.is_none() {
            parts.extend(self.placed.iter().flatten().map(|p| p.part));
        }
        ContextSet::new(parts)
    }

    fn placed_neighbors(&self, slot: usize) -> Vec<usize> {
        let adjacent = &self.slots[slot].neighbors;
        self.order
            .iter()
            .copied()
            .filter(|s| adjacent.contains(s) && self.placed[*s].is_some())
            .collect()
    }

    pub fn remove(&mut self, slot: usize) -> Result<()> {
        self.check_slot(slot)?;
        self.placed[slot] = None;
        self.order.retain(|&s| s != slot);
        Ok(())
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.slots.len() {
            return Err(Error::InvalidArgument(format!(
                "slot {slot} out of range (model has {} slots)",
                self.slots.len()
            )));
        }
        Ok(())
    }

    /// Places part `part` into `slot`, fitted to `sketch` (or to the slot's
    /// shadow), then mirrors its counterpart when the source has one.
    /// Returns the slots that changed.
    pub fn place(
        &mut self,
        db: &PartDatabase,
        cfg: &AssemblyConfig,
        slot: usize,
        part: usize,
        sketch: Option<&PlaneBox>,
    ) -> Result<Vec<usize>> {
        self.check_slot(slot)?;
        let p = db
            .parts
            .get(part)
            .ok_or_else(|| Error::UnknownPart(part.to_string()))?;
        if p.category != self.slots[slot].category {
            return Err(Error::InvalidArgument(format!(
                "part {} is a {}, slot {slot} holds a {}",
                p.id, p.category, self.slots[slot].category
            )));
        }
        let target = sketch.copied().or(self.slots[slot].shadow);
        let fit = fit_to_sketch(&p.mesh, target.as_ref(), &self.view);
        let (transform, mut report) = self.relate(db, slot, p, fit);
        let placed = self.finish(db, cfg, slot, p, transform, None, &mut report);
        self.store(slot, placed);
        let mut changed = vec![slot];
        if let Some(mirror) = self.mirror(db, cfg, slot, p, &transform) {
            changed.push(mirror);
        }
        Ok(changed)
    }

    fn relate(
        &self,
        db: &PartDatabase,
        slot: usize,
        p: &Part,
        fit: Matrix4<f64>,
    ) -> (Matrix4<f64>, PlacementReport) {
        let fitted = compute_obb(&p.mesh.transformed(&fit));
        let mut report = PlacementReport {
            slot,
            category: p.category.clone(),
            part_id: p.id.clone(),
            rule: PlacementRule::FitOnly,
            anchor: None,
            source_ratios: None,
            achieved_ratios: None,
            fallback: false,
            plane_aligned: false,
            snap: None,
            stitch: Vec::new(),
        };
        let neighbors = self.placed_neighbors(slot);
        let model = &db.models[p.model];
        let adjacent_in = |category: &str| {
            model
                .neighbors(p.index)
                .into_iter()
                .find(|&q| db.parts[q].category == category)
        };
        let mut transform = fit;
        let mut anchor = None;
        let mut slack = None;
        for &n in &neighbors {
            let qp = self.placed[n].as_ref().unwrap();
            if let Some(q) = adjacent_in(&self.slots[n].category) {
                let rel = relative_translation(&p.obb, &db.parts[q].obb, &fitted, &qp.obb);
                transform = translation_matrix(&rel.translation) * fit;
                slack = Some(rel.slack);
                report.rule = PlacementRule::Relative;
                report.source_ratios = Some(rel.source_ratios);
                report.fallback = rel.fallback;
                anchor = Some((n, q));
                break;
            }
        }
        if anchor.is_none() {
            if let Some(&n) = neighbors.first() {
                let qp = self.placed[n].as_ref().unwrap();
                report.fallback = true;
                if let Some(q) = db.model_part_in(p.model, &self.slots[n].category) {
                    let t = offset_translation(&p.obb, &db.parts[q].obb, &fitted, &qp.obb);
                    transform = translation_matrix(&t) * fit;
                    report.rule = PlacementRule::Offset;
                }
                report.anchor = Some(qp.part_id.clone());
            }
        }
        if let Some((n, q)) = anchor {
            let qp = self.placed[n].as_ref().unwrap();
            report.anchor = Some(qp.part_id.clone());
            if p.self_symmetric && db.parts[q].self_symmetric {
                if let (Some(pp), Some(qplane)) = (p.plane, qp.plane) {
                    if let (Some(shift), Some(free)) =
                        (plane_alignment(&pp.transformed(&transform), &qplane), slack)
                    {
                        let (kept, whole) =
                            within_slack(&shift, &qp.obb.axes, &free, 1e-9 * self.diagonal);
                        transform = translation_matrix(&kept) * transform;
                        report.plane_aligned = whole;
                    }
                }
            }
            let placed_obb = compute_obb(&p.mesh.transformed(&transform));
            report.achieved_ratios = Some(insertion_ratios(&placed_obb, &qp.obb).as_array());
        }
        (transform, report)
    }

    /// Applies `transform`, snaps and stitches against placed neighbors.
    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        db: &PartDatabase,
        cfg: &AssemblyConfig,
        slot: usize,
        p: &Part,
        transform: Matrix4<f64>,
        mirrored_from: Option<usize>,
        report: &mut PlacementReport,
    ) -> PlacedPart {
        let mut mesh = p.mesh.transformed(&transform);
        let model = &db.models[p.model];
        let th = &db.thresholds;
        let diag = self.diagonal.max(1e-12);
        let mut handles = Vec::new();
        let mut joints = Vec::new();
        for n in self.placed_neighbors(slot) {
            let qp = self.placed[n].as_ref().unwrap();
            let Some(q) = model
                .neighbors(p.index)
                .into_iter()
                .find(|&q| db.parts[q].category == self.slots[n].category)
            else {
                continue;
            };
            let qsrc = &db.parts[qp.part];
            let qmodel = &db.models[qsrc.model];
            let q_side: Vec<(usize, Vec<Point3<f64>>)> = qmodel
                .neighbors(qsrc.index)
                .into_iter()
                .filter(|&x| db.parts[x].category == p.category)
                .map(|x| {
                    let pts = qsrc
                        .contact_points_with(x)
                        .iter()
                        .map(|c| qp.transform.transform_point(c))
                        .collect();
                    (x, pts)
                })
                .collect();
            let probe: Vec<Point3<f64>> = p
                .contact_points_with(q)
                .iter()
                .map(|c| transform.transform_point(c))
                .collect();
            let gap = |pts: &[Point3<f64>]| {
                probe
                    .iter()
                    .map(|a| {
                        pts.iter()
                            .map(|b| (a - b).norm())
                            .fold(f64::INFINITY, f64::min)
                    })
                    .sum::<f64>()
            };
            let q_points: Vec<Point3<f64>> = q_side
                .iter()
                .map(|(_, v)| v)
                .min_by(|a, b| gap(a).total_cmp(&gap(b)))
                .cloned()
                .unwrap_or_default();
            let touching = th.contact_eps * diag;
            let mut p_points = Vec::new();
            for c in p.contacts_with(q) {
                let Some(first) = c.points.first() else {
                    continue;
                };
                let source = transform.transform_point(first);
                if qp
                    .mesh
                    .closest_point(&source)
                    .is_some_and(|s| s.distance <= touching)
                {
                    p_points.extend(c.points.iter().map(|x| transform.transform_point(x)));
                    continue;
                }
                let stored = q_points
                    .iter()
                    .map(|t| (*t, (t - source).norm()))
                    .filter(|(_, d)| *d <= CONTACT_TARGET_RADIUS * diag)
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(t, _)| t);
                let target = stored
                    .or_else(|| qp.mesh.closest_point(&source).map(|s| s.point))
                    .unwrap_or(source);
                handles.push(SnapHandle { source, target });
                p_points.extend(
                    c.points
                        .iter()
                        .map(|x| transform.transform_point(x) + (target - source)),
                );
            }
            let smooth = p.smooth.get(&q).copied().unwrap_or(false)
                && q_side
                    .iter()
                    .any(|(x, _)| qsrc.smooth.get(x).copied().unwrap_or(false));
            let radius = th.connector_radius * model.diagonal;
            let ratio = match (
                connector_extents(&p.mesh, &p.contact_points_with(q), radius),
                connector_extents(
                    &db.parts[q].mesh,
                    &db.parts[q].contact_points_with(p.index),
                    radius,
                ),
            ) {
                (Some(a), Some(b)) if b.iter().all(|&x| x > 0.0) => [a[0] / b[0], a[1] / b[1]],
                _ => [1.0, 1.0],
            };
            let grow = transform
                .fixed_view::<3, 3>(0, 0)
                .determinant()
                .abs()
                .cbrt();
            let clearance: Vec<f64> = p
                .mesh
                .vertices
                .iter()
                .map(|v| {
                    db.parts[q]
                        .mesh
                        .closest_point(v)
                        .map_or(0.0, |s| s.distance * grow)
                })
                .collect();
            joints.push((n, p_points, q_points, smooth, ratio, clearance));
        }
        if !handles.is_empty() {
            let params =
                SnapParams::new(cfg.snap_max_iter, cfg.snap_tolerance * diag, cfg.snap_beta);
            report.snap = Some(snap_contacts(&mut mesh, &handles, &params));
        }
        let sp = StitchParams {
            connector_radius: th.connector_radius * diag,
            weld_distance: 2.0 * th.contact_eps * diag,
            match_tolerance: cfg.stitch_band,
        };
        for (n, pp, qq, smooth, ratio, clearance) in joints {
            let qp = self.placed[n].as_ref().unwrap();
            report.stitch.push(stitch(
                &mut mesh,
                &pp,
                &qp.mesh,
                &qq,
                smooth,
                ratio,
                &clearance,
                &qp.part_id,
                &sp,
            ));
        }
        PlacedPart {
            part: p.index,
            part_id: p.id.clone(),
            transform,
            obb: compute_obb(&mesh),
            plane: if p.self_symmetric {
                p.plane.map(|pl| pl.transformed(&transform))
            } else {
                None
            },
            mesh,
            mirrored_from,
            report: report.clone(),
        }
    }

    fn store(&mut self, slot: usize, placed: PlacedPart) {
        self.placed[slot] = Some(placed);
        self.order.retain(|&s| s != slot);
        self.order.push(slot);
    }

    fn mirror(
        &mut self,
        db: &PartDatabase,
        cfg: &AssemblyConfig,
        slot: usize,
        p: &Part,
        transform: &Matrix4<f64>,
    ) -> Option<usize> {
        let model = &db.models[p.model];
        let c = model.counterpart(p.index)?;
        let (source_plane, target_plane) = (model.plane?, self.plane?);
        let counterpart = &db.parts[c];
        let target_slot = self.slots[slot]
            .counterpart
            .filter(|&s| self.slots[s].category == counterpart.category && s != slot)
            .or_else(|| {
                (0..self.slots.len()).find(|&s| {
                    s != slot
                        && self.placed[s].is_none()
                        && self.slots[s].category == counterpart.category
                })
            })?;
        let tc = mirror_transform(transform, &source_plane, &target_plane);
        let mut report = PlacementReport {
            slot: target_slot,
            category: counterpart.category.clone(),
            part_id: counterpart.id.clone(),
            rule: PlacementRule::Mirrored,
            anchor: Some(p.id.clone()),
            source_ratios: None,
            achieved_ratios: None,
            fallback: false,
            plane_aligned: false,
            snap: None,
            stitch: Vec::new(),
        };
        let placed = self.finish(
            db,
            cfg,
            target_slot,
            counterpart,
            tc,
            Some(slot),
            &mut report,
        );
        self.store(target_slot, placed);
        Some(target_slot)
    }

    pub fn reports(&self) -> Vec<PlacementReport> {
        self.filled().map(|(_, p)| p.report.clone()).collect()
    }

    /// Union of all placed meshes.
    pub fn merged_mesh(&self) -> TriangleMesh {
        let mut out = TriangleMesh::default();
        for (_, p) in self.filled() {
            out.append(&p.mesh);
        }
        out
    }

    /// Wavefront OBJ with one group per placed part.
    pub fn to_obj(&self) -> String {
        let mut out = String::from("# partsketch assembly\n");
        let mut base = 0;
        for (slot, p) in self.filled() {
            out.push_str(&format!(
                "g slot{}_{}_{}\n",
                slot, self.slots[slot].category, p.part_id
            ));
            p.mesh.write_obj_body(&mut out, base);
            base += p.mesh.vertices.len();
        }
        out
    }
}
