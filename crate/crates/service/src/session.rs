//! One user's design session: the evolving assembly, its view, the last
//! gallery and pending suggestions.

use std::time::Instant;

use nalgebra::Vector3;
use partsketch_core::assembly::{AssemblyState, PlacementReport, PlaneBox};
use partsketch_core::engine::Engine;
use partsketch_core::features::VocabularyKind;
use partsketch_core::geometry::TriangleMesh;
use partsketch_core::render::image::encode_gray_png;
use partsketch_core::render::raster::{draw_segments, PEN_WIDTH};
use partsketch_core::render::{
    nearest_view, normalize_strokes, render_contour, visible_segments, Frame, LineImage, Stroke,
    ViewDirection,
};
use partsketch_core::retrieval::{Fallback, ScoredPart, Suggestion};
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

pub const DEFAULT_CANVAS: usize = 512;
pub const THUMB_SIZE: usize = 128;
/// Gray level of reference lines in slots that are still empty.
pub const FAINT_GRAY: u8 = 170;

/// Three-quarter view from the front right and slightly above; it is one of
/// the sampled views at every subdivision level from 1 up.
pub fn default_view() -> ViewDirection {
    let s5 = 5f64.sqrt();
    ViewDirection::new(Vector3::new(0.5, (s5 - 1.0) / 4.0, (s5 + 1.0) / 4.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
}

/// Body of a stroke submission. Each stroke is an ordered list of `[x, y]`
/// pixel positions, x right and y down, inside `canvas`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokeRequest {
    pub canvas: Canvas,
    pub strokes: Vec<Vec<[f64; 2]>>,
    pub category: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Retrieved,
    Suggested,
}

/// Weighted score terms; they add up to the entry's score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub sketch: f64,
    pub detail: f64,
    pub style: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub index: usize,
    pub part_id: String,
    pub category: String,
    pub score: f64,
    pub breakdown: Breakdown,
    pub origin: Origin,
    /// Path of the thumbnail relative to the session.
    pub thumbnail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gallery {
    /// Must be echoed by the selection that follows.
    pub token: String,
    pub slot: usize,
    pub category: String,
    pub fallback: Fallback,
    pub candidates: usize,
    pub entries: Vec<GalleryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionEntry {
    pub part_id: String,
    pub category: String,
    pub parent_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotInfo {
    pub index: usize,
    pub category: String,
    pub reference: Option<String>,
    pub placed: Option<String>,
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub changed_slots: Vec<usize>,
    pub placements: Vec<PlacementReport>,
    pub slots: Vec<SlotInfo>,
    pub suggestions: Vec<SuggestionEntry>,
    pub assembly_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub class: String,
    pub reference_model: String,
    pub view: [f64; 3],
    pub canvas: Canvas,
    pub lambda1: f64,
    pub lambda2: f64,
    pub slots: Vec<SlotInfo>,
    pub gallery_token: Option<String>,
}

#[derive(Debug, Clone)]
struct PendingGallery {
    gallery: Gallery,
    sketch: Option<PlaneBox>,
    results: Vec<ScoredPart>,
}

/// Checks a submission and rescales its strokes onto a square canvas of
/// `canvas` pixels.
pub fn canvas_strokes(req: &StrokeRequest, canvas: usize) -> ServiceResult<Vec<Stroke>> {
    let Canvas { width, height } = req.canvas;
    if width == 0 || height == 0 {
        return Err(ServiceError::Invalid("canvas size must be positive".into()));
    }
    if req.strokes.iter().all(|s| s.is_empty()) {
        return Err(ServiceError::Invalid("no strokes given".into()));
    }
    let (sx, sy) = (canvas as f64 / width as f64, canvas as f64 / height as f64);
    let mut out = Vec::with_capacity(req.strokes.len());
    for (i, s) in req.strokes.iter().enumerate() {
        for p in s {
            let inside = p[0].is_finite()
                && p[1].is_finite()
                && (0.0..=width as f64).contains(&p[0])
                && (0.0..=height as f64).contains(&p[1]);
            if !inside {
                return Err(ServiceError::Invalid(format!(
                    "stroke {i} has point {p:?} outside the {width}x{height} canvas"
                )));
            }
        }
        if !s.is_empty() {
            out.push(Stroke {
                points: s.iter().map(|p| [p[0] * sx, p[1] * sy]).collect(),
            });
        }
    }
    Ok(out)
}

/// Canonical query image for strokes in `frame`'s pixels, together with the
/// strokes' image-plane box.
pub fn rasterize_strokes(
    strokes: &[Stroke],
    frame: &Frame,
    image_size: usize,
) -> (LineImage, Option<PlaneBox>) {
    let img = normalize_strokes(strokes, image_size);
    let corners: Vec<_> = partsketch_core::render::stroke_bounds(strokes)
        .map(|(lo, hi)| vec![frame.unproject(lo[0], lo[1]), frame.unproject(hi[0], hi[1])])
        .unwrap_or_default();
    (img, PlaneBox::of_points(&corners, &frame.view))
}

/// Visible outline of `mesh` in `frame` as two-point strokes.
pub fn contour_strokes(mesh: &TriangleMesh, frame: &Frame, crease_deg: f64) -> Vec<Vec<[f64; 2]>> {
    visible_segments(&[mesh], frame, crease_deg)
        .into_iter()
        .flatten()
        .map(|s| vec![s[0], s[1]])
        .collect()
}

#[derive(Debug, Clone)]
pub struct DesignSession {
    pub id: String,
    pub class: String,
    pub reference_model: usize,
    pub view: ViewDirection,
    pub canvas: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub state: AssemblyState,
    /// Strokes of the last submission, in session canvas pixels.
    pub strokes: Vec<Stroke>,
    gallery: Option<PendingGallery>,
    suggestions: Vec<Suggestion>,
    galleries: u64,
}

impl DesignSession {
    pub fn new(
        engine: &Engine,
        id: String,
        class: &str,
        lambda1: f64,
        lambda2: f64,
        canvas: usize,
    ) -> ServiceResult<DesignSession> {
        let db = &engine.db;
        let Some(&model) = db.representatives.get(class) else {
            return Err(partsketch_core::Error::UnknownClass {
                class: class.to_string(),
                available: db.classes(),
            }
            .into());
        };
        for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(ServiceError::Invalid(format!(
                    "{name} must be a finite value >= 0, got {l}"
                )));
            }
        }
        if canvas < 16 {
            return Err(ServiceError::Invalid(format!(
                "canvas of {canvas} px is too small"
            )));
        }
        let view = default_view();
        Ok(DesignSession {
            id,
            class: class.to_string(),
            reference_model: model,
            view,
            canvas,
            lambda1,
            lambda2,
            state: AssemblyState::new(db, model, view),
            strokes: Vec::new(),
            gallery: None,
            suggestions: Vec::new(),
            galleries: 0,
        })
    }

    /// Camera of the shadow and of the stroke canvas: the reference model
    /// fitted to the canvas from the current view.
    pub fn frame(&self, engine: &Engine) -> Frame {
        let db = &engine.db;
        let verts = db.models[self.reference_model]
            .parts
            .iter()
            .flat_map(|&p| db.parts[p].mesh.vertices.iter());
        Frame::fit(verts, self.view, self.canvas)
    }

    pub fn info(&self, engine: &Engine) -> SessionInfo {
        let d = self.view.direction;
        SessionInfo {
            id: self.id.clone(),
            class: self.class.clone(),
            reference_model: engine.db.models[self.reference_model].id.clone(),
            view: [d.x, d.y, d.z],
            canvas: Canvas {
                width: self.canvas,
                height: self.canvas,
            },
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            slots: self.slots(engine),
            gallery_token: self.gallery.as_ref().map(|g| g.gallery.token.clone()),
        }
    }

    pub fn slots(&self, engine: &Engine) -> Vec<SlotInfo> {
        let open = self.state.open_slots();
        self.state
            .slots
            .iter()
            .enumerate()
            .map(|(i, s)| SlotInfo {
                index: i,
                category: s.category.clone(),
                reference: s.reference.map(|r| engine.db.parts[r].id.clone()),
                placed: self.state.placed[i].as_ref().map(|p| p.part_id.clone()),
                open: open.contains(&i),
            })
            .collect()
    }

    pub fn gallery(&self) -> Option<&Gallery> {
        self.gallery.as_ref().map(|g| &g.gallery)
    }

    /// Rasterizes and thins the strokes, retrieves parts for the slot the
    /// sketch belongs to and appends pending suggestions of that category.
    pub fn submit_strokes(
        &mut self,
        engine: &Engine,
        req: &StrokeRequest,
    ) -> ServiceResult<Gallery> {
        let strokes = canvas_strokes(req, self.canvas)?;
        engine.db.category_parts(&req.category)?;
        let frame = self.frame(engine);
        let (img, sketch) = rasterize_strokes(&strokes, &frame, engine.config.render.image_size);
        let slot = self.state.slot_for(&req.category, sketch.as_ref());
        let ctx = self.state.context(slot);
        let h = engine.encode(VocabularyKind::SketchPart, &img)?;
        let retriever = engine.retriever();
        let retrieval = retriever.retrieve(
            &h,
            &self.view,
            &req.category,
            &ctx,
            self.lambda1,
            self.lambda2,
            engine.config.retrieval.top_n,
        )?;
        let mut scored: Vec<(ScoredPart, Origin)> = retrieval
            .results
            .iter()
            .cloned()
            .map(|r| (r, Origin::Retrieved))
            .collect();
        let v = nearest_view(engine.views(), &self.view);
        for s in &self.suggestions {
            if engine.db.parts[s.part].category != req.category
                || scored.iter().any(|(r, _)| r.part == s.part)
            {
                continue;
            }
            let r = retriever.relevance_score(&h, s.part, v, &ctx, self.lambda1, self.lambda2)?;
            scored.push((r, Origin::Suggested));
        }
        self.galleries += 1;
        let entries = scored
            .iter()
            .enumerate()
            .map(|(i, (r, origin))| GalleryEntry {
                index: i,
                part_id: r.part_id.clone(),
                category: req.category.clone(),
                score: r.score,
                breakdown: Breakdown {
                    sketch: r.sketch_term,
                    detail: self.lambda1 * r.detail_term,
                    style: self.lambda2 * r.style_term,
                },
                origin: *origin,
                thumbnail: format!("gallery/{i}/thumb"),
            })
            .collect();
        let gallery = Gallery {
            token: format!("{}-g{}", self.id, self.galleries),
            slot,
            category: req.category.clone(),
            fallback: retrieval.fallback,
            candidates: retrieval.candidates,
            entries,
        };
        self.strokes = strokes;
        self.gallery = Some(PendingGallery {
            gallery: gallery.clone(),
            sketch,
            results: retrieval.results,
        });
        Ok(gallery)
    }

    /// Places a gallery part, then gathers suggestions for the slots that
    /// became open.
    pub fn select_part(
        &mut self,
        engine: &Engine,
        token: &str,
        part_id: &str,
    ) -> ServiceResult<Selection> {
        let pending = match &self.gallery {
            Some(g) if g.gallery.token == token => g,
            other => {
                return Err(ServiceError::StaleGallery {
                    given: token.to_string(),
                    current: other.as_ref().map(|g| g.gallery.token.clone()),
                })
            }
        };
        if !pending.gallery.entries.iter().any(|e| e.part_id == part_id) {
            return Err(ServiceError::NotInGallery(part_id.to_string()));
        }
        let part = engine
            .db
            .part_index(part_id)
            .ok_or_else(|| partsketch_core::Error::UnknownPart(part_id.to_string()))?;
        let slot = pending.gallery.slot;
        let sketch = pending.sketch;
        let t0 = Instant::now();
        let changed = self.state.place(
            &engine.db,
            &engine.config.assembly,
            slot,
            part,
            sketch.as_ref(),
        )?;
        let assembly_ms = t0.elapsed().as_secs_f64() * 1e3;
        let results = self.gallery.take().map(|g| g.results).unwrap_or_default();
        let open: Vec<String> = self
            .state
            .open_slots()
            .into_iter()
            .map(|s| self.state.slots[s].category.clone())
            .collect();
        self.suggestions = engine
            .suggest(&results, None)
            .into_iter()
            .filter(|s| open.contains(&engine.db.parts[s.part].category))
            .collect();
        Ok(Selection {
            placements: changed
                .iter()
                .filter_map(|&s| self.state.placed[s].as_ref().map(|p| p.report.clone()))
                .collect(),
            changed_slots: changed,
            slots: self.slots(engine),
            suggestions: self.suggestions(engine),
            assembly_ms,
        })
    }

    pub fn suggestions(&self, engine: &Engine) -> Vec<SuggestionEntry> {
        self.suggestions
            .iter()
            .map(|s| SuggestionEntry {
                part_id: s.part_id.clone(),
                category: engine.db.parts[s.part].category.clone(),
                parent_rank: s.parent_rank,
            })
            .collect()
    }

    pub fn remove_slot(&mut self, slot: usize) -> ServiceResult<()> {
        self.state.remove(slot)?;
        Ok(())
    }

    /// Stores a new view (normalized) and returns the shadow PNG from it.
    pub fn set_view(&mut self, engine: &Engine, direction: [f64; 3]) -> ServiceResult<Vec<u8>> {
        let d = Vector3::from(direction);
        if !d.iter().all(|x| x.is_finite()) || d.norm() < 1e-9 {
            return Err(ServiceError::Invalid(format!(
                "view direction {direction:?} is not a usable vector"
            )));
        }
        self.view = ViewDirection::new(d);
        self.state.set_view(&engine.db, self.view);
        Ok(self.shadow_png(engine))
    }

    /// Gray shadow: placed parts in black, reference parts of empty slots
    /// in faint gray, with hidden lines removed across both.
    pub fn shadow(&self, engine: &Engine) -> Vec<u8> {
        let db = &engine.db;
        let frame = self.frame(engine);
        let mut meshes: Vec<(&TriangleMesh, bool)> = Vec::new();
        for (i, slot) in self.state.slots.iter().enumerate() {
            match (&self.state.placed[i], slot.reference) {
                (Some(p), _) => meshes.push((&p.mesh, true)),
                (None, Some(r)) => meshes.push((&db.parts[r].mesh, false)),
                (None, None) => {}
            }
        }
        let refs: Vec<&TriangleMesh> = meshes.iter().map(|m| m.0).collect();
        let segments = visible_segments(&refs, &frame, engine.config.render.crease_angle_deg);
        let mut solid = LineImage::blank(self.canvas, self.canvas);
        let mut faint = LineImage::blank(self.canvas, self.canvas);
        for ((_, placed), segs) in meshes.iter().zip(&segments) {
            draw_segments(
                if *placed { &mut solid } else { &mut faint },
                segs,
                PEN_WIDTH,
            );
        }
        let mut gray = vec![255u8; self.canvas * self.canvas];
        for y in 0..self.canvas {
            for x in 0..self.canvas {
                if solid.get(x, y) {
                    gray[y * self.canvas + x] = 0;
                } else if faint.get(x, y) {
                    gray[y * self.canvas + x] = FAINT_GRAY;
                }
            }
        }
        gray
    }

    pub fn shadow_png(&self, engine: &Engine) -> Vec<u8> {
        encode_gray_png(&self.shadow(engine), self.canvas, self.canvas, false)
    }

    /// Line drawing of a gallery entry's part from the current view.
    pub fn thumbnail(&self, engine: &Engine, entry: usize) -> ServiceResult<Vec<u8>> {
        let g = self.gallery().ok_or(ServiceError::UnknownEntry(entry))?;
        let e = g
            .entries
            .get(entry)
            .ok_or(ServiceError::UnknownEntry(entry))?;
        let p = engine
            .db
            .part_index(&e.part_id)
            .ok_or_else(|| partsketch_core::Error::UnknownPart(e.part_id.clone()))?;
        let img = render_contour(
            &engine.db.parts[p].mesh,
            &self.view,
            THUMB_SIZE,
            engine.config.render.crease_angle_deg,
        );
        Ok(img.to_png())
    }

    pub fn export_model(&self) -> ServiceResult<String> {
        if self.state.filled().next().is_none() {
            return Err(ServiceError::EmptyAssembly);
        }
        Ok(self.state.to_obj())
    }
}
