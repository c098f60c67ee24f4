#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use partsketch_core::config::EngineConfig;
use partsketch_core::engine::Engine;
use partsketch_core::synth::desk_corpus;
use partsketch_service::{contour_strokes, Canvas, DesignSession, StrokeRequest};

pub fn config() -> EngineConfig {
    let mut cfg = EngineConfig::default();
    cfg.render.image_size = 128;
    cfg.render.view_level = 1;
    cfg.features.grid = 16;
    cfg.features.vocabulary_size = 64;
    cfg.features.training_features = 4000;
    cfg.features.kmeans_max_iter = 30;
    cfg.retrieval.d2_pairs = 1 << 12;
    cfg
}

pub fn engine() -> Arc<Engine> {
    static ENGINE: OnceLock<Arc<Engine>> = OnceLock::new();
    ENGINE
        .get_or_init(|| {
            let dir = tempfile::tempdir().unwrap().keep();
            let manifest = desk_corpus(8, 5).write(&dir).unwrap();
            Arc::new(Engine::open(&manifest, config(), None).unwrap())
        })
        .clone()
}

/// Strokes tracing the reference part in `slot` on the session canvas.
pub fn trace(s: &DesignSession, e: &Engine, slot: usize) -> StrokeRequest {
    let part = s.state.slots[slot].reference.unwrap();
    let frame = s.frame(e);
    StrokeRequest {
        canvas: Canvas {
            width: s.canvas,
            height: s.canvas,
        },
        strokes: contour_strokes(
            &e.db.parts[part].mesh,
            &frame,
            e.config.render.crease_angle_deg,
        ),
        category: e.db.parts[part].category.clone(),
    }
}
