//! Engine configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{GaborParams, GalfLayout, IdfMode, SimilarityMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    /// Canonical square image side in pixels.
    pub image_size: usize,
    /// Icosphere subdivision level for precomputed views (12, 42, 162, … views).
    pub view_level: u32,
    pub crease_angle_deg: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            image_size: 320,
            view_level: 2,
            crease_angle_deg: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Keypoints per image side.
    pub grid: usize,
    pub vocabulary_size: usize,
    /// Cap on the number of nonzero features sampled for clustering.
    pub training_features: usize,
    pub kmeans_max_iter: usize,
    pub idf: IdfMode,
    pub similarity: SimilarityMeasure,
    /// Gabor overrides; derived from the cell size when absent.
    pub gabor_wavelength: Option<f64>,
    pub gabor_bandwidth_octaves: Option<f64>,
    pub gabor_radius: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            grid: 32,
            vocabulary_size: 256,
            training_features: 20_000,
            kmeans_max_iter: 100,
            idf: IdfMode::Occurrence,
            similarity: SimilarityMeasure::Cosine,
            gabor_wavelength: None,
            gabor_bandwidth_octaves: None,
            gabor_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub top_n: usize,
    /// Top results whose source-model neighbors feed suggestions.
    pub suggest_k: usize,
    pub suggest_clusters: usize,
    pub d2_pairs: usize,
    pub d2_bins: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            lambda1: 0.5,
            lambda2: 0.5,
            top_n: 10,
            suggest_k: 10,
            suggest_clusters: 6,
            d2_pairs: 1 << 20,
            d2_bins: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblyConfig {
    pub snap_max_iter: usize,
    /// Snap residual tolerance relative to the part's bbox diagonal.
    pub snap_tolerance: f64,
    /// Stiffness blend between rigid and linear cluster goals.
    pub snap_beta: f64,
    /// Target connector mismatch after smoothness scaling.
    pub stitch_band: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            snap_max_iter: 200,
            snap_tolerance: 1e-3,
            snap_beta: 0.5,
            stitch_band: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Seed for every randomized step (k-means, sampling).
    pub seed: u64,
    pub render: RenderConfig,
    pub features: FeatureConfig,
    pub retrieval: RetrievalConfig,
    pub assembly: AssemblyConfig,
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<EngineConfig> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<EngineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.render.image_size < 16 {
            return bad("render.image_size must be at least 16");
        }
        if self.render.view_level > 4 {
            return bad("render.view_level must be at most 4");
        }
        if self.features.grid == 0 || self.features.grid > self.render.image_size {
            return bad("features.grid must be in 1..=image_size");
        }
        if self.features.vocabulary_size < 2 {
            return bad("features.vocabulary_size must be at least 2");
        }
        if self.features.training_features < self.features.vocabulary_size {
            return bad("features.training_features must be at least vocabulary_size");
        }
        if self.retrieval.lambda1 < 0.0 || self.retrieval.lambda2 < 0.0 {
            return bad("retrieval lambdas must be non-negative");
        }
        if self.retrieval.d2_bins == 0 || self.retrieval.d2_pairs == 0 {
            return bad("retrieval.d2_bins and d2_pairs must be positive");
        }
        if !(0.0..=1.0).contains(&self.assembly.snap_beta) {
            return bad("assembly.snap_beta must be in [0, 1]");
        }
        Ok(())
    }

    pub fn layout(&self) -> GalfLayout {
        GalfLayout {
            image_size: self.render.image_size,
            grid: self.features.grid,
        }
    }

    pub fn gabor(&self) -> GaborParams {
        let mut p = GaborParams::for_cell(self.layout().cell());
        if let Some(w) = self.features.gabor_wavelength {
            p.wavelength = w;
        }
        if let Some(b) = self.features.gabor_bandwidth_octaves {
            p.bandwidth_octaves = b;
        }
        if let Some(r) = self.features.gabor_radius {
            p.radius = r;
        }
        p
    }
}
