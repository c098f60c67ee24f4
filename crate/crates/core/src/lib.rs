//! Sketch-driven retrieval of segmented 3D parts and context-aware assembly
//! of the chosen parts into a new model.

pub mod assembly;
pub mod config;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod features;
pub mod geometry;
pub mod render;
pub mod retrieval;
pub mod synth;

pub use error::{Error, Result};
