//! Line-image descriptors, visual vocabularies and histogram matching.

pub mod detail;
pub mod gabor;
pub mod kmeans;
pub mod vocabulary;

pub use detail::{detail_crop, detail_window};
pub use gabor::{extract_galf, GaborBank, GaborParams, GalfLayout, KeypointFeature, FEATURE_LEN};
pub use vocabulary::{
    build_vocabulary, similarity, IdfMode, SimilarityMeasure, TermHistogram, Vocabulary,
    VocabularyKind, WordCounts,
};
