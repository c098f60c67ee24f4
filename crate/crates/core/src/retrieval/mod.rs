//! Inverted-index retrieval, relevance scoring and adjacent-part suggestions.

pub mod d2;
pub mod index;
pub mod score;
pub mod suggest;

pub use d2::d2_descriptor;
pub use index::{IndexedImage, InvertedIndex, InvertedIndexSet};
pub use score::{rank, ContextSet, Fallback, Retrieval, Retriever, ScoredPart};
pub use suggest::{suggest_adjacent, Suggestion};
