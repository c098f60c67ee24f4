//! Inverted indices from visual words to stored images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{TermHistogram, VocabularyKind};

/// One stored image: a part seen from a view. For the common-view indices
/// `view` is 0 for the common direction and 1 for its opposite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedImage {
    pub part: u32,
    pub view: u16,
    pub histogram: TermHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub kind: VocabularyKind,
    pub images: Vec<IndexedImage>,
    /// Image id range per part.
    pub part_images: Vec<(u32, u32)>,
    /// Image ids per word, ascending.
    pub postings: Vec<Vec<u32>>,
}

impl InvertedIndex {
    /// `per_part[p]` lists part p's `(view, histogram)` pairs. A part with no
    /// images is an error naming it.
    pub fn build(
        kind: VocabularyKind,
        vocabulary_size: usize,
        per_part: Vec<Vec<(u16, TermHistogram)>>,
        part_names: &[String],
    ) -> Result<InvertedIndex> {
        let mut images = Vec::new();
        let mut part_images = Vec::with_capacity(per_part.len());
        let mut postings = vec![Vec::new(); vocabulary_size];
        for (p, list) in per_part.into_iter().enumerate() {
            if list.is_empty() {
                let name = part_names.get(p).cloned().unwrap_or_else(|| p.to_string());
                return Err(Error::Unencoded(name));
            }
            let start = images.len() as u32;
            for (view, histogram) in list {
                if histogram.kind != kind {
                    return Err(Error::VocabularyMismatch(kind, histogram.kind));
                }
                let id = images.len() as u32;
                for w in histogram.words() {
                    let slot = postings.get_mut(w as usize).ok_or_else(|| {
                        Error::InvalidArgument(format!("word {w} outside vocabulary"))
                    })?;
                    slot.push(id);
                }
                images.push(IndexedImage {
                    part: p as u32,
                    view,
                    histogram,
                });
            }
            part_images.push((start, images.len() as u32));
        }
        Ok(InvertedIndex {
            kind,
            images,
            part_images,
            postings,
        })
    }

    pub fn part_count(&self) -> usize {
        self.part_images.len()
    }

    pub fn images_of(&self, part: usize) -> &[IndexedImage] {
        let (a, b) = self.part_images[part];
        &self.images[a as usize..b as usize]
    }

    /// Histogram of `part` at `view`.
    pub fn histogram(&self, part: usize, view: u16) -> Option<&TermHistogram> {
        self.images_of(part)
            .iter()
            .find(|i| i.view == view)
            .map(|i| &i.histogram)
    }

    /// Marks every part owning at least one image that shares a word with
    /// `query`.
    pub fn mark_matching_parts(&self, query: &TermHistogram, marks: &mut [bool]) {
        for w in query.words() {
            if let Some(list) = self.postings.get(w as usize) {
                for &id in list {
                    marks[self.images[id as usize].part as usize] = true;
                }
            }
        }
    }

    pub fn posting_total(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }
}

/// The three indices, one per relevance term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndexSet {
    pub sketch: InvertedIndex,
    pub detail: InvertedIndex,
    pub overall: InvertedIndex,
}

impl InvertedIndexSet {
    pub fn get(&self, kind: VocabularyKind) -> &InvertedIndex {
        match kind {
            VocabularyKind::SketchPart => &self.sketch,
            VocabularyKind::Detail => &self.detail,
            VocabularyKind::Overall => &self.overall,
        }
    }
}
