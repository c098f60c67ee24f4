//! Visual vocabularies, TF-IDF histograms and histogram similarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::gabor::{extract_galf, GaborBank, GalfLayout, KeypointFeature, FEATURE_LEN};
use super::kmeans::{distinct_rows, kmeans, nearest};
use crate::error::{Error, Result};
use crate::render::LineImage;

/// Which relevance term a vocabulary serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VocabularyKind {
    /// Full-frame contours from all views, compared against the sketch.
    SketchPart,
    /// Detail-cropped common-view contours.
    Detail,
    /// Full-frame common-view contours.
    Overall,
}

impl VocabularyKind {
    pub const ALL: [VocabularyKind; 3] = [
        VocabularyKind::SketchPart,
        VocabularyKind::Detail,
        VocabularyKind::Overall,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// What `N_i` and `N` count in the IDF factor log(N / N_i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfMode {
    /// Occurrences of word i and of all words in the training images.
    #[default]
    Occurrence,
    /// Training images containing word i, and the number of training images.
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMeasure {
    #[default]
    Cosine,
    /// 1 − ½ Σ (a−b)²/(a+b) over L1-normalized weights.
    ChiSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub kind: VocabularyKind,
    /// `W × 64`, row-major.
    pub centroids: Vec<f32>,
    /// N_i per word.
    pub word_counts: Vec<u64>,
    /// N.
    pub total: u64,
    pub idf_mode: IdfMode,
    pub seed: u64,
    /// Quantization inertia on the clustering sample.
    pub inertia: f64,
}

/// Raw word counts of one image.
pub type WordCounts = BTreeMap<u32, u32>;

impl Vocabulary {
    pub fn size(&self) -> usize {
        self.centroids.len() / FEATURE_LEN
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * FEATURE_LEN..(i + 1) * FEATURE_LEN]
    }

    /// Counts of nearest words over the nonzero features.
    pub fn quantize(&self, features: &[KeypointFeature]) -> WordCounts {
        let mut counts = WordCounts::new();
        for f in features.iter().filter(|f| !f.is_zero()) {
            let (w, _) = nearest(&f.values, &self.centroids, FEATURE_LEN);
            *counts.entry(w as u32).or_insert(0) += 1;
        }
        counts
    }

    /// Sets N_i and N from the word counts of the training images.
    pub fn fit_statistics<'a, I>(&mut self, images: I)
    where
        I: IntoIterator<Item = &'a WordCounts>,
    {
        let mut n_i = vec![0u64; self.size()];
        let mut n = 0u64;
        for counts in images {
            match self.idf_mode {
                IdfMode::Occurrence => {
                    for (&w, &c) in counts {
                        n_i[w as usize] += c as u64;
                        n += c as u64;
                    }
                }
                IdfMode::Document => {
                    for &w in counts.keys() {
                        n_i[w as usize] += 1;
                    }
                    n += 1;
                }
            }
        }
        self.word_counts = n_i;
        self.total = n;
    }

    /// log(N / N_i), with N_i floored at 1.
    pub fn idf(&self, word: u32) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let ni = self
            .word_counts
            .get(word as usize)
            .copied()
            .unwrap_or(0)
            .max(1);
        (self.total as f64 / ni as f64).ln()
    }

    /// TF-IDF weights h_i = (h_i / Σ h) · log(N / N_i); zero weights are
    /// omitted.
    pub fn weigh(&self, counts: &WordCounts) -> TermHistogram {
        let sum: u64 = counts.values().map(|&c| c as u64).sum();
        let mut entries = Vec::with_capacity(counts.len());
        if sum > 0 {
            for (&w, &c) in counts {
                let v = (c as f64 / sum as f64) * self.idf(w);
                if v > 0.0 {
                    entries.push((w, v));
                }
            }
        }
        TermHistogram {
            kind: self.kind,
            entries,
        }
    }

    pub fn encode(&self, img: &LineImage, bank: &GaborBank, layout: &GalfLayout) -> TermHistogram {
        self.weigh(&self.quantize(&extract_galf(img, bank, layout)))
    }
}

/// Clusters the nonzero features into `w` visual words. Document statistics
/// are left empty; see [`Vocabulary::fit_statistics`].
pub fn build_vocabulary(
    kind: VocabularyKind,
    features: &[KeypointFeature],
    w: usize,
    seed: u64,
    idf_mode: IdfMode,
    max_iter: usize,
) -> Result<Vocabulary> {
    let mut data = Vec::with_capacity(features.len() * FEATURE_LEN);
    for f in features.iter().filter(|f| !f.is_zero()) {
        data.extend_from_slice(&f.values);
    }
    let available = distinct_rows(&data, FEATURE_LEN, w);
    if w == 0 || available < w {
        return Err(Error::CorpusTooSmall {
            available,
            requested: w,
        });
    }
    let km = kmeans(&data, FEATURE_LEN, w, seed, max_iter, 1e-4);
    Ok(Vocabulary {
        kind,
        centroids: km.centroids,
        word_counts: vec![0; w],
        total: 0,
        idf_mode,
        seed,
        inertia: km.inertia,
    })
}

/// Sparse TF-IDF histogram, sorted by word id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermHistogram {
    pub kind: VocabularyKind,
    pub entries: Vec<(u32, f64)>,
}

impl TermHistogram {
    pub fn empty(kind: VocabularyKind) -> TermHistogram {
        TermHistogram {
            kind,
            entries: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    pub fn dot(&self, other: &TermHistogram) -> f64 {
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    pub fn shares_word(&self, other: &TermHistogram) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

/// Histogram similarity in [0, 1]; 0 when either histogram is empty.
pub fn similarity(a: &TermHistogram, b: &TermHistogram, measure: SimilarityMeasure) -> Result<f64> {
    if a.kind != b.kind {
        return Err(Error::VocabularyMismatch(a.kind, b.kind));
    }
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    Ok(match measure {
        SimilarityMeasure::Cosine => {
            let d = (a.norm_squared() * b.norm_squared()).sqrt();
            if d > 0.0 {
                (a.dot(b) / d).clamp(0.0, 1.0)
            } else {
                0.0
            }
        }
        SimilarityMeasure::ChiSquared => {
            let sa: f64 = a.entries.iter().map(|e| e.1).sum();
            let sb: f64 = b.entries.iter().map(|e| e.1).sum();
            let mut merged: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
            for &(w, v) in &a.entries {
                merged.entry(w).or_default().0 = v / sa;
            }
            for &(w, v) in &b.entries {
                merged.entry(w).or_default().1 = v / sb;
            }
            let chi: f64 = merged
                .values()
                .filter(|(x, y)| x + y > 0.0)
                .map(|(x, y)| (x - y) * (x - y) / (x + y))
                .sum();
            (1.0 - 0.5 * chi).clamp(0.0, 1.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab(w: usize, counts: Vec<u64>, total: u64, mode: IdfMode) -> Vocabulary {
        Vocabulary {
            kind: VocabularyKind::SketchPart,
            centroids: vec![0.0; w * FEATURE_LEN],
            word_counts: counts,
            total,
            idf_mode: mode,
            seed: 0,
            inertia: 0.0,
        }
    }

    fn hist(entries: &[(u32, f64)]) -> TermHistogram {
        TermHistogram {
            kind: VocabularyKind::Overall,
            entries: entries.to_vec(),
        }
    }

    #[test]
    fn tf_idf_spot_checks() {
        let v = vocab(3, vec![10, 100, 0], 100, IdfMode::Document);
        let h = v.weigh(&WordCounts::from([(0, 7)]));
        assert_eq!(h.entries, vec![(0, 10f64.ln())]);
        // A word in every training image carries no weight.
        let h = v.weigh(&WordCounts::from([(1, 5), (0, 5)]));
        assert_eq!(h.entries, vec![(0, 0.5 * 10f64.ln())]);
        assert!(v.weigh(&WordCounts::new()).is_empty());
    }

    #[test]
    fn statistics_per_mode() {
        let imgs = [
            WordCounts::from([(0, 3), (1, 1)]),
            WordCounts::from([(1, 2)]),
        ];
        let mut v = vocab(2, vec![], 0, IdfMode::Occurrence);
        v.fit_statistics(imgs.iter());
        assert_eq!((v.word_counts.clone(), v.total), (vec![3, 3], 6));
        v.idf_mode = IdfMode::Document;
        v.fit_statistics(imgs.iter());
        assert_eq!((v.word_counts.clone(), v.total), (vec![1, 2], 2));
        assert_eq!(v.idf(1), 0.0);
    }

    #[test]
    fn similarity_examples() {
        let h = hist(&[(0, 1.0), (1, 1.0)]);
        let g = hist(&[(0, 1.0), (2, 1.0)]);
        assert!((similarity(&h, &g, SimilarityMeasure::Cosine).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(similarity(&h, &h, SimilarityMeasure::Cosine).unwrap(), 1.0);
        let d = hist(&[(5, 2.0)]);
        assert_eq!(similarity(&h, &d, SimilarityMeasure::Cosine).unwrap(), 0.0);
        assert_eq!(
            similarity(&h, &hist(&[]), SimilarityMeasure::Cosine).unwrap(),
            0.0
        );
        let other = TermHistogram::empty(VocabularyKind::Detail);
        assert!(similarity(&h, &other, SimilarityMeasure::Cosine).is_err());
        assert!((similarity(&h, &h, SimilarityMeasure::ChiSquared).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            similarity(&h, &d, SimilarityMeasure::ChiSquared).unwrap(),
            0.0
        );
    }

    #[test]
    fn corpus_smaller_than_vocabulary_is_rejected() {
        let mut f = KeypointFeature {
            values: [0.0; FEATURE_LEN],
            grid: (0, 0),
        };
        f.values[0] = 1.0;
        let err = build_vocabulary(
            VocabularyKind::SketchPart,
            &[f, f, f],
            2,
            0,
            IdfMode::Occurrence,
            10,
        );
        assert!(matches!(
            err,
            Err(Error::CorpusTooSmall {
                available: 1,
                requested: 2
            })
        ));
    }

    fn arb_hist() -> impl Strategy<Value = TermHistogram> {
        proptest::collection::btree_map(0u32..40, 0.001f64..10.0, 0..12)
            .prop_map(|m| hist(&m.into_iter().collect::<Vec<_>>()))
    }

    proptest! {
        #[test]
        fn cosine_is_symmetric_bounded_and_scale_invariant(a in arb_hist(), b in arb_hist(), c in 0.01f64..100.0) {
            let s = similarity(&a, &b, SimilarityMeasure::Cosine).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s - similarity(&b, &a, SimilarityMeasure::Cosine).unwrap()).abs() < 1e-12);
            let scaled = hist(&a.entries.iter().map(|&(w, v)| (w, v * c)).collect::<Vec<_>>());
            prop_assert!((s - similarity(&scaled, &b, SimilarityMeasure::Cosine).unwrap()).abs() < 1e-9);
        }
    }
}
