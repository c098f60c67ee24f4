//! Relevance scoring with context and ranked retrieval.

use serde::{Deserialize, Serialize};

use super::index::InvertedIndexSet;
use crate::dataset::PartDatabase;
use crate::error::{Error, Result};
use crate::features::{similarity, SimilarityMeasure, TermHistogram, VocabularyKind};
use crate::render::{nearest_view, ViewDirection};

/// Already placed parts adjacent to the slot being filled (part indices).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSet {
    pub parts: Vec<usize>,
}

impl ContextSet {
    pub fn new(mut parts: Vec<usize>) -> ContextSet {
        parts.sort_unstable();
        parts.dedup();
        ContextSet { parts }
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// A retrieved part with its score and the three terms. The context terms
/// are means over the context set, so
/// `score = sketch_term + λ1·detail_term + λ2·style_term`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPart {
    pub part: usize,
    pub part_id: String,
    /// Index of the precomputed view used for the sketch term.
    pub view: usize,
    pub score: f64,
    pub sketch_term: f64,
    pub detail_term: f64,
    pub style_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    None,
    /// The three-way intersection was empty; the sketch matches alone were used.
    SketchOnly,
    /// No part shared a word with the sketch; the whole category was scored.
    Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub results: Vec<ScoredPart>,
    pub fallback: Fallback,
    /// Size of the scored candidate set.
    pub candidates: usize,
}

/// Orders by descending score, then ascending part id.
pub fn rank(results: &mut [ScoredPart]) {
    results.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.part_id.cmp(&b.part_id))
    });
}

/// Read-only view over a database and its indices.
#[derive(Clone, Copy)]
pub struct Retriever<'a> {
    pub db: &'a PartDatabase,
    pub index: &'a InvertedIndexSet,
    pub views: &'a [ViewDirection],
    pub measure: SimilarityMeasure,
}

impl<'a> Retriever<'a> {
    fn sim(&self, a: &TermHistogram, b: &TermHistogram) -> f64 {
        similarity(a, b, self.measure).expect("histograms share a vocabulary")
    }

    /// Mean of the common-view similarities over both orientations.
    fn both_orientations(&self, index: &super::index::InvertedIndex, a: usize, b: usize) -> f64 {
        let mut s = 0.0;
        for o in 0..2u16 {
            if let (Some(x), Some(y)) = (index.histogram(a, o), index.histogram(b, o)) {
                s += self.sim(x, y);
            }
        }
        s / 2.0
    }

    /// Detail similarity between a context part and a candidate.
    pub fn detail_term(&self, candidate: usize, context: usize) -> f64 {
        self.both_orientations(&self.index.detail, context, candidate)
    }

    /// Similarity between a context part and the part of the candidate's
    /// source model in the context part's category; 0 when that model has
    /// no such part.
    pub fn style_term(&self, candidate: usize, context: usize) -> f64 {
        let model = self.db.parts[candidate].model;
        match self
            .db
            .model_part_in(model, &self.db.parts[context].category)
        {
            Some(theta) => self.both_orientations(&self.index.overall, context, theta),
            None => 0.0,
        }
    }

    fn check(
        &self,
        sketch: &TermHistogram,
        ctx: &ContextSet,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<()> {
        if sketch.kind != VocabularyKind::SketchPart {
            return Err(Error::VocabularyMismatch(
                VocabularyKind::SketchPart,
                sketch.kind,
            ));
        }
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda values must be non-negative (got {lambda1}, {lambda2})"
            )));
        }
        if let Some(&p) = ctx.parts.iter().find(|&&p| p >= self.db.parts.len()) {
            return Err(Error::UnknownPart(p.to_string()));
        }
        Ok(())
    }

    /// Score of one part for a sketch seen from precomputed view `view`.
    pub fn relevance_score(
        &self,
        sketch: &TermHistogram,
        part: usize,
        view: usize,
        ctx: &ContextSet,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<ScoredPart> {
        self.check(sketch, ctx, lambda1, lambda2)?;
        let sketch_term = self
            .index
            .sketch
            .histogram(part, view as u16)
            .map_or(0.0, |h| self.sim(sketch, h));
        let (mut detail_term, mut style_term) = (0.0, 0.0);
        if !ctx.is_empty() {
            for &q in &ctx.parts {
                detail_term += self.detail_term(part, q);
                style_term += self.style_term(part, q);
            }
            detail_term /= ctx.parts.len() as f64;
            style_term /= ctx.parts.len() as f64;
        }
        Ok(ScoredPart {
            part,
            part_id: self.db.parts[part].id.clone(),
            view,
            score: sketch_term + lambda1 * detail_term + lambda2 * style_term,
            sketch_term,
            detail_term,
            style_term,
        })
    }

    /// True when no context part, or none of `members`, has a word in
    /// `index`. The term is then zero for every candidate, so it prunes
    /// nothing.
    fn uninformative(
        &self,
        index: &super::index::InvertedIndex,
        ctx: &ContextSet,
        members: &[usize],
    ) -> bool {
        let blank = |p: usize| index.images_of(p).iter().all(|i| i.histogram.is_empty());
        ctx.parts.iter().all(|&q| blank(q))
            || (!members.is_empty() && members.iter().all(|&p| blank(p)))
    }

    /// Parts of `category` in the intersection of the three word-sharing
    /// sets, with the fallback that was needed.
    pub fn candidate_set(
        &self,
        sketch: &TermHistogram,
        category: &str,
        ctx: &ContextSet,
    ) -> Result<(Vec<usize>, Fallback)> {
        let members = self.db.category_parts(category)?;
        let n = self.db.parts.len();
        let mut a1 = vec![false; n];
        self.index.sketch.mark_matching_parts(sketch, &mut a1);
        let (blind2, blind3) = (
            self.uninformative(&self.index.detail, ctx, members),
            self.uninformative(&self.index.overall, ctx, &[]),
        );
        let (mut a2, mut a3) = (vec![blind2; n], vec![blind3; n]);
        for &q in &ctx.parts {
            for img in self.index.detail.images_of(q) {
                self.index
                    .detail
                    .mark_matching_parts(&img.histogram, &mut a2);
            }
            // Term 3 compares q with the candidate model's part in q's
            // category, so matches lift to every part of that model.
            let mut hit = vec![false; n];
            for img in self.index.overall.images_of(q) {
                self.index
                    .overall
                    .mark_matching_parts(&img.histogram, &mut hit);
            }
            for (t, &h) in hit.iter().enumerate() {
                if h && self.db.parts[t].category == self.db.parts[q].category {
                    for &p in &self.db.models[self.db.parts[t].model].parts {
                        a3[p] = true;
                    }
                }
            }
        }
        let e: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&p| a1[p] && a2[p] && a3[p])
            .collect();
        if !e.is_empty() {
            return Ok((e, Fallback::None));
        }
        let s: Vec<usize> = members.iter().copied().filter(|&p| a1[p]).collect();
        if !s.is_empty() {
            return Ok((s, Fallback::SketchOnly));
        }
        Ok((members.to_vec(), Fallback::Category))
    }

    /// Top-`n` parts of `category` for a sketch drawn from `view`.
    #[allow(clippy::too_many_arguments)]
    pub fn retrieve(
        &self,
        sketch: &TermHistogram,
        view: &ViewDirection,
        category: &str,
        ctx: &ContextSet,
        lambda1: f64,
        lambda2: f64,
        n: usize,
    ) -> Result<Retrieval> {
        self.check(sketch, ctx, lambda1, lambda2)?;
        let (cands, fallback) = self.candidate_set(sketch, category, ctx)?;
        let v = nearest_view(self.views, view);
        let mut results = cands
            .iter()
            .map(|&p| self.relevance_score(sketch, p, v, ctx, lambda1, lambda2))
            .collect::<Result<Vec<_>>>()?;
        rank(&mut results);
        results.truncate(n);
        Ok(Retrieval {
            results,
            fallback,
            candidates: cands.len(),
        })
    }

    /// Brute-force counterpart of [`Retriever::retrieve`]: the word-sharing
    /// sets are found by comparing histograms directly instead of through
    /// posting lists, then every candidate is scored.
    #[allow(clippy::too_many_arguments)]
    pub fn linear_scan(
        &self,
        sketch: &TermHistogram,
        view: &ViewDirection,
        category: &str,
        ctx: &ContextSet,
        lambda1: f64,
        lambda2: f64,
        n: usize,
    ) -> Result<Retrieval> {
        self.check(sketch, ctx, lambda1, lambda2)?;
        let members = self.db.category_parts(category)?;
        let shares = |index: &super::index::InvertedIndex, a: usize, b: usize| {
            index.images_of(a).iter().any(|x| {
                index
                    .images_of(b)
                    .iter()
                    .any(|y| x.histogram.shares_word(&y.histogram))
            })
        };
        let in_a1 = |p: usize| {
            self.index
                .sketch
                .images_of(p)
                .iter()
                .any(|i| i.histogram.shares_word(sketch))
        };
        let (blind2, blind3) = (
            self.uninformative(&self.index.detail, ctx, members),
            self.uninformative(&self.index.overall, ctx, &[]),
        );
        let in_a2 =
            |p: usize| blind2 || ctx.parts.iter().any(|&q| shares(&self.index.detail, q, p));
        let in_a3 = |p: usize| {
            blind3
                || ctx.parts.iter().any(|&q| {
                    self.db.models[self.db.parts[p].model]
                        .parts
                        .iter()
                        .any(|&t| {
                            self.db.parts[t].category == self.db.parts[q].category
                                && shares(&self.index.overall, q, t)
                        })
                })
        };
        let a1: Vec<usize> = members.iter().copied().filter(|&p| in_a1(p)).collect();
        let e: Vec<usize> = a1
            .iter()
            .copied()
            .filter(|&p| in_a2(p) && in_a3(p))
            .collect();
        let (cands, fallback) = if !e.is_empty() {
            (e, Fallback::None)
        } else if !a1.is_empty() {
            (a1, Fallback::SketchOnly)
        } else {
            (members.to_vec(), Fallback::Category)
        };
        let v = nearest_view(self.views, view);
        let mut results = cands
            .iter()
            .map(|&p| self.relevance_score(sketch, p, v, ctx, lambda1, lambda2))
            .collect::<Result<Vec<_>>>()?;
        rank(&mut results);
        results.truncate(n);
        Ok(Retrieval {
            results,
            fallback,
            candidates: cands.len(),
        })
    }

    /// Every part of the category scored, with no pruning at all.
    #[allow(clippy::too_many_arguments)]
    pub fn score_category(
        &self,
        sketch: &TermHistogram,
        view: &ViewDirection,
        category: &str,
        ctx: &ContextSet,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Vec<ScoredPart>> {
        let v = nearest_view(self.views, view);
        let mut results = self
            .db
            .category_parts(category)?
            .iter()
            .map(|&p| self.relevance_score(sketch, p, v, ctx, lambda1, lambda2))
            .collect::<Result<Vec<_>>>()?;
        rank(&mut results);
        Ok(results)
    }
}
