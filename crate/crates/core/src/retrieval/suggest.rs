//! Suggestions for parts adjacent to a newly placed one.

use serde::{Deserialize, Serialize};

use super::score::ScoredPart;
use crate::dataset::PartDatabase;
use crate::features::kmeans::{kmeans, nearest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub part: usize,
    pub part_id: String,
    /// Rank (0-based) of the retrieved part whose model contributed it.
    pub parent_rank: usize,
}

/// Neighbors, in their source models, of the top `k` results, reduced to
/// one representative per D2 cluster and ordered by parent rank. When
/// `category` is given only neighbors in that category are considered.
pub fn suggest_adjacent(
    db: &PartDatabase,
    d2: &[Vec<f64>],
    results: &[ScoredPart],
    k: usize,
    clusters: usize,
    category: Option<&str>,
    seed: u64,
) -> Vec<Suggestion> {
    let mut gathered: Vec<(usize, usize)> = Vec::new();
    for (rank, r) in results.iter().take(k).enumerate() {
        for q in db.neighbors(r.part) {
            if category.is_some_and(|c| db.parts[q].category != c) {
                continue;
            }
            if !gathered.iter().any(|&(p, _)| p == q) {
                gathered.push((q, rank));
            }
        }
    }
    if gathered.is_empty() || clusters == 0 {
        return Vec::new();
    }
    let dim = d2[gathered[0].0].len();
    let data: Vec<f32> = gathered
        .iter()
        .flat_map(|&(p, _)| d2[p].iter().map(|&v| v as f32))
        .collect();
    let distinct = crate::features::kmeans::distinct_rows(&data, dim, clusters);
    let km = kmeans(&data, dim, clusters.min(distinct), seed, 100, 1e-6);
    let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; km.k()];
    for (i, &(p, rank)) in gathered.iter().enumerate() {
        let (c, d) = nearest(&data[i * dim..(i + 1) * dim], &km.centroids, dim);
        let better = match best[c] {
            None => true,
            Some((bd, br, bp)) => (d, rank, &db.parts[p].id) < (bd, br, &db.parts[bp].id),
        };
        if better {
            best[c] = Some((d, rank, p));
        }
    }
    let mut out: Vec<Suggestion> = best
        .into_iter()
        .flatten()
        .map(|(_, rank, p)| Suggestion {
            part: p,
            part_id: db.parts[p].id.clone(),
            parent_rank: rank,
        })
        .collect();
    out.sort_by(|a, b| {
        a.parent_rank
            .cmp(&b.parent_rank)
            .then_with(|| a.part_id.cmp(&b.part_id))
    });
    out
}
