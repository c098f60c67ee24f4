//! Offline evaluation over a query-set file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use partsketch_core::engine::Engine;
use partsketch_core::render::{nearest_view, LineImage};
use partsketch_core::retrieval::{ContextSet, Fallback};
use partsketch_service::default_view;
use serde::{Deserialize, Serialize};

use crate::{context_set, load_sketch, resolve_weights, CliError, CliResult, Weights};

/// One line of a query-set file. `sketch` is relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub sketch: PathBuf,
    pub category: String,
    #[serde(default)]
    pub context: Vec<String>,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub sketch: String,
    pub category: String,
    pub expected: String,
    /// 1-based rank of the expected part; absent when it was pruned.
    pub rank: Option<usize>,
    pub hit: bool,
    pub latency_ms: f64,
    /// Index ranking equals the brute-force ranking.
    pub agreement: bool,
    pub fallback: Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfRetrieval {
    /// Index of the stored view used as the sketch.
    pub view: usize,
    pub parts: usize,
    pub rank1: usize,
    pub top3: usize,
    pub agreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Mean rank of the expected part; a pruned part counts as the size of
    /// its category.
    pub mean_rank: f64,
    pub top1_rate: f64,
    pub topn_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub top_n: usize,
    pub queries: Vec<QueryOutcome>,
    pub top1_rate: f64,
    pub topn_rate: f64,
    pub mean_latency_ms: f64,
    pub fallbacks: usize,
    pub index_scan_agreement: bool,
    pub self_retrieval: SelfRetrieval,
    pub lambda_sweep: Vec<SweepRow>,
}

struct Prepared {
    spec: QuerySpec,
    image: LineImage,
    ctx: ContextSet,
    category_size: usize,
}

fn prepare(engine: &Engine, file: &Path, canvas: usize) -> CliResult<Vec<Prepared>> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", file.display())))?;
    let specs: Vec<QuerySpec> = serde_json::from_str(&text)
        .map_err(|e| CliError::User(format!("{} is not a query set: {e}", file.display())))?;
    if specs.is_empty() {
        return Err(CliError::User(format!(
            "query set {} is empty",
            file.display()
        )));
    }
    let base = file.parent().unwrap_or(Path::new("."));
    specs
        .into_iter()
        .map(|spec| {
            if engine.db.part_index(&spec.expected).is_none() {
                return Err(CliError::User(format!(
                    "unknown expected part `{}`",
                    spec.expected
                )));
            }
            let category_size = engine.db.category_parts(&spec.category)?.len();
            let image = load_sketch(
                &base.join(&spec.sketch),
                engine.config.render.image_size,
                canvas,
            )?;
            let ctx = context_set(engine, &spec.context)?;
            Ok(Prepared {
                spec,
                image,
                ctx,
                category_size,
            })
        })
        .collect()
}

fn rate(n: usize, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        n as f64 / of as f64
    }
}

pub fn evaluate(
    engine: &Engine,
    file: &Path,
    weights: &Weights,
    sweep: &[f64],
    canvas: usize,
) -> CliResult<EvalReport> {
    let (l1, l2, top_n) = resolve_weights(engine, weights);
    let queries = prepare(engine, file, canvas)?;
    let view = default_view();
    let retriever = engine.retriever();
    let mut outcomes = Vec::with_capacity(queries.len());
    for q in &queries {
        let t0 = Instant::now();
        let r = engine.query(
            &q.image,
            &view,
            &q.spec.category,
            &q.ctx,
            l1,
            l2,
            usize::MAX,
        )?;
        let latency_ms = t0.elapsed().as_secs_f64() * 1e3;
        let h = engine.encode(
            partsketch_core::features::VocabularyKind::SketchPart,
            &q.image,
        )?;
        let scan =
            retriever.linear_scan(&h, &view, &q.spec.category, &q.ctx, l1, l2, usize::MAX)?;
        let rank = r
            .results
            .iter()
            .position(|s| s.part_id == q.spec.expected)
            .map(|i| i + 1);
        outcomes.push(QueryOutcome {
            sketch: q.spec.sketch.display().to_string(),
            category: q.spec.category.clone(),
            expected: q.spec.expected.clone(),
            rank,
            hit: rank.is_some_and(|r| r <= top_n),
            latency_ms,
            agreement: r == scan,
            fallback: r.fallback,
        });
    }

    let v = nearest_view(engine.views(), &view);
    let mut self_r = SelfRetrieval {
        view: v,
        parts: engine.db.parts.len(),
        rank1: 0,
        top3: 0,
        agreement: true,
    };
    for p in 0..engine.db.parts.len() {
        let Some(h) = engine.data.index.sketch.histogram(p, v as u16) else {
            continue;
        };
        let cat = &engine.db.parts[p].category;
        let empty = ContextSet::default();
        let r = retriever.retrieve(h, &engine.views()[v], cat, &empty, l1, l2, 3)?;
        let scan = retriever.linear_scan(h, &engine.views()[v], cat, &empty, l1, l2, 3)?;
        self_r.agreement &= r == scan;
        match r.results.iter().position(|s| s.part == p) {
            Some(0) => {
                self_r.rank1 += 1;
                self_r.top3 += 1;
            }
            Some(_) => self_r.top3 += 1,
            None => {}
        }
    }

    let mut lambda_sweep = Vec::new();
    for &a in sweep {
        for &b in sweep {
            let (mut total, mut top1, mut topn) = (0.0, 0, 0);
            for q in &queries {
                let r =
                    engine.query(&q.image, &view, &q.spec.category, &q.ctx, a, b, usize::MAX)?;
                let rank = r
                    .results
                    .iter()
                    .position(|s| s.part_id == q.spec.expected)
                    .map(|i| i + 1);
                total += rank.unwrap_or(q.category_size) as f64;
                top1 += usize::from(rank == Some(1));
                topn += usize::from(rank.is_some_and(|r| r <= top_n));
            }
            lambda_sweep.push(SweepRow {
                lambda1: a,
                lambda2: b,
                mean_rank: total / queries.len() as f64,
                top1_rate: rate(top1, queries.len()),
                topn_rate: rate(topn, queries.len()),
            });
        }
    }

    let n = outcomes.len();
    Ok(EvalReport {
        lambda1: l1,
        lambda2: l2,
        top_n,
        top1_rate: rate(outcomes.iter().filter(|o| o.rank == Some(1)).count(), n),
        topn_rate: rate(outcomes.iter().filter(|o| o.hit).count(), n),
        mean_latency_ms: outcomes.iter().map(|o| o.latency_ms).sum::<f64>() / n as f64,
        fallbacks: outcomes
            .iter()
            .filter(|o| o.fallback != Fallback::None)
            .count(),
        index_scan_agreement: outcomes.iter().all(|o| o.agreement) && self_r.agreement,
        queries: outcomes,
        self_retrieval: self_r,
        lambda_sweep,
    })
}
