//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Indices are cached under `target/acceptance-cache`, keyed by the corpus
//! and engine settings; the first run builds them.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Point3, Rotation3, Vector3};
use partsketch_core::assembly::{
    snap_contacts, AssemblyState, PlacementRule, SnapHandle, SnapParams,
};
use partsketch_core::config::EngineConfig;
use partsketch_core::engine::Engine;
use partsketch_core::features::{
    similarity, IdfMode, SimilarityMeasure, TermHistogram, Vocabulary, VocabularyKind, WordCounts,
};
use partsketch_core::geometry::TriangleMesh;
use partsketch_core::render::{
    nearest_view, normalize_image, normalize_strokes, render_contour, render_line_drawing,
    skeletonize, Stroke, ViewDirection,
};
use partsketch_core::retrieval::{ContextSet, Fallback};
use partsketch_core::synth::{desk_corpus, style_corpus, style_family, SynthCorpus};
use partsketch_service::{
    contour_strokes, default_view, Canvas, CreateSession, SessionService, StrokeRequest,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cache_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance-cache")
}

fn engine_config() -> EngineConfig {
    let mut cfg = EngineConfig::default();
    cfg.render.view_level = 1;
    cfg
}

fn open(name: &str, corpus: SynthCorpus) -> Engine {
    let dir = cache_dir().join(name);
    let manifest = corpus.write(&dir).expect("corpus is writable");
    let t0 = Instant::now();
    let e = Engine::open(&manifest, engine_config(), None).expect("index builds");
    println!(
        "  {name}: {} parts, ready in {:.1} s",
        e.db.parts.len(),
        t0.elapsed().as_secs_f64()
    );
    e
}

fn random_view(rng: &mut ChaCha8Rng) -> ViewDirection {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-0.3..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() > 0.2 && v.norm() <= 1.0 {
            return ViewDirection::new(v);
        }
    }
}

fn parts_in(e: &Engine, category: &str) -> Vec<usize> {
    e.db.category_parts(category).unwrap().to_vec()
}

/// Random queries: contours of random parts from random directions, half
/// of them with a placed neighbor of another model as context.
fn oracle_equivalence(e: &Engine, latencies: &mut Vec<f64>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let r = &e.config.render;
    let cats = e.db.categories();
    let retriever = e.retriever();
    let start = Instant::now();
    let (mut checked, mut mismatches, mut fallbacks) = (0, 0, Vec::new());
    for q in 0..100 {
        let part = rng.random_range(0..e.db.parts.len());
        let category = e.db.parts[part].category.clone();
        let view = random_view(&mut rng);
        let sketch = normalize_image(
            &render_contour(
                &e.db.parts[part].mesh,
                &view,
                r.image_size,
                r.crease_angle_deg,
            ),
            r.image_size,
        );
        let ctx = if q % 2 == 1 {
            let other: Vec<&String> = cats.iter().filter(|c| **c != category).collect();
            let pool = parts_in(e, other[rng.random_range(0..other.len())]);
            let mut ids = vec![pool[rng.random_range(0..pool.len())]];
            if rng.random_bool(0.3) {
                ids.push(pool[rng.random_range(0..pool.len())]);
            }
            ContextSet::new(ids)
        } else {
            ContextSet::default()
        };
        let t0 = Instant::now();
        let got = e
            .query(&sketch, &view, &category, &ctx, 0.5, 0.5, usize::MAX)
            .unwrap();
        latencies.push(t0.elapsed().as_secs_f64() * 1e3);
        let h = e.encode(VocabularyKind::SketchPart, &sketch).unwrap();
        let scan = retriever
            .linear_scan(&h, &view, &category, &ctx, 0.5, 0.5, usize::MAX)
            .unwrap();
        if got.fallback != Fallback::None {
            println!(
                "  query {q}: fallback {:?} ({} in {category}, context {:?})",
                got.fallback, e.db.parts[part].id, ctx.parts
            );
            fallbacks.push(q);
            continue;
        }
        checked += 1;
        if got != scan {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches == 0 && fallbacks.len() <= 5 && secs < 120.0;
    outcome(
        pass,
        format!(
            "{checked} compared, {mismatches} mismatches, {} fallbacks, {secs:.1} s",
            fallbacks.len()
        ),
    )
}

fn self_retrieval(e: &Engine) -> Outcome {
    let v = nearest_view(e.views(), &default_view());
    let view = e.views()[v];
    let (mut rank1, mut top3, mut misses) = (0, 0, Vec::new());
    for p in 0..e.db.parts.len() {
        let r = e
            .query(
                &e.contour(p, v),
                &view,
                &e.db.parts[p].category,
                &ContextSet::default(),
                0.5,
                0.5,
                3,
            )
            .unwrap();
        match r.results.iter().position(|s| s.part == p) {
            Some(0) => {
                rank1 += 1;
                top3 += 1;
            }
            Some(_) => {
                top3 += 1;
                misses.push(format!("{}→{}", e.db.parts[p].id, r.results[0].part_id));
            }
            None => misses.push(format!("{}∉top3", e.db.parts[p].id)),
        }
    }
    let n = e.db.parts.len();
    if !misses.is_empty() {
        println!("  not first: {}", misses.join(", "));
    }
    outcome(
        rank1 as f64 >= 0.95 * n as f64 && top3 == n,
        format!(
            "view {v}: rank-1 {rank1}/{n} ({:.1}%), top-3 {top3}/{n}",
            100.0 * rank1 as f64 / n as f64
        ),
    )
}

/// Closed rounded-rectangle outline with corner radius `r` (fraction of the
/// half short side), slightly jittered.
fn outline(rng: &mut ChaCha8Rng, aspect: f64, r: f64) -> Vec<Stroke> {
    let (w, h) = (aspect, 1.0);
    let rad = r * w.min(h) / 2.0;
    let mut pts = Vec::new();
    let corners = [
        (w / 2.0 - rad, h / 2.0 - rad, 0.0),
        (-w / 2.0 + rad, h / 2.0 - rad, 90.0),
        (-w / 2.0 + rad, -h / 2.0 + rad, 180.0),
        (w / 2.0 - rad, -h / 2.0 + rad, 270.0),
    ];
    for (cx, cy, start) in corners {
        for s in 0..=12 {
            let a = (start + 90.0 * s as f64 / 12.0_f64).to_radians();
            let j = 0.004 * rng.random_range(-1.0..1.0);
            pts.push([cx + (rad + j) * a.cos(), -(cy + (rad + j) * a.sin())]);
        }
    }
    pts.push(pts[0]);
    vec![Stroke { points: pts }]
}

fn context_effect(e: &Engine) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let backs = parts_in(e, "back");
    let round_backs: Vec<usize> = backs
        .iter()
        .copied()
        .filter(|&p| style_family(&e.db.models[e.db.parts[p].model].id) == Some("round"))
        .collect();
    let round_seats: Vec<usize> = parts_in(e, "seat")
        .into_iter()
        .filter(|&p| style_family(&e.db.models[e.db.parts[p].model].id) == Some("round"))
        .collect();
    let view = ViewDirection::new(Vector3::z());
    let mean_rank = |r: &partsketch_core::retrieval::Retrieval| {
        let worst = r.results.len() + 1;
        round_backs
            .iter()
            .map(|&p| {
                r.results
                    .iter()
                    .position(|s| s.part == p)
                    .map_or(worst, |i| i + 1) as f64
            })
            .sum::<f64>()
            / round_backs.len() as f64
    };
    let size = e.config.render.image_size;
    let queries = 20;
    let mut better = 0;
    let mut rows = Vec::new();
    for _ in 0..queries {
        let aspect = rng.random_range(0.9..1.1);
        let r = rng.random_range(0.2..0.6);
        let sketch = normalize_strokes(&outline(&mut rng, aspect, r), size);
        let ctx = ContextSet::new(vec![round_seats[rng.random_range(0..round_seats.len())]]);
        let off = e
            .query(&sketch, &view, "back", &ctx, 0.0, 0.0, usize::MAX)
            .unwrap();
        let on = e
            .query(&sketch, &view, "back", &ctx, 0.5, 0.5, usize::MAX)
            .unwrap();
        let (a, b) = (mean_rank(&off), mean_rank(&on));
        better += usize::from(b < a);
        rows.push(format!("{a:.1}→{b:.1}"));
    }
    println!(
        "  mean rank of round backs (λ=0 → λ=0.5): {}",
        rows.join(" ")
    );
    outcome(
        better as f64 >= 0.9 * queries as f64,
        format!(
            "{better}/{queries} queries improved ({} round of {} backs)",
            round_backs.len(),
            backs.len()
        ),
    )
}

struct Placement {
    ratios_ok: bool,
    non_fallback: bool,
    ms: f64,
}

/// A seat from one model, then a part from another placed against it.
fn placement_cases(e: &Engine, cases: usize) -> Vec<Placement> {
    let db = &e.db;
    let cfg = &e.config.assembly;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut out = Vec::new();
    while out.len() < cases {
        let reference = rng.random_range(0..db.models.len());
        let mut state = AssemblyState::new(db, reference, default_view());
        let seat_slot = state.slot_for("seat", None);
        let seats = parts_in(e, "seat");
        let seat = seats[rng.random_range(0..seats.len())];
        let t0 = Instant::now();
        state.place(db, cfg, seat_slot, seat, None).unwrap();
        let seat_ms = t0.elapsed().as_secs_f64() * 1e3;
        let open: Vec<usize> = state
            .open_slots()
            .into_iter()
            .filter(|&s| s != seat_slot)
            .collect();
        let slot = open[rng.random_range(0..open.len())];
        let pool: Vec<usize> = parts_in(e, &state.slots[slot].category)
            .into_iter()
            .filter(|&p| db.parts[p].model != db.parts[seat].model)
            .collect();
        let part = pool[rng.random_range(0..pool.len())];
        let t0 = Instant::now();
        let changed = state.place(db, cfg, slot, part, None).unwrap();
        let ms = t0.elapsed().as_secs_f64() * 1e3 / changed.len() as f64;
        let rep = &state.placed[slot].as_ref().unwrap().report;
        let non_fallback = rep.rule == PlacementRule::Relative && !rep.fallback;
        let ratios_ok = match (&rep.source_ratios, &rep.achieved_ratios) {
            (Some(a), Some(b)) => (0..3).all(|i| (a[i] - b[i]).abs() <= 1e-6),
            _ => false,
        };
        if non_fallback && !ratios_ok {
            println!(
                "  {} on {}: {:?} vs {:?}",
                rep.part_id, db.parts[seat].id, rep.source_ratios, rep.achieved_ratios
            );
        }
        out.push(Placement {
            ratios_ok,
            non_fallback,
            ms: (seat_ms + ms) / 2.0,
        });
    }
    out
}

fn r1_exactness(cases: &[Placement]) -> Outcome {
    let relevant: Vec<&Placement> = cases.iter().filter(|c| c.non_fallback).collect();
    let bad = relevant.iter().filter(|c| !c.ratios_ok).count();
    outcome(
        !relevant.is_empty() && bad == 0,
        format!(
            "{} cases, {} without fallback, {bad} off by more than 1e-6",
            cases.len(),
            relevant.len()
        ),
    )
}

fn latency(retrieval_ms: &[f64], cases: &[Placement]) -> Outcome {
    let r = retrieval_ms.iter().sum::<f64>() / retrieval_ms.len() as f64;
    let a = cases.iter().map(|c| c.ms).sum::<f64>() / cases.len() as f64;
    outcome(
        r < 300.0 && a < 100.0,
        format!(
            "retrieval {r:.1} ms over {} queries, assembly {a:.1} ms per part",
            retrieval_ms.len()
        ),
    )
}

/// A part pulled off its seat by a gap of up to a tenth of the model
/// diagonal, then snapped back onto its contact handles.
fn snapping(e: &Engine) -> Outcome {
    let db = &e.db;
    let cfg = &e.config.assembly;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut cases, mut failures, mut worst_res, mut worst_ratio) = (0, Vec::new(), 0.0f64, 0.0f64);
    while cases < 20 {
        let m = rng.random_range(0..db.models.len());
        let model = &db.models[m];
        let Some(seat) = db.model_part_in(m, "seat") else {
            continue;
        };
        let movable: Vec<usize> = model
            .parts
            .iter()
            .copied()
            .filter(|&p| db.parts[p].contacts_with(seat).next().is_some())
            .collect();
        if movable.is_empty() {
            continue;
        }
        let p = &db.parts[movable[rng.random_range(0..movable.len())]];
        let diag = model.diagonal;
        let gap = rng.random_range(0.01..0.1) * diag;
        let dir = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalize();
        let axis = nalgebra::Unit::new_normalize(Vector3::new(
            rng.random_range(-1.0..1.0),
            1.0,
            rng.random_range(-1.0..1.0),
        ));
        let rot = Rotation3::from_axis_angle(&axis, rng.random_range(-0.05..0.05));
        let c = p
            .mesh
            .vertices
            .iter()
            .fold(Vector3::zeros(), |s, v| s + v.coords)
            / p.mesh.vertices.len() as f64;
        let moved = |x: &Point3<f64>| Point3::from(rot * (x.coords - c) + c + dir * gap);
        let mut mesh = TriangleMesh::new(
            p.mesh.vertices.iter().map(moved).collect(),
            p.mesh.triangles.clone(),
        );
        let handles: Vec<SnapHandle> = p
            .contacts_with(seat)
            .filter_map(|k| k.points.first())
            .map(|x| SnapHandle {
                source: moved(x),
                target: *x,
            })
            .collect();
        let rest = mesh.clone();
        let tolerance = cfg.snap_tolerance * diag;
        let report = snap_contacts(
            &mut mesh,
            &handles,
            &SnapParams::new(cfg.snap_max_iter, tolerance, cfg.snap_beta),
        );
        let max_move = handles
            .iter()
            .map(|h| (h.target - h.source).norm())
            .fold(0.0, f64::max);
        let displacement = mesh
            .vertices
            .iter()
            .zip(&rest.vertices)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let residual = handles
            .iter()
            .map(|h| {
                let s = rest.closest_point(&h.source).unwrap();
                let t = mesh.triangles[s.triangle];
                let at = (0..3).fold(Vector3::zeros(), |acc, k| {
                    acc + mesh.vertices[t[k] as usize].coords * s.barycentric[k]
                });
                (Point3::from(at) - h.target).norm()
            })
            .fold(0.0, f64::max);
        worst_res = worst_res.max(residual / tolerance);
        worst_ratio = worst_ratio.max(displacement / max_move);
        if residual >= tolerance || displacement > 1.5 * max_move * (1.0 + 1e-9) {
            failures.push(format!(
                "{} ({} handles, {} iterations)",
                p.id,
                handles.len(),
                report.iterations
            ));
        }
        cases += 1;
    }
    if !failures.is_empty() {
        println!("  failed: {}", failures.join(", "));
    }
    outcome(
        failures.is_empty(),
        format!("{cases} cases, worst residual {worst_res:.3}·ε, worst displacement {worst_ratio:.3}× max handle move"),
    )
}

fn random_histogram(rng: &mut ChaCha8Rng) -> TermHistogram {
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for w in 0..64u32 {
        if rng.random_bool(0.3) {
            entries.push((w, rng.random_range(1e-3..5.0)));
        }
    }
    if entries.is_empty() {
        entries.push((rng.random_range(0..64), 1.0));
    }
    TermHistogram {
        kind: VocabularyKind::SketchPart,
        entries,
    }
}

fn dense_cosine(a: &TermHistogram, b: &TermHistogram) -> f64 {
    let mut x = [0.0; 64];
    let mut y = [0.0; 64];
    for &(w, v) in &a.entries {
        x[w as usize] = v;
    }
    for &(w, v) in &b.entries {
        y[w as usize] = v;
    }
    let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
    let nx: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|p| p * p).sum::<f64>().sqrt();
    dot / (nx * ny)
}

fn feature_properties(e: &Engine) -> Outcome {
    let mut errors = Vec::new();

    // TF-IDF spot checks against log(N / N_i) by hand.
    let mut vocab = Vocabulary {
        kind: VocabularyKind::Detail,
        centroids: vec![0.0; 4 * 64],
        word_counts: vec![0; 4],
        total: 0,
        idf_mode: IdfMode::Occurrence,
        seed: 0,
        inertia: 0.0,
    };
    let img = |pairs: &[(u32, u32)]| pairs.iter().copied().collect::<WordCounts>();
    let training = [img(&[(0, 3), (1, 1)]), img(&[(0, 1), (2, 5)])];
    vocab.fit_statistics(training.iter());
    if vocab.word_counts != vec![4, 1, 5, 0] || vocab.total != 10 {
        errors.push(format!(
            "occurrence statistics {:?}/{}",
            vocab.word_counts, vocab.total
        ));
    }
    let h = vocab.weigh(&img(&[(0, 2), (1, 1), (2, 1)]));
    let expect = [
        (0u32, 0.5 * (10.0f64 / 4.0).ln()),
        (1, 0.25 * 10.0f64.ln()),
        (2, 0.25 * 2.0f64.ln()),
    ];
    for (w, v) in expect {
        let got = h.entries.iter().find(|x| x.0 == w).map_or(0.0, |x| x.1);
        if (got - v).abs() > 1e-9 {
            errors.push(format!("tf-idf word {w}: {got} vs {v}"));
        }
    }
    let mut doc = vocab.clone();
    doc.idf_mode = IdfMode::Document;
    doc.fit_statistics(training.iter());
    if doc.word_counts != vec![2, 1, 1, 0] || doc.total != 2 {
        errors.push(format!(
            "document statistics {:?}/{}",
            doc.word_counts, doc.total
        ));
    }
    let h = doc.weigh(&img(&[(0, 7), (1, 1)]));
    let w0 = h.entries.iter().find(|x| x.0 == 0).map_or(0.0, |x| x.1);
    let w1 = h.entries.iter().find(|x| x.0 == 1).map_or(0.0, |x| x.1);
    if w0 != 0.0 {
        errors.push(format!("N/N_i = 1 weighs {w0}"));
    }
    if (w1 - 0.125 * 2.0f64.ln()).abs() > 1e-9 {
        errors.push(format!("document tf-idf {w1}"));
    }

    // Similarity on random histogram pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b) = (random_histogram(&mut rng), random_histogram(&mut rng));
        let k = rng.random_range(0.01..100.0);
        let scaled = TermHistogram {
            kind: b.kind,
            entries: b.entries.iter().map(|&(w, v)| (w, v * k)).collect(),
        };
        for m in [SimilarityMeasure::Cosine, SimilarityMeasure::ChiSquared] {
            let ab = similarity(&a, &b, m).unwrap();
            let ba = similarity(&b, &a, m).unwrap();
            let sc = similarity(&a, &scaled, m).unwrap();
            let own = similarity(&a, &a, m).unwrap();
            worst = worst
                .max((ab - ba).abs())
                .max((ab - sc).abs())
                .max((own - 1.0).abs());
            if !(0.0..=1.0).contains(&ab) {
                errors.push(format!("{m:?} out of bounds: {ab}"));
            }
        }
        worst = worst.max(
            (similarity(&a, &b, SimilarityMeasure::Cosine).unwrap() - dense_cosine(&a, &b)).abs(),
        );
    }
    if worst > 1e-9 {
        errors.push(format!("similarity deviation {worst:e}"));
    }

    // Thinning an already thinned render changes nothing.
    let r = &e.config.render;
    let mut changed = 0;
    for i in 0..100 {
        let p = &e.db.parts[(i * 7919) % e.db.parts.len()];
        let once = skeletonize(&render_line_drawing(
            &p.mesh,
            &random_view(&mut rng),
            r.image_size,
            r.crease_angle_deg,
        ));
        changed += usize::from(skeletonize(&once) != once);
    }
    if changed > 0 {
        errors.push(format!("{changed}/100 skeletons changed on re-thinning"));
    }
    let pass = errors.is_empty();
    let detail = if pass {
        format!("tf-idf spot checks, 1000 pairs (max deviation {worst:.1e}), 100 skeletons")
    } else {
        errors.join("; ")
    };
    outcome(pass, detail)
}

/// Seeds a session with the representative, traces each of its parts on
/// the canvas and always takes the first gallery entry.
fn identity_round_trip(e: Arc<Engine>) -> Outcome {
    let svc = SessionService::with_canvas(e.clone(), 512);
    let id = svc
        .create(&CreateSession {
            class: "chair".into(),
            ..Default::default()
        })
        .unwrap()
        .id;
    svc.with(&id, |s, e| {
        let mut picks = Vec::new();
        for slot in 0..s.state.slots.len() {
            if s.state.placed[slot].is_some() {
                continue;
            }
            let part = s.state.slots[slot].reference.unwrap();
            let req = StrokeRequest {
                canvas: Canvas {
                    width: s.canvas,
                    height: s.canvas,
                },
                strokes: contour_strokes(
                    &e.db.parts[part].mesh,
                    &s.frame(e),
                    e.config.render.crease_angle_deg,
                ),
                category: e.db.parts[part].category.clone(),
            };
            let g = s.submit_strokes(e, &req)?;
            let first = g.entries[0].part_id.clone();
            picks.push(format!("{}→{first}", e.db.parts[part].id));
            s.select_part(e, &g.token, &first)?;
        }
        let obj = s.export_model()?;
        let exported = TriangleMesh::parse_obj(&obj).unwrap();
        let mut expected = TriangleMesh::default();
        for (slot, _) in s.state.filled() {
            expected.append(&e.db.parts[s.state.slots[slot].reference.unwrap()].mesh);
        }
        let model = &e.db.models[s.reference_model];
        let all_slots = s.state.filled().count() == model.parts.len();
        let rms = if exported.vertices.len() == expected.vertices.len() {
            let sum: f64 = exported
                .vertices
                .iter()
                .zip(&expected.vertices)
                .map(|(a, b)| (a - b).norm_squared())
                .sum();
            (sum / expected.vertices.len() as f64).sqrt() / model.diagonal
        } else {
            f64::INFINITY
        };
        Ok(outcome(
            all_slots && rms <= 1e-3,
            format!(
                "{}: {} ; RMS {rms:.2e} of the diagonal",
                model.id,
                picks.join(", ")
            ),
        ))
    })
    .unwrap()
}

fn main() {
    let mut results = Vec::new();
    let mut report = |name: &str, o: Outcome| {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push(o.pass);
    };
    println!("preparing corpora");
    let desk = Arc::new(open("desk-75-11", desk_corpus(75, 11)));
    let styles = open("styles-10-4", style_corpus(10, 4));

    let mut latencies = Vec::new();
    report(
        "index/oracle equivalence",
        oracle_equivalence(&desk, &mut latencies),
    );
    report("self-retrieval", self_retrieval(&desk));
    report("context effect", context_effect(&styles));
    let cases = placement_cases(&desk, 50);
    report("latency", latency(&latencies, &cases));
    report("R1 exactness", r1_exactness(&cases));
    report("snapping convergence", snapping(&desk));
    report("feature properties", feature_properties(&desk));
    report("identity round trip", identity_round_trip(desk.clone()));

    let failed = results.iter().filter(|p| !**p).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
