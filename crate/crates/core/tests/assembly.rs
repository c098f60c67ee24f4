use nalgebra::Vector3;
use partsketch_core::assembly::{AssemblyState, PlacementRule};
use partsketch_core::config::AssemblyConfig;
use partsketch_core::dataset::{build_database, PartDatabase};
use partsketch_core::geometry::TriangleMesh;
use partsketch_core::render::ViewDirection;
use partsketch_core::synth::desk_corpus;

fn database() -> PartDatabase {
    let c = desk_corpus(6, 21);
    build_database(c.manifest, c.meshes).unwrap()
}

fn view() -> ViewDirection {
    ViewDirection::new(Vector3::new(0.5, 0.31, 0.81))
}

fn rms(a: &TriangleMesh, b: &TriangleMesh) -> f64 {
    assert_eq!(a.vertices.len(), b.vertices.len());
    let s: f64 = a
        .vertices
        .iter()
        .zip(&b.vertices)
        .map(|(x, y)| (x - y).norm_squared())
        .sum();
    (s / a.vertices.len() as f64).sqrt()
}

/// Model with mirrored armrests, if the corpus has one.
fn armed_model(db: &PartDatabase) -> usize {
    (0..db.models.len())
        .find(|&m| {
            db.models[m]
                .parts
                .iter()
                .any(|&p| db.parts[p].category == "armrest")
        })
        .expect("corpus has an armed chair")
}

#[test]
fn own_parts_reassemble_the_reference() {
    let db = database();
    let cfg = AssemblyConfig::default();
    for m in 0..db.models.len() {
        let model = &db.models[m];
        let mut state = AssemblyState::new(&db, m, view());
        for &p in &model.parts {
            let slot = model.parts.iter().position(|&x| x == p).unwrap();
            if state.placed[slot].is_some() {
                continue;
            }
            state.place(&db, &cfg, slot, p, None).unwrap();
        }
        let diag = model.diagonal;
        for (slot, placed) in state.filled() {
            let source = &db.parts[model.parts[slot]];
            assert_eq!(placed.part, source.index);
            let err = rms(&placed.mesh, &source.mesh) / diag;
            assert!(err < 1e-3, "{}: rms {err}", placed.part_id);
            assert!(placed.transform.fixed_view::<3, 3>(0, 0).determinant() > 0.0);
            assert!(!placed.report.fallback, "{}", placed.part_id);
            if let (Some(a), Some(b)) =
                (&placed.report.source_ratios, &placed.report.achieved_ratios)
            {
                for i in 0..3 {
                    assert!(
                        (a[i] - b[i]).abs() < 1e-6,
                        "{}: {a:?} vs {b:?}",
                        placed.part_id
                    );
                }
            }
        }
    }
}

#[test]
fn placing_an_armrest_mirrors_its_counterpart() {
    let db = database();
    let cfg = AssemblyConfig::default();
    let m = armed_model(&db);
    let model = &db.models[m];
    let mut state = AssemblyState::new(&db, m, view());
    let seat = model
        .parts
        .iter()
        .position(|&p| db.parts[p].category == "seat")
        .unwrap();
    state
        .place(&db, &cfg, seat, model.parts[seat], None)
        .unwrap();
    let arm = model
        .parts
        .iter()
        .position(|&p| db.parts[p].category == "armrest")
        .unwrap();
    let changed = state.place(&db, &cfg, arm, model.parts[arm], None).unwrap();
    assert_eq!(changed.len(), 2);
    let other = changed[1];
    let mirrored = state.placed[other].as_ref().unwrap();
    assert_eq!(mirrored.report.rule, PlacementRule::Mirrored);
    assert_eq!(mirrored.mirrored_from, Some(arm));
    assert_eq!(mirrored.part, model.counterpart(model.parts[arm]).unwrap());
    // A reflection composed with a reflection keeps orientation.
    assert!(mirrored.transform.fixed_view::<3, 3>(0, 0).determinant() > 0.0);
    let err = rms(&mirrored.mesh, &db.parts[mirrored.part].mesh) / model.diagonal;
    assert!(err < 1e-3, "mirror rms {err}");
}

#[test]
fn parts_from_another_model_follow_the_neighbor() {
    let db = database();
    let cfg = AssemblyConfig::default();
    let mut state = AssemblyState::new(&db, 0, view());
    let seat_slot = state.slot_for("seat", None);
    let seat = db.model_part_in(1, "seat").unwrap();
    state.place(&db, &cfg, seat_slot, seat, None).unwrap();
    assert_eq!(
        state.placed[seat_slot].as_ref().unwrap().report.rule,
        PlacementRule::FitOnly
    );
    assert!(state.open_slots().iter().all(|&s| s != seat_slot));
    let back_slot = state.slot_for("back", None);
    assert_eq!(state.context(back_slot).parts, vec![seat]);
    let back = db.model_part_in(2, "back").unwrap();
    state.place(&db, &cfg, back_slot, back, None).unwrap();
    let report = &state.placed[back_slot].as_ref().unwrap().report;
    assert_eq!(report.rule, PlacementRule::Relative);
    assert_eq!(report.anchor.as_deref(), Some(db.parts[seat].id.as_str()));
    let snap = report.snap.as_ref().expect("back snaps onto the seat");
    assert!(snap.max_displacement <= snap.displacement_bound + 1e-9);

    let obj = state.to_obj();
    let groups = obj.lines().filter(|l| l.starts_with("g ")).count();
    assert_eq!(groups, 2);
    let merged = state.merged_mesh();
    let parsed = TriangleMesh::parse_obj(&obj).unwrap();
    assert_eq!(parsed.vertices.len(), merged.vertices.len());
    assert_eq!(parsed.triangles, merged.triangles);

    state.remove(back_slot).unwrap();
    assert!(state.placed[back_slot].is_none());
    assert!(state.remove(99).is_err());
    let legs = db.model_part_in(1, "legs").unwrap();
    assert!(state.place(&db, &cfg, back_slot, legs, None).is_err());
}
