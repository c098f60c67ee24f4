mod common;

use common::{engine, trace};
use partsketch_core::render::{render_in_frame, LineImage};
use partsketch_service::{
    Canvas, CreateSession, DesignSession, Origin, ServiceError, SessionService, StrokeRequest,
};

fn service() -> SessionService {
    SessionService::with_canvas(engine(), 256)
}

fn chair(svc: &SessionService) -> String {
    svc.create(&CreateSession {
        class: "chair".into(),
        ..Default::default()
    })
    .unwrap()
    .id
}

fn slot_of(s: &DesignSession, category: &str) -> usize {
    s.state
        .slots
        .iter()
        .position(|x| x.category == category)
        .unwrap()
}

fn ink(gray: &[u8], size: usize) -> LineImage {
    let mut img = LineImage::blank(size, size);
    for (i, &g) in gray.iter().enumerate() {
        img.set(i % size, i / size, g < 255);
    }
    img
}

#[test]
fn sessions_start_from_the_representative() {
    let svc = service();
    let e = svc.engine();
    let info = svc
        .create(&CreateSession {
            class: "chair".into(),
            ..Default::default()
        })
        .unwrap();
    assert_eq!((info.lambda1, info.lambda2), (0.5, 0.5));
    assert_eq!(
        info.reference_model,
        e.db.models[e.db.representatives["chair"]].id
    );
    assert!(info.slots.iter().all(|s| s.placed.is_none() && s.open));

    let err = svc
        .create(&CreateSession {
            class: "boat".into(),
            ..Default::default()
        })
        .unwrap_err();
    assert_eq!(err.status(), 400);
    assert!(err.to_string().contains("chair"), "{err}");
    let err = svc
        .create(&CreateSession {
            class: "chair".into(),
            lambda1: Some(-1.0),
            lambda2: None,
        })
        .unwrap_err();
    assert_eq!(err.status(), 400);

    svc.with(&info.id, |s, e| {
        let model = &e.db.models[s.reference_model];
        let meshes: Vec<_> = model.parts.iter().map(|&p| &e.db.parts[p].mesh).collect();
        let expected = render_in_frame(&meshes, &s.frame(e), e.config.render.crease_angle_deg);
        let shadow = s.shadow(e);
        assert!(shadow
            .iter()
            .all(|&g| g == 255 || g == partsketch_service::session::FAINT_GRAY));
        assert_eq!(ink(&shadow, s.canvas).pixels, expected.pixels);
        Ok(())
    })
    .unwrap();
}

#[test]
fn view_changes_are_deterministic() {
    let svc = service();
    let id = chair(&svc);
    svc.with(&id, |s, e| {
        let first = s.shadow_png(e);
        let d = s.view.direction;
        assert_eq!(s.set_view(e, [d.x * 3.0, d.y * 3.0, d.z * 3.0])?, first);
        let side = s.set_view(e, [1.0, 0.0, 0.0])?;
        assert_ne!(side, first);
        assert_eq!(s.set_view(e, [1.0, 0.0, 0.0])?, side);
        assert!((s.view.direction.norm() - 1.0).abs() < 1e-12);
        assert_eq!(s.set_view(e, [0.0; 3]).unwrap_err().status(), 400);
        Ok(())
    })
    .unwrap();
}

#[test]
fn stroke_validation() {
    let svc = service();
    let id = chair(&svc);
    svc.with(&id, |s, e| {
        let canvas = Canvas {
            width: 256,
            height: 256,
        };
        let mk = |strokes: Vec<Vec<[f64; 2]>>, category: &str| StrokeRequest {
            canvas,
            strokes,
            category: category.into(),
        };
        for bad in [
            mk(vec![], "back"),
            mk(vec![vec![]], "back"),
            mk(vec![vec![[10.0, 10.0], [300.0, 10.0]]], "back"),
            mk(vec![vec![[10.0, f64::NAN]]], "back"),
        ] {
            assert!(matches!(
                s.submit_strokes(e, &bad),
                Err(ServiceError::Invalid(_))
            ));
        }
        let err = s
            .submit_strokes(e, &mk(vec![vec![[10.0, 10.0], [50.0, 50.0]]], "wheel"))
            .unwrap_err();
        assert_eq!(err.status(), 400);
        assert!(s.gallery().is_none());
        Ok(())
    })
    .unwrap();
}

#[test]
fn tracing_a_reference_part_retrieves_it() {
    let svc = service();
    let id = chair(&svc);
    svc.with(&id, |s, e| {
        let back = slot_of(s, "back");
        let req = trace(s, e, back);
        let g = s.submit_strokes(e, &req)?;
        assert_eq!(g.slot, back);
        let reference = e.db.parts[s.state.slots[back].reference.unwrap()]
            .id
            .clone();
        assert_eq!(g.entries[0].part_id, reference);
        for entry in &g.entries {
            let b = entry.breakdown;
            assert!((b.sketch + b.detail + b.style - entry.score).abs() < 1e-12);
            assert_eq!(entry.origin, Origin::Retrieved);
        }
        for w in g.entries.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        let again = s.submit_strokes(e, &req)?;
        assert_ne!(again.token, g.token);
        assert_eq!(again.entries, g.entries);
        assert!(s.thumbnail(e, 0)?.starts_with(b"\x89PNG"));
        assert!(matches!(
            s.thumbnail(e, 999),
            Err(ServiceError::UnknownEntry(999))
        ));
        Ok(())
    })
    .unwrap();
}

#[test]
fn selection_places_mirrors_and_exports() {
    let svc = service();
    let id = chair(&svc);
    svc.with(&id, |s, e| {
        assert!(matches!(s.export_model(), Err(ServiceError::EmptyAssembly)));
        let seat = slot_of(s, "seat");
        let g = s.submit_strokes(e, &trace(s, e, seat))?;
        assert!(matches!(
            s.select_part(e, "nope", &g.entries[0].part_id),
            Err(ServiceError::StaleGallery { .. })
        ));
        let wrong =
            e.db.parts
                .iter()
                .find(|p| p.category == "seat" && !g.entries.iter().any(|x| x.part_id == p.id));
        if let Some(p) = wrong {
            assert!(matches!(
                s.select_part(e, &g.token, &p.id),
                Err(ServiceError::NotInGallery(_))
            ));
        }
        let reference = e.db.parts[s.state.slots[seat].reference.unwrap()]
            .id
            .clone();
        let sel = s.select_part(e, &g.token, &reference)?;
        assert_eq!(sel.changed_slots, vec![seat]);
        assert!(matches!(
            s.select_part(e, &g.token, &reference),
            Err(ServiceError::StaleGallery { .. })
        ));
        assert!(sel.slots.iter().filter(|x| x.index != seat).all(|x| x.open));
        assert!(sel.suggestions.iter().all(|x| x.category != "seat"));

        let back = slot_of(s, "back");
        let g = s.submit_strokes(e, &trace(s, e, back))?;
        let back_ref = e.db.parts[s.state.slots[back].reference.unwrap()]
            .id
            .clone();
        s.select_part(e, &g.token, &back_ref)?;
        let diag = e.db.models[s.reference_model].diagonal;
        for slot in [seat, back] {
            let placed = s.state.placed[slot].as_ref().unwrap();
            let src = &e.db.parts[placed.part];
            let worst = placed
                .mesh
                .vertices
                .iter()
                .zip(&src.mesh.vertices)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6 * diag, "{}: {worst}", placed.part_id);
        }

        let arm = slot_of(s, "armrest");
        let g = s.submit_strokes(e, &trace(s, e, arm))?;
        let sel = s.select_part(e, &g.token, &g.entries[0].part_id)?;
        assert_eq!(sel.changed_slots.len(), 2);
        assert_eq!(s.state.filled().count(), 4);
        for (_, p) in s.state.filled() {
            assert!(p.transform.fixed_view::<3, 3>(0, 0).determinant() > 0.0);
        }
        let mut ids: Vec<_> = s.state.filled().map(|(i, _)| i).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 4);

        let obj = s.export_model()?;
        assert_eq!(obj.lines().filter(|l| l.starts_with("g ")).count(), 4);
        let shadow = s.shadow(e);
        assert!(shadow.contains(&0) && shadow.contains(&partsketch_service::session::FAINT_GRAY));
        s.remove_slot(arm)?;
        assert_eq!(s.state.filled().count(), 3);
        Ok(())
    })
    .unwrap();
}

#[test]
fn sessions_are_isolated() {
    let e = engine();
    // Interleaved histories must match the same histories run alone.
    let run = |svc: &SessionService, ids: &[String], order: &[usize]| {
        let mut out = vec![Vec::new(); ids.len()];
        for &k in order {
            let id = &ids[k % ids.len()];
            let step = out[k % ids.len()].len();
            let r = svc
                .with(id, |s, e| {
                    let cat = ["seat", "back", "legs"][step % 3];
                    if step == 1 && k % 2 == 1 {
                        s.set_view(e, [0.3, 0.4, 0.8])?;
                    }
                    let g = s.submit_strokes(e, &trace(s, e, slot_of(s, cat)))?;
                    let pick = g.entries[k % g.entries.len().min(2)].part_id.clone();
                    s.select_part(e, &g.token, &pick)?;
                    Ok((g.entries.clone(), s.export_model()?))
                })
                .unwrap();
            out[k % ids.len()].push(r);
        }
        out
    };
    let together = SessionService::with_canvas(e.clone(), 256);
    let ids = vec![chair(&together), chair(&together)];
    let mixed = run(&together, &ids, &[0, 1, 1, 0, 0, 1]);
    let alone = SessionService::with_canvas(e.clone(), 256);
    let a = vec![chair(&alone)];
    let first = run(&alone, &a, &[0, 0, 0]);
    let b = vec![chair(&alone)];
    let second = run(&alone, &b, &[1, 1, 1]);
    assert_eq!(mixed[0], first[0]);
    assert_eq!(mixed[1], second[0]);
}
