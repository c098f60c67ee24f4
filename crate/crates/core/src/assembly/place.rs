//! Relative placement: insertion-ratio transfer, symmetry-plane alignment
//! and mirrored placement of counterparts.

use nalgebra::{Matrix4, Point3, Vector3};

use crate::geometry::{insertion_ratios, OrientedBoundingBox, ReflectionPlane};

const RATIO_TOL: f64 = 1e-9;

/// Translation that makes the fitted box `fitted` sit in `target_q` with the
/// same per-axis insertion ratios `source_p` had in `source_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativePlacement {
    pub translation: Vector3<f64>,
    pub source_ratios: [f64; 3],
    /// Set when some ratio cannot be reproduced with the fitted extents.
    pub fallback: bool,
    /// Per target axis, the extra offsets that keep the ratio unchanged.
    pub slack: [(f64, f64); 3],
}

/// Center offset along one axis reproducing overlap ratio `r`, for a box of
/// half-support `s` against a box of half-extent `hq`. `hint` is the
/// rescaled source offset and picks among equivalent solutions; `gap` is
/// the rescaled source clearance used when the parts do not overlap.
/// Returns the offset, whether the ratio was out of reach, and the range of
/// extra offsets over which the ratio stays the same.
fn solve_axis(r: f64, s: f64, hq: f64, hint: f64, gap: f64) -> (f64, bool, (f64, f64)) {
    let side = if hint < 0.0 { -1.0 } else { 1.0 };
    let overlap = r * 2.0 * hq;
    let plateau = 2.0 * s.min(hq);
    let flat = (hq - s).abs();
    let tol = RATIO_TOL * 2.0 * hq;
    if overlap <= tol {
        return (side * (hq + s + gap.max(0.0)), false, (0.0, 0.0));
    }
    if overlap >= plateau - tol {
        let u = hint.clamp(-flat, flat);
        return (u, overlap > plateau + tol, (-flat - u, flat - u));
    }
    (side * (hq + s - overlap), false, (0.0, 0.0))
}

pub fn relative_translation(
    source_p: &OrientedBoundingBox,
    source_q: &OrientedBoundingBox,
    fitted: &OrientedBoundingBox,
    target_q: &OrientedBoundingBox,
) -> RelativePlacement {
    let ratios = insertion_ratios(source_p, source_q).as_array();
    let mut center = target_q.center;
    let mut fallback = false;
    let mut slack = [(0.0, 0.0); 3];
    for i in 0..3 {
        let (a_src, a_dst) = (source_q.axes[i], target_q.axes[i]);
        let (hq_src, hq_dst) = (source_q.half_extents[i], target_q.half_extents[i]);
        let scale = if hq_src > 0.0 { hq_dst / hq_src } else { 1.0 };
        let u_src = (source_p.center - source_q.center).dot(&a_src);
        let gap = u_src.abs() - hq_src - source_p.support_radius(&a_src);
        let s = fitted.support_radius(&a_dst);
        let (u, fb, free) = solve_axis(ratios[i], s, hq_dst, u_src * scale, gap * scale);
        fallback |= fb;
        slack[i] = free;
        center += a_dst * u;
    }
    RelativePlacement {
        translation: center - fitted.center,
        source_ratios: ratios,
        fallback,
        slack,
    }
}

/// Translation keeping `p`'s center at the same box-relative offset from
/// `source_q` once `source_q` is replaced by `target_q`.
pub fn offset_translation(
    source_p: &OrientedBoundingBox,
    source_q: &OrientedBoundingBox,
    fitted: &OrientedBoundingBox,
    target_q: &OrientedBoundingBox,
) -> Vector3<f64> {
    let local = source_q.local(&source_p.center);
    let mut center = target_q.center;
    for i in 0..3 {
        let h = source_q.half_extents[i];
        let scale = if h > 0.0 {
            target_q.half_extents[i] / h
        } else {
            1.0
        };
        center += target_q.axes[i] * (local[i] * scale);
    }
    center - fitted.center
}

/// The part of `shift` that stays within `slack` along `axes`, and whether
/// all of it did.
pub fn within_slack(
    shift: &Vector3<f64>,
    axes: &[Vector3<f64>; 3],
    slack: &[(f64, f64); 3],
    tol: f64,
) -> (Vector3<f64>, bool) {
    let mut out = Vector3::zeros();
    let mut whole = true;
    for i in 0..3 {
        let c = shift.dot(&axes[i]);
        let kept = c.clamp(slack[i].0, slack[i].1);
        whole &= (kept - c).abs() <= tol;
        out += axes[i] * kept;
    }
    (out, whole)
}

/// Translation along `target`'s normal that brings `placed` onto it, or
/// `None` when the planes are not parallel.
pub fn plane_alignment(placed: &ReflectionPlane, target: &ReflectionPlane) -> Option<Vector3<f64>> {
    if placed.normal.dot(&target.normal).abs() < 1.0 - 1e-3 {
        return None;
    }
    Some(-target.normal * target.signed_distance(&placed.point))
}

/// Transform of the counterpart: reflect through the source plane, apply
/// the placed part's transform, reflect through the target plane.
pub fn mirror_transform(
    placed: &Matrix4<f64>,
    source_plane: &ReflectionPlane,
    target_plane: &ReflectionPlane,
) -> Matrix4<f64> {
    target_plane.matrix() * placed * source_plane.matrix()
}

pub fn translation_matrix(t: &Vector3<f64>) -> Matrix4<f64> {
    Matrix4::new_translation(t)
}

pub fn transform_points(m: &Matrix4<f64>, points: &[Point3<f64>]) -> Vec<Point3<f64>> {
    points.iter().map(|p| m.transform_point(p)).collect()
}
