//! D2 shape distributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::TriangleMesh;

/// Histogram of distances between area-weighted surface samples, divided by
/// the bounding-box diagonal, in `bins` bins summing to 1. `pairs` is met by
/// taking all pairs among ⌈√pairs⌉ samples.
pub fn d2_descriptor(mesh: &TriangleMesh, pairs: usize, bins: usize, seed: u64) -> Vec<f64> {
    let mut hist = vec![0.0; bins.max(1)];
    let n = ((pairs as f64).sqrt().ceil() as usize).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = mesh.sample_surface(n, &mut rng);
    let diag = mesh.diagonal();
    if pts.len() < 2 || diag <= 0.0 {
        hist[0] = 1.0;
        return hist;
    }
    let b = hist.len();
    let mut total = 0u64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d = (pts[i] - pts[j]).norm() / diag;
            let k = ((d * b as f64) as usize).min(b - 1);
            hist[k] += 1.0;
            total += 1;
        }
    }
    for h in &mut hist {
        *h /= total as f64;
    }
    hist
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::primitives::{cuboid, sphere};
    use nalgebra::Point3;

    #[test]
    fn normalized_and_deterministic() {
        let m = cuboid(Point3::origin(), Point3::new(1.0, 0.2, 0.3));
        let a = d2_descriptor(&m, 10_000, 64, 3);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(a, d2_descriptor(&m, 10_000, 64, 3));
    }

    #[test]
    fn sphere_and_long_box_differ() {
        let s = sphere(Point3::origin(), 0.5, 24, 48);
        // Same bounding-box diagonal as the sphere: √3.
        let (w, t) = (0.1f64, 0.1f64);
        let l = (3.0 - w * w - t * t).sqrt();
        let b = cuboid(Point3::origin(), Point3::new(l, w, t));
        assert!((s.diagonal() - b.diagonal()).abs() < 0.02);
        let d = l1_distance(
            &d2_descriptor(&s, 100_000, 64, 1),
            &d2_descriptor(&b, 100_000, 64, 1),
        );
        assert!(d > 0.2, "{d}");
    }
}
