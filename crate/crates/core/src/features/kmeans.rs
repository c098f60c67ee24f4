//! Lloyd's k-means with k-means++ seeding over flat f32 rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct KMeans {
    pub dim: usize,
    /// `k × dim`, row-major.
    pub centroids: Vec<f32>,
    pub assignment: Vec<u32>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    pub iterations: usize,
}

impl KMeans {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }
}

#[inline]
pub fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    let mut lanes = [0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            let d = x[k] - y[k];
            lanes[k] += d * d;
        }
    }
    let tail: f32 = ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum();
    lanes.iter().map(|&v| v as f64).sum::<f64>() + tail as f64
}

/// Index of and squared distance to the nearest row of `centroids`; ties go
/// to the lower index.
pub fn nearest(point: &[f32], centroids: &[f32], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Number of distinct rows, counted up to `limit`.
pub fn distinct_rows(data: &[f32], dim: usize, limit: usize) -> usize {
    let mut seen = std::collections::HashSet::new();
    for row in data.chunks_exact(dim) {
        seen.insert(row.iter().map(|v| v.to_bits()).collect::<Vec<u32>>());
        if seen.len() >= limit {
            break;
        }
    }
    seen.len()
}

/// Clusters `data` (rows of length `dim`) into `k` groups. Stops after
/// `max_iter` iterations or when inertia changes by less than `tol`
/// relative. Requires at least `k` distinct rows.
pub fn kmeans(data: &[f32], dim: usize, k: usize, seed: u64, max_iter: usize, tol: f64) -> KMeans {
    let n = data.len() / dim;
    assert!(k >= 1 && n >= k, "k-means needs at least k points");
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(row(i), row(first)))
        .collect();
    while centroids.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && t < d {
                    chosen = i;
                    break;
                }
                t -= d;
            }
            if d2[chosen] == 0.0 {
                chosen = (0..n).rev().find(|&i| d2[i] > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(row(i), &c));
        }
        centroids.extend_from_slice(&c);
    }

    let mut assignment = vec![0u32; n];
    let mut inertia = f64::INFINITY;
    let mut iterations = 0;
    let mut dist = vec![0.0f64; n];
    for it in 0..max_iter.max(1) {
        iterations = it + 1;
        let mut new_inertia = 0.0;
        for i in 0..n {
            let (c, d) = nearest(row(i), &centroids, dim);
            assignment[i] = c as u32;
            dist[i] = d;
            new_inertia += d;
        }
        let converged =
            inertia.is_finite() && (inertia - new_inertia).abs() <= tol * inertia.max(1e-300);
        inertia = new_inertia;
        if converged || it + 1 == max_iter.max(1) {
            break;
        }
        // Update step in f64.
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i] as usize;
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += *v as f64;
            }
        }
        let mut taken = std::collections::HashSet::new();
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    centroids[c * dim + j] = (sums[c * dim + j] / counts[c] as f64) as f32;
                }
            } else {
                // Re-seed an empty cluster with the worst-fit point.
                let far = (0..n)
                    .filter(|i| !taken.contains(i))
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .unwrap();
                taken.insert(far);
                dist[far] = 0.0;
                centroids[c * dim..(c + 1) * dim].copy_from_slice(row(far));
            }
        }
    }
    KMeans {
        dim,
        centroids,
        assignment,
        inertia,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bell-shaped sample in [-1, 1].
    fn normalish(rng: &mut impl Rng) -> f32 {
        (0..4).map(|_| rng.random::<f32>() - 0.5).sum::<f32>() / 2.0
    }

    #[test]
    fn two_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut data = Vec::new();
        let mut means = [[0.0f64; 2]; 2];
        for (b, c) in [(0usize, [0.0f32, 0.0]), (1, [10.0, 10.0])] {
            for _ in 0..200 {
                let p = [c[0] + normalish(&mut rng), c[1] + normalish(&mut rng)];
                means[b][0] += p[0] as f64 / 200.0;
                means[b][1] += p[1] as f64 / 200.0;
                data.extend_from_slice(&p);
            }
        }
        let km = kmeans(&data, 2, 2, 7, 100, 1e-4);
        let mut cs: Vec<[f64; 2]> = (0..2)
            .map(|i| [km.centroid(i)[0] as f64, km.centroid(i)[1] as f64])
            .collect();
        cs.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for b in 0..2 {
            assert!((cs[b][0] - means[b][0]).abs() < 1e-3 && (cs[b][1] - means[b][1]).abs() < 1e-3);
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data: Vec<f32> = (0..30).map(|i| i as f32).collect();
        let km = kmeans(&data, 3, 1, 0, 100, 1e-4);
        let mean = [13.5f32, 14.5, 15.5];
        for j in 0..3 {
            assert!((km.centroid(0)[j] - mean[j]).abs() < 1e-4);
        }
    }

    #[test]
    fn more_clusters_never_increase_inertia_here() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f32> = (0..2000).map(|_| rng.random::<f32>()).collect();
        let a = kmeans(&data, 4, 4, 5, 100, 1e-4);
        let b = kmeans(&data, 4, 32, 5, 100, 1e-4);
        assert!(b.inertia <= a.inertia);
    }
}
