//! Seeded synthetic data generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn unit_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, d);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Random orthogonal `d x d` matrix (rows orthonormal) via Gram-Schmidt.
pub fn orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    while q.len() < d {
        let mut v = gaussian_vec(rng, d);
        for b in &q {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `m` rows split evenly between two isotropic clouds with unit spread,
/// centered at `+separation/2 * e` and `-separation/2 * e`. Labels are
/// `+1` for the first half and `-1` for the second.
pub fn two_clouds(
    rng: &mut ChaCha8Rng,
    m: usize,
    d: usize,
    separation: f64,
    e: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let y = if i < m / 2 { 1.0 } else { -1.0 };
        let noise = gaussian_vec(rng, d);
        rows.push(
            noise
                .iter()
                .zip(e)
                .map(|(z, ei)| z + y * 0.5 * separation * ei)
                .collect(),
        );
        labels.push(y);
    }
    (rows, labels)
}

/// Two blobs of `per_blob` points each: uniform jitter of half-width
/// `spread` around the origin and around `(gap, 0, ...)`.
pub fn two_blobs(rng: &mut ChaCha8Rng, per_blob: usize, d: usize, spread: f64, gap: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for blob in 0..2 {
        for _ in 0..per_blob {
            let mut p: Vec<f64> = (0..d).map(|_| rng.random_range(-spread..spread)).collect();
            p[0] += blob as f64 * gap;
            rows.push(p);
            truth.push(blob);
        }
    }
    (rows, truth)
}

/// Evenly spaced points on two concentric circles; inner ring labelled `+1`.
pub fn concentric_rings(per_ring: usize, inner: f64, outer: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (radius, label) in [(inner, 1.0), (outer, -1.0)] {
        for i in 0..per_ring {
            let a = std::f64::consts::TAU * i as f64 / per_ring as f64;
            rows.push(vec![radius * a.cos(), radius * a.sin()]);
            labels.push(label);
        }
    }
    (rows, labels)
}

/// `n` random rows of which exactly `positives` are closer (in cosine) to
/// `pos` than to `neg`. Both anchors must be unit vectors. Rows within
/// `1e-3` of the decision boundary are redrawn.
pub fn planted_rows(
    rng: &mut ChaCha8Rng,
    n: usize,
    positives: usize,
    pos: &[f64],
    neg: &[f64],
) -> Vec<Vec<f64>> {
    let w: Vec<f64> = pos.iter().zip(neg).map(|(p, q)| p - q).collect();
    let ww: f64 = w.iter().map(|x| x * x).sum();
    (0..n)
        .map(|i| loop {
            let z = gaussian_vec(rng, pos.len());
            let side: f64 = z.iter().zip(&w).map(|(a, b)| a * b).sum();
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            if side.abs() < 1e-3 * norm {
                continue;
            }
            let want_positive = i < positives;
            if (side > 0.0) == want_positive {
                break z;
            }
            // reflect across the boundary hyperplane
            break z.iter().zip(&w).map(|(a, b)| a - 2.0 * side / ww * b).collect();
        })
        .collect()
}
