//! Reference implementations used only by tests.
//!
//! Everything here is deliberately naive and shares no code with
//! `oasis-core`: cyclic Jacobi eigensolver, one-sided Jacobi SVD,
//! exhaustive normalized cut, exhaustive sequence enumeration and two-pass
//! moments. Matrices are row-major `Vec<f64>`.

pub mod fixtures;

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations, sorted by
/// eigenvalue descending. `vectors[i]` pairs with `values[i]`.
pub fn jacobi_eigen(m: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut a = m.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    (values, vectors)
}

/// One-sided (Hestenes) Jacobi SVD of a row-major `rows x cols` matrix.
///
/// Returns singular values descending with the matching right singular
/// vectors (unit vectors of length `cols`).
pub fn jacobi_svd(x: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut u = x.to_vec();
    let mut v = vec![0.0; cols * cols];
    for i in 0..cols {
        v[i * cols + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let (up, uq) = (u[r * cols + p], u[r * cols + q]);
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let (up, uq) = (u[r * cols + p], u[r * cols + q]);
                    u[r * cols + p] = c * up - s * uq;
                    u[r * cols + q] = s * up + c * uq;
                }
                for r in 0..cols {
                    let (vp, vq) = (v[r * cols + p], v[r * cols + q]);
                    v[r * cols + p] = c * vp - s * vq;
                    v[r * cols + q] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|r| u[r * cols + j].powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    (
        order.iter().map(|&j| sigma[j]).collect(),
        order
            .iter()
            .map(|&j| (0..cols).map(|r| v[r * cols + j]).collect())
            .collect(),
    )
}

/// Column-centers a row-major matrix.
pub fn center_columns(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut mean = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            mean[c] += x[r * cols + c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    (0..rows * cols).map(|i| x[i] - mean[i % cols]).collect()
}

/// Weighted alignment score computed from scratch with [`jacobi_svd`].
pub fn wals_oracle(x: &[f64], rows: usize, cols: usize, center: bool, delta: &[f64], k: usize) -> f64 {
    let data = if center {
        center_columns(x, rows, cols)
    } else {
        x.to_vec()
    };
    let (sigma, vectors) = jacobi_svd(&data, rows, cols);
    let dn = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, v) in sigma.iter().zip(&vectors).take(k) {
        let dot: f64 = v.iter().zip(delta).map(|(a, b)| a * b).sum::<f64>() / dn;
        num += s * dot.abs();
        den += s;
    }
    num / den
}

/// Normalized cut value of a 2-way partition.
pub fn ncut(w: &[f64], n: usize, in_a: &[bool]) -> f64 {
    let (mut cut, mut vol_a, mut vol_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let wij = w[i * n + j];
            if in_a[i] {
                vol_a += wij;
            } else {
                vol_b += wij;
            }
            if in_a[i] && !in_a[j] {
                cut += wij;
            }
        }
    }
    cut / vol_a + cut / vol_b
}

#[derive(Debug, Clone)]
pub struct NcutOptimum {
    /// First minimizer found, as 0/1 labels with node 0 on side 0.
    pub labels: Vec<usize>,
    pub value: f64,
    /// Partitions whose value is within `1e-12` of the minimum.
    pub minimizers: usize,
}

/// Minimum normalized cut over every 2-partition with both sides non-empty.
pub fn exhaustive_ncut(w: &[f64], n: usize) -> NcutOptimum {
    assert!((2..=20).contains(&n));
    let mut values = Vec::new();
    // Node 0 is always on side A to skip mirrored partitions.
    for mask in 0u32..(1 << (n - 1)) {
        let in_a: Vec<bool> = (0..n)
            .map(|i| i == 0 || mask & (1 << (i - 1)) == 0)
            .collect();
        if in_a.iter().all(|&a| a) {
            continue;
        }
        let value = ncut(w, n, &in_a);
        // A side with zero volume has no defined cut ratio.
        if value.is_finite() {
            values.push((value, in_a));
        }
    }
    let best = values
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("n >= 2");
    NcutOptimum {
        labels: best.1.iter().map(|&a| usize::from(!a)).collect(),
        value: best.0,
        minimizers: values.iter().filter(|v| v.0 <= best.0 + 1e-12).count(),
    }
}

/// Best continuation of `len` tokens over `vocab` by brute force.
///
/// Ties go to the lexicographically smallest sequence.
pub fn exhaustive_best<F>(vocab: u32, len: usize, mut score: F) -> (Vec<u32>, f64)
where
    F: FnMut(&[u32]) -> f64,
{
    let mut seq = vec![0u32; len];
    let mut best = (seq.clone(), score(&seq));
    loop {
        // odometer increment, last position fastest
        let mut i = len;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            seq[i] += 1;
            if seq[i] < vocab {
                break;
            }
            seq[i] = 0;
        }
        let s = score(&seq);
        if s > best.1 {
            best = (seq.clone(), s);
        }
    }
}

/// Two-pass per-column mean and unbiased variance.
pub fn two_pass_moments(series: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = series.len();
    let len = series[0].len();
    let mean: Vec<f64> = (0..len)
        .map(|t| series.iter().map(|s| s[t]).sum::<f64>() / n as f64)
        .collect();
    let var = (0..len)
        .map(|t| {
            if n < 2 {
                return 0.0;
            }
            series.iter().map(|s| (s[t] - mean[t]).powi(2)).sum::<f64>() / (n - 1) as f64
        })
        .collect();
    (mean, var)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}
