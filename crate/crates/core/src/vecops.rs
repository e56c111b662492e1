//! Small dense-vector helpers shared by the metric modules.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Returns `a / |a|`, or `None` for a zero (or non-finite-norm) vector.
pub fn unit(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(a.iter().map(|x| x / n).collect())
    } else {
        None
    }
}

/// Cosine similarity without argument validation; callers check zero norms.
pub(crate) fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    // One square root of the product keeps parallel vectors at exactly 1.
    let c = dot(a, b) / (dot(a, a) * dot(b, b)).sqrt();
    c.clamp(-1.0, 1.0)
}
