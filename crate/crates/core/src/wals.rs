//! Spectral variety along an attribute direction.
//!
//! The dataset's spectral structure comes from a thin SVD of the (centered)
//! feature matrix. The attribute direction is either the normalized
//! difference of the two description embeddings, or the leading direction
//! of supervised PCA on attribute-aware image sets. The score is the
//! singular-value-weighted mean of `|<delta, u_i>|` over the top `k`
//! directions, so it lies in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::datamodel::{AttributeSpec, AwareSets, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg;
use crate::vecops;

/// Fraction of the singular-value mass captured by the default `k`.
pub const DEFAULT_ENERGY: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// Non-increasing, all strictly above the rank tolerance.
    pub singular_values: Vec<f64>,
    /// Orthonormal directions in feature space, one per singular value.
    pub left_vectors: Vec<Vec<f64>>,
    pub rank: usize,
    pub centered: bool,
}

impl SvdResult {
    /// Smallest `k` whose leading singular values reach `energy` of the total.
    pub fn k_for_energy(&self, energy: f64) -> usize {
        let total: f64 = self.singular_values.iter().sum();
        let mut acc = 0.0;
        for (i, s) in self.singular_values.iter().enumerate() {
            acc += s;
            if acc >= energy * total {
                return i + 1;
            }
        }
        self.rank
    }

    pub fn default_k(&self) -> usize {
        self.k_for_energy(DEFAULT_ENERGY)
    }
}

/// Column means of `matrix`.
pub fn column_means(matrix: &EmbeddingMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; matrix.dims()];
    for row in matrix.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = matrix.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

pub fn svd_structure(matrix: &EmbeddingMatrix, center: bool) -> Result<SvdResult> {
    let (n, d) = (matrix.rows(), matrix.dims());
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "svd_structure needs at least 2 rows, got {n}"
        )));
    }
    let raw_scale = vecops::norm(matrix.data());
    let data: Vec<f64> = if center {
        let mean = column_means(matrix);
        matrix
            .iter_rows()
            .flat_map(|row| row.iter().zip(&mean).map(|(v, m)| v - m))
            .collect()
    } else {
        matrix.data().to_vec()
    };
    let (sigma, vectors) = linalg::svd_right(&data, n, d)?;
    let tol = (n.max(d) as f64) * f64::EPSILON * raw_scale.max(f64::MIN_POSITIVE);
    let rank = sigma.iter().take_while(|&&s| s > tol).count();
    Ok(SvdResult {
        singular_values: sigma[..rank].to_vec(),
        left_vectors: vectors.into_iter().take(rank).collect(),
        rank,
        centered: center,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMethod {
    TextDiff,
    SpcaLinear,
    SpcaKernel,
}

impl DeltaMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DeltaMethod::TextDiff => "text_diff",
            DeltaMethod::SpcaLinear => "spca_linear",
            DeltaMethod::SpcaKernel => "spca_kernel",
        }
    }
}

/// Unit direction of change of an attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaDirection {
    pub vector: Vec<f64>,
    pub method: DeltaMethod,
    pub attribute: String,
}

impl DeltaDirection {
    pub fn new(vector: &[f64], method: DeltaMethod, attribute: impl Into<String>) -> Result<Self> {
        let vector =
            vecops::unit(vector).ok_or_else(|| Error::ZeroVector("attribute direction".into()))?;
        Ok(DeltaDirection {
            vector,
            method,
            attribute: attribute.into(),
        })
    }
}

/// Normalized `E_T(d+) - E_T(d-)`.
pub fn delta_from_text(attr: &AttributeSpec) -> Result<DeltaDirection> {
    if attr.embed_pos.len() != attr.embed_neg.len() {
        return Err(Error::dim(
            format!("embed_neg of `{}`", attr.name),
            attr.embed_pos.len(),
            attr.embed_neg.len(),
        ));
    }
    let diff = vecops::sub(&attr.embed_pos, &attr.embed_neg);
    let vector = vecops::unit(&diff).ok_or_else(|| {
        Error::Degenerate(format!(
            "embed_pos and embed_neg of `{}` are identical",
            attr.name
        ))
    })?;
    Ok(DeltaDirection {
        vector,
        method: DeltaMethod::TextDiff,
        attribute: attr.name.clone(),
    })
}

/// Attribute-aware features with their `+1/-1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddings {
    pub attribute: String,
    pub matrix: EmbeddingMatrix,
    pub labels: Vec<f64>,
}

impl LabeledEmbeddings {
    pub fn new(attribute: impl Into<String>, matrix: EmbeddingMatrix, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != matrix.rows() {
            return Err(Error::dim("labels", matrix.rows(), labels.len()));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument(format!("label {bad} is not +1 or -1")));
        }
        if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
            return Err(Error::Degenerate("both label classes must be present".into()));
        }
        Ok(LabeledEmbeddings {
            attribute: attribute.into(),
            matrix,
            labels,
        })
    }

    /// Stacks the positive set (label `+1`) over the negative set (`-1`).
    pub fn from_aware(attribute: impl Into<String>, sets: &AwareSets) -> Result<Self> {
        let matrix = sets.positive.concat(&sets.negative)?;
        let labels = std::iter::repeat_n(1.0, sets.positive.rows())
            .chain(std::iter::repeat_n(-1.0, sets.negative.rows()))
            .collect();
        LabeledEmbeddings::new(attribute, matrix, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `H K_YY H` with the linear label kernel `K_YY = y y^T`.
    fn centered_label_kernel(&self) -> Vec<f64> {
        let m = self.len();
        let mean = self.labels.iter().sum::<f64>() / m as f64;
        let hy: Vec<f64> = self.labels.iter().map(|y| y - mean).collect();
        let mut out = Vec::with_capacity(m * m);
        for a in &hy {
            out.extend(hy.iter().map(|b| a * b));
        }
        out
    }
}

/// Mean projection of positives minus mean projection of negatives.
fn class_contrast(projections: &[f64], labels: &[f64]) -> f64 {
    let (mut pos, mut neg, mut np, mut nn) = (0.0, 0.0, 0usize, 0usize);
    for (p, &y) in projections.iter().zip(labels) {
        if y > 0.0 {
            pos += p;
            np += 1;
        } else {
            neg += p;
            nn += 1;
        }
    }
    pos / np as f64 - neg / nn as f64
}

/// Flips `v` in place so the positive class projects higher on average.
fn orient(v: &mut [f64], projections: &mut [f64], labels: &[f64]) {
    let contrast = class_contrast(projections, labels);
    let flip = if contrast != 0.0 {
        contrast < 0.0
    } else {
        v.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0)
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
        projections.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Leading eigenvector of `Z H K_YY H Z^T`.
pub fn delta_spca_linear(data: &LabeledEmbeddings) -> Result<DeltaDirection> {
    let (m, d) = (data.matrix.rows(), data.matrix.dims());
    let b = data.centered_label_kernel();
    let x = data.matrix.data();
    // With sample-major X (m x d) the feature-space matrix is X^T B X.
    let xt: Vec<f64> = (0..d)
        .flat_map(|j| (0..m).map(move |i| x[i * d + j]))
        .collect();
    let bx = linalg::matmul(&b, x, m, m, d);
    let mmat = linalg::matmul(&xt, &bx, d, m, d);

    let bound = vecops::norm(x).powi(2) * vecops::norm(&b);
    let eig = linalg::symmetric_eigen(&mmat, d)?;
    if eig.values[0].is_nan() || eig.values[0] <= 1e-12 * bound {
        return Err(Error::Degenerate(
            "labels are uncorrelated with every feature direction".into(),
        ));
    }
    let mut v = eig.vectors[0].clone();
    let mut proj: Vec<f64> = data.matrix.iter_rows().map(|r| vecops::dot(r, &v)).collect();
    orient(&mut v, &mut proj, &data.labels);
    DeltaDirection::new(&v, DeltaMethod::SpcaLinear, data.attribute.clone())
}

/// Bandwidth choice for the RBF kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(f64),
    /// Median pairwise Euclidean distance of the training samples.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    /// `exp(-|x - y|^2 / (2 sigma^2))`.
    Rbf(Bandwidth),
}

/// Kernel with every parameter resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedKernel {
    Linear,
    Rbf { sigma: f64 },
}

impl ResolvedKernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ResolvedKernel::Linear => vecops::dot(a, b),
            ResolvedKernel::Rbf { sigma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// Median of all pairwise Euclidean distances between rows.
pub fn median_pairwise_distance(matrix: &EmbeddingMatrix) -> Result<f64> {
    let n = matrix.rows();
    if n < 2 {
        return Err(Error::Degenerate("median heuristic needs at least 2 samples".into()));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(vecops::norm(&vecops::sub(matrix.row(i), matrix.row(j))));
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    Ok(if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    })
}

fn resolve(kernel: Kernel, samples: &EmbeddingMatrix) -> Result<ResolvedKernel> {
    match kernel {
        Kernel::Linear => Ok(ResolvedKernel::Linear),
        Kernel::Rbf(Bandwidth::Fixed(sigma)) => {
            if sigma > 0.0 && sigma.is_finite() {
                Ok(ResolvedKernel::Rbf { sigma })
            } else {
                Err(Error::InvalidArgument(format!("rbf bandwidth {sigma} must be > 0")))
            }
        }
        Kernel::Rbf(Bandwidth::Median) => {
            let sigma = median_pairwise_distance(samples)?;
            if sigma > 0.0 {
                Ok(ResolvedKernel::Rbf { sigma })
            } else {
                Err(Error::Degenerate("median pairwise distance is zero".into()))
            }
        }
    }
}

/// Row-major Gram matrix `K[i][j] = k(a_i, b_j)`.
pub fn kernel_matrix(
    kernel: ResolvedKernel,
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    exec: Execution,
) -> Vec<f64> {
    exec.map_indexed(a.rows(), |i| {
        let ai = a.row(i);
        b.iter_rows().map(|bj| kernel.eval(ai, bj)).collect::<Vec<f64>>()
    })
    .concat()
}

/// Kernel supervised PCA solution: a projection in the kernel's feature space.
#[derive(Debug, Clone)]
pub struct KernelSpcaModel {
    pub attribute: String,
    pub kernel: ResolvedKernel,
    pub samples: EmbeddingMatrix,
    /// Expansion coefficients over `samples`.
    pub coefficients: Vec<f64>,
    pub eigenvalue: f64,
}

impl KernelSpcaModel {
    /// `sum_j beta_j k(z_j, x)`.
    pub fn project(&self, x: &[f64]) -> f64 {
        self.samples
            .iter_rows()
            .zip(&self.coefficients)
            .map(|(z, b)| b * self.kernel.eval(z, x))
            .sum()
    }

    pub fn project_all(&self, probes: &EmbeddingMatrix, exec: Execution) -> Vec<f64> {
        exec.map_indexed(probes.rows(), |i| self.project(probes.row(i)))
    }

    /// The implied feature-space direction; only defined for the linear kernel.
    pub fn direction(&self) -> Option<Result<DeltaDirection>> {
        match self.kernel {
            ResolvedKernel::Linear => {
                let mut v = vec![0.0; self.samples.dims()];
                for (z, b) in self.samples.iter_rows().zip(&self.coefficients) {
                    v.iter_mut().zip(z).for_each(|(acc, zi)| *acc += b * zi);
                }
                Some(DeltaDirection::new(&v, DeltaMethod::SpcaKernel, self.attribute.clone()))
            }
            ResolvedKernel::Rbf { .. } => None,
        }
    }
}

/// Relative eigenvalue cutoff of the kernel matrix's numerical range.
const KERNEL_RANK_TOL: f64 = 1e-10;

/// Kernel supervised PCA.
///
/// Maximizes `beta^T K H K_YY H K beta` under `beta^T K beta = 1`, solved on
/// the numerical range of `K`. With the linear kernel the resulting
/// projections coincide with [`delta_spca_linear`].
pub fn delta_spca_kernel(data: &LabeledEmbeddings, kernel: Kernel) -> Result<KernelSpcaModel> {
    delta_spca_kernel_with(data, kernel, Execution::default())
}

pub fn delta_spca_kernel_with(
    data: &LabeledEmbeddings,
    kernel: Kernel,
    exec: Execution,
) -> Result<KernelSpcaModel> {
    let m = data.len();
    let resolved = resolve(kernel, &data.matrix)?;
    let k = kernel_matrix(resolved, &data.matrix, &data.matrix, exec);
    let keig = linalg::symmetric_eigen(&k, m)?;
    let top = keig.values[0];
    let kept: Vec<usize> = (0..m)
        .filter(|&i| top > 0.0 && keig.values[i] > KERNEL_RANK_TOL * top.max(1.0))
        .collect();
    if kept.is_empty() {
        return Err(Error::Degenerate(
            "kernel matrix is singular beyond tolerance".into(),
        ));
    }
    let r = kept.len();
    let b = data.centered_label_kernel();
    // Columns of Q Lambda^{1/2}, stored as rows of `w` (r x m).
    let w: Vec<Vec<f64>> = kept
        .iter()
        .map(|&i| {
            let s = keig.values[i].sqrt();
            keig.vectors[i].iter().map(|q| q * s).collect()
        })
        .collect();
    let wmat: Vec<f64> = w.concat();
    let wt: Vec<f64> = (0..m).flat_map(|j| w.iter().map(move |row| row[j])).collect();
    let bwt = linalg::matmul(&b, &wt, m, m, r);
    let reduced = linalg::matmul(&wmat, &bwt, r, m, r);
    let eig = linalg::symmetric_eigen(&reduced, r)?;
    let bound = top * vecops::norm(&b);
    if eig.values[0].is_nan() || eig.values[0] <= 1e-12 * bound {
        return Err(Error::Degenerate(
            "labels carry no signal in the kernel feature space".into(),
        ));
    }
    let a = &eig.vectors[0];
    // beta = Q Lambda^{-1/2} a
    let mut beta = vec![0.0; m];
    for (idx, &i) in kept.iter().enumerate() {
        let s = a[idx] / keig.values[i].sqrt();
        beta.iter_mut()
            .zip(&keig.vectors[i])
            .for_each(|(bj, q)| *bj += s * q);
    }
    let mut proj: Vec<f64> = (0..m)
        .map(|i| vecops::dot(&k[i * m..(i + 1) * m], &beta))
        .collect();
    orient(&mut beta, &mut proj, &data.labels);
    Ok(KernelSpcaModel {
        attribute: data.attribute.clone(),
        kernel: resolved,
        samples: data.matrix.clone(),
        coefficients: beta,
        eigenvalue: eig.values[0],
    })
}

/// `sum_{i<=k} sigma_i |<delta, u_i>| / sum_{j<=k} sigma_j`.
pub fn wals_score(svd: &SvdResult, delta: &DeltaDirection, k: usize) -> Result<f64> {
    if svd.rank == 0 {
        return Err(Error::Degenerate("all singular values are zero".into()));
    }
    if k == 0 || k > svd.rank {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            svd.rank
        )));
    }
    let d = svd.left_vectors[0].len();
    if delta.vector.len() != d {
        return Err(Error::dim("attribute direction", d, delta.vector.len()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (s, u) in svd.singular_values.iter().zip(&svd.left_vectors).take(k) {
        num += s * vecops::dot(&delta.vector, u).abs();
        den += s;
    }
    if den <= 0.0 {
        return Err(Error::Degenerate("all singular values are zero".into()));
    }
    Ok((num / den).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(r: &[[f64; 2]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rank_one_centered() {
        let svd = svd_structure(&rows(&[[2.0, 0.0], [-1.0, 0.0], [-1.0, 0.0]]), true).unwrap();
        assert_eq!(svd.rank, 1);
        assert!((svd.left_vectors[0][0].abs() - 1.0).abs() < 1e-12);
        let along = DeltaDirection::new(&[1.0, 0.0], DeltaMethod::TextDiff, "a").unwrap();
        let across = DeltaDirection::new(&[0.0, 1.0], DeltaMethod::TextDiff, "a").unwrap();
        assert!((wals_score(&svd, &along, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(wals_score(&svd, &across, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn identity_uncentered() {
        let svd = svd_structure(&rows(&[[1.0, 0.0], [0.0, 1.0]]), false).unwrap();
        assert_eq!(svd.rank, 2);
        assert!(svd.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn diagonal_pair_gives_inverse_sqrt_two() {
        let svd = svd_structure(&rows(&[[1.0, 1.0], [-1.0, -1.0]]), true).unwrap();
        assert!((svd.singular_values[0] - 2.0).abs() < 1e-12);
        let delta = DeltaDirection::new(&[1.0, 0.0], DeltaMethod::TextDiff, "a").unwrap();
        let w = wals_score(&svd, &delta, 1).unwrap();
        assert!((w - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
    }

    #[test]
    fn identical_rows_have_rank_zero() {
        let svd = svd_structure(&rows(&[[0.3, 0.7], [0.3, 0.7], [0.3, 0.7]]), true).unwrap();
        assert_eq!(svd.rank, 0);
        let delta = DeltaDirection::new(&[1.0, 0.0], DeltaMethod::TextDiff, "a").unwrap();
        assert!(matches!(wals_score(&svd, &delta, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn k_out_of_range() {
        let svd = svd_structure(&rows(&[[1.0, 0.0], [0.0, 1.0]]), false).unwrap();
        let delta = DeltaDirection::new(&[1.0, 0.0], DeltaMethod::TextDiff, "a").unwrap();
        assert!(wals_score(&svd, &delta, 0).is_err());
        assert!(wals_score(&svd, &delta, 3).is_err());
    }

    #[test]
    fn default_k_captures_energy() {
        let svd = SvdResult {
            singular_values: vec![10.0, 5.0, 4.0, 1.0],
            left_vectors: vec![vec![0.0; 4]; 4],
            rank: 4,
            centered: true,
        };
        // cumulative 10, 15, 19, 20 -> 19/20 = 0.95 reached at k=3
        assert_eq!(svd.default_k(), 3);
    }

    #[test]
    fn text_delta_examples() {
        let a = AttributeSpec::new("a", vec![1.0, 0.0], vec![0.0, 1.0], 0.5).unwrap();
        let d = delta_from_text(&a).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.vector[0] - h).abs() < 1e-15 && (d.vector[1] + h).abs() < 1e-15);

        let a = AttributeSpec::new("a", vec![2.0, 1.0], vec![1.0, 1.0], 0.5).unwrap();
        assert_eq!(delta_from_text(&a).unwrap().vector, vec![1.0, 0.0]);

        let a = AttributeSpec::new("a", vec![1.0, 1.0], vec![1.0, 1.0], 0.5).unwrap();
        assert!(matches!(delta_from_text(&a), Err(Error::Degenerate(_))));
    }

    fn labeled(r: &[[f64; 2]], y: &[f64]) -> LabeledEmbeddings {
        LabeledEmbeddings::new("a", rows(r), y.to_vec()).unwrap()
    }

    #[test]
    fn spca_linear_two_samples() {
        // H K H with y = (1, -1) is [[1, -1], [-1, 1]]; Z H K H Z^T = [[4, 0], [0, 0]].
        let d = delta_spca_linear(&labeled(&[[1.0, 0.0], [-1.0, 0.0]], &[1.0, -1.0])).unwrap();
        assert!((d.vector[0] - 1.0).abs() < 1e-12 && d.vector[1].abs() < 1e-12);
    }

    #[test]
    fn spca_linear_planted_axis_sign() {
        let data = labeled(
            &[[0.3, 1.0], [-0.2, 1.2], [0.1, -1.1], [-0.2, -1.1]],
            &[1.0, 1.0, -1.0, -1.0],
        );
        let d = delta_spca_linear(&data).unwrap();
        assert!(d.vector[1] > 0.99);
    }

    #[test]
    fn labels_require_both_classes() {
        assert!(LabeledEmbeddings::new("a", rows(&[[1.0, 0.0], [0.0, 1.0]]), vec![1.0, 1.0]).is_err());
        assert!(LabeledEmbeddings::new("a", rows(&[[1.0, 0.0], [0.0, 1.0]]), vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn spca_kernel_duplicate_pair_is_degenerate() {
        let data = labeled(&[[0.4, 0.5], [0.4, 0.5]], &[1.0, -1.0]);
        assert!(matches!(
            delta_spca_kernel(&data, Kernel::Linear),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            delta_spca_kernel(&data, Kernel::Rbf(Bandwidth::Fixed(1.0))),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn spca_kernel_linear_two_samples_matches() {
        let data = labeled(&[[1.0, 0.0], [-1.0, 0.0]], &[1.0, -1.0]);
        let model = delta_spca_kernel(&data, Kernel::Linear).unwrap();
        let lin = delta_spca_linear(&data).unwrap();
        for probe in [[0.3, 0.9], [-2.0, 0.1], [0.0, 1.0]] {
            let a = model.project(&probe);
            let b = vecops::dot(&lin.vector, &probe);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let dir = model.direction().unwrap().unwrap();
        assert!((dir.vector[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_bandwidth() {
        let data = labeled(&[[1.0, 0.0], [-1.0, 0.0]], &[1.0, -1.0]);
        assert!(delta_spca_kernel(&data, Kernel::Rbf(Bandwidth::Fixed(0.0))).is_err());
        assert!(delta_spca_kernel(&data, Kernel::Rbf(Bandwidth::Median)).is_ok());
    }

    #[test]
    fn median_distance_even_and_odd() {
        // distances: 1, 2, 3 (odd count) -> 2
        let m = rows(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]);
        assert_eq!(median_pairwise_distance(&m).unwrap(), 2.0);
    }
}
