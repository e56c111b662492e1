//! Attribute prevalence, stereotype score and the parity diagnostic.
//!
//! An image counts as showing attribute `A` when its feature is strictly
//! closer (in cosine) to the positive description than to the negative one.
//! Prevalence is the empirical mean of that indicator over the dataset.

use serde::{Deserialize, Serialize};

use crate::datamodel::{AttributeSpec, ConceptDataset, EmbeddingMatrix};
use crate::error::{check_probability, Error, Result};
use crate::exec::Execution;
use crate::vecops;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceResult {
    pub attribute: String,
    pub positives: usize,
    pub total: usize,
    pub prevalence: f64,
    pub per_sample: Vec<bool>,
}

pub fn cosine_sim(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::dim("cosine_sim", u.len(), v.len()));
    }
    if vecops::norm(u) == 0.0 {
        return Err(Error::ZeroVector("cosine_sim first argument".into()));
    }
    if vecops::norm(v) == 0.0 {
        return Err(Error::ZeroVector("cosine_sim second argument".into()));
    }
    Ok(vecops::cosine_unchecked(u, v))
}

/// Zero-shot indicator: `cos(z, pos) > cos(z, neg)`; ties are negative.
pub fn classify(z_img: &[f64], attr: &AttributeSpec) -> Result<bool> {
    let pos = cosine_sim(z_img, &attr.embed_pos)?;
    let neg = cosine_sim(z_img, &attr.embed_neg)?;
    Ok(pos > neg)
}

/// Classifies every row of `embeddings` against `attr`.
pub fn prevalence_of(
    embeddings: &EmbeddingMatrix,
    attr: &AttributeSpec,
    exec: Execution,
) -> Result<PrevalenceResult> {
    if attr.dims() != embeddings.dims() {
        return Err(Error::dim(
            format!("attribute `{}`", attr.name),
            embeddings.dims(),
            attr.dims(),
        ));
    }
    // Per-row indicators are computed in parallel; the count is a sequential
    // fold so the result never depends on scheduling.
    let per_sample = exec
        .map_indexed(embeddings.rows(), |i| classify(embeddings.row(i), attr))
        .into_iter()
        .collect::<Result<Vec<bool>>>()?;
    let positives = per_sample.iter().filter(|&&b| b).count();
    let total = per_sample.len();
    Ok(PrevalenceResult {
        attribute: attr.name.clone(),
        positives,
        total,
        prevalence: positives as f64 / total as f64,
        per_sample,
    })
}

pub fn attribute_prevalence(dataset: &ConceptDataset, attr_name: &str) -> Result<PrevalenceResult> {
    attribute_prevalence_with(dataset, attr_name, Execution::default())
}

pub fn attribute_prevalence_with(
    dataset: &ConceptDataset,
    attr_name: &str,
    exec: Execution,
) -> Result<PrevalenceResult> {
    let attr = dataset.attribute(attr_name)?;
    prevalence_of(&dataset.embeddings, attr, exec)
}

/// `max(0, prevalence - prior)`.
pub fn stereotype_score(prevalence: f64, prior: f64) -> Result<f64> {
    check_probability("prevalence", prevalence)?;
    check_probability("prior", prior)?;
    Ok((prevalence - prior).max(0.0))
}

/// Deviation from the uniform split of a binary attribute.
pub fn parity_gap(prevalence: f64) -> Result<f64> {
    check_probability("prevalence", prevalence)?;
    Ok((prevalence - 0.5).abs())
}

/// A stereotype is declared when the score reaches the margin (inclusive).
pub fn verdict(psi: f64, margin: f64) -> Result<bool> {
    check_probability("psi", psi)?;
    check_probability("margin", margin)?;
    Ok(psi >= margin)
}

/// One audited (concept, model, attribute) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub concept: String,
    pub model_tag: String,
    pub attribute: String,
    pub prevalence: f64,
    pub prior: f64,
    pub psi: f64,
    pub parity_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wals: Option<f64>,
    pub verdict: bool,
}

/// Scores every attribute in `dataset`, in manifest order.
pub fn audit_dataset(
    dataset: &ConceptDataset,
    margin_override: Option<f64>,
    exec: Execution,
) -> Result<Vec<AuditRecord>> {
    if let Some(m) = margin_override {
        check_probability("margin", m)?;
    }
    dataset
        .attributes
        .iter()
        .map(|attr| {
            let prev = prevalence_of(&dataset.embeddings, attr, exec)?;
            let psi = stereotype_score(prev.prevalence, attr.prior)?;
            Ok(AuditRecord {
                concept: dataset.concept.clone(),
                model_tag: dataset.model_tag.clone(),
                attribute: attr.name.clone(),
                prevalence: prev.prevalence,
                prior: attr.prior,
                psi,
                parity_gap: parity_gap(prev.prevalence)?,
                wals: None,
                verdict: verdict(psi, margin_override.unwrap_or(attr.margin))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn axis_attr() -> AttributeSpec {
        AttributeSpec::new("a", vec![1.0, 0.0], vec![0.0, 1.0], 0.5).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cosine_examples() {
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_sim(&[2.0, 0.0], &[5.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_sim(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 0.707_106_78).abs() < 1e-8);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(cosine_sim(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector(_))));
        assert!(matches!(
            cosine_sim(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn classify_examples() {
        let a = axis_attr();
        assert!(classify(&[1.0, 0.0], &a).unwrap());
        assert!(!classify(&[0.0, 1.0], &a).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(!classify(&[h, h], &a).unwrap());
    }

    #[test]
    fn prevalence_on_two_d_set() {
        // cos to (1,0) vs (0,1): rows 0..2 lean to x, row 3 leans to y.
        let z = EmbeddingMatrix::from_rows(&[
            vec![0.9, 0.1],
            vec![0.6, 0.4],
            vec![1.0, -0.5],
            vec![0.2, 0.8],
        ])
        .unwrap();
        let ds = ConceptDataset::new("c", "p", "m", z, vec![axis_attr()]).unwrap();
        let r = attribute_prevalence(&ds, "a").unwrap();
        assert_eq!(r.positives, 3);
        assert_eq!(r.prevalence, 0.75);
        assert_eq!(r.per_sample, vec![true, true, true, false]);
    }

    #[test]
    fn prevalence_extremes_and_unknown() {
        let a = axis_attr();
        let pos = EmbeddingMatrix::from_rows(&vec![a.embed_pos.clone(); 5]).unwrap();
        let neg = EmbeddingMatrix::from_rows(&vec![a.embed_neg.clone(); 5]).unwrap();
        let ds = ConceptDataset::new("c", "p", "m", pos, vec![a.clone()]).unwrap();
        assert_eq!(attribute_prevalence(&ds, "a").unwrap().prevalence, 1.0);
        assert!(matches!(
            attribute_prevalence(&ds, "b"),
            Err(Error::UnknownAttribute(_))
        ));
        let ds = ConceptDataset::new("c", "p", "m", neg, vec![a]).unwrap();
        assert_eq!(attribute_prevalence(&ds, "a").unwrap().prevalence, 0.0);
    }

    #[test]
    fn score_examples() {
        assert!((stereotype_score(0.966, 0.34).unwrap() - 0.626).abs() < 1e-12);
        assert_eq!(stereotype_score(0.177, 0.25).unwrap(), 0.0);
        assert_eq!(stereotype_score(0.3, 0.3).unwrap(), 0.0);
        assert!(stereotype_score(1.2, 0.3).is_err());
    }

    #[test]
    fn parity_and_verdict_examples() {
        assert_eq!(parity_gap(0.5).unwrap(), 0.0);
        assert!((parity_gap(0.69).unwrap() - 0.19).abs() < 1e-12);
        assert_eq!(parity_gap(1.0).unwrap(), 0.5);
        assert!(verdict(0.626, 0.05).unwrap());
        assert!(!verdict(0.0, 0.05).unwrap());
        assert!(verdict(0.05, 0.05).unwrap());
    }

    #[test]
    fn audit_record_invariant() {
        let a = axis_attr();
        let z = EmbeddingMatrix::from_rows(&vec![a.embed_pos.clone(); 3]).unwrap();
        let mut a2 = a.clone();
        a2.name = "b".into();
        a2.prior = 1.0;
        let ds = ConceptDataset::new("c", "p", "m", z, vec![a, a2]).unwrap();
        let recs = audit_dataset(&ds, None, Execution::Sequential).unwrap();
        assert_eq!(recs[0].psi, 0.5);
        assert!(recs[0].verdict);
        assert_eq!(recs[1].psi, 0.0);
        assert!(!recs[1].verdict);
        for r in &recs {
            assert!((r.psi - (r.prevalence - r.prior).max(0.0)).abs() < 1e-9);
        }
    }

    fn rotation(theta: f64, phi: f64) -> [[f64; 3]; 3] {
        // R_z(theta) * R_x(phi)
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [
            [ct, -st * cp, st * sp],
            [st, ct * cp, -ct * sp],
            [0.0, sp, cp],
        ]
    }

    fn apply(r: &[[f64; 3]; 3], v: &[f64]) -> Vec<f64> {
        r.iter().map(|row| vecops::dot(row, v)).collect()
    }

    proptest! {
        #[test]
        fn score_is_clipped(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
            let s = stereotype_score(p, q).unwrap();
            prop_assert!(s >= 0.0);
            if p <= q { prop_assert_eq!(s, 0.0); }
        }

        #[test]
        fn classify_scale_invariant(
            z in prop::collection::vec(-1.0f64..1.0, 3),
            alpha in 1e-3f64..1e3,
        ) {
            prop_assume!(vecops::norm(&z) > 1e-3);
            let a = AttributeSpec::new("a", vec![1.0, 0.2, 0.0], vec![0.0, 1.0, -0.3], 0.5).unwrap();
            let scaled: Vec<f64> = z.iter().map(|x| x * alpha).collect();
            let m = cosine_sim(&z, &a.embed_pos).unwrap() - cosine_sim(&z, &a.embed_neg).unwrap();
            prop_assume!(m.abs() > 1e-9);
            prop_assert_eq!(classify(&z, &a).unwrap(), classify(&scaled, &a).unwrap());
        }

        #[test]
        fn classify_rotation_invariant(
            z in prop::collection::vec(-1.0f64..1.0, 3),
            theta in 0.0f64..std::f64::consts::TAU,
            phi in 0.0f64..std::f64::consts::TAU,
        ) {
            prop_assume!(vecops::norm(&z) > 1e-3);
            let a = AttributeSpec::new("a", vec![1.0, 0.2, 0.0], vec![0.0, 1.0, -0.3], 0.5).unwrap();
            let m = cosine_sim(&z, &a.embed_pos).unwrap() - cosine_sim(&z, &a.embed_neg).unwrap();
            prop_assume!(m.abs() > 1e-9);
            let r = rotation(theta, phi);
            let ra = AttributeSpec::new("a", apply(&r, &a.embed_pos), apply(&r, &a.embed_neg), 0.5).unwrap();
            prop_assert_eq!(classify(&z, &a).unwrap(), classify(&apply(&r, &z), &ra).unwrap());
        }

        #[test]
        fn concatenated_prevalence_is_weighted_mean(
            a in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..10),
            b in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..10),
        ) {
            prop_assume!(a.iter().chain(&b).all(|r| vecops::norm(r) > 1e-6));
            let attr = axis_attr();
            let ma = EmbeddingMatrix::from_rows(&a).unwrap();
            let mb = EmbeddingMatrix::from_rows(&b).unwrap();
            let pa = prevalence_of(&ma, &attr, Execution::Sequential).unwrap();
            let pb = prevalence_of(&mb, &attr, Execution::Sequential).unwrap();
            let pab = prevalence_of(&ma.concat(&mb).unwrap(), &attr, Execution::default()).unwrap();
            prop_assert_eq!(pab.positives, pa.positives + pb.positives);
            let weighted = (pa.prevalence * pa.total as f64 + pb.prevalence * pb.total as f64)
                / (pa.total + pb.total) as f64;
            prop_assert!((pab.prevalence - weighted).abs() < 1e-12);
        }
    }
}
