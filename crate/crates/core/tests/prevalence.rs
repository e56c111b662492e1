use oasis_core::stereoscore::{attribute_prevalence, audit_dataset};
use oasis_core::{AttributeSpec, ConceptDataset, EmbeddingMatrix, Execution};
use oasis_testkit::fixtures::{planted_rows, rng, unit_vec};

fn dataset(d: usize, n: usize, positives: usize, seed: u64) -> ConceptDataset {
    let mut r = rng(seed);
    let pos = unit_vec(&mut r, d);
    let neg = unit_vec(&mut r, d);
    let rows = planted_rows(&mut r, n, positives, &pos, &neg);
    let attr = AttributeSpec::new("a", pos, neg, 0.3).unwrap();
    ConceptDataset::new("c", "a photo", "m", EmbeddingMatrix::from_rows(&rows).unwrap(), vec![attr])
        .unwrap()
}

#[test]
fn planted_fractions_are_recovered_exactly() {
    for d in [2, 64] {
        for (i, frac) in [0.0, 0.25, 0.75, 1.0].into_iter().enumerate() {
            let n = 200;
            let ds = dataset(d, n, (frac * n as f64) as usize, 50 + i as u64);
            let p = attribute_prevalence(&ds, "a").unwrap();
            assert_eq!(p.prevalence, frac, "d={d}");
            let normalized = ds.clone().normalized().unwrap();
            assert_eq!(attribute_prevalence(&normalized, "a").unwrap().prevalence, frac);
        }
    }
}

#[test]
fn audit_is_policy_independent() {
    let ds = dataset(16, 300, 111, 60);
    let a = audit_dataset(&ds, None, Execution::Sequential).unwrap();
    let b = audit_dataset(&ds, None, Execution::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].prevalence, 111.0 / 300.0);
    assert_eq!(a[0].psi, (111.0f64 / 300.0 - 0.3).max(0.0));
}
