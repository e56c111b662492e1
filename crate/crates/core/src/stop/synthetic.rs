//! A self-contained vocabulary for tests, benches and the toy bridge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stop::beam::{SequenceEmbedder, TokenProposer};
use crate::vecops;

/// Each token owns a fixed vector; a sequence embeds to the sum of its
/// token vectors. Proposals rank tokens by cosine with the prefix sum
/// (ties and empty prefixes fall back to id order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticVocab {
    pub token_vectors: Vec<Vec<f64>>,
    #[serde(default)]
    pub start: Vec<u32>,
}

impl SyntheticVocab {
    pub fn new(token_vectors: Vec<Vec<f64>>) -> Result<Self> {
        let vocab = SyntheticVocab {
            token_vectors,
            start: Vec::new(),
        };
        vocab.validate()?;
        Ok(vocab)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if self.token_vectors.is_empty() || d == 0 {
            return Err(Error::Degenerate("synthetic vocabulary is empty".into()));
        }
        if let Some(bad) = self.token_vectors.iter().find(|v| v.len() != d) {
            return Err(Error::dim("synthetic token vector", d, bad.len()));
        }
        if let Some(&bad) = self.start.iter().find(|&&t| t as usize >= self.token_vectors.len()) {
            return Err(Error::InvalidArgument(format!("start token {bad} outside vocabulary")));
        }
        Ok(())
    }

    fn sum(&self, sequence: &[u32]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.dimension()];
        for &t in sequence {
            let v = self
                .token_vectors
                .get(t as usize)
                .ok_or_else(|| Error::InvalidArgument(format!("token {t} outside vocabulary")))?;
            acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
        }
        Ok(acc)
    }
}

impl SequenceEmbedder for SyntheticVocab {
    fn embed(&self, sequence: &[u32]) -> Result<Vec<f64>> {
        self.sum(sequence)
    }

    fn dimension(&self) -> usize {
        self.token_vectors.first().map_or(0, Vec::len)
    }
}

impl TokenProposer for SyntheticVocab {
    fn propose(&self, prefix: &[u32], width: usize) -> Result<Vec<u32>> {
        let context = self.sum(prefix)?;
        let affinity = |t: usize| match (vecops::unit(&context), vecops::unit(&self.token_vectors[t])) {
            (Some(c), Some(v)) => vecops::dot(&c, &v),
            _ => 0.0,
        };
        let mut ids: Vec<usize> = (0..self.token_vectors.len()).collect();
        ids.sort_by(|&a, &b| affinity(b).total_cmp(&affinity(a)).then(a.cmp(&b)));
        Ok(ids.into_iter().take(width).map(|t| t as u32).collect())
    }

    fn vocab_size(&self) -> usize {
        self.token_vectors.len()
    }
}
