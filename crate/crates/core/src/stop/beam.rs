//! Beam search over token sequences maximizing mean cosine with a cluster.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::datamodel::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::vecops;

/// Text encoder over token ids.
pub trait SequenceEmbedder: Sync {
    fn embed(&self, sequence: &[u32]) -> Result<Vec<f64>>;
    fn dimension(&self) -> usize;
}

/// Ordered next-token candidates given a prefix.
pub trait TokenProposer: Sync {
    fn propose(&self, prefix: &[u32], width: usize) -> Result<Vec<u32>>;
    fn vocab_size(&self) -> usize;
}

/// Precomputed objective `(1/n) sum_i cos(e, row_i)` for one cluster.
#[derive(Debug, Clone)]
pub struct ClusterObjective {
    mean_unit_row: Vec<f64>,
}

impl ClusterObjective {
    pub fn new(cluster: &EmbeddingMatrix) -> Result<Self> {
        let mut mean = vec![0.0; cluster.dims()];
        for (i, row) in cluster.iter_rows().enumerate() {
            let u = vecops::unit(row).ok_or(Error::ZeroRow(i))?;
            mean.iter_mut().zip(&u).for_each(|(m, x)| *m += x);
        }
        let n = cluster.rows() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(ClusterObjective {
            mean_unit_row: mean,
        })
    }

    pub fn dims(&self) -> usize {
        self.mean_unit_row.len()
    }

    pub fn score(&self, embedding: &[f64]) -> Result<f64> {
        if embedding.len() != self.dims() {
            return Err(Error::dim("sequence embedding", self.dims(), embedding.len()));
        }
        if let Some(index) = embedding.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let e = vecops::unit(embedding)
            .ok_or_else(|| Error::ZeroVector("embedder output".into()))?;
        Ok(vecops::dot(&e, &self.mean_unit_row).clamp(-1.0, 1.0))
    }
}

/// Mean cosine between `embed(sequence)` and every cluster row.
pub fn mean_similarity(
    sequence: &[u32],
    embedder: &dyn SequenceEmbedder,
    cluster: &EmbeddingMatrix,
) -> Result<f64> {
    ClusterObjective::new(cluster)?.score(&embedder.embed(sequence)?)
}

pub const DEFAULT_PROPOSAL_WIDTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamConfig {
    /// Number of two-token extension rounds.
    pub pair_steps: usize,
    pub beam_width: usize,
    pub top_k: usize,
    /// Candidates requested from the proposer per position. Independent of
    /// `beam_width`, so widening the beam only ever adds candidates.
    pub proposal_width: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            pair_steps: 3,
            beam_width: 5,
            top_k: 5,
            proposal_width: DEFAULT_PROPOSAL_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub tokens: Vec<u32>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedPrompts {
    /// Sorted by score descending, ties by token ids ascending.
    pub sequences: Vec<ScoredSequence>,
    pub objective: String,
    pub evaluated: usize,
}

/// Score descending, then lexicographic token order.
fn rank(a: &ScoredSequence, b: &ScoredSequence) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

fn checked_proposals(
    proposer: &dyn TokenProposer,
    prefix: &[u32],
    width: usize,
) -> Result<Vec<u32>> {
    let ids = proposer.propose(prefix, width)?;
    if ids.is_empty() {
        return Err(Error::Degenerate(format!(
            "proposer returned no candidates for prefix {prefix:?}"
        )));
    }
    if ids.len() > width {
        return Err(Error::Bridge(format!(
            "proposer returned {} candidates, width is {width}",
            ids.len()
        )));
    }
    let vocab = proposer.vocab_size();
    let mut seen = HashSet::new();
    for &id in &ids {
        if id as usize >= vocab {
            return Err(Error::Bridge(format!("token id {id} outside vocabulary of {vocab}")));
        }
        if !seen.insert(id) {
            return Err(Error::Bridge(format!("duplicate candidate token {id}")));
        }
    }
    Ok(ids)
}

pub fn beam_optimize(
    embedder: &dyn SequenceEmbedder,
    proposer: &dyn TokenProposer,
    cluster: &EmbeddingMatrix,
    start: &[u32],
    config: &BeamConfig,
) -> Result<OptimizedPrompts> {
    beam_optimize_with(embedder, proposer, cluster, start, config, Execution::default())
}

/// Each round extends every surviving prefix by every proposed token pair,
/// scores the full sequences, and keeps the best `beam_width`. The top
/// `top_k` of the last round's candidates are returned.
pub fn beam_optimize_with(
    embedder: &dyn SequenceEmbedder,
    proposer: &dyn TokenProposer,
    cluster: &EmbeddingMatrix,
    start: &[u32],
    config: &BeamConfig,
    exec: Execution,
) -> Result<OptimizedPrompts> {
    if config.beam_width == 0 || config.pair_steps == 0 || config.top_k == 0 {
        return Err(Error::InvalidArgument(
            "beam_width, pair_steps and top_k must all be >= 1".into(),
        ));
    }
    if embedder.dimension() != cluster.dims() {
        return Err(Error::dim("embedder dimension", cluster.dims(), embedder.dimension()));
    }
    let width = config.proposal_width;
    if width == 0 {
        return Err(Error::InvalidArgument("proposal_width must be >= 1".into()));
    }
    let objective = ClusterObjective::new(cluster)?;

    let mut beams: Vec<Vec<u32>> = vec![start.to_vec()];
    let mut evaluated = 0;
    let mut last_round = Vec::new();
    for _ in 0..config.pair_steps {
        // Proposals are gathered sequentially (the proposer may be a single
        // external process); scoring fans out.
        let mut candidates = Vec::new();
        for prefix in &beams {
            for first in checked_proposals(proposer, prefix, width)? {
                let mut one = prefix.clone();
                one.push(first);
                for second in checked_proposals(proposer, &one, width)? {
                    let mut two = one.clone();
                    two.push(second);
                    candidates.push(two);
                }
            }
        }
        let scores = exec.try_map(&candidates, |seq| objective.score(&embedder.embed(seq)?))?;
        evaluated += candidates.len();
        let mut scored: Vec<ScoredSequence> = candidates
            .into_iter()
            .zip(scores)
            .map(|(tokens, score)| ScoredSequence { tokens, score })
            .collect();
        scored.sort_by(rank);
        scored.dedup_by(|a, b| a.tokens == b.tokens);
        beams = scored
            .iter()
            .take(config.beam_width)
            .map(|s| s.tokens.clone())
            .collect();
        last_round = scored;
    }
    last_round.truncate(config.top_k);
    Ok(OptimizedPrompts {
        sequences: last_round,
        objective: "mean_cosine".into(),
        evaluated,
    })
}
