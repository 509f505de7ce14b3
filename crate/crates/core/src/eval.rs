//! Retrieval evaluation: rank every candidate code for a description and
//! summarize with MRR and Recall@k.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::EmbeddingStore;
use crate::error::{Error, Result};
use crate::model::{
    pool_and_normalize, score, ModelConfig, ModelParams, QAEmbedding, Role, TokenSequence,
};

/// Cutoffs reported by [`evaluate`].
pub const RECALL_CUTOFFS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankingResult {
    pub query_id: String,
    /// 1-based rank of the ground-truth candidate.
    pub rank: usize,
    pub num_candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mrr: f64,
    pub recall_at: BTreeMap<usize, f64>,
    pub num_queries: usize,
}

#[derive(Serialize)]
struct MetricsJson {
    mrr: f64,
    r1: f64,
    r5: f64,
    r10: f64,
    num_queries: usize,
}

impl MetricsReport {
    pub fn from_results(results: &[RankingResult]) -> Result<Self> {
        let mut recall_at = BTreeMap::new();
        for k in RECALL_CUTOFFS {
            recall_at.insert(k, recall_at_k(results, k)?);
        }
        Ok(Self {
            mrr: mrr(results)?,
            recall_at,
            num_queries: results.len(),
        })
    }

    pub fn recall(&self, k: usize) -> Option<f64> {
        self.recall_at.get(&k).copied()
    }

    /// `{"mrr", "r1", "r5", "r10", "num_queries"}`.
    pub fn to_json(&self) -> String {
        let j = MetricsJson {
            mrr: self.mrr,
            r1: self.recall(1).unwrap_or(f64::NAN),
            r5: self.recall(5).unwrap_or(f64::NAN),
            r10: self.recall(10).unwrap_or(f64::NAN),
            num_queries: self.num_queries,
        };
        serde_json::to_string(&j).expect("metrics serialize")
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>10}", "metric", "value")?;
        writeln!(f, "{:<12} {:>10.4}", "MRR", self.mrr)?;
        for (k, r) in &self.recall_at {
            writeln!(f, "{:<12} {:>10.4}", format!("R@{k}"), r)?;
        }
        write!(f, "{:<12} {:>10}", "queries", self.num_queries)
    }
}

/// Rank of `truth` among `scores` (ascending, ties by index).
pub fn rank_of(scores: &[f64], truth: usize) -> usize {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order.iter().position(|&i| i == truth).unwrap() + 1
}

/// Ranks precomputed candidate embeddings for one embedded query.
pub fn rank_embedded(
    params: &ModelParams,
    query_id: &str,
    query: &QAEmbedding,
    candidates: &[QAEmbedding],
    truth_index: usize,
) -> Result<RankingResult> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate list"));
    }
    if truth_index >= candidates.len() {
        return Err(Error::InvalidConfig(format!(
            "truth index {truth_index} out of range for {} candidates",
            candidates.len()
        )));
    }
    let scores = candidates
        .iter()
        .map(|c| score(params, query, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankingResult {
        query_id: query_id.to_string(),
        rank: rank_of(&scores, truth_index),
        num_candidates: candidates.len(),
    })
}

/// Embeds the query and every candidate, then ranks by ascending score.
pub fn rank_query(
    params: &ModelParams,
    query_id: &str,
    query: &TokenSequence,
    candidates: &[TokenSequence],
    truth_index: usize,
    eps_ball: f64,
) -> Result<RankingResult> {
    let q = pool_and_normalize(params, query, eps_ball)?;
    let cands = candidates
        .iter()
        .map(|c| pool_and_normalize(params, c, eps_ball))
        .collect::<Result<Vec<_>>>()?;
    rank_embedded(params, query_id, &q, &cands, truth_index)
}

/// Mean reciprocal rank.
pub fn mrr(results: &[RankingResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::Empty("ranking results"));
    }
    Ok(results.iter().map(|r| 1.0 / r.rank as f64).sum::<f64>() / results.len() as f64)
}

/// Fraction of queries whose truth is ranked within the top `k`.
pub fn recall_at_k(results: &[RankingResult], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if results.is_empty() {
        return Err(Error::Empty("ranking results"));
    }
    let hits = results.iter().filter(|r| r.rank <= k).count();
    Ok(hits as f64 / results.len() as f64)
}

/// Queries and their candidate pool. Query `i` has its ground truth at
/// candidate `truth[i]`.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub query_ids: Vec<String>,
    pub queries: Vec<TokenSequence>,
    pub candidates: Vec<TokenSequence>,
    pub truth: Vec<usize>,
}

impl EvalSet {
    /// Every id's description ranked against the codes of all ids.
    pub fn from_ids<'a>(
        ids: impl IntoIterator<Item = &'a str>,
        descriptions: &EmbeddingStore,
        codes: &EmbeddingStore,
        model: &ModelConfig,
    ) -> Result<Self> {
        for store in [descriptions, codes] {
            if store.dim() != model.n {
                return Err(Error::DimensionMismatch {
                    expected: model.n,
                    got: store.dim(),
                });
            }
        }
        let mut set = Self {
            query_ids: Vec::new(),
            queries: Vec::new(),
            candidates: Vec::new(),
            truth: Vec::new(),
        };
        for (i, id) in ids.into_iter().enumerate() {
            let q = descriptions.require(id)?;
            let c = codes.require(id)?;
            set.query_ids.push(id.to_string());
            set.queries.push(TokenSequence::from_f32(
                Role::Question,
                model.n,
                q.data(),
                model.max_q_len,
            )?);
            set.candidates.push(TokenSequence::from_f32(
                Role::Answer,
                model.n,
                c.data(),
                model.max_a_len,
            )?);
            set.truth.push(i);
        }
        if set.queries.is_empty() {
            return Err(Error::Empty("evaluation split"));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub results: Vec<RankingResult>,
    pub report: MetricsReport,
}

/// Ranks every query against the full candidate pool. Candidate embeddings
/// are computed once; queries run in parallel and results keep query order.
pub fn evaluate(params: &ModelParams, set: &EvalSet, eps_ball: f64) -> Result<Evaluation> {
    if set.queries.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    let cands = set
        .candidates
        .par_iter()
        .map(|c| pool_and_normalize(params, c, eps_ball))
        .collect::<Result<Vec<_>>>()?;
    let results = set
        .queries
        .par_iter()
        .zip(&set.query_ids)
        .zip(&set.truth)
        .map(|((q, id), &truth)| {
            let qe = pool_and_normalize(params, q, eps_ball)?;
            rank_embedded(params, id, &qe, &cands, truth)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = MetricsReport::from_results(&results)?;
    Ok(Evaluation { results, report })
}
