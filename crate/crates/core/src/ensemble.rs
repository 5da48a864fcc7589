//! Vote combination over retrieved classifier records.
//!
//! Members contribute hard 0/1 labels. The ensemble score is the weighted
//! sum of those labels and a post is relevant when the score is at least 0.5.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;
use crate::learners::{predict, LearnerKind, Prediction};
use crate::registry::ClassifierRecord;

#[derive(Debug, Error, PartialEq)]
pub enum EnsembleError {
    #[error("ensemble has no members")]
    Empty,
    #[error("no expert weight configured for learner kind {0}")]
    MissingExpertWeight(LearnerKind),
    #[error("expert weights must be non-negative with a positive sum")]
    BadExpertWeights,
    #[error("record {0} has no validation score")]
    NoValidationScore(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Unweighted,
    Expert,
    ModelWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retrieval {
    Recency,
    Relevancy,
}

/// What a relevancy lookup is keyed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevancyQuery {
    /// Each post's own feature vector.
    Post,
    /// The centroid of the whole window being classified.
    Batch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub scheme: Scheme,
    pub retrieval: Retrieval,
    pub size: usize,
    pub query: RelevancyQuery,
    pub expert_weights: BTreeMap<LearnerKind, f64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Unweighted,
            retrieval: Retrieval::Recency,
            size: 5,
            query: RelevancyQuery::Post,
            expert_weights: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub score: f64,
    pub label: u8,
    pub members: Vec<Prediction>,
}

impl EnsemblePrediction {
    pub fn mean_member_score(&self) -> f64 {
        self.members.iter().map(|p| p.score).sum::<f64>() / self.members.len() as f64
    }

    pub fn mean_member_margin(&self) -> f64 {
        self.members.iter().map(|p| p.margin).sum::<f64>() / self.members.len() as f64
    }
}

/// Normalizes non-negative scores to sum to one; uniform if they sum to 0.
pub fn normalize_scores(scores: &[f64]) -> Result<Vec<f64>, EnsembleError> {
    if scores.is_empty() {
        return Err(EnsembleError::Empty);
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        Ok(scores.iter().map(|f| f / total).collect())
    } else {
        Ok(vec![1.0 / scores.len() as f64; scores.len()])
    }
}

/// Weights from each member's f-score on its last training window.
pub fn model_weights(records: &[&ClassifierRecord]) -> Result<Vec<f64>, EnsembleError> {
    let scores = records
        .iter()
        .map(|r| {
            r.model
                .validation_score()
                .map(|f| f.max(0.0))
                .ok_or(EnsembleError::NoValidationScore(r.id))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    normalize_scores(&scores)
}

pub fn member_weights(records: &[&ClassifierRecord], cfg: &EnsembleConfig) -> Result<Vec<f64>, EnsembleError> {
    if records.is_empty() {
        return Err(EnsembleError::Empty);
    }
    match cfg.scheme {
        Scheme::Unweighted => Ok(vec![1.0 / records.len() as f64; records.len()]),
        Scheme::ModelWeighted => model_weights(records),
        Scheme::Expert => {
            let raw = records
                .iter()
                .map(|r| {
                    cfg.expert_weights
                        .get(&r.model.kind)
                        .copied()
                        .ok_or(EnsembleError::MissingExpertWeight(r.model.kind))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if raw.iter().any(|w| w.is_nan() || *w < 0.0) {
                return Err(EnsembleError::BadExpertWeights);
            }
            if raw.iter().sum::<f64>() <= 0.0 {
                return Err(EnsembleError::BadExpertWeights);
            }
            normalize_scores(&raw)
        }
    }
}

/// Weighted vote over 0/1 labels.
pub fn combine_votes(weights: &[f64], votes: &[u8]) -> f64 {
    weights
        .iter()
        .zip(votes)
        .map(|(w, &v)| w * v as f64)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

pub fn ensemble_predict(
    x: &FeatureVector,
    records: &[&ClassifierRecord],
    cfg: &EnsembleConfig,
) -> Result<EnsemblePrediction, EnsembleError> {
    let weights = member_weights(records, cfg)?;
    let members: Vec<Prediction> = records.iter().map(|r| predict(&r.model, x)).collect();
    let votes: Vec<u8> = members.iter().map(|p| p.label).collect();
    let score = combine_votes(&weights, &votes);
    Ok(EnsemblePrediction {
        score,
        label: u8::from(score >= 0.5),
        members,
    })
}
