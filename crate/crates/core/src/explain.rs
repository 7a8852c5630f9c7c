//! Witness alignments for `explain` output.

use serde::Serialize;
use serde_json::Value;

use crate::matcher::{Matching, WeightMatrix};

/// One matching between a predicted and a reference collection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alignment {
    pub level: String,
    pub score: f64,
    pub pairs: Vec<AlignedPair>,
    /// Variable alignment, for latent matchings.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub variables: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignedPair {
    pub pred: usize,
    pub gold: usize,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pred_item: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_item: Option<Value>,
    /// Matchings of the pair's substructures.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inner: Vec<Alignment>,
}

impl Alignment {
    pub fn new(level: impl Into<String>, score: f64) -> Alignment {
        Alignment {
            level: level.into(),
            score,
            pairs: Vec::new(),
            variables: Vec::new(),
        }
    }

    /// Builds an alignment from a witness, attaching the matched items and
    /// whatever `inner` reports for each pair.
    pub fn from_matching<T: Serialize>(
        level: impl Into<String>,
        m: &Matching,
        w: &WeightMatrix,
        pred: &[T],
        gold: &[T],
        mut inner: impl FnMut(&T, &T) -> Vec<Alignment>,
    ) -> Alignment {
        let pairs = m
            .pairs
            .iter()
            .map(|&(i, j)| AlignedPair {
                pred: i,
                gold: j,
                weight: w.get(i, j),
                pred_item: serde_json::to_value(&pred[i]).ok(),
                gold_item: serde_json::to_value(&gold[j]).ok(),
                inner: inner(&pred[i], &gold[j]),
            })
            .collect();
        Alignment {
            level: level.into(),
            score: m.score,
            pairs,
            variables: Vec::new(),
        }
    }
}
