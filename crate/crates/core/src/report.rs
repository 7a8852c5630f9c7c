//! Raw Σ tallies, per-metric reports and corpus aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{OverlapTriple, Scores};

/// The raw sums behind a score. Summing tallies across documents and then
/// normalizing gives micro-averaged scores.
///
/// Most metrics are fully described by an [`OverlapTriple`]. Mention-level
/// coreference scores use a separate recall numerator, and product-form
/// scores carry a second tally in `factor`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub sigma_pr: f64,
    pub sigma_pp: f64,
    pub sigma_rr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_pr_recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<Box<Tally>>,
}

impl Tally {
    pub fn from_triple(t: OverlapTriple) -> Tally {
        Tally {
            sigma_pr: t.sigma_pr,
            sigma_pp: t.sigma_pp,
            sigma_rr: t.sigma_rr,
            ..Tally::default()
        }
    }

    /// Precision and recall with their own numerators.
    pub fn split(p_num: f64, p_den: f64, r_num: f64, r_den: f64) -> Tally {
        Tally {
            sigma_pr: p_num,
            sigma_pp: p_den,
            sigma_rr: r_den,
            sigma_pr_recall: Some(r_num),
            factor: None,
        }
    }

    pub fn with_factor(mut self, factor: Tally) -> Tally {
        self.factor = Some(Box::new(factor));
        self
    }

    pub fn triple(&self) -> OverlapTriple {
        OverlapTriple {
            sigma_pr: self.sigma_pr,
            sigma_pp: self.sigma_pp,
            sigma_rr: self.sigma_rr,
        }
    }

    pub fn scores(&self) -> Scores {
        let own = match self.sigma_pr_recall {
            None => Scores::from_triple(&self.triple()),
            Some(r_num) => Scores::from_split(self.sigma_pr, self.sigma_pp, r_num, self.sigma_rr),
        };
        match &self.factor {
            None => own,
            Some(f) => own.times(&f.scores()),
        }
    }

    /// Elementwise sum; both tallies must have the same shape.
    pub fn merge(&self, other: &Tally) -> Result<Tally> {
        let recall = match (self.sigma_pr_recall, other.sigma_pr_recall) {
            (None, None) => None,
            (Some(a), Some(b)) => Some(a + b),
            _ => return Err(Error::Precondition("cannot merge tallies of different shape".into())),
        };
        let factor = match (&self.factor, &other.factor) {
            (None, None) => None,
            (Some(a), Some(b)) => Some(Box::new(a.merge(b)?)),
            _ => return Err(Error::Precondition("cannot merge tallies of different shape".into())),
        };
        Ok(Tally {
            sigma_pr: self.sigma_pr + other.sigma_pr,
            sigma_pp: self.sigma_pp + other.sigma_pp,
            sigma_rr: self.sigma_rr + other.sigma_rr,
            sigma_pr_recall: recall,
            factor,
        })
    }

    fn zero_like(&self) -> Tally {
        Tally {
            sigma_pr_recall: self.sigma_pr_recall.map(|_| 0.0),
            factor: self.factor.as_ref().map(|f| Box::new(f.zero_like())),
            ..Tally::default()
        }
    }
}

/// A tally together with the scores derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(flatten)]
    pub tally: Tally,
    #[serde(flatten)]
    pub scores: Scores,
}

impl MetricReport {
    pub fn from_tally(tally: Tally) -> MetricReport {
        let scores = tally.scores();
        MetricReport { tally, scores }
    }
}

/// How per-document results are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Sum the tallies, then normalize.
    #[default]
    Micro,
    /// Average the per-document scores.
    Macro,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Aggregation::Micro),
            "macro" => Ok(Aggregation::Macro),
            other => Err(Error::Config(format!("unknown aggregation {other:?}"))),
        }
    }
}

/// Combines per-document tallies. Returns `None` for an empty corpus.
pub fn aggregate(docs: &[Tally], how: Aggregation) -> Result<Option<MetricReport>> {
    let Some(first) = docs.first() else {
        return Ok(None);
    };
    let mut total = first.zero_like();
    for t in docs {
        total = total.merge(t)?;
    }
    let scores = match how {
        Aggregation::Micro => total.scores(),
        Aggregation::Macro => {
            let n = docs.len() as f64;
            let mut acc = Scores {
                precision: 0.0,
                recall: 0.0,
                f: 0.0,
                jaccard: 0.0,
            };
            for t in docs {
                let s = t.scores();
                acc.precision += s.precision;
                acc.recall += s.recall;
                acc.f += s.f;
                acc.jaccard += s.jaccard;
            }
            Scores {
                precision: acc.precision / n,
                recall: acc.recall / n,
                f: acc.f / n,
                jaccard: acc.jaccard / n,
            }
        }
    };
    Ok(Some(MetricReport { tally: total, scores }))
}
