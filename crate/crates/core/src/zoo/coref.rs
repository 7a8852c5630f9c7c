//! Coreference metrics: CEAF (φ3, φ4), MUC and B³, plus the entity
//! similarities shared with role-filler metrics.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::explain::Alignment;
use crate::matcher::{overlap, MatchConstraint, Overlap, WeightMatrix};
use crate::report::Tally;
use crate::sim::{normalize, Normalizer, OverlapTriple};

fn common<M: Ord>(x: &BTreeSet<M>, y: &BTreeSet<M>) -> usize {
    x.intersection(y).count()
}

/// Number of shared mentions.
pub fn phi3<M: Ord>(x: &BTreeSet<M>, y: &BTreeSet<M>) -> f64 {
    common(x, y) as f64
}

/// F-normalized number of shared mentions.
pub fn phi4<M: Ord>(x: &BTreeSet<M>, y: &BTreeSet<M>) -> f64 {
    let t = OverlapTriple {
        sigma_pr: phi3(x, y),
        sigma_pp: x.len() as f64,
        sigma_rr: y.len() as f64,
    };
    normalize(Normalizer::F, &t).value()
}

/// Number of shared coreference links.
pub fn phi_link<M: Ord>(x: &BTreeSet<M>, y: &BTreeSet<M>) -> f64 {
    common(x, y).saturating_sub(1) as f64
}

/// 1 iff every predicted mention is in the reference entity.
pub fn phi_subset<M: Ord>(x: &BTreeSet<M>, y: &BTreeSet<M>) -> f64 {
    f64::from(u8::from(x.is_subset(y)))
}

/// Rejects empty entities and mentions shared between entities.
pub fn check_partition<M: Ord + std::fmt::Debug>(entities: &[BTreeSet<M>], side: &str) -> Result<()> {
    let mut owner: BTreeMap<&M, usize> = BTreeMap::new();
    for (k, e) in entities.iter().enumerate() {
        if e.is_empty() {
            return Err(Error::data(format!("{side}.entities[{k}]"), "entity has no mentions"));
        }
        for m in e {
            if let Some(first) = owner.insert(m, k) {
                return Err(Error::data(
                    format!("{side}.entities[{k}]"),
                    format!("mention {m:?} also belongs to entity {first}"),
                ));
            }
        }
    }
    Ok(())
}

/// `F↔_entities[phi]` with the witness entity alignment.
pub fn ceaf<M: Ord>(pred: &[BTreeSet<M>], gold: &[BTreeSet<M>], phi: fn(&BTreeSet<M>, &BTreeSet<M>) -> f64) -> Overlap {
    overlap(pred, gold, MatchConstraint::OneToOne, phi)
}

/// MUC via `Σ~[φ_link]`.
pub fn muc<M: Ord>(pred: &[BTreeSet<M>], gold: &[BTreeSet<M>]) -> Tally {
    Tally::from_triple(overlap(pred, gold, MatchConstraint::ManyToMany, phi_link).triple)
}

/// B³ with uniform mention weights, following the membership formulation:
/// each mention is paired with its entity and memberships are matched
/// one-to-one under `δ_mention × N↔_entity[δ]`, with `N = P` for precision and
/// `N = R` for recall.
pub fn b3<M: Ord>(pred: &[BTreeSet<M>], gold: &[BTreeSet<M>]) -> Tally {
    // (mention, entity containing it)
    let mp: Vec<(&M, &BTreeSet<M>)> = pred.iter().flat_map(|e| e.iter().map(move |m| (m, e))).collect();
    let mg: Vec<(&M, &BTreeSet<M>)> = gold.iter().flat_map(|e| e.iter().map(move |m| (m, e))).collect();
    let run = |n: Normalizer| {
        overlap(&mp, &mg, MatchConstraint::OneToOne, |a, b| {
            if a.0 != b.0 {
                return 0.0;
            }
            let t = OverlapTriple {
                sigma_pr: phi3(a.1, b.1),
                sigma_pp: a.1.len() as f64,
                sigma_rr: b.1.len() as f64,
            };
            normalize(n, &t).value()
        })
        .triple
    };
    let p = run(Normalizer::Precision);
    let r = run(Normalizer::Recall);
    Tally::split(p.sigma_pr, p.sigma_pp, r.sigma_pr, r.sigma_rr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorefScores {
    pub muc: Tally,
    pub b3: Tally,
    pub ceaf_phi3: Tally,
    pub ceaf_phi4: Tally,
}

pub fn coref_scores<M: Ord + Clone + std::fmt::Debug>(pred: &[BTreeSet<M>], gold: &[BTreeSet<M>]) -> Result<CorefScores> {
    check_partition(pred, "pred")?;
    check_partition(gold, "gold")?;
    Ok(CorefScores {
        muc: muc(pred, gold),
        b3: b3(pred, gold),
        ceaf_phi3: Tally::from_triple(ceaf(pred, gold, phi3).triple),
        ceaf_phi4: Tally::from_triple(ceaf(pred, gold, phi4).triple),
    })
}

/// Entity alignment with the mention alignment inside each matched pair.
pub fn explain_entities<M: Ord + Clone + serde::Serialize>(
    level: &str,
    pred: &[BTreeSet<M>],
    gold: &[BTreeSet<M>],
    c: MatchConstraint,
    phi: fn(&BTreeSet<M>, &BTreeSet<M>) -> f64,
) -> Alignment {
    let o = overlap(pred, gold, c, phi);
    let w = WeightMatrix::from_fn(pred.len(), gold.len(), |i, j| phi(&pred[i], &gold[j])).expect("finite weights");
    Alignment::from_matching(level, &o.matching, &w, pred, gold, |x, y| {
        let xs: Vec<M> = x.iter().cloned().collect();
        let ys: Vec<M> = y.iter().cloned().collect();
        let mo = overlap(&xs, &ys, MatchConstraint::OneToOne, |a, b| f64::from(u8::from(a == b)));
        let mw = WeightMatrix::from_fn(xs.len(), ys.len(), |i, j| f64::from(u8::from(xs[i] == ys[j]))).expect("finite");
        vec![Alignment::from_matching("mentions", &mo.matching, &mw, &xs, &ys, |_, _| Vec::new())]
    })
}
