//! Role-filler entity metrics (CEAF-REE, CEAF-RME) and the SciREX 4-ary
//! relation metric.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::explain::Alignment;
use crate::matcher::{match_score, overlap, MatchConstraint, Overlap, WeightMatrix};
use crate::report::Tally;
use crate::sim::{normalize, threshold_sim, Normalizer, OverlapTriple, SimScore};
use crate::zoo::config::DatasetConfig;
use crate::zoo::coref::{phi3, phi_subset};
use crate::zoo::types::{Entity, IndexedMention, Mention, NAryRelation, NAryRelationSet, RoleFillerEntity};

type Arg = (String, BTreeSet<Mention>);

fn args_of(r: &NAryRelation) -> Vec<Arg> {
    r.args.iter().map(|a| (a.role.clone(), a.entity.mentions.clone())).collect()
}

/// Every predicted mention becomes its own entity under its role.
fn singleton_args(r: &NAryRelation) -> Vec<Arg> {
    let set: BTreeSet<Arg> = r
        .args
        .iter()
        .flat_map(|a| a.entity.mentions.iter().map(|m| (a.role.clone(), BTreeSet::from([m.clone()]))))
        .collect();
    set.into_iter().collect()
}

fn role_times(phi: fn(&BTreeSet<Mention>, &BTreeSet<Mention>) -> f64) -> impl Fn(&Arg, &Arg) -> f64 {
    move |a, b| if a.0 == b.0 { phi(&a.1, &b.1) } else { 0.0 }
}

pub fn check_relation<M>(r: &NAryRelation<M>, cfg: &DatasetConfig, path: &str) -> Result<()> {
    for (k, a) in r.args.iter().enumerate() {
        if a.entity.mentions.is_empty() {
            return Err(Error::data(format!("{path}.args[{k}].entity"), "entity has no mentions"));
        }
        cfg.check_label("role", &a.role, || format!("{path}.args[{k}].role"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReeScores {
    pub ceaf_ree: Tally,
    pub rme_subset: Tally,
    pub rme_phi3: Tally,
}

/// CEAF-REE: `F↔_args[δ_role × φ⊆]`.
pub fn ceaf_ree(pred: &NAryRelation, gold: &NAryRelation) -> Overlap {
    overlap(&args_of(pred), &args_of(gold), MatchConstraint::OneToOne, role_times(phi_subset))
}

/// CEAF-RME: predicted mentions as singleton entities, `F→_args[δ_role × phi]`.
pub fn ceaf_rme(pred: &NAryRelation, gold: &NAryRelation, phi: fn(&BTreeSet<Mention>, &BTreeSet<Mention>) -> f64) -> Overlap {
    overlap(&singleton_args(pred), &args_of(gold), MatchConstraint::ManyToOne, role_times(phi))
}

pub fn ree_scores(pred: &NAryRelation, gold: &NAryRelation) -> ReeScores {
    ReeScores {
        ceaf_ree: Tally::from_triple(ceaf_ree(pred, gold).triple),
        rme_subset: Tally::from_triple(ceaf_rme(pred, gold, phi_subset).triple),
        rme_phi3: Tally::from_triple(ceaf_rme(pred, gold, phi3).triple),
    }
}

/// Witness for one of the REE variants: `"ree"`, `"rme_subset"` or `"rme_phi3"`.
pub fn explain_ree(pred: &NAryRelation, gold: &NAryRelation, variant: &str) -> Alignment {
    let (p, c, phi): (Vec<Arg>, _, fn(&BTreeSet<Mention>, &BTreeSet<Mention>) -> f64) = match variant {
        "ree" => (args_of(pred), MatchConstraint::OneToOne, phi_subset),
        "rme_subset" => (singleton_args(pred), MatchConstraint::ManyToOne, phi_subset),
        _ => (singleton_args(pred), MatchConstraint::ManyToOne, phi3),
    };
    let g = args_of(gold);
    let sim = role_times(phi);
    let w = WeightMatrix::from_fn(p.len(), g.len(), |i, j| sim(&p[i], &g[j])).expect("finite weights");
    let m = match_score(&w, c);
    let to_rfe = |a: &Arg| RoleFillerEntity {
        role: a.0.clone(),
        entity: Entity {
            mentions: a.1.clone(),
        },
    };
    let (pr, gr): (Vec<_>, Vec<_>) = (p.iter().map(to_rfe).collect(), g.iter().map(to_rfe).collect());
    Alignment::from_matching("args", &m, &w, &pr, &gr, |_, _| Vec::new())
}

/// `⟦J(indices) > 0.5⟧`.
pub fn scirex_mention_sim(a: &IndexedMention, b: &IndexedMention) -> f64 {
    let t = OverlapTriple {
        sigma_pr: a.indices.intersection(&b.indices).count() as f64,
        sigma_pp: a.indices.len() as f64,
        sigma_rr: b.indices.len() as f64,
    };
    strict_half(normalize(Normalizer::Jaccard, &t))
}

fn strict_half(s: SimScore) -> f64 {
    threshold_sim(s, 0.5, true).expect("normalized input and valid cutoff").value()
}

fn rfe_overlap(a: &RoleFillerEntity<IndexedMention>, b: &RoleFillerEntity<IndexedMention>) -> Overlap {
    let xs: Vec<&IndexedMention> = a.entity.mentions.iter().collect();
    let ys: Vec<&IndexedMention> = b.entity.mentions.iter().collect();
    overlap(&xs, &ys, MatchConstraint::OneToOne, |x, y| scirex_mention_sim(x, y))
}

/// `⟦P↔_mentions[δ_role × φ_Mention] > 0.5⟧`.
pub fn scirex_rfe_sim(a: &RoleFillerEntity<IndexedMention>, b: &RoleFillerEntity<IndexedMention>) -> f64 {
    if a.role != b.role {
        return 0.0;
    }
    strict_half(normalize(Normalizer::Precision, &rfe_overlap(a, b).triple))
}

fn scirex_args(r: &NAryRelation<IndexedMention>) -> Vec<RoleFillerEntity<IndexedMention>> {
    r.args.iter().cloned().collect()
}

/// `⟦F↔_args[φ_RFE] = 1⟧`.
pub fn scirex_relation_sim(a: &NAryRelation<IndexedMention>, b: &NAryRelation<IndexedMention>) -> f64 {
    let o = overlap(&scirex_args(a), &scirex_args(b), MatchConstraint::OneToOne, scirex_rfe_sim);
    let f = normalize(Normalizer::F, &o.triple);
    threshold_sim(f, 1.0, false).expect("normalized input and valid cutoff").value()
}

pub fn check_scirex(doc: &NAryRelationSet<IndexedMention>, cfg: &DatasetConfig, side: &str) -> Result<()> {
    for (k, r) in doc.relations.iter().enumerate() {
        let path = format!("{side}.relations[{k}]");
        if r.args.len() != 4 {
            return Err(Error::data(&path, format!("expected 4 arguments, found {}", r.args.len())));
        }
        check_relation(r, cfg, &path)?;
    }
    Ok(())
}

pub fn scirex_score(pred: &NAryRelationSet<IndexedMention>, gold: &NAryRelationSet<IndexedMention>) -> Overlap {
    let p: Vec<_> = pred.relations.iter().cloned().collect();
    let g: Vec<_> = gold.relations.iter().cloned().collect();
    overlap(&p, &g, MatchConstraint::OneToOne, scirex_relation_sim)
}

pub fn explain_scirex(pred: &NAryRelationSet<IndexedMention>, gold: &NAryRelationSet<IndexedMention>) -> Alignment {
    let p: Vec<_> = pred.relations.iter().cloned().collect();
    let g: Vec<_> = gold.relations.iter().cloned().collect();
    let w = WeightMatrix::from_fn(p.len(), g.len(), |i, j| scirex_relation_sim(&p[i], &g[j])).expect("finite");
    let m = match_score(&w, MatchConstraint::OneToOne);
    Alignment::from_matching("relations", &m, &w, &p, &g, |a, b| {
        let (xa, xb) = (scirex_args(a), scirex_args(b));
        let aw = WeightMatrix::from_fn(xa.len(), xb.len(), |i, j| scirex_rfe_sim(&xa[i], &xb[j])).expect("finite");
        let am = match_score(&aw, MatchConstraint::OneToOne);
        vec![Alignment::from_matching("args", &am, &aw, &xa, &xb, |x, y| {
            let xs: Vec<_> = x.entity.mentions.iter().cloned().collect();
            let ys: Vec<_> = y.entity.mentions.iter().cloned().collect();
            let mw = WeightMatrix::from_fn(xs.len(), ys.len(), |i, j| scirex_mention_sim(&xs[i], &ys[j])).expect("finite");
            vec![Alignment::from_matching(
                "mentions",
                &match_score(&mw, MatchConstraint::OneToOne),
                &mw,
                &xs,
                &ys,
                |_, _| Vec::new(),
            )]
        })]
    })
}
