//! Record-level metrics: relation F1, attachment scores, event triggers and
//! arguments.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::explain::Alignment;
use crate::matcher::{match_score, overlap, MatchConstraint, Overlap, WeightMatrix};
use crate::report::Tally;
use crate::zoo::config::DatasetConfig;
use crate::zoo::types::{Argument, DependencyParse, Event, EventSet, Mention, Relation, RelationSet};

fn delta<T: PartialEq>(a: &T, b: &T) -> f64 {
    f64::from(u8::from(a == b))
}

fn mention_sim(a: &Mention, b: &Mention) -> f64 {
    delta(&a.left, &b.left) * delta(&a.right, &b.right)
}

pub fn relation_sim(a: &Relation, b: &Relation) -> f64 {
    delta(&a.kind, &b.kind) * mention_sim(&a.subj, &b.subj) * mention_sim(&a.obj, &b.obj)
}

fn items<T: Clone>(s: &BTreeSet<T>) -> Vec<T> {
    s.iter().cloned().collect()
}

fn alignment<T: serde::Serialize>(level: &str, o: &Overlap, pred: &[T], gold: &[T], sim: impl Fn(&T, &T) -> f64) -> Alignment {
    let w = WeightMatrix::from_fn(pred.len(), gold.len(), |i, j| sim(&pred[i], &gold[j])).expect("finite weights");
    Alignment::from_matching(level, &o.matching, &w, pred, gold, |_, _| Vec::new())
}

pub fn check_relations(doc: &RelationSet, cfg: &DatasetConfig, side: &str) -> Result<()> {
    for (k, r) in doc.relations.iter().enumerate() {
        cfg.check_label("relation_type", &r.kind, || format!("{side}.relations[{k}].type"))?;
    }
    Ok(())
}

/// F over relations with `δ_type × δ_subj × δ_obj`.
pub fn rel_f1(pred: &RelationSet, gold: &RelationSet) -> Overlap {
    overlap(&items(&pred.relations), &items(&gold.relations), MatchConstraint::OneToOne, relation_sim)
}

pub fn explain_rel_f1(pred: &RelationSet, gold: &RelationSet) -> Alignment {
    let (p, g) = (items(&pred.relations), items(&gold.relations));
    alignment("relations", &rel_f1(pred, gold), &p, &g, relation_sim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttachmentScores {
    pub uas: Tally,
    pub las: Tally,
}

fn unlabeled(a: &crate::zoo::types::Dependency, b: &crate::zoo::types::Dependency) -> f64 {
    delta(&a.gov, &b.gov) * delta(&a.dep, &b.dep)
}

fn labeled(a: &crate::zoo::types::Dependency, b: &crate::zoo::types::Dependency) -> f64 {
    unlabeled(a, b) * delta(&a.rel, &b.rel)
}

pub fn attachment_scores(pred: &DependencyParse, gold: &DependencyParse) -> AttachmentScores {
    let (p, g) = (items(&pred.edges), items(&gold.edges));
    AttachmentScores {
        uas: Tally::from_triple(overlap(&p, &g, MatchConstraint::OneToOne, unlabeled).triple),
        las: Tally::from_triple(overlap(&p, &g, MatchConstraint::OneToOne, labeled).triple),
    }
}

pub fn explain_attachment(pred: &DependencyParse, gold: &DependencyParse, labeled_edges: bool) -> Alignment {
    let (p, g) = (items(&pred.edges), items(&gold.edges));
    let sim = if labeled_edges { labeled } else { unlabeled };
    alignment("edges", &overlap(&p, &g, MatchConstraint::OneToOne, sim), &p, &g, sim)
}

pub fn check_events(doc: &EventSet, cfg: &DatasetConfig, side: &str) -> Result<()> {
    for (k, e) in doc.events.iter().enumerate() {
        cfg.check_label("event_type", &e.trig.kind, || format!("{side}.events[{k}].trig.type"))?;
        for (a, arg) in e.args.iter().enumerate() {
            cfg.check_label("role", &arg.role, || format!("{side}.events[{k}].args[{a}].role"))?;
        }
    }
    Ok(())
}

fn trigger_sim(a: &Event, b: &Event) -> f64 {
    mention_sim(&a.trig.mention, &b.trig.mention) * delta(&a.trig.kind, &b.trig.kind)
}

fn argument_sim(a: &Argument, b: &Argument) -> f64 {
    mention_sim(&a.mention, &b.mention) * delta(&a.role, &b.role)
}

fn argument_overlap(a: &Event, b: &Event) -> Overlap {
    overlap(&items(&a.args), &items(&b.args), MatchConstraint::OneToOne, argument_sim)
}

/// `δ_trig × Σ↔_args[δ_Argument]`.
fn event_arg_sim(a: &Event, b: &Event) -> f64 {
    if trigger_sim(a, b) == 0.0 {
        return 0.0;
    }
    argument_overlap(a, b).triple.sigma_pr
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventScores {
    pub trig: Tally,
    pub arg: Tally,
}

pub fn event_scores(pred: &EventSet, gold: &EventSet) -> EventScores {
    let (p, g) = (items(&pred.events), items(&gold.events));
    EventScores {
        trig: Tally::from_triple(overlap(&p, &g, MatchConstraint::OneToOne, trigger_sim).triple),
        arg: Tally::from_triple(overlap(&p, &g, MatchConstraint::OneToOne, event_arg_sim).triple),
    }
}

pub fn explain_events(pred: &EventSet, gold: &EventSet, with_args: bool) -> Alignment {
    let (p, g) = (items(&pred.events), items(&gold.events));
    if !with_args {
        return alignment("events", &overlap(&p, &g, MatchConstraint::OneToOne, trigger_sim), &p, &g, trigger_sim);
    }
    let w = WeightMatrix::from_fn(p.len(), g.len(), |i, j| event_arg_sim(&p[i], &g[j])).expect("finite weights");
    let m = match_score(&w, MatchConstraint::OneToOne);
    Alignment::from_matching("events", &m, &w, &p, &g, |a, b| {
        let (pa, ga) = (items(&a.args), items(&b.args));
        vec![alignment("args", &argument_overlap(a, b), &pa, &ga, argument_sim)]
    })
}
