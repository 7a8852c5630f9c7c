//! Built-in metrics for common structured prediction tasks, reachable by
//! name.

pub mod config;
pub mod coref;
pub mod hierarchy;
pub mod records;
pub mod ree;
pub mod templates;
pub mod types;

use serde::de::DeserializeOwned;
use serde_json::Value;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::explain::Alignment;
use crate::latent::{smatch, AmrGraph, Prop, SolverOptions};
use crate::matcher::MatchConstraint;
use crate::report::Tally;

pub use config::{DatasetConfig, Ontology, SlotKind};
pub use types::*;

/// Name, description and expected document payload of a built-in metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub payload: &'static str,
}

const RELATIONS: &str = r#"{"relations": [{"type": str, "subj": {"left": int, "right": int}, "obj": {"left": int, "right": int}}]}"#;
const EDGES: &str = r#"{"edges": [{"gov": int, "dep": int, "rel": str}]}"#;
const EVENTS: &str = r#"{"events": [{"trig": {"mention": {"left": int, "right": int}, "type": str}, "args": [{"mention": {"left": int, "right": int}, "role": str}]}]}"#;
const ENTITIES: &str = r#"{"entities": [{"mentions": [{"left": int, "right": int}]}]}"#;
const REE: &str = r#"{"type": str, "args": [{"role": str, "entity": {"mentions": [{"left": int, "right": int}]}}]}"#;
const SCIREX: &str = r#"{"relations": [{"args": [{"role": str, "entity": {"mentions": [{"indices": [int]}]}}] (exactly 4)}]}"#;
const AMR: &str = r#"[{"rel": str, "subj": str, "obj": {"var": str} | {"concept": str}}]"#;
const TEMPLATES: &str = r#"{"templates": [{"type": str, "fillers": [{"slot": str, "value": {"label": str} | {"text": str | [str]} | {"mention": {...}} | {"entity": {...}} | {"event": {...}}}]}]}"#;

pub const METRICS: &[MetricInfo] = &[
    MetricInfo {
        name: "rel_f1",
        summary: "relation F1, exact type and argument spans",
        payload: RELATIONS,
    },
    MetricInfo {
        name: "uas",
        summary: "unlabeled attachment score over dependency edges",
        payload: EDGES,
    },
    MetricInfo {
        name: "las",
        summary: "labeled attachment score over dependency edges",
        payload: EDGES,
    },
    MetricInfo {
        name: "trig_f1",
        summary: "event trigger F1 (span and type)",
        payload: EVENTS,
    },
    MetricInfo {
        name: "arg_f1",
        summary: "event argument F1, arguments credited under matched triggers",
        payload: EVENTS,
    },
    MetricInfo {
        name: "muc",
        summary: "MUC coreference score (shared links)",
        payload: ENTITIES,
    },
    MetricInfo {
        name: "b3",
        summary: "B-cubed coreference score, uniform mention weights",
        payload: ENTITIES,
    },
    MetricInfo {
        name: "ceaf_phi3",
        summary: "CEAF with shared-mention-count entity similarity",
        payload: ENTITIES,
    },
    MetricInfo {
        name: "ceaf_phi4",
        summary: "CEAF with F-normalized entity similarity",
        payload: ENTITIES,
    },
    MetricInfo {
        name: "ceaf_ree",
        summary: "CEAF-REE: role-filler entities, subset entity similarity",
        payload: REE,
    },
    MetricInfo {
        name: "ceaf_rme_subset",
        summary: "CEAF-RME with subset similarity, predicted mentions as singletons",
        payload: REE,
    },
    MetricInfo {
        name: "ceaf_rme_phi3",
        summary: "CEAF-RME with shared-mention count, predicted mentions as singletons",
        payload: REE,
    },
    MetricInfo {
        name: "scirex",
        summary: "SciREX 4-ary relation F1 over thresholded entity matches",
        payload: SCIREX,
    },
    MetricInfo {
        name: "smatch",
        summary: "Smatch over AMR propositions with optimal variable alignment",
        payload: AMR,
    },
    MetricInfo {
        name: "muc4",
        summary: "MUC-4 overall slot-filler F1 over aligned templates",
        payload: TEMPLATES,
    },
    MetricInfo {
        name: "better_granular",
        summary: "BETTER Granular: template type F1 times slot-filler F1",
        payload: TEMPLATES,
    },
];

pub fn metric_info(name: &str) -> Option<&'static MetricInfo> {
    METRICS.iter().find(|m| m.name == name)
}

#[derive(Debug, Clone, Default)]
pub struct ZooOptions {
    pub config: DatasetConfig,
    pub solver: SolverOptions,
}

/// Tally of one document pair, and whether any solver result is inexact.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub tally: Tally,
    pub exact: bool,
}

impl From<Tally> for Evaluated {
    fn from(tally: Tally) -> Self {
        Evaluated { tally, exact: true }
    }
}

/// Deserializes a payload, reporting the JSON path of the first mismatch.
pub fn parse<T: DeserializeOwned>(v: &Value, side: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { side.to_string() } else { format!("{side}.{inner}") };
        Error::data(path, e.into_inner().to_string())
    })
}

fn partition(doc: &EntitySet, side: &str) -> Result<Vec<BTreeSet<Mention>>> {
    let p: Vec<BTreeSet<Mention>> = doc.entities.iter().map(|e| e.mentions.clone()).collect();
    coref::check_partition(&p, side)?;
    Ok(p)
}

fn both<T: DeserializeOwned>(pred: &Value, gold: &Value) -> Result<(T, T)> {
    Ok((parse(pred, "pred")?, parse(gold, "gold")?))
}

fn unknown(name: &str) -> Error {
    Error::Config(format!("unknown metric {name:?}"))
}

fn ree_docs(pred: &Value, gold: &Value, cfg: &DatasetConfig) -> Result<(NAryRelation, NAryRelation)> {
    let (p, g): (NAryRelation, NAryRelation) = both(pred, gold)?;
    ree::check_relation(&p, cfg, "pred")?;
    ree::check_relation(&g, cfg, "gold")?;
    Ok((p, g))
}

fn template_docs(pred: &Value, gold: &Value, cfg: &DatasetConfig) -> Result<(TemplateSet, TemplateSet)> {
    let (p, g): (TemplateSet, TemplateSet) = both(pred, gold)?;
    templates::check_templates(&p, cfg, "pred")?;
    templates::check_templates(&g, cfg, "gold")?;
    Ok((p, g))
}

fn amr(v: &Value, side: &str) -> Result<AmrGraph> {
    Ok(AmrGraph::new(parse::<Vec<Prop>>(v, side)?))
}

/// Evaluates built-in metric `name` on one document pair.
pub fn evaluate(name: &str, pred: &Value, gold: &Value, opts: &ZooOptions) -> Result<Evaluated> {
    let cfg = &opts.config;
    let tally = match name {
        "rel_f1" => {
            let (p, g): (RelationSet, RelationSet) = both(pred, gold)?;
            records::check_relations(&p, cfg, "pred")?;
            records::check_relations(&g, cfg, "gold")?;
            Tally::from_triple(records::rel_f1(&p, &g).triple)
        }
        "uas" | "las" => {
            let (p, g): (DependencyParse, DependencyParse) = both(pred, gold)?;
            let s = records::attachment_scores(&p, &g);
            if name == "uas" {
                s.uas
            } else {
                s.las
            }
        }
        "trig_f1" | "arg_f1" => {
            let (p, g): (EventSet, EventSet) = both(pred, gold)?;
            records::check_events(&p, cfg, "pred")?;
            records::check_events(&g, cfg, "gold")?;
            let s = records::event_scores(&p, &g);
            if name == "trig_f1" {
                s.trig
            } else {
                s.arg
            }
        }
        "muc" | "b3" | "ceaf_phi3" | "ceaf_phi4" => {
            let (p, g): (EntitySet, EntitySet) = both(pred, gold)?;
            let (p, g) = (partition(&p, "pred")?, partition(&g, "gold")?);
            match name {
                "muc" => coref::muc(&p, &g),
                "b3" => coref::b3(&p, &g),
                "ceaf_phi3" => Tally::from_triple(coref::ceaf(&p, &g, coref::phi3).triple),
                _ => Tally::from_triple(coref::ceaf(&p, &g, coref::phi4).triple),
            }
        }
        "ceaf_ree" => {
            let (p, g) = ree_docs(pred, gold, cfg)?;
            Tally::from_triple(ree::ceaf_ree(&p, &g).triple)
        }
        "ceaf_rme_subset" => {
            let (p, g) = ree_docs(pred, gold, cfg)?;
            Tally::from_triple(ree::ceaf_rme(&p, &g, coref::phi_subset).triple)
        }
        "ceaf_rme_phi3" => {
            let (p, g) = ree_docs(pred, gold, cfg)?;
            Tally::from_triple(ree::ceaf_rme(&p, &g, coref::phi3).triple)
        }
        "scirex" => {
            let (p, g): (NAryRelationSet<IndexedMention>, NAryRelationSet<IndexedMention>) = both(pred, gold)?;
            ree::check_scirex(&p, cfg, "pred")?;
            ree::check_scirex(&g, cfg, "gold")?;
            Tally::from_triple(ree::scirex_score(&p, &g).triple)
        }
        "smatch" => {
            let r = smatch(&amr(pred, "pred")?, &amr(gold, "gold")?, &opts.solver)?;
            return Ok(Evaluated {
                tally: r.tally,
                exact: r.solution.exact,
            });
        }
        "muc4" => {
            let (p, g) = template_docs(pred, gold, cfg)?;
            Tally::from_triple(templates::muc4_score(&p, &g, cfg)?.triple)
        }
        "better_granular" => {
            let (p, g) = template_docs(pred, gold, cfg)?;
            templates::better_granular(&p, &g, cfg)?
        }
        other => return Err(unknown(other)),
    };
    Ok(tally.into())
}

/// Witness alignments of built-in metric `name` on one document pair.
pub fn explain(name: &str, pred: &Value, gold: &Value, opts: &ZooOptions) -> Result<Alignment> {
    let cfg = &opts.config;
    Ok(match name {
        "rel_f1" => {
            let (p, g): (RelationSet, RelationSet) = both(pred, gold)?;
            records::explain_rel_f1(&p, &g)
        }
        "uas" | "las" => {
            let (p, g): (DependencyParse, DependencyParse) = both(pred, gold)?;
            records::explain_attachment(&p, &g, name == "las")
        }
        "trig_f1" | "arg_f1" => {
            let (p, g): (EventSet, EventSet) = both(pred, gold)?;
            records::explain_events(&p, &g, name == "arg_f1")
        }
        "muc" | "b3" | "ceaf_phi3" | "ceaf_phi4" => {
            let (p, g): (EntitySet, EntitySet) = both(pred, gold)?;
            let (p, g) = (partition(&p, "pred")?, partition(&g, "gold")?);
            let (c, phi): (_, fn(&BTreeSet<Mention>, &BTreeSet<Mention>) -> f64) = match name {
                "muc" => (MatchConstraint::ManyToMany, coref::phi_link),
                "b3" => (MatchConstraint::ManyToMany, coref::phi3),
                "ceaf_phi3" => (MatchConstraint::OneToOne, coref::phi3),
                _ => (MatchConstraint::OneToOne, coref::phi4),
            };
            coref::explain_entities("entities", &p, &g, c, phi)
        }
        "ceaf_ree" | "ceaf_rme_subset" | "ceaf_rme_phi3" => {
            let (p, g) = ree_docs(pred, gold, cfg)?;
            let variant = match name {
                "ceaf_ree" => "ree",
                "ceaf_rme_subset" => "rme_subset",
                _ => "rme_phi3",
            };
            ree::explain_ree(&p, &g, variant)
        }
        "scirex" => {
            let (p, g): (NAryRelationSet<IndexedMention>, NAryRelationSet<IndexedMention>) = both(pred, gold)?;
            ree::check_scirex(&p, cfg, "pred")?;
            ree::check_scirex(&g, cfg, "gold")?;
            ree::explain_scirex(&p, &g)
        }
        "smatch" => {
            let (p, g) = (amr(pred, "pred")?, amr(gold, "gold")?);
            let r = smatch(&p, &g, &opts.solver)?;
            let mut a = Alignment::new("props", r.solution.score);
            let w = crate::matcher::WeightMatrix::from_fn(p.props().len(), g.props().len(), |i, j| {
                crate::latent::prop_upper_sim(&p.props()[i], &g.props()[j])
            })?;
            let m = crate::matcher::Matching {
                pairs: r.solution.pairs.clone(),
                score: r.solution.score,
            };
            a.pairs = Alignment::from_matching("props", &m, &w, p.props(), g.props(), |_, _| Vec::new()).pairs;
            a.variables = r.solution.alignment.pairs.iter().map(|(x, y)| (x.0.clone(), y.0.clone())).collect();
            a
        }
        "muc4" => {
            let (p, g) = template_docs(pred, gold, cfg)?;
            templates::explain_muc4(&p, &g, cfg)?
        }
        "better_granular" => {
            let (p, g) = template_docs(pred, gold, cfg)?;
            templates::explain_better(&p, &g, cfg)?
        }
        other => return Err(unknown(other)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn every_metric_accepts_identical_documents() {
        let docs = [
            ("rel_f1", json!({"relations": [{"type": "r", "subj": {"left": 0, "right": 1}, "obj": {"left": 2, "right": 2}}]})),
            ("uas", json!({"edges": [{"gov": 0, "dep": 1, "rel": "nsubj"}]})),
            ("las", json!({"edges": [{"gov": 0, "dep": 1, "rel": "nsubj"}]})),
            ("trig_f1", json!({"events": [{"trig": {"mention": {"left": 0, "right": 0}, "type": "attack"}, "args": []}]})),
            ("arg_f1", json!({"events": [{"trig": {"mention": {"left": 0, "right": 0}, "type": "attack"}, "args": [{"mention": {"left": 1, "right": 1}, "role": "agent"}]}]})),
            ("muc", json!({"entities": [{"mentions": [{"left": 0, "right": 0}, {"left": 3, "right": 3}]}]})),
            ("b3", json!({"entities": [{"mentions": [{"left": 0, "right": 0}]}]})),
            ("ceaf_phi3", json!({"entities": [{"mentions": [{"left": 0, "right": 0}]}]})),
            ("ceaf_phi4", json!({"entities": [{"mentions": [{"left": 0, "right": 0}]}]})),
            ("ceaf_ree", json!({"type": "t", "args": [{"role": "perp", "entity": {"mentions": [{"left": 0, "right": 0}]}}]})),
            ("ceaf_rme_subset", json!({"type": "t", "args": [{"role": "perp", "entity": {"mentions": [{"left": 0, "right": 0}]}}]})),
            ("ceaf_rme_phi3", json!({"type": "t", "args": [{"role": "perp", "entity": {"mentions": [{"left": 0, "right": 0}]}}]})),
            ("scirex", json!({"relations": [{"args": [
                {"role": "dataset", "entity": {"mentions": [{"indices": [1]}]}},
                {"role": "method", "entity": {"mentions": [{"indices": [2]}]}},
                {"role": "task", "entity": {"mentions": [{"indices": [3]}]}},
                {"role": "metric", "entity": {"mentions": [{"indices": [4]}]}}]}]})),
            ("smatch", json!([{"rel": "instance", "subj": "x", "obj": {"concept": "boy"}}])),
            ("muc4", json!({"templates": [{"type": "bombing", "fillers": [{"slot": "perp", "value": {"text": "guerrillas"}}]}]})),
            ("better_granular", json!({"templates": [{"type": "bombing", "fillers": [{"slot": "perp", "value": {"text": "guerrillas"}}]}]})),
        ];
        assert_eq!(docs.len(), METRICS.len());
        let opts = ZooOptions::default();
        for (name, doc) in &docs {
            let r = evaluate(name, doc, doc, &opts).unwrap();
            assert_eq!(r.tally.scores().f, 1.0, "{name}");
            assert!(r.exact);
            let e = explain(name, doc, doc, &opts).unwrap();
            assert!(e.pairs.iter().all(|p| p.pred == p.gold), "{name}");
        }
    }

    #[test]
    fn payload_errors_carry_paths() {
        let bad = json!({"relations": [{"type": "r", "subj": {"left": 0}, "obj": {"left": 2, "right": 2}}]});
        let good = json!({"relations": []});
        match evaluate("rel_f1", &bad, &good, &ZooOptions::default()) {
            Err(Error::Data { path, .. }) => assert!(path.starts_with("pred.relations[0]"), "{path}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            evaluate("nope", &good, &good, &ZooOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn declared_labels_are_enforced() {
        let mut opts = ZooOptions::default();
        opts.config.labels.insert("relation_type".into(), ["works-for".to_string()].into());
        let doc = json!({"relations": [{"type": "born-in", "subj": {"left": 0, "right": 0}, "obj": {"left": 1, "right": 1}}]});
        assert!(evaluate("rel_f1", &doc, &doc, &opts).is_err());
    }
}
