//! Template metrics: the MUC-4 overall slot-filler F1 and the BETTER
//! Granular product score.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::explain::Alignment;
use crate::matcher::{match_score, MatchConstraint, Overlap, WeightMatrix};
use crate::report::Tally;
use crate::sim::OverlapTriple;
use crate::zoo::config::{DatasetConfig, Ontology, SlotKind};
use crate::zoo::coref::phi_subset;
use crate::zoo::types::{FillerValue, SlotFiller, Template, TemplateSet};

/// 1 if equal, 1/2 if `p` is a proper subtype of `r`, else 0.
pub fn phi_set(p: &str, r: &str, o: &Ontology) -> f64 {
    if p == r {
        1.0
    } else if o.is_strict_subtype(p, r) {
        0.5
    } else {
        0.0
    }
}

fn words<'a>(strings: &'a [String], cfg: &'a DatasetConfig) -> impl Iterator<Item = String> + 'a {
    strings
        .iter()
        .flat_map(|s| s.to_uppercase().split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|w| !cfg.is_premodifier(w))
}

/// 1 iff some word that is not a premodifier occurs in both a predicted
/// string and a reference string.
pub fn phi_str(pred: &[String], gold: &[String], cfg: &DatasetConfig) -> f64 {
    let g: BTreeSet<String> = words(gold, cfg).collect();
    f64::from(u8::from(words(pred, cfg).any(|w| g.contains(&w))))
}

/// Type-appropriate filler similarity.
pub fn filler_value_sim(p: &FillerValue, r: &FillerValue, cfg: &DatasetConfig) -> Result<f64> {
    Ok(match (p, r) {
        (FillerValue::Label(a), FillerValue::Label(b)) => phi_set(a, b, &cfg.ontology),
        (FillerValue::Text(a), FillerValue::Text(b)) => phi_str(&a.0, &b.0, cfg),
        (FillerValue::Mention(a), FillerValue::Mention(b)) => f64::from(u8::from(a == b)),
        (FillerValue::Entity(a), FillerValue::Entity(b)) => phi_subset(&a.mentions, &b.mentions),
        (FillerValue::Event(a), FillerValue::Event(b)) => f64::from(u8::from(a == b)),
        _ => {
            return Err(Error::data(
                "fillers",
                format!("cannot compare a {} filler with a {} filler", p.kind_name(), r.kind_name()),
            ))
        }
    })
}

/// `δ_slot × φ_T`.
pub fn filler_sim(p: &SlotFiller, r: &SlotFiller, cfg: &DatasetConfig) -> Result<f64> {
    if p.slot != r.slot {
        return Ok(0.0);
    }
    filler_value_sim(&p.value, &r.value, cfg)
}

fn slot_kind_of(v: &FillerValue) -> SlotKind {
    match v {
        FillerValue::Label(_) => SlotKind::Set,
        FillerValue::Text(_) => SlotKind::String,
        FillerValue::Mention(_) => SlotKind::Mention,
        FillerValue::Entity(_) => SlotKind::Entity,
        FillerValue::Event(_) => SlotKind::Event,
    }
}

/// Checks template types and that every filler matches its slot's kind.
pub fn check_templates(doc: &TemplateSet, cfg: &DatasetConfig, side: &str) -> Result<()> {
    for (t, tpl) in doc.templates.iter().enumerate() {
        cfg.check_label("template_type", &tpl.kind, || format!("{side}.templates[{t}].type"))?;
        for (f, filler) in tpl.fillers.iter().enumerate() {
            let path = || format!("{side}.templates[{t}].fillers[{f}]");
            cfg.check_label("slot", &filler.slot, path)?;
            if let Some(&want) = cfg.slots.get(&filler.slot) {
                let got = slot_kind_of(&filler.value);
                if got != want {
                    return Err(Error::data(
                        path(),
                        format!("slot {:?} takes {} fillers, found {}", filler.slot, want.name(), got.name()),
                    ));
                }
            }
            if let FillerValue::Label(l) = &filler.value {
                cfg.check_label(&filler.slot, l, path)?;
            }
        }
    }
    Ok(())
}

fn fillers(t: &Template) -> Vec<SlotFiller> {
    t.fillers.iter().cloned().collect()
}

fn filler_overlap(a: &Template, b: &Template, cfg: &DatasetConfig) -> Result<Overlap> {
    crate::matcher::try_overlap(&fillers(a), &fillers(b), MatchConstraint::OneToOne, |x, y| {
        filler_sim(x, y, cfg)
    })
}

/// `δ_type × Σ↔_fillers[δ_slot × φ_T]`.
pub fn template_sim(a: &Template, b: &Template, cfg: &DatasetConfig) -> Result<f64> {
    if a.kind != b.kind {
        return Ok(0.0);
    }
    Ok(filler_overlap(a, b, cfg)?.triple.sigma_pr)
}

pub fn muc4_score(pred: &TemplateSet, gold: &TemplateSet, cfg: &DatasetConfig) -> Result<Overlap> {
    crate::matcher::try_overlap(&pred.templates, &gold.templates, MatchConstraint::OneToOne, |a, b| {
        template_sim(a, b, cfg)
    })
}

fn template_weights(pred: &TemplateSet, gold: &TemplateSet, cfg: &DatasetConfig) -> Result<WeightMatrix> {
    WeightMatrix::try_from_fn(pred.templates.len(), gold.templates.len(), |i, j| {
        template_sim(&pred.templates[i], &gold.templates[j], cfg)
    })
}

fn explain_fillers(a: &Template, b: &Template, cfg: &DatasetConfig) -> Vec<Alignment> {
    let (fa, fb) = (fillers(a), fillers(b));
    let Ok(w) = WeightMatrix::try_from_fn::<Error>(fa.len(), fb.len(), |i, j| filler_sim(&fa[i], &fb[j], cfg)) else {
        return Vec::new();
    };
    vec![Alignment::from_matching(
        "fillers",
        &match_score(&w, MatchConstraint::OneToOne),
        &w,
        &fa,
        &fb,
        |_, _| Vec::new(),
    )]
}

pub fn explain_muc4(pred: &TemplateSet, gold: &TemplateSet, cfg: &DatasetConfig) -> Result<Alignment> {
    let w = template_weights(pred, gold, cfg)?;
    let m = match_score(&w, MatchConstraint::OneToOne);
    Ok(Alignment::from_matching("templates", &m, &w, &pred.templates, &gold.templates, |a, b| {
        explain_fillers(a, b, cfg)
    }))
}

/// Template alignment for the product score: maximizes the slot-filler
/// score, and among those alignments the number of type-matched pairs.
///
/// Filler similarities take values in {0, 1/2, 1}, so alignment scores are
/// multiples of 1/2; a per-pair type bonus below 1/(4n) can then never
/// outweigh a slot-filler difference.
fn better_alignment(pred: &TemplateSet, gold: &TemplateSet, w: &WeightMatrix) -> Vec<(usize, usize)> {
    let n = pred.templates.len().max(gold.templates.len());
    let bonus = 0.25 / (n as f64 + 1.0);
    let tie = WeightMatrix::from_fn(w.rows(), w.cols(), |i, j| {
        let same = pred.templates[i].kind == gold.templates[j].kind;
        w.get(i, j) + if same { bonus } else { 0.0 }
    })
    .expect("finite weights");
    match_score(&tie, MatchConstraint::OneToOne).pairs
}

/// BETTER Granular: `F↔_templates[δ_type] × F↔_templates[template_sim]` with
/// both factors read off one alignment. The returned tally carries the
/// slot-filler counts with the type counts as its factor.
pub fn better_granular(pred: &TemplateSet, gold: &TemplateSet, cfg: &DatasetConfig) -> Result<Tally> {
    let w = template_weights(pred, gold, cfg)?;
    let pairs = better_alignment(pred, gold, &w);
    let slot_pr: f64 = pairs.iter().map(|&(i, j)| w.get(i, j)).sum();
    let type_pr = pairs
        .iter()
        .filter(|&&(i, j)| pred.templates[i].kind == gold.templates[j].kind)
        .count() as f64;
    let self_score = |doc: &TemplateSet| -> Result<f64> {
        doc.templates.iter().map(|t| template_sim(t, t, cfg)).sum()
    };
    let slots = OverlapTriple::new(slot_pr, self_score(pred)?, self_score(gold)?)?;
    let types = OverlapTriple::new(type_pr, pred.templates.len() as f64, gold.templates.len() as f64)?;
    Ok(Tally::from_triple(slots).with_factor(Tally::from_triple(types)))
}

pub fn explain_better(pred: &TemplateSet, gold: &TemplateSet, cfg: &DatasetConfig) -> Result<Alignment> {
    let w = template_weights(pred, gold, cfg)?;
    let pairs = better_alignment(pred, gold, &w);
    let score = pairs.iter().map(|&(i, j)| w.get(i, j)).sum();
    let m = crate::matcher::Matching { pairs, score };
    Ok(Alignment::from_matching("templates", &m, &w, &pred.templates, &gold.templates, |a, b| {
        explain_fillers(a, b, cfg)
    }))
}
