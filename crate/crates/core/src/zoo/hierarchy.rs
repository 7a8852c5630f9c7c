//! Partial-credit similarities for hierarchical types.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::sim::{normalize, Normalizer, OverlapTriple, SimScore};
use crate::zoo::config::Ontology;
use crate::zoo::types::TypePath;

/// `2^(d-D)` where `d` is the length of the common prefix, 0 if `d = 0`.
pub fn type_similarity_level(pred: &TypePath, gold: &TypePath) -> Result<SimScore> {
    let depth = gold.levels.len();
    if depth == 0 {
        return Err(Error::Config("type paths need at least one level".into()));
    }
    if pred.levels.len() != depth {
        return Err(Error::Config(format!(
            "type paths differ in depth: {} vs {depth}",
            pred.levels.len()
        )));
    }
    let d = pred.levels.iter().zip(&gold.levels).take_while(|(a, b)| a == b).count();
    if d == 0 {
        return Ok(SimScore::ZERO);
    }
    SimScore::normalized(2f64.powi(d as i32 - depth as i32))
}

/// Checks that each level is the ontology parent of the next.
pub fn check_path(path: &TypePath, o: &Ontology) -> Result<()> {
    for (k, w) in path.levels.windows(2).enumerate() {
        if o.parent(&w[1]) != Some(w[0].as_str()) {
            return Err(Error::data(
                format!("levels[{}]", k + 1),
                format!("{:?} is not a subtype of {:?}", w[1], w[0]),
            ));
        }
    }
    Ok(())
}

fn supertypes<S: AsRef<str>>(labels: &[S], o: &Ontology) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for l in labels {
        out.extend(o.ancestors(l.as_ref())?);
    }
    Ok(out)
}

/// F over the reflexive supertype closures of the two label sets.
pub fn type_similarity_supertypes<S: AsRef<str>>(pred: &[S], gold: &[S], o: &Ontology) -> Result<SimScore> {
    let (sp, sg) = (supertypes(pred, o)?, supertypes(gold, o)?);
    let t = OverlapTriple::new(sp.intersection(&sg).count() as f64, sp.len() as f64, sg.len() as f64)?;
    Ok(normalize(Normalizer::F, &t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_based_credit() {
        let p = |v: &[&str]| TypePath::new(v.iter().copied());
        assert_eq!(type_similarity_level(&p(&["a", "b"]), &p(&["a", "b"])).unwrap().value(), 1.0);
        assert_eq!(type_similarity_level(&p(&["a", "c"]), &p(&["a", "b"])).unwrap().value(), 0.5);
        assert_eq!(type_similarity_level(&p(&["x", "b"]), &p(&["a", "b"])).unwrap().value(), 0.0);
        assert!(matches!(
            type_similarity_level(&p(&["a"]), &p(&["a", "b"])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn supertype_credit() {
        let o = Ontology::new(&[("l1", "mid"), ("l2", "mid"), ("mid", "root"), ("x", "other")], []).unwrap();
        let f = type_similarity_supertypes(&["l1"], &["l2"], &o).unwrap().value();
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(type_similarity_supertypes(&["l1"], &["l1"], &o).unwrap().value(), 1.0);
        assert_eq!(type_similarity_supertypes(&["l1"], &["x"], &o).unwrap().value(), 0.0);
        assert!(type_similarity_supertypes(&["nope"], &["x"], &o).is_err());
        assert!(check_path(&TypePath::new(["root", "mid", "l1"]), &o).is_ok());
        assert!(check_path(&TypePath::new(["root", "l1"]), &o).is_err());
    }
}
