//! Per-dataset configuration: label sets, type ontology, premodifiers and
//! slot kinds.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Subtype forest over labels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "OntologyRepr", into = "OntologyRepr")]
pub struct Ontology {
    parent: BTreeMap<String, String>,
    labels: BTreeSet<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OntologyRepr {
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    labels: Vec<String>,
}

impl TryFrom<OntologyRepr> for Ontology {
    type Error = Error;

    fn try_from(r: OntologyRepr) -> Result<Self> {
        Ontology::new(&r.edges, r.labels)
    }
}

impl From<Ontology> for OntologyRepr {
    fn from(o: Ontology) -> Self {
        let with_edges: BTreeSet<&String> = o.parent.iter().flat_map(|(c, p)| [c, p]).collect();
        OntologyRepr {
            edges: o.parent.iter().map(|(c, p)| (c.clone(), p.clone())).collect(),
            labels: o.labels.iter().filter(|l| !with_edges.contains(l)).cloned().collect(),
        }
    }
}

impl Ontology {
    /// Builds the forest from `[child, parent]` edges plus any isolated labels.
    pub fn new<S: AsRef<str>>(edges: &[(S, S)], extra_labels: impl IntoIterator<Item = String>) -> Result<Ontology> {
        let mut parent = BTreeMap::new();
        let mut labels: BTreeSet<String> = extra_labels.into_iter().collect();
        for (k, (child, par)) in edges.iter().enumerate() {
            let (child, par) = (child.as_ref(), par.as_ref());
            if child == par {
                return Err(Error::Config(format!("ontology.edges[{k}]: {child:?} is its own parent")));
            }
            if let Some(old) = parent.insert(child.to_string(), par.to_string()) {
                if old != par {
                    return Err(Error::Config(format!(
                        "ontology.edges[{k}]: {child:?} has two parents, {old:?} and {par:?}"
                    )));
                }
            }
            labels.insert(child.to_string());
            labels.insert(par.to_string());
        }
        let o = Ontology { parent, labels };
        for start in o.parent.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = start.as_str();
            while let Some(p) = o.parent.get(cur) {
                if !seen.insert(cur) {
                    return Err(Error::Config(format!("ontology has a cycle through {start:?}")));
                }
                cur = p;
            }
        }
        Ok(o)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn parent(&self, label: &str) -> Option<&str> {
        self.parent.get(label).map(String::as_str)
    }

    /// The label and all its ancestors.
    pub fn ancestors(&self, label: &str) -> Result<BTreeSet<String>> {
        if !self.contains(label) {
            return Err(Error::data("label", format!("unknown label {label:?}")));
        }
        let mut out = BTreeSet::new();
        let mut cur = Some(label);
        while let Some(l) = cur {
            out.insert(l.to_string());
            cur = self.parent(l);
        }
        Ok(out)
    }

    /// Whether `p` is a proper descendant of `r`.
    pub fn is_strict_subtype(&self, p: &str, r: &str) -> bool {
        let mut cur = self.parent(p);
        while let Some(l) = cur {
            if l == r {
                return true;
            }
            cur = self.parent(l);
        }
        false
    }
}

/// How a slot's fillers are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Set,
    String,
    Mention,
    Entity,
    Event,
}

impl SlotKind {
    pub fn name(self) -> &'static str {
        match self {
            SlotKind::Set => "set",
            SlotKind::String => "string",
            SlotKind::Mention => "mention",
            SlotKind::Entity => "entity",
            SlotKind::Event => "event",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Allowed labels per category (e.g. `"relation_type"`); categories not
    /// listed are unchecked.
    #[serde(default)]
    pub labels: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub ontology: Ontology,
    /// Words that never count as a string-fill overlap; compared uppercased.
    #[serde(default)]
    pub premodifiers: BTreeSet<String>,
    #[serde(default)]
    pub slots: BTreeMap<String, SlotKind>,
}

impl DatasetConfig {
    pub fn from_json(text: &str) -> Result<DatasetConfig> {
        let mut cfg: DatasetConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("dataset config: {e}")))?;
        cfg.premodifiers = cfg.premodifiers.iter().map(|w| w.to_uppercase()).collect();
        Ok(cfg)
    }

    pub fn check_label(&self, category: &str, label: &str, path: impl FnOnce() -> String) -> Result<()> {
        match self.labels.get(category) {
            Some(allowed) if !allowed.contains(label) => Err(Error::data(
                path(),
                format!("label {label:?} is not declared for {category}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_premodifier(&self, word: &str) -> bool {
        self.premodifiers.contains(word)
    }
}
