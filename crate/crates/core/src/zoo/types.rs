//! Task output structures for the built-in metrics.
//!
//! Collections typed as sets in the task definitions are `BTreeSet`s, so
//! duplicates collapse and iteration order is canonical.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Token span with inclusive offsets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "SpanRepr")]
pub struct Mention {
    pub left: i64,
    pub right: i64,
}

#[derive(Deserialize)]
struct SpanRepr {
    left: i64,
    right: i64,
}

impl TryFrom<SpanRepr> for Mention {
    type Error = String;

    fn try_from(s: SpanRepr) -> Result<Self, String> {
        if s.left > s.right {
            return Err(format!("mention left offset {} exceeds right offset {}", s.left, s.right));
        }
        Ok(Mention {
            left: s.left,
            right: s.right,
        })
    }
}

impl Mention {
    pub fn new(left: i64, right: i64) -> Mention {
        assert!(left <= right, "mention offsets out of order");
        Mention { left, right }
    }
}

/// Mention given as a bag of token indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "IndicesRepr")]
pub struct IndexedMention {
    pub indices: BTreeSet<i64>,
}

#[derive(Deserialize)]
struct IndicesRepr {
    indices: BTreeSet<i64>,
}

impl TryFrom<IndicesRepr> for IndexedMention {
    type Error = String;

    fn try_from(r: IndicesRepr) -> Result<Self, String> {
        if r.indices.is_empty() {
            return Err("mention indices must be nonempty".into());
        }
        Ok(IndexedMention { indices: r.indices })
    }
}

impl IndexedMention {
    pub fn new(indices: impl IntoIterator<Item = i64>) -> IndexedMention {
        let indices: BTreeSet<i64> = indices.into_iter().collect();
        assert!(!indices.is_empty(), "mention indices must be nonempty");
        IndexedMention { indices }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    #[serde(rename = "type")]
    pub kind: String,
    pub subj: Mention,
    pub obj: Mention,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RelationSet {
    pub relations: BTreeSet<Relation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dependency {
    pub gov: i64,
    pub dep: i64,
    pub rel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DependencyParse {
    pub edges: BTreeSet<Dependency>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Trigger {
    pub mention: Mention,
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Argument {
    pub mention: Mention,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub trig: Trigger,
    #[serde(default)]
    pub args: BTreeSet<Argument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventSet {
    pub events: BTreeSet<Event>,
}

/// A set of coreferent mentions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(bound(deserialize = "M: Ord + Deserialize<'de>"))]
pub struct Entity<M = Mention> {
    pub mentions: BTreeSet<M>,
}

impl<M: Ord> Entity<M> {
    pub fn new(mentions: impl IntoIterator<Item = M>) -> Self {
        Entity {
            mentions: mentions.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "M: Ord + Deserialize<'de>"))]
pub struct EntitySet<M = Mention> {
    pub entities: Vec<Entity<M>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(bound(deserialize = "M: Ord + Deserialize<'de>"))]
pub struct RoleFillerEntity<M = Mention> {
    pub role: String,
    pub entity: Entity<M>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(bound(deserialize = "M: Ord + Deserialize<'de>"))]
pub struct NAryRelation<M = Mention> {
    #[serde(rename = "type", default)]
    pub kind: String,
    pub args: BTreeSet<RoleFillerEntity<M>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "M: Ord + Deserialize<'de>"))]
pub struct NAryRelationSet<M = Mention> {
    pub relations: BTreeSet<NAryRelation<M>>,
}

/// Value of a template slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillerValue {
    /// Categorical (set-fill) value.
    Label(String),
    /// String-fill value: one predicted string, or all strings of a
    /// reference entity.
    Text(Strings),
    Mention(Mention),
    Entity(Entity),
    Event(Event),
}

/// One string or a list of strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "OneOrMany")]
pub struct Strings(pub Vec<String>);

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl From<OneOrMany> for Strings {
    fn from(v: OneOrMany) -> Self {
        match v {
            OneOrMany::One(s) => Strings(vec![s]),
            OneOrMany::Many(v) => Strings(v),
        }
    }
}

impl FillerValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FillerValue::Label(_) => "set",
            FillerValue::Text(_) => "string",
            FillerValue::Mention(_) => "mention",
            FillerValue::Entity(_) => "entity",
            FillerValue::Event(_) => "event",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotFiller {
    pub slot: String,
    pub value: FillerValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Template {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub fillers: BTreeSet<SlotFiller>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TemplateSet {
    pub templates: Vec<Template>,
}

/// A type given by its labels from most general to most specific.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypePath {
    pub levels: Vec<String>,
}

impl TypePath {
    pub fn new<S: Into<String>>(levels: impl IntoIterator<Item = S>) -> TypePath {
        TypePath {
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }
}
