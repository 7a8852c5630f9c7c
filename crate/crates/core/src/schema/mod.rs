//! Metrics derived from declarative descriptions of task output types.
//!
//! A schema names record, set, sequence, graph, primitive and variable
//! types. Every type carries a similarity: either declared with a
//! [`SimSpec`] or the default for its kind (δ for primitives, the product of
//! field similarities for records, an unnormalized 1:1 matching for sets,
//! monotone matchings for sequences and graphs). The metric's root type then
//! yields Σ(pred, gold), Σ(pred, pred) and Σ(gold, gold), from which the
//! requested normalizers are read.
//!
//! ```json
//! {
//!   "types": {
//!     "Mention": {"kind": "Record", "fields": {"left": {"type": "int"}, "right": {"type": "int"}}},
//!     "Relation": {"kind": "Record", "fields": {
//!       "type": {"type": "str"}, "subj": {"type": "Mention"}, "obj": {"type": "Mention"}}},
//!     "RelationSet": {"kind": "Record", "fields": {"relations": {"type": "Set[Relation]"}}}
//!   },
//!   "metric": {"root": "RelationSet", "report": ["P", "R", "F"]}
//! }
//! ```

mod datum;
mod eval;
mod resolve;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::explain::Alignment;
use crate::matcher::MatchConstraint;
use crate::report::Aggregation;
use crate::sim::{Normalizer, Prim};
use crate::zoo::{Evaluated, Ontology, ZooOptions};

pub use datum::Datum;

/// Kind of a declared type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(alias = "record")]
    Record,
    #[serde(alias = "set")]
    Set,
    #[serde(alias = "sequence")]
    Sequence,
    #[serde(alias = "graph")]
    Graph,
    #[serde(alias = "primitive")]
    Primitive,
    #[serde(alias = "variable")]
    Variable,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Record => "Record",
            Kind::Set => "Set",
            Kind::Sequence => "Sequence",
            Kind::Graph => "Graph",
            Kind::Primitive => "Primitive",
            Kind::Variable => "Variable",
        }
    }

    fn is_collection(self) -> bool {
        matches!(self, Kind::Set | Kind::Sequence | Kind::Graph)
    }
}

/// Restriction of a primitive type to one JSON scalar kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimKind {
    Int,
    Str,
    Bool,
}

/// A similarity combinator, as written in schema files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum SimSpec {
    Discrete,
    Product(Vec<ProductTerm>),
    SetMatch {
        #[serde(default)]
        constraint: MatchConstraint,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<Box<SimSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalizer: Option<Normalizer>,
    },
    LatentSetMatch {
        #[serde(default)]
        constraint: MatchConstraint,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<Box<SimSpec>>,
        var_fields: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalizer: Option<Normalizer>,
    },
    SeqMatch {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<Box<SimSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalizer: Option<Normalizer>,
    },
    GraphMatch {
        #[serde(default)]
        constraint: MatchConstraint,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<Box<SimSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalizer: Option<Normalizer>,
    },
    Threshold {
        inner: Box<SimSpec>,
        cutoff: f64,
        #[serde(default)]
        strict: bool,
    },
    /// `(pred, gold, value)` entries; equal values not listed score 1,
    /// other unlisted pairs score `default`.
    Table {
        entries: Vec<(Prim, Prim, f64)>,
        #[serde(default)]
        default: f64,
    },
    HierarchyLevel {
        depth: usize,
    },
    HierarchySupertypes {
        ontology: String,
    },
    /// A built-in metric; its F score is the similarity.
    Named(String),
}

/// One factor of a [`SimSpec::Product`]; without `sim` the field's own
/// similarity is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductTerm {
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDecl {
    /// A declared type name, a builtin (`int`, `str`, `bool`), or
    /// `Set[T]` / `Sequence[T]`.
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
    /// Absent values compare equal to each other and unequal to anything
    /// present. Absent collections are empty.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub optional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeDecl {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, FieldDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
    /// For primitives: accept only this scalar kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub of: Option<PrimKind>,
}

fn all_normalizers() -> Vec<Normalizer> {
    Normalizer::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDef {
    pub root: String,
    #[serde(default = "all_normalizers")]
    pub report: Vec<Normalizer>,
    #[serde(default)]
    pub aggregation: Aggregation,
}

/// A schema file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaDoc {
    pub types: BTreeMap<String, TypeDecl>,
    pub metric: MetricDef,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ontologies: BTreeMap<String, Ontology>,
}

/// A validated schema with every name resolved.
#[derive(Debug, Clone)]
pub struct Schema {
    doc: SchemaDoc,
    types: Vec<resolve::TypeDef>,
    by_name: BTreeMap<String, resolve::TypeId>,
    root: resolve::TypeId,
}

/// Parses and validates a schema document.
pub fn parse_schema(text: &str) -> Result<Schema> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SchemaDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::schema(path, e.into_inner().to_string())
    })?;
    Schema::from_doc(doc)
}

impl Schema {
    pub fn from_doc(doc: SchemaDoc) -> Result<Schema> {
        resolve::build(doc)
    }

    pub fn doc(&self) -> &SchemaDoc {
        &self.doc
    }

    pub fn metric(&self) -> &MetricDef {
        &self.doc.metric
    }

    /// Names of the declared types (builtins and inline collections excluded).
    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        self.doc.types.keys().map(String::as_str)
    }

    /// Serializes back to schema JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("schema documents serialize")
    }

    /// The derived similarity of type `name`.
    pub fn similarity(&self, name: &str) -> Result<DerivedSim<'_>> {
        let ty = self.lookup(name)?;
        Ok(DerivedSim { schema: self, ty })
    }

    fn lookup(&self, name: &str) -> Result<resolve::TypeId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::schema("types", format!("unknown type {name:?}")))
    }

    /// Reads a document of the root type.
    pub fn read(&self, v: &Value, side: &str) -> Result<Datum> {
        datum::convert(self, self.root, v, side)
    }

    /// Σ triple (or built-in tally) of one document pair.
    pub fn evaluate(&self, pred: &Value, gold: &Value, opts: &ZooOptions) -> Result<Evaluated> {
        let (p, g) = (self.read(pred, "pred")?, self.read(gold, "gold")?);
        eval::Evaluator::new(self, opts).document(self.root, &p, &g)
    }

    /// Witness matchings at every level of one document pair.
    pub fn explain(&self, pred: &Value, gold: &Value, opts: &ZooOptions) -> Result<Alignment> {
        let (p, g) = (self.read(pred, "pred")?, self.read(gold, "gold")?);
        eval::Evaluator::new(self, opts).explain_document(self.root, &p, &g)
    }
}

/// [`Schema::evaluate`] with the metric given separately.
pub fn evaluate_metric(s: &Schema, pred: &Value, gold: &Value, opts: &ZooOptions) -> Result<Evaluated> {
    s.evaluate(pred, gold, opts)
}

/// The similarity of one schema type.
#[derive(Debug, Clone, Copy)]
pub struct DerivedSim<'a> {
    schema: &'a Schema,
    ty: resolve::TypeId,
}

impl DerivedSim<'_> {
    pub fn eval(&self, a: &Value, b: &Value, opts: &ZooOptions) -> Result<f64> {
        let x = datum::convert(self.schema, self.ty, a, "pred")?;
        let y = datum::convert(self.schema, self.ty, b, "gold")?;
        let e = eval::Evaluator::new(self.schema, opts);
        e.sim(&self.schema.types[self.ty].sim, self.ty, &x, &y)
    }

    /// Whether the similarity is guaranteed to lie in `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.schema.is_normalized(&self.schema.types[self.ty].sim)
    }
}

#[cfg(test)]
mod tests;
