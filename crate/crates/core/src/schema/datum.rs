//! Documents read against a schema.

use serde_json::{Map, Value};
use std::cmp::Ordering;

use super::resolve::TypeId;
use super::{Kind, PrimKind, Schema};
use crate::error::{Error, Result};
use crate::ordered::{Order, OrderKind};
use crate::sim::Prim;

/// A value typed by a schema.
#[derive(Debug, Clone)]
pub enum Datum {
    /// An optional record field that was not given.
    Absent,
    Prim(Prim),
    Var(String),
    /// Field values in the order of the record type's fields.
    Record(Vec<Datum>),
    /// Set items (sorted, without duplicates) or sequence items.
    Items(Vec<Datum>),
    Graph(Box<(Vec<Datum>, Order)>),
    /// Payload of a type compared by a built-in metric.
    Raw(Value),
}

impl Datum {
    pub fn items(&self) -> &[Datum] {
        match self {
            Datum::Items(v) => v,
            Datum::Graph(g) => &g.0,
            _ => &[],
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Datum::Absent => 0,
            Datum::Prim(_) => 1,
            Datum::Var(_) => 2,
            Datum::Record(_) => 3,
            Datum::Items(_) => 4,
            Datum::Graph(_) => 5,
            Datum::Raw(_) => 6,
        }
    }
}

impl Ord for Datum {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Datum::Prim(a), Datum::Prim(b)) => a.cmp(b),
            (Datum::Var(a), Datum::Var(b)) => a.cmp(b),
            (Datum::Record(a), Datum::Record(b)) | (Datum::Items(a), Datum::Items(b)) => a.cmp(b),
            (Datum::Graph(a), Datum::Graph(b)) => a.0.cmp(&b.0).then_with(|| a.1.pairs().cmp(&b.1.pairs())),
            (Datum::Raw(a), Datum::Raw(b)) => a.to_string().cmp(&b.to_string()),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Datum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Datum {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Datum {}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn prim(v: &Value, want: Option<PrimKind>, path: &str) -> Result<Prim> {
    let p = match v {
        Value::Bool(b) => Prim::Bool(*b),
        Value::String(s) => Prim::Str(s.clone()),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Prim::Int(i),
            None => return Err(Error::data(path, format!("{n} is not an integer"))),
        },
        Value::Array(items) if want.is_none() => Prim::Tuple(
            items
                .iter()
                .enumerate()
                .map(|(i, x)| prim(x, None, &format!("{path}[{i}]")))
                .collect::<Result<_>>()?,
        ),
        other => return Err(Error::data(path, format!("expected a primitive value, found {}", type_name(other)))),
    };
    let ok = matches!(
        (want, &p),
        (None, _) | (Some(PrimKind::Int), Prim::Int(_)) | (Some(PrimKind::Str), Prim::Str(_)) | (Some(PrimKind::Bool), Prim::Bool(_))
    );
    if !ok {
        let want = match want {
            Some(PrimKind::Int) => "an integer",
            Some(PrimKind::Str) => "a string",
            _ => "a boolean",
        };
        return Err(Error::data(path, format!("expected {want}, found {}", type_name(v))));
    }
    Ok(p)
}

fn array<'v>(v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::data(path, format!("expected an array, found {}", type_name(v))))
}

fn elements(s: &Schema, elem: TypeId, v: &[Value], path: &str) -> Result<Vec<Datum>> {
    v.iter()
        .enumerate()
        .map(|(i, x)| convert(s, elem, x, &format!("{path}[{i}]")))
        .collect()
}

fn graph(s: &Schema, elem: TypeId, obj: &Map<String, Value>, path: &str) -> Result<Datum> {
    for key in obj.keys() {
        if !matches!(key.as_str(), "items" | "order" | "kind") {
            return Err(Error::data(format!("{path}.{key}"), "unknown graph key"));
        }
    }
    let items = match obj.get("items") {
        Some(v) => elements(s, elem, array(v, &format!("{path}.items"))?, &format!("{path}.items"))?,
        None => return Err(Error::data(path, "missing field `items`")),
    };
    let kind = match obj.get("kind") {
        None => OrderKind::Partial,
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::data(format!("{path}.kind"), e.to_string()))?,
    };
    let pairs: Vec<(usize, usize)> = match obj.get("order") {
        None => Vec::new(),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::data(format!("{path}.order"), e.to_string()))?,
    };
    let order = Order::new(items.len(), kind, &pairs).map_err(|e| match e {
        Error::Data { path: p, message } => Error::data(format!("{path}.{p}"), message),
        other => other,
    })?;
    Ok(Datum::Graph(Box::new((items, order))))
}

/// Reads `v` as a value of type `ty`; errors name the JSON path under `path`.
pub(crate) fn convert(s: &Schema, ty: TypeId, v: &Value, path: &str) -> Result<Datum> {
    let t = &s.types[ty];
    if t.is_raw() {
        return Ok(Datum::Raw(v.clone()));
    }
    match t.kind {
        Kind::Primitive => Ok(Datum::Prim(prim(v, t.prim, path)?)),
        Kind::Variable => match v {
            Value::String(name) => Ok(Datum::Var(name.clone())),
            other => Err(Error::data(path, format!("expected a variable name, found {}", type_name(other)))),
        },
        Kind::Record => {
            let Some(obj) = v.as_object() else {
                return Err(Error::data(path, format!("expected an object, found {}", type_name(v))));
            };
            for key in obj.keys() {
                if !t.fields.iter().any(|f| &f.name == key) {
                    return Err(Error::data(format!("{path}.{key}"), format!("type {:?} has no such field", t.name)));
                }
            }
            let mut out = Vec::with_capacity(t.fields.len());
            for f in &t.fields {
                let fpath = format!("{path}.{}", f.name);
                out.push(match obj.get(&f.name) {
                    Some(x) => convert(s, f.ty, x, &fpath)?,
                    None if f.optional => empty(s, f.ty),
                    None => return Err(Error::data(path, format!("missing field `{}`", f.name))),
                });
            }
            Ok(Datum::Record(out))
        }
        Kind::Set => {
            let mut items = elements(s, t.element.expect("checked"), array(v, path)?, path)?;
            items.sort();
            items.dedup();
            Ok(Datum::Items(items))
        }
        Kind::Sequence => Ok(Datum::Items(elements(s, t.element.expect("checked"), array(v, path)?, path)?)),
        Kind::Graph => match v {
            Value::Object(obj) => graph(s, t.element.expect("checked"), obj, path),
            other => Err(Error::data(path, format!("expected a graph object, found {}", type_name(other)))),
        },
    }
}

/// Value of an omitted optional field.
fn empty(s: &Schema, ty: TypeId) -> Datum {
    let t = &s.types[ty];
    if t.is_raw() {
        return Datum::Absent;
    }
    match t.kind {
        Kind::Set | Kind::Sequence => Datum::Items(Vec::new()),
        Kind::Graph => Datum::Graph(Box::new((Vec::new(), Order::total(0)))),
        _ => Datum::Absent,
    }
}

/// Writes a datum back as JSON.
pub(crate) fn to_json(s: &Schema, ty: TypeId, d: &Datum) -> Value {
    let t = &s.types[ty];
    match d {
        Datum::Absent => Value::Null,
        Datum::Prim(p) => serde_json::to_value(p).unwrap_or(Value::Null),
        Datum::Var(v) => Value::String(v.clone()),
        Datum::Raw(v) => v.clone(),
        Datum::Record(vals) => {
            let mut obj = Map::new();
            for (f, x) in t.fields.iter().zip(vals) {
                if !matches!(x, Datum::Absent) {
                    obj.insert(f.name.clone(), to_json(s, f.ty, x));
                }
            }
            Value::Object(obj)
        }
        Datum::Items(items) => {
            let elem = t.element.expect("collections have elements");
            Value::Array(items.iter().map(|x| to_json(s, elem, x)).collect())
        }
        Datum::Graph(g) => {
            let elem = t.element.expect("collections have elements");
            let mut obj = Map::new();
            obj.insert("items".into(), Value::Array(g.0.iter().map(|x| to_json(s, elem, x)).collect()));
            obj.insert("order".into(), serde_json::to_value(g.1.pairs()).unwrap_or(Value::Null));
            obj.insert("kind".into(), serde_json::to_value(g.1.kind()).unwrap_or(Value::Null));
            Value::Object(obj)
        }
    }
}
