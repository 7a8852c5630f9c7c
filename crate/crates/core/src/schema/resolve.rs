//! Name resolution and validation of schema documents.

use std::collections::{BTreeMap, BTreeSet};

use super::{Kind, PrimKind, Schema, SchemaDoc, SimSpec, TypeDecl};
use crate::error::{Error, Result};
use crate::matcher::MatchConstraint;
use crate::sim::{Normalizer, Prim};
use crate::zoo::{metric_info, Ontology};

pub(crate) type TypeId = usize;

#[derive(Debug, Clone)]
pub(crate) struct TypeDef {
    pub name: String,
    pub kind: Kind,
    pub prim: Option<PrimKind>,
    pub fields: Vec<FieldDef>,
    pub element: Option<TypeId>,
    pub sim: Sim,
}

impl TypeDef {
    /// Values of this type are handed to a built-in metric unparsed.
    pub fn is_raw(&self) -> bool {
        matches!(self.sim, Sim::Named(_))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FieldDef {
    pub name: String,
    pub ty: TypeId,
    pub sim: Sim,
    pub optional: bool,
}

#[derive(Debug, Clone)]
pub(crate) enum How {
    Set(MatchConstraint),
    /// Field-index paths of the latent variables of each element.
    Latent(MatchConstraint, Vec<Vec<usize>>),
    Seq,
    Graph(MatchConstraint),
}

#[derive(Debug, Clone)]
pub(crate) enum Sim {
    Discrete,
    /// `(field index, field similarity)` factors.
    Product(Vec<(usize, Sim)>),
    Match {
        how: How,
        inner: Box<Sim>,
        normalizer: Option<Normalizer>,
    },
    Threshold {
        inner: Box<Sim>,
        cutoff: f64,
        strict: bool,
    },
    Table {
        entries: BTreeMap<(Prim, Prim), f64>,
        default: f64,
    },
    Level(usize),
    Supertypes(Ontology),
    Named(String),
    /// A latent variable; its agreement is enforced by the enclosing
    /// latent matching.
    Variable,
    /// The declared similarity of another type.
    Of(TypeId),
}

const BUILTINS: [(&str, PrimKind); 3] = [("int", PrimKind::Int), ("str", PrimKind::Str), ("bool", PrimKind::Bool)];

struct Builder<'a> {
    doc: &'a SchemaDoc,
    types: Vec<TypeDef>,
    by_name: BTreeMap<String, TypeId>,
}

fn collection_ref(name: &str) -> Option<(Kind, &str)> {
    let (head, rest) = name.split_once('[')?;
    let inner = rest.strip_suffix(']')?.trim();
    let kind = match head.trim() {
        "Set" => Kind::Set,
        "Sequence" | "Seq" => Kind::Sequence,
        "Graph" => Kind::Graph,
        _ => return None,
    };
    Some((kind, inner))
}

impl Builder<'_> {
    fn placeholder(&mut self, name: &str, kind: Kind) -> TypeId {
        let id = self.types.len();
        self.types.push(TypeDef {
            name: name.to_string(),
            kind,
            prim: None,
            fields: Vec::new(),
            element: None,
            sim: Sim::Discrete,
        });
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// Resolves a type reference, creating inline collection types on demand.
    fn reference(&mut self, name: &str, path: &str) -> Result<TypeId> {
        if let Some(&id) = self.by_name.get(name) {
            return Ok(id);
        }
        if let Some((kind, inner)) = collection_ref(name) {
            let elem = self.reference(inner, path)?;
            let id = self.placeholder(name, kind);
            self.types[id].element = Some(elem);
            self.types[id].sim = default_collection_sim(kind, elem);
            return Ok(id);
        }
        Err(Error::schema(path, format!("unknown type {name:?}")))
    }

    fn declare(&mut self, name: &str, decl: &TypeDecl) -> Result<()> {
        let id = self.by_name[name];
        let path = format!("types.{name}");
        let t = &mut self.types[id];
        t.prim = decl.of;
        if decl.of.is_some() && decl.kind != Kind::Primitive {
            return Err(Error::schema(format!("{path}.of"), "only primitive types take a scalar kind"));
        }
        if !decl.fields.is_empty() && decl.kind != Kind::Record {
            return Err(Error::schema(
                format!("{path}.fields"),
                format!("{} types carry no fields", decl.kind.name()),
            ));
        }
        if decl.element.is_some() && !decl.kind.is_collection() {
            return Err(Error::schema(
                format!("{path}.element"),
                format!("{} types carry no element type", decl.kind.name()),
            ));
        }
        if decl.kind == Kind::Variable && decl.sim.is_some() {
            return Err(Error::schema(
                format!("{path}.sim"),
                "variables are compared only through a LatentSetMatch",
            ));
        }
        let mut fields = Vec::new();
        for (fname, f) in &decl.fields {
            let fpath = format!("{path}.fields.{fname}.type");
            fields.push(FieldDef {
                name: fname.clone(),
                ty: self.reference(&f.ty, &fpath)?,
                sim: Sim::Discrete,
                optional: f.optional,
            });
        }
        let element = match (&decl.element, decl.kind.is_collection()) {
            (Some(e), _) => Some(self.reference(e, &format!("{path}.element"))?),
            (None, true) => {
                return Err(Error::schema(
                    format!("{path}.element"),
                    format!("{} types need an element type", decl.kind.name()),
                ))
            }
            (None, false) => None,
        };
        let t = &mut self.types[id];
        t.fields = fields;
        t.element = element;
        Ok(())
    }

    fn field_sim(&self, ty: TypeId, k: usize, spec: Option<&SimSpec>, path: &str) -> Result<Sim> {
        let f = &self.types[ty].fields[k];
        match spec {
            Some(s) => self.sim(s, f.ty, path),
            None => Ok(Sim::Of(f.ty)),
        }
    }

    fn declared_field_sim(&self, ty: TypeId, k: usize) -> Result<Sim> {
        let t = &self.types[ty];
        let decl = &self.doc.types[&t.name].fields[&t.fields[k].name];
        let path = format!("types.{}.fields.{}.sim", t.name, t.fields[k].name);
        self.field_sim(ty, k, decl.sim.as_ref(), &path)
    }

    fn inner_sim(&self, inner: Option<&SimSpec>, ty: TypeId, path: &str) -> Result<Box<Sim>> {
        let elem = self.types[ty].element.expect("collections have elements");
        Ok(Box::new(match inner {
            Some(s) => self.sim(s, elem, &format!("{path}.inner"))?,
            None => Sim::Of(elem),
        }))
    }

    fn expect_kind(&self, ty: TypeId, allowed: &[Kind], node: &str, path: &str) -> Result<()> {
        let kind = self.types[ty].kind;
        if allowed.contains(&kind) {
            return Ok(());
        }
        Err(Error::schema(
            path,
            format!("{node} does not apply to {} type {:?}", kind.name(), self.types[ty].name),
        ))
    }

    fn primitive_element(&self, ty: TypeId) -> bool {
        self.types[ty].element.is_some_and(|e| self.types[e].kind == Kind::Primitive)
    }

    fn var_path(&self, elem: TypeId, dotted: &str, path: &str) -> Result<Vec<usize>> {
        let mut cur = elem;
        let mut out = Vec::new();
        for part in dotted.split('.') {
            let t = &self.types[cur];
            let Some(k) = t.fields.iter().position(|f| f.name == part) else {
                return Err(Error::schema(path, format!("type {:?} has no field {part:?}", t.name)));
            };
            out.push(k);
            cur = t.fields[k].ty;
        }
        if self.types[cur].kind != Kind::Variable {
            return Err(Error::schema(
                path,
                format!("field {dotted:?} has {} type {:?}, not a variable", self.types[cur].kind.name(), self.types[cur].name),
            ));
        }
        Ok(out)
    }

    /// Resolves `spec` as a similarity on values of type `ty`.
    fn sim(&self, spec: &SimSpec, ty: TypeId, path: &str) -> Result<Sim> {
        use Kind::*;
        let collections = [Set, Sequence, Graph];
        Ok(match spec {
            SimSpec::Discrete => {
                self.expect_kind(ty, &[Primitive, Record, Set, Sequence], "Discrete", path)?;
                Sim::Discrete
            }
            SimSpec::Product(terms) => {
                self.expect_kind(ty, &[Record], "Product", path)?;
                let t = &self.types[ty];
                let mut out = Vec::new();
                for (i, term) in terms.iter().enumerate() {
                    let tpath = format!("{path}.Product[{i}]");
                    let Some(k) = t.fields.iter().position(|f| f.name == term.field) else {
                        return Err(Error::schema(
                            format!("{tpath}.field"),
                            format!("type {:?} has no field {:?}", t.name, term.field),
                        ));
                    };
                    let s = match &term.sim {
                        Some(s) => self.field_sim(ty, k, Some(s), &format!("{tpath}.sim"))?,
                        None => self.declared_field_sim(ty, k)?,
                    };
                    out.push((k, s));
                }
                Sim::Product(out)
            }
            SimSpec::SetMatch { constraint, inner, normalizer } => {
                self.expect_kind(ty, &collections, "SetMatch", path)?;
                Sim::Match {
                    how: How::Set(*constraint),
                    inner: self.inner_sim(inner.as_deref(), ty, path)?,
                    normalizer: *normalizer,
                }
            }
            SimSpec::LatentSetMatch {
                constraint,
                inner,
                var_fields,
                normalizer,
            } => {
                self.expect_kind(ty, &collections, "LatentSetMatch", path)?;
                let elem = self.types[ty].element.expect("collections have elements");
                if self.types[elem].kind != Record {
                    return Err(Error::schema(path, "LatentSetMatch needs record elements"));
                }
                let mut paths = Vec::new();
                for (i, f) in var_fields.iter().enumerate() {
                    paths.push(self.var_path(elem, f, &format!("{path}.var_fields[{i}]"))?);
                }
                Sim::Match {
                    how: How::Latent(*constraint, paths),
                    inner: self.inner_sim(inner.as_deref(), ty, path)?,
                    normalizer: *normalizer,
                }
            }
            SimSpec::SeqMatch { inner, normalizer } => {
                self.expect_kind(ty, &[Sequence], "SeqMatch", path)?;
                Sim::Match {
                    how: How::Seq,
                    inner: self.inner_sim(inner.as_deref(), ty, path)?,
                    normalizer: *normalizer,
                }
            }
            SimSpec::GraphMatch {
                constraint,
                inner,
                normalizer,
            } => {
                self.expect_kind(ty, &[Sequence, Graph], "GraphMatch", path)?;
                Sim::Match {
                    how: How::Graph(*constraint),
                    inner: self.inner_sim(inner.as_deref(), ty, path)?,
                    normalizer: *normalizer,
                }
            }
            SimSpec::Threshold { inner, cutoff, strict } => {
                if !(0.0..=1.0).contains(cutoff) {
                    return Err(Error::schema(format!("{path}.cutoff"), format!("cutoff {cutoff} outside [0, 1]")));
                }
                Sim::Threshold {
                    inner: Box::new(self.sim(inner, ty, &format!("{path}.inner"))?),
                    cutoff: *cutoff,
                    strict: *strict,
                }
            }
            SimSpec::Table { entries, default } => {
                self.expect_kind(ty, &[Primitive], "Table", path)?;
                if !(0.0..=1.0).contains(default) {
                    return Err(Error::schema(format!("{path}.default"), format!("value {default} outside [0, 1]")));
                }
                let mut map = BTreeMap::new();
                for (i, (p, g, v)) in entries.iter().enumerate() {
                    let epath = format!("{path}.entries[{i}]");
                    if !(0.0..=1.0).contains(v) {
                        return Err(Error::schema(epath, format!("value {v} outside [0, 1]")));
                    }
                    if p == g && *v != 1.0 {
                        return Err(Error::schema(epath, format!("diagonal entry ({p}, {g}) must be 1, got {v}")));
                    }
                    if let Some(old) = map.insert((p.clone(), g.clone()), *v) {
                        if old != *v {
                            return Err(Error::schema(epath, format!("({p}, {g}) is listed twice with different values")));
                        }
                    }
                }
                Sim::Table { entries: map, default: *default }
            }
            SimSpec::HierarchyLevel { depth } => {
                if self.types[ty].kind != Sequence || !self.primitive_element(ty) {
                    return Err(Error::schema(path, "HierarchyLevel applies to sequences of primitive labels"));
                }
                if *depth == 0 {
                    return Err(Error::schema(format!("{path}.depth"), "depth must be at least 1"));
                }
                Sim::Level(*depth)
            }
            SimSpec::HierarchySupertypes { ontology } => {
                let kind = self.types[ty].kind;
                if !(kind == Primitive || (matches!(kind, Set | Sequence) && self.primitive_element(ty))) {
                    return Err(Error::schema(path, "HierarchySupertypes applies to labels or collections of labels"));
                }
                let Some(o) = self.doc.ontologies.get(ontology) else {
                    return Err(Error::schema(format!("{path}.ontology"), format!("unknown ontology {ontology:?}")));
                };
                Sim::Supertypes(o.clone())
            }
            SimSpec::Named(_) => {
                return Err(Error::schema(path, "Named similarities are declared on types, not nested"));
            }
        })
    }
}

fn default_collection_sim(kind: Kind, elem: TypeId) -> Sim {
    let how = match kind {
        Kind::Set => How::Set(MatchConstraint::OneToOne),
        Kind::Sequence => How::Seq,
        _ => How::Graph(MatchConstraint::OneToOne),
    };
    Sim::Match {
        how,
        inner: Box::new(Sim::Of(elem)),
        normalizer: None,
    }
}

pub(crate) fn build(doc: SchemaDoc) -> Result<Schema> {
    let mut b = Builder {
        doc: &doc,
        types: Vec::new(),
        by_name: BTreeMap::new(),
    };
    for (name, kind) in BUILTINS {
        let id = b.placeholder(name, Kind::Primitive);
        b.types[id].prim = Some(kind);
    }
    for (name, decl) in &doc.types {
        if b.by_name.contains_key(name) {
            return Err(Error::schema(format!("types.{name}"), "redefines a builtin type"));
        }
        if collection_ref(name).is_some() || name.contains(['[', ']', '.']) {
            return Err(Error::schema(format!("types.{name}"), "type names may not contain brackets or dots"));
        }
        b.placeholder(name, decl.kind);
    }
    for (name, decl) in &doc.types {
        b.declare(name, decl)?;
    }
    check_record_cycles(&b.types)?;

    for (name, decl) in &doc.types {
        let id = b.by_name[name];
        let n = b.types[id].fields.len();
        for k in 0..n {
            let s = b.declared_field_sim(id, k)?;
            b.types[id].fields[k].sim = s;
        }
        let path = format!("types.{name}.sim");
        let kind = decl.kind;
        let s = match &decl.sim {
            Some(SimSpec::Named(metric)) => {
                if metric_info(metric).is_none() {
                    return Err(Error::schema(path, format!("unknown built-in metric {metric:?}")));
                }
                Sim::Named(metric.clone())
            }
            Some(s) => b.sim(s, id, &path)?,
            None => match kind {
                Kind::Primitive => Sim::Discrete,
                Kind::Variable => Sim::Variable,
                Kind::Record => Sim::Product((0..n).map(|k| (k, b.types[id].fields[k].sim.clone())).collect()),
                _ => default_collection_sim(kind, b.types[id].element.expect("checked")),
            },
        };
        b.types[id].sim = s;
    }

    let Builder { types, by_name, .. } = b;
    let root = match by_name.get(&doc.metric.root) {
        Some(&id) if doc.types.contains_key(&doc.metric.root) => id,
        _ => {
            return Err(Error::schema(
                "metric.root",
                format!("unknown type {:?}", doc.metric.root),
            ))
        }
    };
    if matches!(types[root].kind, Kind::Primitive | Kind::Variable) {
        return Err(Error::schema(
            "metric.root",
            format!("root type {:?} is a {}; expected a record or collection", doc.metric.root, types[root].kind.name()),
        ));
    }
    if doc.metric.report.is_empty() {
        return Err(Error::schema("metric.report", "at least one normalizer must be reported"));
    }
    let schema = Schema {
        doc,
        types,
        by_name,
        root,
    };
    schema.check()?;
    Ok(schema)
}

fn check_record_cycles(types: &[TypeDef]) -> Result<()> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(types: &[TypeDef], t: TypeId, state: &mut [u8], stack: &mut Vec<TypeId>) -> Result<()> {
        match state[t] {
            2 => return Ok(()),
            1 => {
                let start = stack.iter().position(|&s| s == t).unwrap_or(0);
                let names: Vec<&str> = stack[start..].iter().chain([&t]).map(|&s| types[s].name.as_str()).collect();
                return Err(Error::schema(
                    format!("types.{}", types[t].name),
                    format!("records nest cyclically: {}", names.join(" -> ")),
                ));
            }
            _ => {}
        }
        state[t] = 1;
        stack.push(t);
        for f in &types[t].fields {
            if types[f.ty].kind == Kind::Record {
                visit(types, f.ty, state, stack)?;
            }
        }
        stack.pop();
        state[t] = 2;
        Ok(())
    }
    let mut state = vec![0u8; types.len()];
    for t in 0..types.len() {
        if types[t].kind == Kind::Record {
            visit(types, t, &mut state, &mut Vec::new())?;
        }
    }
    Ok(())
}

/// Field-index path inside the element of an enclosing latent matching.
struct LatentScope<'a> {
    vars: &'a [Vec<usize>],
    at: Vec<usize>,
}

impl Schema {
    pub(crate) fn is_normalized(&self, s: &Sim) -> bool {
        match s {
            Sim::Product(terms) => terms.iter().all(|(_, t)| self.is_normalized(t)),
            Sim::Match { normalizer, .. } => normalizer.is_some(),
            Sim::Of(t) => self.is_normalized(&self.types[*t].sim),
            _ => true,
        }
    }

    fn contains_variable(&self, t: TypeId, seen: &mut BTreeSet<TypeId>) -> bool {
        if !seen.insert(t) {
            return false;
        }
        let td = &self.types[t];
        td.kind == Kind::Variable
            || td.fields.iter().any(|f| self.contains_variable(f.ty, seen))
            || td.element.is_some_and(|e| self.contains_variable(e, seen))
    }

    /// Checks every similarity reachable from the root, then the rest with
    /// variable placement unchecked.
    fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        self.walk(&Sim::Of(self.root), self.root, None, "metric.root", true, &mut seen)?;
        for t in 0..self.types.len() {
            if !seen.contains(&t) {
                let path = format!("types.{}.sim", self.types[t].name);
                self.walk(&Sim::Of(t), t, None, &path, false, &mut seen)?;
            }
        }
        Ok(())
    }

    fn walk(
        &self,
        s: &Sim,
        ty: TypeId,
        scope: Option<&LatentScope<'_>>,
        path: &str,
        strict_vars: bool,
        seen: &mut BTreeSet<TypeId>,
    ) -> Result<()> {
        let td = &self.types[ty];
        match s {
            Sim::Variable => {
                let listed = scope.is_some_and(|sc| sc.vars.contains(&sc.at));
                if strict_vars && !listed {
                    return Err(Error::schema(
                        path,
                        format!("variable type {:?} is compared outside a LatentSetMatch listing it in var_fields", td.name),
                    ));
                }
            }
            Sim::Discrete => {
                if strict_vars && td.kind != Kind::Primitive && self.contains_variable(ty, &mut BTreeSet::new()) {
                    return Err(Error::schema(path, format!("Discrete on {:?} would compare latent variables by name", td.name)));
                }
            }
            Sim::Product(terms) => {
                for (k, t) in terms {
                    let f = &td.fields[*k];
                    let inner_scope = scope.map(|sc| {
                        let mut at = sc.at.clone();
                        at.push(*k);
                        LatentScope { vars: sc.vars, at }
                    });
                    self.walk(t, f.ty, inner_scope.as_ref(), &format!("{path}.{}", f.name), strict_vars, seen)?;
                }
            }
            Sim::Match { how, inner, .. } => {
                let elem = td.element.expect("collections have elements");
                let latent = match how {
                    How::Latent(_, vars) => Some(LatentScope { vars, at: Vec::new() }),
                    _ => None,
                };
                self.walk(inner, elem, latent.as_ref(), &format!("{path}[]"), strict_vars, seen)?;
            }
            Sim::Threshold { inner, .. } => {
                if !self.is_normalized(inner) {
                    return Err(Error::schema(path, "Threshold needs a normalized inner similarity"));
                }
                self.walk(inner, ty, scope, path, strict_vars, seen)?;
            }
            Sim::Of(t) => {
                // Outside latent scopes a type's similarity is checked once;
                // inside, only records are traversed, and they nest finitely.
                if scope.is_none() && !seen.insert(*t) {
                    return Ok(());
                }
                self.walk(&self.types[*t].sim, *t, scope, path, strict_vars, seen)?;
            }
            Sim::Table { .. } | Sim::Level(_) | Sim::Supertypes(_) | Sim::Named(_) => {}
        }
        Ok(())
    }
}
