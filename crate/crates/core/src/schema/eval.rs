//! Evaluation of derived similarities on typed documents.

use std::cell::Cell;
use std::collections::HashMap;

use super::datum::{to_json, Datum};
use super::resolve::{How, Sim, TypeId};
use super::Schema;
use crate::error::{Error, Result};
use crate::explain::{AlignedPair, Alignment};
use crate::latent::{build_ilp, solve_ilp, LatentSide, VarId};
use crate::matcher::{match_score, Matching, WeightMatrix};
use crate::ordered::{graph_match, seq_match, GraphOptions, Order};
use crate::report::Tally;
use crate::sim::{discrete_sim, normalize, threshold_sim, OverlapTriple, Prim, SimScore};
use crate::zoo::{self, hierarchy, Evaluated, TypePath, ZooOptions};

pub(crate) struct Evaluator<'a> {
    schema: &'a Schema,
    opts: &'a ZooOptions,
    exact: Cell<bool>,
}

/// A solved matching between two collections.
struct Solved {
    matching: Matching,
    weights: WeightMatrix,
    variables: Vec<(String, String)>,
}

fn labels(d: &Datum) -> Result<Vec<String>> {
    let one = |d: &Datum| match d {
        Datum::Prim(Prim::Str(s)) => Ok(s.clone()),
        Datum::Prim(p) => Err(Error::data("labels", format!("hierarchy labels must be strings, found {p}"))),
        _ => Err(Error::data("labels", "expected a label")),
    };
    match d {
        Datum::Items(items) => items.iter().map(one).collect(),
        other => Ok(vec![one(other)?]),
    }
}

/// Variables of each item along the latent field paths.
fn latent_side(items: &[Datum], paths: &[Vec<usize>]) -> Result<LatentSide> {
    let mut vars: Vec<VarId> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut slots = Vec::with_capacity(items.len());
    for item in items {
        let mut row = Vec::with_capacity(paths.len());
        for path in paths {
            let mut cur = item;
            for &k in path {
                cur = match cur {
                    Datum::Record(fields) => &fields[k],
                    _ => &Datum::Absent,
                };
            }
            row.push(match cur {
                Datum::Var(name) => Some(*index.entry(name.clone()).or_insert_with(|| {
                    vars.push(VarId(name.clone()));
                    vars.len() - 1
                })),
                _ => None,
            });
        }
        slots.push(row);
    }
    LatentSide::new(vars, slots)
}

fn order_of(d: &Datum) -> Order {
    match d {
        Datum::Graph(g) => g.1.clone(),
        other => Order::total(other.items().len()),
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(schema: &'a Schema, opts: &'a ZooOptions) -> Self {
        Evaluator {
            schema,
            opts,
            exact: Cell::new(true),
        }
    }

    fn element(&self, ty: TypeId) -> TypeId {
        self.schema.types[ty].element.expect("collections have elements")
    }

    fn named(&self, metric: &str, a: &Datum, b: &Datum) -> Result<Evaluated> {
        let (Datum::Raw(x), Datum::Raw(y)) = (a, b) else {
            return Err(Error::Precondition("built-in metrics take raw payloads".into()));
        };
        let r = zoo::evaluate(metric, x, y, self.opts)?;
        if !r.exact {
            self.exact.set(false);
        }
        Ok(r)
    }

    /// Similarity of `a` and `b` under `s`, both of type `ty`.
    pub fn sim(&self, s: &Sim, ty: TypeId, a: &Datum, b: &Datum) -> Result<f64> {
        match (a, b) {
            (Datum::Absent, Datum::Absent) => return Ok(1.0),
            (Datum::Absent, _) | (_, Datum::Absent) => return Ok(0.0),
            _ => {}
        }
        let t = &self.schema.types[ty];
        Ok(match s {
            Sim::Discrete => match (a, b) {
                (Datum::Prim(x), Datum::Prim(y)) => discrete_sim(x, y)?.value(),
                _ => f64::from(u8::from(a == b)),
            },
            Sim::Variable => 1.0,
            Sim::Of(u) => self.sim(&self.schema.types[*u].sim, *u, a, b)?,
            Sim::Product(terms) => {
                let (Datum::Record(x), Datum::Record(y)) = (a, b) else {
                    return Err(Error::Precondition(format!("product over non-record values of {:?}", t.name)));
                };
                let mut acc = 1.0;
                for (k, fs) in terms {
                    acc *= self.sim(fs, t.fields[*k].ty, &x[*k], &y[*k])?;
                    if acc == 0.0 {
                        break;
                    }
                }
                acc
            }
            Sim::Match { inner, normalizer, .. } => {
                let solved = self.solve(s, ty, a, b)?;
                match normalizer {
                    None => solved.matching.score,
                    Some(n) => {
                        let elem = self.element(ty);
                        let triple = OverlapTriple::new(
                            solved.matching.score,
                            self.self_sum(inner, elem, a)?,
                            self.self_sum(inner, elem, b)?,
                        )?;
                        normalize(*n, &triple).value()
                    }
                }
            }
            Sim::Threshold { inner, cutoff, strict } => {
                let v = self.sim(inner, ty, a, b)?;
                threshold_sim(SimScore::from_ratio(v.min(1.0)), *cutoff, *strict)?.value()
            }
            Sim::Table { entries, default } => {
                let (Datum::Prim(x), Datum::Prim(y)) = (a, b) else {
                    return Err(Error::Precondition("table lookup on non-primitive values".into()));
                };
                match entries.get(&(x.clone(), y.clone())) {
                    Some(v) => *v,
                    None if discrete_sim(x, y)?.value() == 1.0 => 1.0,
                    None => *default,
                }
            }
            Sim::Level(depth) => {
                let path = |d: &Datum| -> Result<TypePath> {
                    let l = labels(d)?;
                    if l.len() != *depth {
                        return Err(Error::data("levels", format!("type path has {} levels, expected {depth}", l.len())));
                    }
                    Ok(TypePath { levels: l })
                };
                hierarchy::type_similarity_level(&path(a)?, &path(b)?)?.value()
            }
            Sim::Supertypes(o) => hierarchy::type_similarity_supertypes(&labels(a)?, &labels(b)?, o)?.value(),
            Sim::Named(metric) => self.named(metric, a, b)?.tally.scores().f,
        })
    }

    /// `Σ_x s(x, x)` over the items of `d`.
    fn self_sum(&self, s: &Sim, elem: TypeId, d: &Datum) -> Result<f64> {
        let mut total = 0.0;
        for x in d.items() {
            total += self.self_sim(s, elem, x)?;
        }
        Ok(total)
    }

    /// `s(a, a)`, with every matching against itself scored by its
    /// diagonal.
    pub fn self_sim(&self, s: &Sim, ty: TypeId, a: &Datum) -> Result<f64> {
        if let Datum::Absent = a {
            return Ok(1.0);
        }
        let t = &self.schema.types[ty];
        Ok(match s {
            Sim::Of(u) => self.self_sim(&self.schema.types[*u].sim, *u, a)?,
            Sim::Product(terms) => {
                let Datum::Record(x) = a else {
                    return Err(Error::Precondition(format!("product over a non-record value of {:?}", t.name)));
                };
                let mut acc = 1.0;
                for (k, fs) in terms {
                    acc *= self.self_sim(fs, t.fields[*k].ty, &x[*k])?;
                }
                acc
            }
            Sim::Match { inner, normalizer, .. } => {
                let total = self.self_sum(inner, self.element(ty), a)?;
                match normalizer {
                    None => total,
                    Some(n) => normalize(*n, &OverlapTriple::new(total, total, total)?).value(),
                }
            }
            Sim::Threshold { inner, cutoff, strict } => {
                let v = self.self_sim(inner, ty, a)?;
                threshold_sim(SimScore::from_ratio(v.min(1.0)), *cutoff, *strict)?.value()
            }
            _ => self.sim(s, ty, a, a)?,
        })
    }

    fn weights(&self, inner: &Sim, elem: TypeId, a: &Datum, b: &Datum) -> Result<WeightMatrix> {
        let (p, g) = (a.items(), b.items());
        WeightMatrix::try_from_fn(p.len(), g.len(), |i, j| self.sim(inner, elem, &p[i], &g[j]))
    }

    fn solve(&self, s: &Sim, ty: TypeId, a: &Datum, b: &Datum) -> Result<Solved> {
        let Sim::Match { how, inner, .. } = s else {
            unreachable!("solve is only called on matchings");
        };
        let weights = self.weights(inner, self.element(ty), a, b)?;
        let mut variables = Vec::new();
        let matching = match how {
            How::Set(c) => match_score(&weights, *c),
            How::Seq => seq_match(&weights),
            How::Graph(c) => {
                let opts = GraphOptions {
                    node_limit: self.opts.solver.node_limit,
                    ..GraphOptions::default()
                };
                graph_match(&order_of(a), &order_of(b), &weights, *c, &opts)?
            }
            How::Latent(c, paths) => {
                let (ps, gs) = (latent_side(a.items(), paths)?, latent_side(b.items(), paths)?);
                let inst = build_ilp(&ps, &gs, &weights, *c)?;
                let sol = solve_ilp(&inst, &self.opts.solver)?;
                if !sol.exact {
                    self.exact.set(false);
                }
                variables = sol.alignment.pairs.iter().map(|(x, y)| (x.0.clone(), y.0.clone())).collect();
                Matching::from_pairs(&weights, sol.pairs)
            }
        };
        Ok(Solved {
            matching,
            weights,
            variables,
        })
    }

    /// Tally of a document pair of the root type.
    pub fn document(&self, root: TypeId, p: &Datum, g: &Datum) -> Result<Evaluated> {
        let s = &self.schema.types[root].sim;
        if let Sim::Named(metric) = s {
            return self.named(metric, p, g);
        }
        let triple = OverlapTriple::new(self.sim(s, root, p, g)?, self.self_sim(s, root, p)?, self.self_sim(s, root, g)?)?;
        Ok(Evaluated {
            tally: Tally::from_triple(triple),
            exact: self.exact.get(),
        })
    }

    fn explain(&self, s: &Sim, ty: TypeId, level: &str, a: &Datum, b: &Datum) -> Result<Vec<Alignment>> {
        if matches!(a, Datum::Absent) || matches!(b, Datum::Absent) {
            return Ok(Vec::new());
        }
        let t = &self.schema.types[ty];
        Ok(match s {
            Sim::Of(u) => {
                let name = &self.schema.types[*u].name;
                let level = if self.schema.doc.types.contains_key(name) { name } else { level };
                self.explain(&self.schema.types[*u].sim, *u, level, a, b)?
            }
            Sim::Product(terms) => {
                let (Datum::Record(x), Datum::Record(y)) = (a, b) else {
                    return Ok(Vec::new());
                };
                let mut out = Vec::new();
                for (k, fs) in terms {
                    let f = &t.fields[*k];
                    out.extend(self.explain(fs, f.ty, &f.name, &x[*k], &y[*k])?);
                }
                out
            }
            Sim::Match { inner, .. } => {
                let solved = self.solve(s, ty, a, b)?;
                let elem = self.element(ty);
                let (p, g) = (a.items(), b.items());
                let mut al = Alignment::new(level, solved.matching.score);
                for &(i, j) in &solved.matching.pairs {
                    al.pairs.push(AlignedPair {
                        pred: i,
                        gold: j,
                        weight: solved.weights.get(i, j),
                        pred_item: Some(to_json(self.schema, elem, &p[i])),
                        gold_item: Some(to_json(self.schema, elem, &g[j])),
                        inner: self.explain(inner, elem, &self.schema.types[elem].name, &p[i], &g[j])?,
                    });
                }
                al.variables = solved.variables;
                vec![al]
            }
            Sim::Threshold { inner, .. } => self.explain(inner, ty, level, a, b)?,
            Sim::Named(metric) => match (a, b) {
                (Datum::Raw(x), Datum::Raw(y)) => vec![zoo::explain(metric, x, y, self.opts)?],
                _ => Vec::new(),
            },
            _ => Vec::new(),
        })
    }

    /// Alignment tree of a document pair. A root that is not itself a
    /// matching is reported as one document-level pair.
    pub fn explain_document(&self, root: TypeId, p: &Datum, g: &Datum) -> Result<Alignment> {
        let t = &self.schema.types[root];
        let mut found = self.explain(&t.sim, root, &t.name, p, g)?;
        if found.len() == 1 && matches!(t.sim, Sim::Match { .. } | Sim::Named(_)) {
            return Ok(found.remove(0));
        }
        let score = self.sim(&t.sim, root, p, g)?;
        let mut al = Alignment::new("document", score);
        al.pairs.push(AlignedPair {
            pred: 0,
            gold: 0,
            weight: score,
            pred_item: None,
            gold_item: None,
            inner: found,
        });
        Ok(al)
    }
}
