//! JSON Lines corpora, per-document evaluation and corpus reports.
//!
//! Each line of a corpus file is `{"doc_id": str, "payload": <document>}`.
//! Predicted and reference files are joined on `doc_id`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::explain::Alignment;
use crate::report::{aggregate, Aggregation, Tally};
use crate::schema::Schema;
use crate::sim::Normalizer;
use crate::zoo::{self, Evaluated, ZooOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub payload: Value,
}

/// Parses JSON Lines text; `source` names the file in error paths.
pub fn parse_corpus(text: &str, source: &str) -> Result<Vec<DocumentRecord>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = format!("{source}:{}", i + 1);
        let rec: DocumentRecord = serde_json::from_str(line).map_err(|e| Error::data(&at, e.to_string()))?;
        if rec.doc_id.is_empty() {
            return Err(Error::data(at, "doc_id must be nonempty"));
        }
        if !seen.insert(rec.doc_id.clone()) {
            return Err(Error::data(at, format!("duplicate doc_id {:?}", rec.doc_id)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<DocumentRecord>> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::data(&name, e.to_string()))?;
    parse_corpus(&text, &name)
}

/// A predicted and a reference document with the same id.
#[derive(Debug, Clone, PartialEq)]
pub struct DocPair {
    pub doc_id: String,
    pub pred: Value,
    pub gold: Value,
}

/// Joins two corpora on `doc_id`, ordered by id. Both must hold the same ids.
pub fn join(pred: Vec<DocumentRecord>, gold: Vec<DocumentRecord>) -> Result<Vec<DocPair>> {
    let mut p: BTreeMap<String, Value> = pred.into_iter().map(|r| (r.doc_id, r.payload)).collect();
    let g: BTreeMap<String, Value> = gold.into_iter().map(|r| (r.doc_id, r.payload)).collect();
    let missing_pred: Vec<&str> = g.keys().filter(|k| !p.contains_key(*k)).map(String::as_str).collect();
    let missing_gold: Vec<&str> = p.keys().filter(|k| !g.contains_key(*k)).map(String::as_str).collect();
    if !missing_pred.is_empty() || !missing_gold.is_empty() {
        let mut parts = Vec::new();
        if !missing_pred.is_empty() {
            parts.push(format!("missing from predictions: {}", missing_pred.join(", ")));
        }
        if !missing_gold.is_empty() {
            parts.push(format!("missing from references: {}", missing_gold.join(", ")));
        }
        return Err(Error::data("doc_id", parts.join("; ")));
    }
    Ok(g
        .into_iter()
        .map(|(doc_id, gold)| {
            let pred = p.remove(&doc_id).expect("ids checked");
            DocPair { doc_id, pred, gold }
        })
        .collect())
}

/// What to evaluate: built-in metrics by name, or a schema-derived metric.
#[derive(Debug, Clone)]
pub enum MetricSource {
    Builtin(Vec<String>),
    Schema(Box<Schema>),
}

impl MetricSource {
    /// Checks builtin names up front.
    pub fn builtin(names: Vec<String>) -> Result<MetricSource> {
        if names.is_empty() {
            return Err(Error::Config("no metric given".into()));
        }
        for n in &names {
            if zoo::metric_info(n).is_none() {
                return Err(Error::Config(format!("unknown metric {n:?}; see list-metrics")));
            }
        }
        Ok(MetricSource::Builtin(names))
    }

    /// Metric names in report order.
    pub fn names(&self) -> Vec<String> {
        match self {
            MetricSource::Builtin(names) => {
                let unique: BTreeSet<&String> = names.iter().collect();
                unique.into_iter().cloned().collect()
            }
            MetricSource::Schema(s) => vec![s.metric().root.clone()],
        }
    }

    pub fn default_aggregation(&self) -> Aggregation {
        match self {
            MetricSource::Builtin(_) => Aggregation::Micro,
            MetricSource::Schema(s) => s.metric().aggregation,
        }
    }

    pub fn default_normalizers(&self) -> Vec<Normalizer> {
        match self {
            MetricSource::Builtin(_) => Normalizer::ALL.to_vec(),
            MetricSource::Schema(s) => s.metric().report.clone(),
        }
    }

    /// Every metric on one document pair.
    pub fn evaluate(&self, pair: &DocPair, opts: &ZooOptions) -> Result<BTreeMap<String, Evaluated>> {
        let mut out = BTreeMap::new();
        match self {
            MetricSource::Builtin(_) => {
                for name in self.names() {
                    let r = zoo::evaluate(&name, &pair.pred, &pair.gold, opts)?;
                    out.insert(name, r);
                }
            }
            MetricSource::Schema(s) => {
                out.insert(s.metric().root.clone(), s.evaluate(&pair.pred, &pair.gold, opts)?);
            }
        }
        Ok(out)
    }

    pub fn explain(&self, pair: &DocPair, opts: &ZooOptions) -> Result<BTreeMap<String, Alignment>> {
        let mut out = BTreeMap::new();
        match self {
            MetricSource::Builtin(_) => {
                for name in self.names() {
                    let a = zoo::explain(&name, &pair.pred, &pair.gold, opts)?;
                    out.insert(name, a);
                }
            }
            MetricSource::Schema(s) => {
                out.insert(s.metric().root.clone(), s.explain(&pair.pred, &pair.gold, opts)?);
            }
        }
        Ok(out)
    }
}

/// Raw sums and the requested normalized values of one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    #[serde(flatten)]
    pub tally: Tally,
    #[serde(flatten)]
    pub values: BTreeMap<&'static str, f64>,
}

impl ReportEntry {
    fn new(tally: Tally, scores: crate::sim::Scores, normalizers: &[Normalizer]) -> ReportEntry {
        let values = normalizers.iter().map(|&n| (n.symbol(), scores.get(n))).collect();
        ReportEntry { tally, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub aggregation: Aggregation,
    /// False if any solver returned a hill-climbing lower bound.
    pub solver_exact: bool,
    pub per_metric: BTreeMap<String, ReportEntry>,
    pub per_doc: BTreeMap<String, BTreeMap<String, ReportEntry>>,
}

/// Assembles a report from per-document results.
pub fn build_report(
    docs: &[(String, BTreeMap<String, Evaluated>)],
    metrics: &[String],
    how: Aggregation,
    normalizers: &[Normalizer],
) -> Result<ScoreReport> {
    let mut per_doc = BTreeMap::new();
    let mut solver_exact = true;
    for (id, results) in docs {
        let mut entries = BTreeMap::new();
        for (name, r) in results {
            solver_exact &= r.exact;
            entries.insert(name.clone(), ReportEntry::new(r.tally.clone(), r.tally.scores(), normalizers));
        }
        per_doc.insert(id.clone(), entries);
    }
    let mut per_metric = BTreeMap::new();
    for name in metrics {
        let tallies: Vec<Tally> = docs.iter().filter_map(|(_, r)| r.get(name).map(|e| e.tally.clone())).collect();
        if let Some(rep) = aggregate(&tallies, how)? {
            per_metric.insert(name.clone(), ReportEntry::new(rep.tally, rep.scores, normalizers));
        }
    }
    Ok(ScoreReport {
        aggregation: how,
        solver_exact,
        per_metric,
        per_doc,
    })
}

impl ScoreReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One line per metric with the aggregated values.
    pub fn to_tsv(&self, normalizers: &[Normalizer]) -> String {
        let mut out = String::from("metric\tsigma_pr\tsigma_pp\tsigma_rr");
        for n in normalizers {
            out.push('\t');
            out.push_str(n.symbol());
        }
        out.push('\n');
        for (name, e) in &self.per_metric {
            out.push_str(&format!("{name}\t{}\t{}\t{}", e.tally.sigma_pr, e.tally.sigma_pp, e.tally.sigma_rr));
            for n in normalizers {
                out.push_str(&format!("\t{}", e.values.get(n.symbol()).copied().unwrap_or(f64::NAN)));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn rec(id: &str) -> DocumentRecord {
        DocumentRecord {
            doc_id: id.into(),
            payload: json!({"edges": []}),
        }
    }

    #[test]
    fn lines_are_numbered_in_errors() {
        let text = "{\"doc_id\": \"a\", \"payload\": {}}\n\n{\"doc_id\": \"b\", \"payload\": \n";
        match parse_corpus(text, "pred.jsonl") {
            Err(Error::Data { path, .. }) => assert_eq!(path, "pred.jsonl:3"),
            other => panic!("unexpected {other:?}"),
        }
        let dup = "{\"doc_id\": \"a\", \"payload\": {}}\n{\"doc_id\": \"a\", \"payload\": {}}\n";
        assert!(parse_corpus(dup, "x").is_err());
        assert_eq!(parse_corpus("", "x").unwrap(), vec![]);
        assert_eq!(parse_corpus("{\"doc_id\": \"a\", \"payload\": 1}\n{\"doc_id\": \"b\", \"payload\": 2}", "x").unwrap().len(), 2);
    }

    #[test]
    fn join_names_missing_ids() {
        let e = join(vec![rec("a")], vec![rec("a"), rec("b")]).unwrap_err();
        assert!(e.to_string().contains("missing from predictions: b"), "{e}");
        let pairs = join(vec![rec("b"), rec("a")], vec![rec("a"), rec("b")]).unwrap();
        assert_eq!(pairs.iter().map(|p| p.doc_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn micro_report_sums_documents() {
        let src = MetricSource::builtin(vec!["uas".into()]).unwrap();
        let e = |g: i64, d: i64| json!({"gov": g, "dep": d, "rel": "x"});
        let pairs = [
            DocPair {
                doc_id: "1".into(),
                pred: json!({"edges": [e(0, 1), e(1, 2)]}),
                gold: json!({"edges": [e(0, 1)]}),
            },
            DocPair {
                doc_id: "2".into(),
                pred: json!({"edges": []}),
                gold: json!({"edges": [e(0, 1), e(0, 2)]}),
            },
        ];
        let opts = ZooOptions::default();
        let docs: Vec<_> = pairs
            .iter()
            .map(|p| (p.doc_id.clone(), src.evaluate(p, &opts).unwrap()))
            .collect();
        let r = build_report(&docs, &src.names(), Aggregation::Micro, &Normalizer::ALL).unwrap();
        let m = &r.per_metric["uas"];
        assert_eq!((m.tally.sigma_pr, m.tally.sigma_pp, m.tally.sigma_rr), (1.0, 2.0, 3.0));
        assert!((m.values["P"] - 0.5).abs() < 1e-12);
        assert!((m.values["R"] - 1.0 / 3.0).abs() < 1e-12);
        assert!(r.solver_exact);
        assert!(r.to_tsv(&Normalizer::ALL).starts_with("metric\tsigma_pr"));
    }

    #[test]
    fn unknown_builtins_are_rejected_early() {
        assert!(matches!(MetricSource::builtin(vec!["nope".into()]), Err(Error::Config(_))));
    }
}
