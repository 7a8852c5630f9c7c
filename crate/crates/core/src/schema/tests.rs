use super::*;
use proptest::prelude::*;
use serde_json::json;

const RELATIONS: &str = r#"{
  "types": {
    "Mention": {"kind": "Record", "fields": {"left": {"type": "int"}, "right": {"type": "int"}}},
    "Relation": {"kind": "Record", "fields": {
      "type": {"type": "str"}, "subj": {"type": "Mention"}, "obj": {"type": "Mention"}}},
    "RelationSet": {"kind": "Record", "fields": {"relations": {"type": "Set[Relation]"}}}
  },
  "metric": {"root": "RelationSet", "report": ["P", "R", "F"]}
}"#;

fn opts() -> ZooOptions {
    ZooOptions::default()
}

fn err_path(e: Error) -> String {
    match e {
        Error::Schema { path, .. } | Error::Data { path, .. } => path,
        other => panic!("unexpected {other:?}"),
    }
}

fn rel(t: &str, s: (i64, i64), o: (i64, i64)) -> Value {
    json!({"type": t, "subj": {"left": s.0, "right": s.1}, "obj": {"left": o.0, "right": o.1}})
}

#[test]
fn relation_schema_has_three_types() {
    let s = parse_schema(RELATIONS).unwrap();
    assert_eq!(s.type_names().count(), 3);
    assert_eq!(s.metric().report, vec![Normalizer::Precision, Normalizer::Recall, Normalizer::F]);
    assert!(s.similarity("Relation").unwrap().is_normalized());
    assert!(!s.similarity("RelationSet").unwrap().is_normalized());
}

#[test]
fn relation_counts() {
    let s = parse_schema(RELATIONS).unwrap();
    let pred = json!({"relations": [rel("a", (0, 0), (1, 1)), rel("b", (2, 2), (3, 3))]});
    let gold = json!({"relations": [rel("a", (0, 0), (1, 1)), rel("c", (4, 4), (5, 5)), rel("d", (0, 0), (5, 5))]});
    let sc = s.evaluate(&pred, &gold, &opts()).unwrap().tally.scores();
    assert!((sc.precision - 0.5).abs() < 1e-12);
    assert!((sc.recall - 1.0 / 3.0).abs() < 1e-12);
    assert!((sc.f - 0.4).abs() < 1e-12);

    let same = s.evaluate(&pred, &pred, &opts()).unwrap().tally.scores();
    assert_eq!((same.precision, same.recall, same.f, same.jaccard), (1.0, 1.0, 1.0, 1.0));

    let empty = s.evaluate(&json!({"relations": []}), &gold, &opts()).unwrap().tally.scores();
    assert_eq!((empty.precision, empty.recall, empty.f), (0.0, 0.0, 0.0));
}

#[test]
fn unknown_type_names_its_path() {
    let text = RELATIONS.replace(r#""subj": {"type": "Mention"}"#, r#""subj": {"type": "Entty"}"#);
    let e = parse_schema(&text).unwrap_err();
    assert_eq!(err_path(e), "types.Relation.fields.subj.type");
}

#[test]
fn table_diagonal_must_be_one() {
    let text = r#"{"types": {
        "Label": {"kind": "Primitive", "sim": {"Table": {"entries": [["a", "a", 0.5]], "default": 0}}},
        "Labels": {"kind": "Set", "element": "Label"}},
      "metric": {"root": "Labels"}}"#;
    let e = parse_schema(text).unwrap_err();
    assert!(err_path(e).starts_with("types.Label.sim.entries[0]"));
}

#[test]
fn table_partial_credit() {
    let text = r#"{"types": {
        "Label": {"kind": "Primitive", "sim": {"Table": {"entries": [["bombing", "attack", 0.5]], "default": 0}}},
        "Labels": {"kind": "Set", "element": "Label"}},
      "metric": {"root": "Labels"}}"#;
    let s = parse_schema(text).unwrap();
    let t = s.similarity("Label").unwrap();
    assert_eq!(t.eval(&json!("bombing"), &json!("attack"), &opts()).unwrap(), 0.5);
    assert_eq!(t.eval(&json!("attack"), &json!("bombing"), &opts()).unwrap(), 0.0);
    assert_eq!(t.eval(&json!("kidnap"), &json!("kidnap"), &opts()).unwrap(), 1.0);
}

#[test]
fn record_cycles_are_rejected() {
    let text = r#"{"types": {
        "A": {"kind": "Record", "fields": {"b": {"type": "B"}}},
        "B": {"kind": "Record", "fields": {"a": {"type": "A"}}},
        "As": {"kind": "Set", "element": "A"}},
      "metric": {"root": "As"}}"#;
    assert!(matches!(parse_schema(text), Err(Error::Schema { .. })));

    // Recursion through a set is fine.
    let tree = r#"{"types": {
        "Tree": {"kind": "Record", "fields": {"label": {"type": "str"}, "kids": {"type": "Set[Tree]",
            "sim": {"SetMatch": {"normalizer": "F"}}}}},
        "Forest": {"kind": "Set", "element": "Tree"}},
      "metric": {"root": "Forest"}}"#;
    let s = parse_schema(tree).unwrap();
    let doc = json!([{"label": "a", "kids": [{"label": "b", "kids": []}, {"label": "c", "kids": []}]}]);
    let other = json!([{"label": "a", "kids": [{"label": "b", "kids": []}]}]);
    let t = s.evaluate(&doc, &other, &opts()).unwrap().tally;
    // δ_label × F over children: the roots agree, children score F = 2/3.
    assert!((t.sigma_pr - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!((t.sigma_pp, t.sigma_rr), (1.0, 1.0));
}

const AMR: &str = r#"{
  "types": {
    "Var": {"kind": "Variable"},
    "Obj": {"kind": "Record", "fields": {
      "var": {"type": "Var", "optional": true}, "concept": {"type": "str", "optional": true}}},
    "Prop": {"kind": "Record", "fields": {"rel": {"type": "str"}, "subj": {"type": "Var"}, "obj": {"type": "Obj"}}},
    "Amr": {"kind": "Set", "element": "Prop",
            "sim": {"LatentSetMatch": {"constraint": "OneToOne", "var_fields": ["subj", "obj.var"]}}}
  },
  "metric": {"root": "Amr"}
}"#;

#[test]
fn variables_need_a_latent_matching() {
    let text = AMR.replace(r#", "obj.var"]"#, "]");
    let e = parse_schema(&text).unwrap_err();
    assert!(err_path(e).contains("obj.var"));

    let plain = AMR.replace(r#""sim": {"LatentSetMatch": {"constraint": "OneToOne", "var_fields": ["subj", "obj.var"]}}"#, r#""sim": {"SetMatch": {}}"#);
    assert!(parse_schema(&plain).is_err());

    let bad_path = AMR.replace(r#""obj.var""#, r#""obj.concept""#);
    assert!(parse_schema(&bad_path).is_err());
}

#[test]
fn latent_sets_match_up_to_renaming() {
    let s = parse_schema(AMR).unwrap();
    let pred = json!([
        {"rel": "instance", "subj": "x", "obj": {"concept": "boy"}},
        {"rel": "instance", "subj": "y", "obj": {"concept": "boy"}}]);
    let gold = json!([{"rel": "instance", "subj": "z", "obj": {"concept": "boy"}}]);
    let r = s.evaluate(&pred, &gold, &opts()).unwrap();
    assert!(r.exact);
    let sc = r.tally.scores();
    assert!((sc.precision - 0.5).abs() < 1e-12);
    assert!((sc.recall - 1.0).abs() < 1e-12);

    let a = json!([
        {"rel": "instance", "subj": "w", "obj": {"concept": "want"}},
        {"rel": "instance", "subj": "b", "obj": {"concept": "boy"}},
        {"rel": "ARG0", "subj": "w", "obj": {"var": "b"}}]);
    let renamed = json!([
        {"rel": "instance", "subj": "q", "obj": {"concept": "want"}},
        {"rel": "instance", "subj": "p", "obj": {"concept": "boy"}},
        {"rel": "ARG0", "subj": "q", "obj": {"var": "p"}}]);
    assert_eq!(s.evaluate(&a, &renamed, &opts()).unwrap().tally.scores().f, 1.0);
    let ex = s.explain(&a, &renamed, &opts()).unwrap();
    assert_eq!(ex.pairs.len(), 3);
    assert!(ex.variables.contains(&("w".to_string(), "q".to_string())));
}

#[test]
fn data_errors_carry_json_paths() {
    let s = parse_schema(RELATIONS).unwrap();
    let bad = json!({"relations": [rel("a", (0, 0), (1, 1)), {"type": "b", "subj": {"left": 0, "right": "x"}, "obj": {"left": 0, "right": 0}}]});
    let good = json!({"relations": []});
    let e = s.evaluate(&good, &bad, &opts()).unwrap_err();
    assert_eq!(err_path(e), "gold.relations[1].subj.right");
    let extra = json!({"relations": [], "notes": 1});
    assert_eq!(err_path(s.evaluate(&extra, &good, &opts()).unwrap_err()), "pred.notes");
    let missing = json!({"relations": [{"type": "a", "subj": {"left": 0, "right": 0}}]});
    assert_eq!(err_path(s.evaluate(&missing, &good, &opts()).unwrap_err()), "pred.relations[0]");
}

#[test]
fn invalid_pairings_are_schema_errors() {
    let cases = [
        r#"{"types": {"L": {"kind": "Set", "element": "int", "sim": {"Product": []}}}, "metric": {"root": "L"}}"#,
        r#"{"types": {"L": {"kind": "Set", "element": "int", "sim": {"SeqMatch": {}}}}, "metric": {"root": "L"}}"#,
        r#"{"types": {"L": {"kind": "Set", "element": "int", "sim": {"Threshold": {"inner": {"SetMatch": {}}, "cutoff": 0.5}}}}, "metric": {"root": "L"}}"#,
        r#"{"types": {"L": {"kind": "Set", "element": "int", "sim": {"Threshold": {"inner": {"SetMatch": {"normalizer": "F"}}, "cutoff": 1.5}}}}, "metric": {"root": "L"}}"#,
        r#"{"types": {"L": {"kind": "Set", "element": "int", "sim": {"Named": "nope"}}}, "metric": {"root": "L"}}"#,
        r#"{"types": {"L": {"kind": "Set", "element": "int"}}, "metric": {"root": "M"}}"#,
        r#"{"types": {"L": {"kind": "Set"}}, "metric": {"root": "L"}}"#,
        r#"{"types": {"L": {"kind": "Set", "element": "int", "sim": {"HierarchySupertypes": {"ontology": "o"}}}}, "metric": {"root": "L"}}"#,
        r#"{"types": {"L": {"kind": "Set", "element": "int"}}, "metric": {"root": "L"}, "extra": 1}"#,
    ];
    for text in cases {
        assert!(matches!(parse_schema(text), Err(Error::Schema { .. })), "{text}");
    }
}

#[test]
fn thresholds_and_hierarchies() {
    let text = r#"{"types": {
        "Tokens": {"kind": "Set", "element": "int"},
        "Mention": {"kind": "Record", "fields": {"indices": {"type": "Tokens",
            "sim": {"Threshold": {"inner": {"SetMatch": {"normalizer": "J"}}, "cutoff": 0.5, "strict": true}}}}},
        "Path": {"kind": "Sequence", "element": "str", "sim": {"HierarchyLevel": {"depth": 2}}},
        "Label": {"kind": "Primitive", "of": "str", "sim": {"HierarchySupertypes": {"ontology": "types"}}},
        "Doc": {"kind": "Record", "fields": {"mentions": {"type": "Set[Mention]"}, "paths": {"type": "Set[Path]"},
                                             "labels": {"type": "Set[Label]"}}}},
      "ontologies": {"types": {"edges": [["l1", "mid"], ["l2", "mid"], ["mid", "root"]]}},
      "metric": {"root": "Doc"}}"#;
    let s = parse_schema(text).unwrap();
    let m = s.similarity("Mention").unwrap();
    let mention = |v: &[i64]| json!({"indices": v});
    assert_eq!(m.eval(&mention(&[1, 2, 3, 4]), &mention(&[2, 3, 4, 5]), &opts()).unwrap(), 1.0);
    assert_eq!(m.eval(&mention(&[1, 2]), &mention(&[2, 3]), &opts()).unwrap(), 0.0);
    let p = s.similarity("Path").unwrap();
    assert_eq!(p.eval(&json!(["a", "b"]), &json!(["a", "c"]), &opts()).unwrap(), 0.5);
    assert!(p.eval(&json!(["a"]), &json!(["a", "c"]), &opts()).is_err());
    let l = s.similarity("Label").unwrap();
    assert!((l.eval(&json!("l1"), &json!("l2"), &opts()).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!(l.eval(&json!("l1"), &json!(3), &opts()).is_err());
}

#[test]
fn sequences_and_graphs() {
    let text = r#"{"types": {
        "Seq": {"kind": "Sequence", "element": "int"},
        "Dag": {"kind": "Graph", "element": "int"}},
      "metric": {"root": "Seq"}}"#;
    let s = parse_schema(text).unwrap();
    let seq = s.similarity("Seq").unwrap();
    assert_eq!(seq.eval(&json!([1, 2, 3, 4, 5]), &json!([1, 3, 5, 7, 9]), &opts()).unwrap(), 3.0);
    let dag = s.similarity("Dag").unwrap();
    let chain = json!({"items": [1, 2, 3], "order": [[0, 1], [1, 2]]});
    let flipped = json!({"items": [1, 2, 3], "order": [[1, 0], [1, 2]]});
    assert_eq!(dag.eval(&chain, &chain, &opts()).unwrap(), 3.0);
    assert_eq!(dag.eval(&chain, &flipped, &opts()).unwrap(), 2.0);
    let cyclic = json!({"items": [1, 2], "order": [[0, 1], [1, 0]]});
    assert!(matches!(dag.eval(&cyclic, &chain, &opts()), Err(Error::Data { .. })));
}

#[test]
fn named_builtins_pass_payloads_through() {
    let text = r#"{"types": {"Doc": {"kind": "Record", "sim": {"Named": "muc"}}}, "metric": {"root": "Doc"}}"#;
    let s = parse_schema(text).unwrap();
    let pred = json!({"entities": [{"mentions": [{"left": 0, "right": 0}, {"left": 1, "right": 1}]}, {"mentions": [{"left": 2, "right": 2}]}]});
    let gold = json!({"entities": [{"mentions": [{"left": 0, "right": 0}, {"left": 1, "right": 1}, {"left": 2, "right": 2}]}]});
    let via_schema = s.evaluate(&pred, &gold, &opts()).unwrap();
    let direct = crate::zoo::evaluate("muc", &pred, &gold, &opts()).unwrap();
    assert_eq!(via_schema, direct);
}

#[test]
fn round_trip_preserves_behavior() {
    for text in [RELATIONS, AMR] {
        let s = parse_schema(text).unwrap();
        let again = parse_schema(&s.to_json()).unwrap();
        assert_eq!(s.doc(), again.doc());
    }
}

#[test]
fn set_of_sets_gives_ceaf_phi4() {
    let text = r#"{"types": {
        "Entity": {"kind": "Set", "element": "str", "sim": {"SetMatch": {"normalizer": "F"}}},
        "Entities": {"kind": "Set", "element": "Entity"}},
      "metric": {"root": "Entities"}}"#;
    let s = parse_schema(text).unwrap();
    let sc = s.evaluate(&json!([["a", "b"], ["c"]]), &json!([["a", "b", "c"]]), &opts()).unwrap().tally.scores();
    assert!((sc.precision - 0.4).abs() < 1e-12);
    assert!((sc.recall - 0.8).abs() < 1e-12);
    assert!((sc.f - 8.0 / 15.0).abs() < 1e-12);
}

#[test]
fn explain_reports_nested_alignments() {
    let s = parse_schema(RELATIONS).unwrap();
    let doc = json!({"relations": [rel("a", (0, 0), (1, 1))]});
    let e = s.explain(&doc, &doc, &opts()).unwrap();
    assert_eq!(e.level, "document");
    assert_eq!(e.pairs[0].inner[0].level, "relations");
    assert_eq!(e.pairs[0].inner[0].pairs.len(), 1);
}

fn small_relation() -> impl Strategy<Value = (String, (i64, i64), (i64, i64))> {
    (
        prop::sample::select(vec!["a", "b"]),
        (0i64..3, 0i64..2),
        (0i64..3, 0i64..2),
    )
        .prop_map(|(t, (l1, w1), (l2, w2))| (t.to_string(), (l1, l1 + w1), (l2, l2 + w2)))
}

proptest! {
    #[test]
    fn relation_similarity_is_a_product_of_deltas(a in small_relation(), b in small_relation()) {
        let s = parse_schema(RELATIONS).unwrap();
        let sim = s.similarity("Relation").unwrap();
        let got = sim.eval(&rel(&a.0, a.1, a.2), &rel(&b.0, b.1, b.2), &opts()).unwrap();
        let want = f64::from(u8::from(a.0 == b.0) * u8::from(a.1 == b.1) * u8::from(a.2 == b.2));
        prop_assert_eq!(got, want);
        prop_assert_eq!(sim.eval(&rel(&a.0, a.1, a.2), &rel(&a.0, a.1, a.2), &opts()).unwrap(), 1.0);
    }
}
