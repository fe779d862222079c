mod support;

use ggnn_relevance::dfg::{annotate_dfg, mine_dfg, to_dot, AnnotationMap, DotOptions};
use ggnn_relevance::event_log::{generate_synthetic_log, EventLog, Label, SynthSpec, Trace};
use support::dot::check_dot;

#[test]
fn accepts_well_formed_graphs() {
    let ok = [
        "digraph {}",
        "strict digraph G { a -> b -> c; }",
        "graph g { a -- b [color=red, penwidth=2.5] }",
        "DiGraph x { node [shape=box]; edge [style=dashed] graph [rankdir=LR] a }",
        "digraph { label=\"t\"; \"x \\\"y\\\"\" [label=<<b>bold</b>>]; }",
        "digraph { a:n -> b:p1:sw; subgraph cluster_0 { c; d } -> e }",
        "// leading\n# 1 \"file\"\ndigraph { /* inner */ a -> { b c } }",
        "digraph { a [w=-1.5; h=.5] 1 -> 2 }",
    ];
    for src in ok {
        assert_eq!(check_dot(src), Ok(()), "{src}");
    }
}

#[test]
fn rejects_malformed_graphs() {
    let bad = [
        "",
        "digraph {",
        "digraph { a -> }",
        "graph { a -> b }",
        "digraph { a -- b }",
        "digraph { \"open }",
        "digraph { a [label=] }",
        "digraph { a [label=x }",
        "digraph { node }",
        "digraph { } extra",
        "digraph { 1abc }",
        "digraph { a /* b }",
        "tree { a }",
    ];
    for src in bad {
        assert!(check_dot(src).is_err(), "accepted {src:?}");
    }
}

#[test]
fn emitted_dfgs_parse() {
    for seed in 0..20 {
        let log = generate_synthetic_log(&SynthSpec { num_traces: 50, ..SynthSpec::default() }, seed).unwrap();
        let d = mine_dfg(&log).unwrap();
        let means = log.activity_universe().iter().enumerate()
            .map(|(i, a)| (a.clone(), (i % 5) as f64 / 4.0))
            .collect();
        for ann in [AnnotationMap::frequency(), AnnotationMap::relevance(means, Label::Positive).unwrap()] {
            let options = DotOptions { min_edge_count: (seed % 3) as usize, title: Some(format!("seed {seed}")) };
            let dot = to_dot(&annotate_dfg(&d, &ann), &options);
            assert_eq!(check_dot(&dot), Ok(()), "{dot}");
        }
    }
}

#[test]
fn awkward_activity_names_parse() {
    let names = ["trail\\", "say \"hi\"", "back\\slash", "new\nline", "-3", "Ünïcode ✓", "a->b", "{}", "[x=y]"];
    let traces = vec![Trace::from_activities("c", &names, Label::Negative).unwrap()];
    let log = EventLog::new(traces).unwrap();
    let dot = to_dot(&annotate_dfg(&mine_dfg(&log).unwrap(), &AnnotationMap::frequency()), &DotOptions::default());
    assert_eq!(check_dot(&dot), Ok(()), "{dot}");
}
