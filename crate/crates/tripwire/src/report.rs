//! Text, CSV, JSON and DOT renderings of analysis results, plus the small
//! CSV inputs (edge lists, gazetteers) the analyses consume.

use std::fmt::Write as _;
use std::io::{self, Read, Write};

use serde::Serialize;
use tripwire_core::graph::{EdgeKind, InfluencerGraph, RawEdge};
use tripwire_core::keywords::{Branch, KeywordStat, WordTree};
use tripwire_core::{ConfusionMatrix, CvReport, DomainReport, Metrics};

use crate::ingest::RowError;

fn matrix_row(out: &mut String, class: &str, m: &ConfusionMatrix) {
    let _ = writeln!(out, "{class:<8}{:>8}{:>8}{:>8}{:>8}", m.tp, m.tn, m.fp, m.fn_);
}

fn metrics_line(out: &mut String, label: &str, m: &Metrics) {
    let _ = writeln!(
        out,
        "{label:<8}P {:.2}%  R {:.2}%  F1 {:.2}%{}",
        m.precision * 100.0,
        m.recall * 100.0,
        m.f1 * 100.0,
        if m.degenerate { "  (degenerate)" } else { "" }
    );
}

/// One confusion table per fold followed by the macro averages.
pub fn cv_table(report: &CvReport) -> String {
    let mut out = String::new();
    for fold in &report.folds {
        let _ = writeln!(out, "TEST {:<3}{:>8}{:>8}{:>8}{:>8}", fold.fold + 1, "TP", "TN", "FP", "FN");
        matrix_row(&mut out, "HATE", &fold.class_matrices.hate);
        matrix_row(&mut out, "SAFE", &fold.class_matrices.safe);
        metrics_line(&mut out, "", &fold.metrics);
        out.push('\n');
    }
    metrics_line(&mut out, "MACRO", &report.macro_avg);
    for (lang, r) in &report.per_language {
        metrics_line(&mut out, lang, &r.metrics);
    }
    out
}

pub fn domain_table(report: &DomainReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "documents {}", report.documents);
    let _ = writeln!(out, "accuracy  {:.2}%", report.accuracy * 100.0);
    for (name, rate) in [("HATE", report.flag_rate_hate), ("SAFE", report.flag_rate_safe)] {
        if let Some(rate) = rate {
            let _ = writeln!(out, "flagged among {name}: {:.2}%", rate * 100.0);
        }
    }
    let _ = writeln!(out, "{:<8}{:>8}{:>8}{:>8}{:>8}", "", "TP", "TN", "FP", "FN");
    matrix_row(&mut out, "HATE", &report.class_matrices.hate);
    matrix_row(&mut out, "SAFE", &report.class_matrices.safe);
    out
}

/// `KEYWORD,HATE %,#` followed by the test statistics.
pub fn write_keywords_csv<W: Write>(writer: W, stats: &[KeywordStat]) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["KEYWORD", "HATE %", "#", "HATE #", "SAFE #", "CHI2", "P", "SIGNIFICANT"])?;
    for s in stats {
        csv.write_record([
            s.word.clone(),
            format!("{:.0}%", s.p_hate * 100.0),
            s.documents().to_string(),
            s.count_hate.to_string(),
            s.count_safe.to_string(),
            format!("{:.4}", s.chi2),
            format!("{:.3e}", s.p_value),
            s.significant.to_string(),
        ])?;
    }
    csv.flush()
}

pub fn keywords_table(stats: &[KeywordStat]) -> String {
    let width = stats.iter().map(|s| s.word.chars().count()).max().unwrap_or(0).max(7);
    let mut out = format!("{:<width$}  {:>6}  {:>7}  {:>10}\n", "KEYWORD", "HATE %", "#", "CHI2");
    for s in stats {
        let _ = writeln!(
            out,
            "{:<width$}  {:>5.0}%  {:>7}  {:>10.2}{}",
            s.word,
            s.p_hate * 100.0,
            s.documents(),
            s.chi2,
            if s.significant { "" } else { "  (n.s.)" }
        );
    }
    out
}

fn ranked(branches: &std::collections::BTreeMap<String, Branch>) -> Vec<(&String, &Branch)> {
    let mut v: Vec<_> = branches.iter().collect();
    v.sort_by(|a, b| b.1.count.cmp(&a.1.count).then(a.0.cmp(b.0)));
    v
}

fn tree_lines(out: &mut String, branches: &std::collections::BTreeMap<String, Branch>, indent: usize) {
    for (token, branch) in ranked(branches) {
        let _ = writeln!(out, "{:indent$}{token} ({})", "", branch.count, indent = indent * 2);
        tree_lines(out, &branch.children, indent + 1);
    }
}

/// The keyword on the first line, then one indented line per branch,
/// heaviest first.
pub fn word_tree_text(tree: &WordTree) -> String {
    let mut out = format!("{} ({})\n", tree.keyword, tree.count);
    tree_lines(&mut out, &tree.branches, 1);
    out
}

/// Reads `src,dst,kind` rows. A first row whose kind column is not an edge
/// kind is taken as a header.
pub fn read_edges<R: Read>(reader: R) -> (Vec<RawEdge>, Vec<RowError>) {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let (mut edges, mut errors) = (Vec::new(), Vec::new());
    for (i, row) in csv.records().enumerate() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError { line, reason: e.to_string() });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            errors.push(RowError { line, reason: format!("expected 3 columns, found {}", row.len()) });
            continue;
        }
        match row[2].parse::<EdgeKind>() {
            Ok(kind) => edges.push(RawEdge::new(&row[0], &row[1], kind)),
            Err(_) if i == 0 => {}
            Err(_) => errors.push(RowError { line, reason: format!("unknown edge kind {:?}", &row[2]) }),
        }
    }
    (edges, errors)
}

/// Reads `name[,place]` rows; a one-column row maps the name to itself.
/// Blank names are skipped.
pub fn read_gazetteer<R: Read>(reader: R) -> io::Result<Vec<(String, String)>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in csv.records() {
        let row = row?;
        let name = row.get(0).unwrap_or_default().trim();
        if name.is_empty() {
            continue;
        }
        let place = row.get(1).map(str::trim).filter(|p| !p.is_empty()).unwrap_or(name);
        out.push((name.to_string(), place.to_string()));
    }
    Ok(out)
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: node size from centrality, highlighted nodes filled
/// black with white labels, edge pen width from weight. Knows edges are
/// drawn without arrowheads.
pub fn influencers_dot(graph: &InfluencerGraph) -> String {
    let mut out = String::from("digraph influencers {\n  node [shape=ellipse, style=filled, fillcolor=white, fontcolor=black];\n");
    for n in &graph.nodes {
        let _ = write!(
            out,
            "  {} [width={:.3}, fontsize={:.1}",
            dot_id(&n.name),
            0.5 + 1.5 * n.size,
            10.0 + 14.0 * n.size
        );
        if n.highlighted {
            out.push_str(", fillcolor=black, fontcolor=white");
        }
        out.push_str("];\n");
    }
    for e in &graph.edges {
        let _ = write!(out, "  {} -> {} [penwidth={:.3}", dot_id(&e.src), dot_id(&e.dst), 1.0 + 4.0 * e.width);
        if !e.kind.is_directed() {
            out.push_str(", dir=none");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct JsonNode<'a> {
    name: &'a str,
    score: f64,
    highlighted: bool,
    size: f64,
}

#[derive(Serialize)]
struct JsonEdge<'a> {
    src: &'a str,
    dst: &'a str,
    kind: EdgeKind,
    weight: u64,
    width: f64,
}

#[derive(Serialize)]
struct JsonGraph<'a> {
    nodes: Vec<JsonNode<'a>>,
    edges: Vec<JsonEdge<'a>>,
}

pub fn influencers_json(graph: &InfluencerGraph) -> serde_json::Value {
    let doc = JsonGraph {
        nodes: graph
            .nodes
            .iter()
            .map(|n| JsonNode { name: &n.name, score: n.centrality, highlighted: n.highlighted, size: n.size })
            .collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| JsonEdge { src: &e.src, dst: &e.dst, kind: e.kind, weight: e.weight, width: e.width })
            .collect(),
    };
    serde_json::to_value(doc).expect("graph serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tripwire_core::graph::{InfluencerEdge, InfluencerNode};
    use tripwire_core::keywords::{word_tree, Direction};
    use tripwire_core::{Corpus, DocumentRecord, Label};

    #[test]
    fn edges_with_header_and_errors() {
        let (edges, errors) = read_edges("src,dst,kind\na,b,cites\n@c,d,KNOWS\nx,y,likes\nshort,row\n".as_bytes());
        assert_eq!(edges, [RawEdge::new("a", "b", EdgeKind::Cites), RawEdge::new("@c", "d", EdgeKind::Knows)]);
        assert_eq!(errors.iter().map(|e| e.line).collect::<Vec<_>>(), [4, 5]);
    }

    #[test]
    fn gazetteer_rows() {
        let g = read_gazetteer("Raqqa\nar-Raqqah, Raqqa\n,\n".as_bytes()).unwrap();
        assert_eq!(g, [("Raqqa".into(), "Raqqa".into()), ("ar-Raqqah".into(), "Raqqa".into())]);
    }

    #[test]
    fn word_tree_rendering() {
        let corpus = Corpus::from_records(vec![
            DocumentRecord::new(1, "a", "die in your rage kuffar", Label::Hate),
            DocumentRecord::new(2, "a", "rage !", Label::Hate),
            DocumentRecord::new(3, "a", "rage kuffar", Label::Hate),
        ])
        .unwrap();
        let tree = word_tree(&corpus, "rage", Direction::Right, 1).unwrap();
        assert_eq!(word_tree_text(&tree), "rage (3)\n  kuffar (2)\n  ! (1)\n");
    }

    #[test]
    fn dot_marks_highlighted_nodes() {
        let g = InfluencerGraph {
            nodes: vec![
                InfluencerNode { name: "hub".into(), centrality: 1.0, highlighted: true, size: 1.0 },
                InfluencerNode { name: "q\"x".into(), centrality: 0.4, highlighted: false, size: 0.4 },
            ],
            edges: vec![InfluencerEdge { src: "q\"x".into(), dst: "hub".into(), kind: EdgeKind::Knows, weight: 2, width: 1.0 }],
        };
        let dot = influencers_dot(&g);
        assert!(dot.contains("\"hub\" [width=2.000, fontsize=24.0, fillcolor=black, fontcolor=white];"));
        assert!(dot.contains("\"q\\\"x\" -> \"hub\" [penwidth=5.000, dir=none];"));
        let json = influencers_json(&g);
        assert_eq!(json["nodes"][0]["score"], 1.0);
        assert_eq!(json["edges"][0]["kind"], "knows");
    }
}
