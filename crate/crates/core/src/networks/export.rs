//! GraphML, DOT and pair-table writers.

use std::collections::BTreeMap;
use std::io::{self, Write};

use super::{BenchmarkNetwork, SimilarityNetwork};
use crate::ingest::IncomeGroup;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeAttrs {
    pub repr: Option<f64>,
    pub eci: Option<f64>,
    pub income_group: Option<IncomeGroup>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub rho: f64,
    pub delta_repr: Option<f64>,
    pub kind: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub id: String,
    pub directed: bool,
    pub nodes: Vec<(String, NodeAttrs)>,
    pub edges: Vec<GraphEdge>,
}

fn node_list(nodes: &[String], attrs: &BTreeMap<String, NodeAttrs>) -> Vec<(String, NodeAttrs)> {
    nodes
        .iter()
        .map(|n| (n.clone(), attrs.get(n).cloned().unwrap_or_default()))
        .collect()
}

/// Orients an undirected pair from the lower-scoring country to the
/// higher-scoring one; unscored pairs keep label order.
fn orient<'a>(a: &'a str, b: &'a str, attrs: &BTreeMap<String, NodeAttrs>) -> (&'a str, &'a str, Option<f64>) {
    let score = |c: &str| attrs.get(c).and_then(|n| n.repr);
    match (score(a), score(b)) {
        (Some(ra), Some(rb)) if rb >= ra => (a, b, Some(rb - ra)),
        (Some(ra), Some(rb)) => (b, a, Some(ra - rb)),
        _ => (a, b, None),
    }
}

pub fn similarity_graph(net: &SimilarityNetwork, attrs: &BTreeMap<String, NodeAttrs>) -> Graph {
    let edges = net
        .edges
        .iter()
        .map(|e| {
            let (s, t, d) = orient(&e.a, &e.b, attrs);
            GraphEdge {
                source: s.to_string(),
                target: t.to_string(),
                rho: e.rho,
                delta_repr: d,
                kind: match e.kind {
                    super::EdgeKind::Tree => "tree",
                    super::EdgeKind::Threshold => "threshold",
                },
            }
        })
        .collect();
    Graph { id: "similarity".into(), directed: false, nodes: node_list(&net.nodes, attrs), edges }
}

pub fn benchmark_graph(net: &BenchmarkNetwork, attrs: &BTreeMap<String, NodeAttrs>) -> Graph {
    let edges = net
        .edges
        .iter()
        .map(|e| GraphEdge {
            source: e.focal.clone(),
            target: e.partner.clone(),
            rho: e.rho,
            delta_repr: Some(e.delta_repr),
            kind: "benchmark",
        })
        .collect();
    Graph { id: "benchmark".into(), directed: true, nodes: node_list(&net.nodes, attrs), edges }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

pub fn write_graphml<W: Write>(g: &Graph, mut out: W) -> io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(out, r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#)?;
    for (id, target, name, ty) in [
        ("repr", "node", "repr", "double"),
        ("eci", "node", "eci", "double"),
        ("income_group", "node", "income_group", "string"),
        ("rho", "edge", "rho", "double"),
        ("delta_repr", "edge", "delta_repr", "double"),
        ("edge_kind", "edge", "edge_kind", "string"),
    ] {
        writeln!(out, r#"  <key id="{id}" for="{target}" attr.name="{name}" attr.type="{ty}"/>"#)?;
    }
    let default = if g.directed { "directed" } else { "undirected" };
    writeln!(out, r#"  <graph id="{}" edgedefault="{default}">"#, xml_escape(&g.id))?;
    for (id, a) in &g.nodes {
        writeln!(out, r#"    <node id="{}">"#, xml_escape(id))?;
        if let Some(v) = a.repr {
            writeln!(out, r#"      <data key="repr">{}</data>"#, f4(v))?;
        }
        if let Some(v) = a.eci {
            writeln!(out, r#"      <data key="eci">{}</data>"#, f4(v))?;
        }
        if let Some(v) = a.income_group {
            writeln!(out, r#"      <data key="income_group">{}</data>"#, v.as_str())?;
        }
        writeln!(out, "    </node>")?;
    }
    for (k, e) in g.edges.iter().enumerate() {
        writeln!(
            out,
            r#"    <edge id="e{k}" source="{}" target="{}">"#,
            xml_escape(&e.source),
            xml_escape(&e.target)
        )?;
        writeln!(out, r#"      <data key="rho">{}</data>"#, f4(e.rho))?;
        if let Some(d) = e.delta_repr {
            writeln!(out, r#"      <data key="delta_repr">{}</data>"#, f4(d))?;
        }
        writeln!(out, r#"      <data key="edge_kind">{}</data>"#, e.kind)?;
        writeln!(out, "    </edge>")?;
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")
}

pub fn write_dot<W: Write>(g: &Graph, mut out: W) -> io::Result<()> {
    let (kw, arrow) = if g.directed { ("digraph", "->") } else { ("graph", "--") };
    writeln!(out, "{kw} \"{}\" {{", dot_escape(&g.id))?;
    for (id, a) in &g.nodes {
        let mut parts = Vec::new();
        if let Some(v) = a.repr {
            parts.push(format!("repr={}", f4(v)));
        }
        if let Some(v) = a.eci {
            parts.push(format!("eci={}", f4(v)));
        }
        if let Some(v) = a.income_group {
            parts.push(format!("income_group=\"{}\"", v.as_str()));
        }
        writeln!(out, "  \"{}\" [{}];", dot_escape(id), parts.join(", "))?;
    }
    for e in &g.edges {
        let mut parts = vec![format!("rho={}", f4(e.rho))];
        if let Some(d) = e.delta_repr {
            parts.push(format!("delta_repr={}", f4(d)));
        }
        parts.push(format!("edge_kind=\"{}\"", e.kind));
        writeln!(
            out,
            "  \"{}\" {arrow} \"{}\" [{}];",
            dot_escape(&e.source),
            dot_escape(&e.target),
            parts.join(", ")
        )?;
    }
    writeln!(out, "}}")
}

const PAIR_HEADER: [&str; 6] = ["focal", "partner", "rho", "delta_repr", "repr_focal", "repr_partner"];

fn opt4(v: Option<f64>) -> String {
    v.map(f4).unwrap_or_default()
}

/// One row per edge: `focal,partner,rho,delta_repr,repr_focal,repr_partner`.
pub fn write_pairs<W: Write>(g: &Graph, out: W) -> csv::Result<()> {
    let repr: BTreeMap<&str, Option<f64>> = g.nodes.iter().map(|(n, a)| (n.as_str(), a.repr)).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PAIR_HEADER)?;
    for e in &g.edges {
        w.write_record([
            e.source.clone(),
            e.target.clone(),
            f4(e.rho),
            opt4(e.delta_repr),
            opt4(repr.get(e.source.as_str()).copied().flatten()),
            opt4(repr.get(e.target.as_str()).copied().flatten()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
