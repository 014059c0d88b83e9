//! Artifact writers for each pipeline stage.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::complexity;
use crate::dea::{self, ReprResult};
use crate::ingest::{self, AnalysisPanel, DropEntry};
use crate::networks::export::{self, Graph, NodeAttrs};
use crate::networks::{BenchmarkNetwork, GroupStats, ImprovementSummary, SimilarityNetwork};
use crate::pipeline::{Complexity, PipelineError, PipelineResults, RunManifest, Scored, Similar, Stage, StageError};
use crate::similarity;

pub const RANKING_FILE: &str = "ranking.csv";
pub const RANKING_FULL_FILE: &str = "ranking_full.csv";
pub const LP_STATS_FILE: &str = "lp_stats.csv";
pub const ECI_FILE: &str = "eci.csv";
pub const CORRELATION_FILE: &str = "correlation_full.csv";
pub const PAIRS_SIMILARITY_FILE: &str = "pairs_similarity.csv";
pub const PAIRS_BENCHMARK_FILE: &str = "pairs_benchmark.csv";
pub const SIMILARITY_GRAPHML_FILE: &str = "similarity.graphml";
pub const SIMILARITY_DOT_FILE: &str = "similarity.dot";
pub const BENCHMARK_GRAPHML_FILE: &str = "benchmark.graphml";
pub const BENCHMARK_DOT_FILE: &str = "benchmark.dot";
pub const GROUP_STATS_FILE: &str = "group_stats.json";
pub const IMPROVEMENT_FILE: &str = "improvement.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Creates `dir/name`, runs `f` on a buffered writer and flushes it.
fn write_file<F, E>(dir: &Path, name: &str, f: F) -> Result<(), PipelineError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), E>,
    E: Into<io::Error>,
{
    let path = dir.join(name);
    let fail = |source: io::Error| {
        PipelineError::new(
            Stage::Output,
            StageError::UnwritableDirectory { path: path.display().to_string(), source },
        )
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let mut w = BufWriter::new(File::create(&path).map_err(fail)?);
    f(&mut w).map_err(|e| fail(e.into()))?;
    w.flush().map_err(fail)
}

/// Rounds every non-integer JSON number to 4 decimals.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or_default();
            if let Some(r) = serde_json::Number::from_f64((x * 1e4).round() / 1e4) {
                *n = r;
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_floats),
        Value::Object(m) => m.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, round: bool) -> Result<(), PipelineError> {
    write_file(dir, name, |w| -> io::Result<()> {
        let mut v = serde_json::to_value(value)?;
        if round {
            round_floats(&mut v);
        }
        serde_json::to_writer_pretty(&mut *w, &v)?;
        writeln!(w)
    })
}

pub fn write_drop_report(entries: &[DropEntry], dir: &Path) -> Result<(), PipelineError> {
    write_file(dir, ingest::DROP_REPORT_FILE, |w| ingest::write_drop_report(entries, w))
}

pub fn write_ingest_outputs(panel: &AnalysisPanel, dir: &Path) -> Result<(), PipelineError> {
    ingest::write_panel(panel, dir).map_err(|source| {
        PipelineError::new(
            Stage::Output,
            StageError::UnwritableDirectory { path: dir.display().to_string(), source },
        )
    })
}

pub fn write_eci_outputs(cx: &Complexity, dir: &Path) -> Result<(), PipelineError> {
    let rows = |w: &mut BufWriter<File>, full: bool| -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["country", "eci"])?;
        for (c, v) in &cx.eci {
            let s = if full { v.to_string() } else { format!("{v:.4}") };
            out.write_record([c.as_str(), &s])?;
        }
        out.flush()?;
        Ok(())
    };
    write_file(dir, ECI_FILE, |w| rows(w, false))?;
    if let Some(v) = &cx.eci_vector {
        write_file(dir, "eci_full.csv", |w| complexity::write_eci(v, w))?;
    }
    Ok(())
}

/// `country,eci,co2_pc,ef_pc,repr,rank` in rank order.
pub fn write_ranking<W: Write>(
    panel: &AnalysisPanel,
    eci: &BTreeMap<String, f64>,
    ranking: &[ReprResult],
    out: W,
    precision: Option<usize>,
) -> csv::Result<()> {
    let fmt = |v: f64| match precision {
        Some(p) => format!("{v:.p$}"),
        None => v.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "eci", "co2_pc", "ef_pc", "repr", "rank"])?;
    for r in ranking {
        let i = panel.index_of(&r.country).expect("ranked country in panel");
        w.write_record([
            r.country.clone(),
            fmt(eci[&r.country]),
            fmt(panel.co2_pc[i]),
            fmt(panel.ef_pc[i]),
            fmt(r.theta),
            r.rank.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_repr_outputs(
    panel: &AnalysisPanel,
    cx: &Complexity,
    scored: &Scored,
    dir: &Path,
) -> Result<(), PipelineError> {
    write_file(dir, RANKING_FILE, |w| write_ranking(panel, &cx.eci, &scored.ranking, w, Some(4)))?;
    write_file(dir, RANKING_FULL_FILE, |w| write_ranking(panel, &cx.eci, &scored.ranking, w, None))?;
    write_file(dir, LP_STATS_FILE, |w| dea::write_lp_stats(&scored.stats, w))
}

pub fn write_similarity_outputs(sim: &Similar, dir: &Path) -> Result<(), PipelineError> {
    write_file(dir, CORRELATION_FILE, |w| similarity::write_correlation_long(&sim.corr, w, None))
}

/// Node attributes for graph output.
pub fn node_attrs(panel: &AnalysisPanel, eci: &BTreeMap<String, f64>, ranking: &[ReprResult]) -> BTreeMap<String, NodeAttrs> {
    let repr: BTreeMap<&str, f64> = ranking.iter().map(|r| (r.country.as_str(), r.theta)).collect();
    panel
        .countries
        .iter()
        .zip(&panel.income)
        .map(|(c, g)| {
            let attrs = NodeAttrs {
                repr: repr.get(c.as_str()).copied(),
                eci: eci.get(c).copied(),
                income_group: *g,
            };
            (c.clone(), attrs)
        })
        .collect()
}

fn write_graph(g: &Graph, dir: &Path, graphml: &str, dot: &str, pairs: &str) -> Result<(), PipelineError> {
    write_file(dir, graphml, |w| export::write_graphml(g, w))?;
    write_file(dir, dot, |w| export::write_dot(g, w))?;
    write_file(dir, pairs, |w| export::write_pairs(g, w))
}

pub fn write_network_outputs(
    net: &SimilarityNetwork,
    attrs: &BTreeMap<String, NodeAttrs>,
    dir: &Path,
) -> Result<(), PipelineError> {
    let g = export::similarity_graph(net, attrs);
    write_graph(&g, dir, SIMILARITY_GRAPHML_FILE, SIMILARITY_DOT_FILE, PAIRS_SIMILARITY_FILE)
}

pub fn write_benchmark_outputs(
    net: &BenchmarkNetwork,
    improvement: &ImprovementSummary,
    attrs: &BTreeMap<String, NodeAttrs>,
    dir: &Path,
) -> Result<(), PipelineError> {
    let g = export::benchmark_graph(net, attrs);
    write_graph(&g, dir, BENCHMARK_GRAPHML_FILE, BENCHMARK_DOT_FILE, PAIRS_BENCHMARK_FILE)?;
    write_json(dir, IMPROVEMENT_FILE, improvement, true)
}

pub fn write_group_stats(groups: &GroupStats, dir: &Path) -> Result<(), PipelineError> {
    write_json(dir, GROUP_STATS_FILE, groups, true)
}

pub fn write_manifest(manifest: &RunManifest, dir: &Path) -> Result<(), PipelineError> {
    write_json(dir, MANIFEST_FILE, manifest, false)
}

/// Every analytical artifact except the manifest.
pub fn emit_outputs(r: &PipelineResults, dir: &Path) -> Result<(), PipelineError> {
    let panel = &r.ingested.panel;
    write_drop_report(&r.drop_report(), dir)?;
    write_eci_outputs(&r.complexity, dir)?;
    write_repr_outputs(panel, &r.complexity, &r.scored, dir)?;
    write_similarity_outputs(&r.similar, dir)?;
    let attrs = node_attrs(panel, &r.complexity.eci, &r.scored.ranking);
    write_network_outputs(&r.networks.similarity, &attrs, dir)?;
    write_benchmark_outputs(&r.networks.benchmark, &r.networks.improvement, &attrs, dir)?;
    write_group_stats(&r.networks.groups, dir)
}
