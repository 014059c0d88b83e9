//! Run configuration and stage orchestration.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::complexity::{self, ComplexityError, EciVector, LogRcaMatrix, RcaMatrix};
use crate::dea::{self, DeaError, DeaInstance, ReprResult, UnitSolve};
use crate::ingest::{self, AnalysisPanel, DropEntry, EnvPolicy, IngestError, MetadataTable, ProductClass};
use crate::networks::{
    self, BenchmarkConfig, BenchmarkNetwork, GroupStats, ImprovementSummary, NetworkError, SimilarityNetwork,
    ThresholdSpec,
};
use crate::similarity::{self, CorrelationMatrix, SimilarityError, SimilarityVectors};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EciSource {
    /// Eigenvector method on the panel's trade matrix.
    Compute,
    /// `country,eci` CSV.
    ExternalFile { file: PathBuf },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReprScale {
    #[default]
    Raw,
    MinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub exports: PathBuf,
    pub environment: PathBuf,
    pub income_groups: PathBuf,
    /// Defaults to SITC-section classification when absent.
    #[serde(default)]
    pub product_classes: Option<PathBuf>,
    pub eci: EciSource,
    #[serde(default)]
    pub threshold: ThresholdSpec,
    #[serde(default)]
    pub benchmark: BenchmarkConfig,
    #[serde(default)]
    pub repr_scale: ReprScale,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: Box<toml::de::Error> },
    #[error("input file not found: {0}")]
    MissingPath(String),
    #[error("{0}")]
    Invalid(String),
}

impl RunConfig {
    /// Parses a TOML config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_relative_to(base);
        Ok(cfg)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.exports);
        fix(&mut self.environment);
        fix(&mut self.income_groups);
        if let Some(p) = &mut self.product_classes {
            fix(p);
        }
        if let EciSource::ExternalFile { file } = &mut self.eci {
            fix(file);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut paths = vec![&self.exports, &self.environment, &self.income_groups];
        paths.extend(&self.product_classes);
        if let EciSource::ExternalFile { file } = &self.eci {
            paths.push(file);
        }
        for p in paths {
            if !p.is_file() {
                return Err(ConfigError::MissingPath(p.display().to_string()));
            }
        }
        match self.threshold {
            ThresholdSpec::Fixed(t) if t.is_nan() => return Err(ConfigError::Invalid("threshold is NaN".into())),
            ThresholdSpec::TargetDegree(d) if !(d.is_finite() && d >= 0.0) => {
                return Err(ConfigError::Invalid(format!("target degree {d} must be finite and ≥ 0")))
            }
            _ => {}
        }
        if self.benchmark.max_partners == 0 {
            return Err(ConfigError::Invalid("benchmark.max_partners must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Config,
    Ingest,
    Complexity,
    Dea,
    Similarity,
    Networks,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Complexity => "complexity",
            Stage::Dea => "dea",
            Stage::Similarity => "similarity",
            Stage::Networks => "networks",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Complexity(#[from] ComplexityError),
    #[error(transparent)]
    Dea(#[from] DeaError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("cannot write {path}: {source}")]
    UnwritableDirectory { path: String, source: std::io::Error },
}

#[derive(Debug, Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<StageError>) -> Self {
        Self { stage, source: source.into() }
    }

    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match &self.source {
            StageError::Complexity(ComplexityError::ZeroVariance { .. } | ComplexityError::DegenerateMembership { .. })
            | StageError::Dea(DeaError::Solver { .. } | DeaError::NotOptimal { .. })
            | StageError::Similarity(SimilarityError::ZeroVariance(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

fn read_input(path: &Path) -> Result<(Vec<u8>, InputDigest), IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let digest = InputDigest {
        path: path.display().to_string(),
        bytes: bytes.len(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    Ok((bytes, digest))
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub panel: AnalysisPanel,
    pub classes: BTreeMap<String, ProductClass>,
    pub export_countries: usize,
    pub environment_countries: usize,
    pub digests: BTreeMap<String, InputDigest>,
}

pub fn ingest_stage(cfg: &RunConfig) -> Result<Ingested, PipelineError> {
    let err = |e: IngestError| PipelineError::new(Stage::Ingest, e);
    let mut digests = BTreeMap::new();

    let (bytes, d) = read_input(&cfg.exports).map_err(err)?;
    digests.insert("exports".to_string(), d);
    let exports = ingest::load_exports(&bytes[..]).map_err(err)?;

    let (bytes, d) = read_input(&cfg.environment).map_err(err)?;
    digests.insert("environment".to_string(), d);
    let env = ingest::load_environment_with(&bytes[..], EnvPolicy::DropInvalid).map_err(err)?;

    let (bytes, d) = read_input(&cfg.income_groups).map_err(err)?;
    digests.insert("income_groups".to_string(), d);
    let income_groups = ingest::load_income_groups(&bytes[..]).map_err(err)?;

    let product_classes = match &cfg.product_classes {
        Some(p) => {
            let (bytes, d) = read_input(p).map_err(err)?;
            digests.insert("product_classes".to_string(), d);
            ingest::load_product_classes(&bytes[..]).map_err(err)?
        }
        None => BTreeMap::new(),
    };

    let meta = MetadataTable { income_groups, product_classes };
    let panel = ingest::build_panel(&exports, &env, &meta).map_err(err)?;
    let classes = if cfg.product_classes.is_some() {
        meta.product_classes
    } else {
        MetadataTable::default_classification(panel.trade.products.iter().map(String::as_str))
    };
    Ok(Ingested {
        export_countries: exports.countries().len(),
        environment_countries: env.len() + env.rejected().len(),
        panel,
        classes,
        digests,
    })
}

#[derive(Debug, Clone)]
pub struct Complexity {
    pub rca: RcaMatrix,
    pub log_rca: LogRcaMatrix,
    /// Present in compute mode.
    pub eci_vector: Option<EciVector>,
    /// ECI for every panel country that has one.
    pub eci: BTreeMap<String, f64>,
    /// Panel countries without an ECI value.
    pub dropped: Vec<DropEntry>,
    pub eci_file_digest: Option<InputDigest>,
}

pub fn complexity_stage(cfg: &RunConfig, ing: &Ingested) -> Result<Complexity, PipelineError> {
    let err = |e: ComplexityError| PipelineError::new(Stage::Complexity, e);
    let rca = complexity::compute_rca(&ing.panel.trade).map_err(err)?;
    let log_rca = complexity::log_rca(&rca).map_err(err)?;
    let mut eci_file_digest = None;
    let (eci_vector, all, reason) = match &cfg.eci {
        EciSource::Compute => {
            let v = complexity::compute_eci(&rca).map_err(err)?;
            let m = v.to_map();
            (Some(v), m, "no revealed comparative advantage in any product")
        }
        EciSource::ExternalFile { file } => {
            let (bytes, d) = read_input(file).map_err(|e| PipelineError::new(Stage::Complexity, e))?;
            eci_file_digest = Some(d);
            let m = complexity::load_eci(&bytes[..]).map_err(err)?;
            (None, m, "missing from ECI file")
        }
    };
    let mut eci = BTreeMap::new();
    let mut dropped = Vec::new();
    for c in &ing.panel.countries {
        match all.get(c) {
            Some(&v) => {
                eci.insert(c.clone(), v);
            }
            None => dropped.push(DropEntry::new(c.clone(), reason)),
        }
    }
    Ok(Complexity { rca, log_rca, eci_vector, eci, dropped, eci_file_digest })
}

#[derive(Debug, Clone)]
pub struct Scored {
    /// Sorted by rank.
    pub ranking: Vec<ReprResult>,
    pub stats: Vec<UnitSolve>,
}

/// DEA instance with CO₂ and footprint per capita as inputs and shifted ECI as output.
pub fn repr_instance(panel: &AnalysisPanel, eci: &BTreeMap<String, f64>) -> Result<DeaInstance, DeaError> {
    let units: Vec<String> = panel.countries.iter().filter(|c| eci.contains_key(*c)).cloned().collect();
    let raw: Vec<f64> = units.iter().map(|c| eci[c]).collect();
    let shifted = dea::translate_outputs(&raw)?;
    let inputs: Vec<Vec<f64>> = units
        .iter()
        .map(|c| {
            let i = panel.index_of(c).expect("unit from panel");
            vec![panel.co2_pc[i], panel.ef_pc[i]]
        })
        .collect();
    let outputs: Vec<Vec<f64>> = shifted.into_iter().map(|y| vec![y]).collect();
    DeaInstance::from_rows(units, &inputs, &outputs)
}

pub fn dea_stage(cfg: &RunConfig, ing: &Ingested, cx: &Complexity) -> Result<Scored, PipelineError> {
    let err = |e: DeaError| PipelineError::new(Stage::Dea, e);
    let instance = repr_instance(&ing.panel, &cx.eci).map_err(err)?;
    let (mut ranking, stats) = dea::score_all_with_stats(&instance).map_err(err)?;
    if cfg.repr_scale == ReprScale::MinMax {
        ranking = dea::min_max_normalize(&ranking);
    }
    Ok(Scored { ranking, stats })
}

#[derive(Debug, Clone)]
pub struct Similar {
    pub vectors: SimilarityVectors,
    pub corr: CorrelationMatrix,
}

pub fn similarity_stage(ing: &Ingested, cx: &Complexity) -> Result<Similar, PipelineError> {
    let err = |e: SimilarityError| PipelineError::new(Stage::Similarity, e);
    let vectors = similarity::build_similarity_vectors(&cx.log_rca, &ing.classes).map_err(err)?;
    let corr = similarity::correlation_matrix(&vectors).map_err(err)?;
    Ok(Similar { vectors, corr })
}

#[derive(Debug, Clone)]
pub struct Networks {
    pub similarity: SimilarityNetwork,
    pub benchmark: BenchmarkNetwork,
    pub improvement: ImprovementSummary,
    pub groups: GroupStats,
}

pub fn network_stage(
    cfg: &RunConfig,
    ing: &Ingested,
    cx: &Complexity,
    scored: &Scored,
    sim: &Similar,
) -> Result<Networks, PipelineError> {
    let err = |e: NetworkError| PipelineError::new(Stage::Networks, e);
    let similarity = networks::threshold_network(&sim.corr, cfg.threshold).map_err(err)?;
    let ranked: BTreeMap<&str, ()> = scored.ranking.iter().map(|r| (r.country.as_str(), ())).collect();
    let corr = sim.corr.restrict(|c| ranked.contains_key(c));
    let benchmark = networks::benchmark_network(&corr, &scored.ranking, &cfg.benchmark).map_err(err)?;
    let improvement = networks::improvement_potential(&benchmark, &scored.ranking).map_err(err)?;
    let groups = networks::group_stats(&ing.panel, &cx.eci, &scored.ranking);
    Ok(Networks { similarity, benchmark, improvement, groups })
}

#[derive(Debug, Clone)]
pub struct PipelineResults {
    pub ingested: Ingested,
    pub complexity: Complexity,
    pub scored: Scored,
    pub similar: Similar,
    pub networks: Networks,
}

impl PipelineResults {
    /// Pre-panel drops followed by panel countries that could not be ranked.
    pub fn drop_report(&self) -> Vec<DropEntry> {
        let mut all = self.ingested.panel.dropped.clone();
        all.extend(self.complexity.dropped.iter().cloned());
        all
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageCounts {
    pub export_countries: usize,
    pub environment_countries: usize,
    pub panel_countries: usize,
    pub panel_products: usize,
    pub eci_countries: usize,
    pub ranked_countries: usize,
    pub similarity_countries: usize,
    pub similarity_products: usize,
    pub similarity_edges: usize,
    pub benchmark_edges: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, InputDigest>,
    pub counts: StageCounts,
    /// `None` when only the spanning tree is kept.
    pub threshold: Option<f64>,
    pub average_degree: f64,
    pub similarity_excluded: Vec<DropEntry>,
    pub timing_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(cfg: &RunConfig, r: &PipelineResults, timing_ms: BTreeMap<String, f64>) -> Self {
        let counts = StageCounts {
            export_countries: r.ingested.export_countries,
            environment_countries: r.ingested.environment_countries,
            panel_countries: r.ingested.panel.len(),
            panel_products: r.ingested.panel.trade.products.len(),
            eci_countries: r.complexity.eci.len(),
            ranked_countries: r.scored.ranking.len(),
            similarity_countries: r.similar.corr.len(),
            similarity_products: r.similar.vectors.products.len(),
            similarity_edges: r.networks.similarity.edges.len(),
            benchmark_edges: r.networks.benchmark.edges.len(),
            dropped: r.drop_report().len(),
        };
        let mut inputs = r.ingested.digests.clone();
        if let Some(d) = &r.complexity.eci_file_digest {
            inputs.insert("eci".to_string(), d.clone());
        }
        let t = r.networks.similarity.threshold;
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            inputs,
            counts,
            threshold: t.is_finite().then_some(t),
            average_degree: r.networks.similarity.average_degree(),
            similarity_excluded: r.similar.vectors.dropped.clone(),
            timing_ms,
        }
    }
}

/// Runs every stage in memory; `timing_ms` receives per-stage wall time.
pub fn compute_all(cfg: &RunConfig, timing_ms: &mut BTreeMap<String, f64>) -> Result<PipelineResults, PipelineError> {
    cfg.validate().map_err(|e| PipelineError::new(Stage::Config, e))?;
    let mut clock = Instant::now();
    let mut lap = |name: Stage, timing_ms: &mut BTreeMap<String, f64>| {
        timing_ms.insert(name.to_string(), clock.elapsed().as_secs_f64() * 1e3);
        clock = Instant::now();
    };
    let ingested = ingest_stage(cfg)?;
    lap(Stage::Ingest, timing_ms);
    let complexity = complexity_stage(cfg, &ingested)?;
    lap(Stage::Complexity, timing_ms);
    let scored = dea_stage(cfg, &ingested, &complexity)?;
    lap(Stage::Dea, timing_ms);
    let similar = similarity_stage(&ingested, &complexity)?;
    lap(Stage::Similarity, timing_ms);
    let networks = network_stage(cfg, &ingested, &complexity, &scored, &similar)?;
    lap(Stage::Networks, timing_ms);
    Ok(PipelineResults { ingested, complexity, scored, similar, networks })
}

/// Full pipeline: compute, write every artifact into `cfg.output_dir`, return the manifest.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunManifest, PipelineError> {
    let mut timing = BTreeMap::new();
    let results = compute_all(cfg, &mut timing)?;
    let start = Instant::now();
    crate::report::emit_outputs(&results, &cfg.output_dir)?;
    timing.insert(Stage::Output.to_string(), start.elapsed().as_secs_f64() * 1e3);
    let manifest = RunManifest::new(cfg, &results, timing);
    crate::report::write_manifest(&manifest, &cfg.output_dir)?;
    Ok(manifest)
}
