use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecorank::networks::{PartnerRule, ThresholdSpec};
use ecorank::pipeline::{self, EciSource, PipelineError, RunConfig, Stage};
use ecorank::report;

#[derive(Parser)]
#[command(name = "ecorank", version, about = "Eco-efficiency ranking and benchmark networks from export data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate inputs and write the aligned panel plus drop report
    Ingest(Overrides),
    /// Compute or load ECI
    Eci(Overrides),
    /// Score and rank every country
    Repr(Overrides),
    /// Export-similarity correlation matrix
    Similarity(Overrides),
    /// Similarity network (spanning tree plus threshold edges)
    Network(Overrides),
    /// Benchmark-partner network and improvement potential
    Benchmark(Overrides),
    /// All analytical outputs without the manifest
    Report(Overrides),
    /// Full pipeline with manifest
    Run(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed correlation threshold
    #[arg(long, conflicts_with = "target_degree")]
    threshold: Option<f64>,
    /// Target average degree for the similarity network
    #[arg(long)]
    target_degree: Option<f64>,
    /// max-gain or max-correlation
    #[arg(long)]
    partner_rule: Option<PartnerRule>,
    /// External ECI file (`country,eci`); switches ECI mode to external-file
    #[arg(long)]
    eci_file: Option<PathBuf>,
}

impl Overrides {
    fn config(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = RunConfig::load(&self.config).map_err(|e| PipelineError::new(Stage::Config, e))?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(t) = self.threshold {
            cfg.threshold = ThresholdSpec::Fixed(t);
        }
        if let Some(d) = self.target_degree {
            cfg.threshold = ThresholdSpec::TargetDegree(d);
        }
        if let Some(rule) = self.partner_rule {
            cfg.benchmark.rule = rule;
        }
        if let Some(file) = &self.eci_file {
            cfg.eci = EciSource::ExternalFile { file: file.clone() };
        }
        cfg.validate().map_err(|e| PipelineError::new(Stage::Config, e))?;
        Ok(cfg)
    }
}

fn execute(cmd: Command) -> Result<(), PipelineError> {
    use Command::*;
    let (Ingest(o) | Eci(o) | Repr(o) | Similarity(o) | Network(o) | Benchmark(o) | Report(o) | Run(o)) = &cmd;
    let cfg = o.config()?;
    let dir = &cfg.output_dir;

    match cmd {
        Ingest(_) => {
            let ing = pipeline::ingest_stage(&cfg)?;
            report::write_ingest_outputs(&ing.panel, dir)?;
            println!("panel: {} countries, {} products", ing.panel.len(), ing.panel.trade.products.len());
        }
        Eci(_) => {
            let ing = pipeline::ingest_stage(&cfg)?;
            let cx = pipeline::complexity_stage(&cfg, &ing)?;
            report::write_eci_outputs(&cx, dir)?;
            let mut drops = ing.panel.dropped.clone();
            drops.extend(cx.dropped.iter().cloned());
            report::write_drop_report(&drops, dir)?;
            println!("ECI for {} countries", cx.eci.len());
        }
        Repr(_) => {
            let ing = pipeline::ingest_stage(&cfg)?;
            let cx = pipeline::complexity_stage(&cfg, &ing)?;
            let scored = pipeline::dea_stage(&cfg, &ing, &cx)?;
            report::write_repr_outputs(&ing.panel, &cx, &scored, dir)?;
            println!("ranked {} countries", scored.ranking.len());
        }
        Similarity(_) => {
            let ing = pipeline::ingest_stage(&cfg)?;
            let cx = pipeline::complexity_stage(&cfg, &ing)?;
            let sim = pipeline::similarity_stage(&ing, &cx)?;
            report::write_similarity_outputs(&sim, dir)?;
            println!("{} countries over {} non-primary products", sim.corr.len(), sim.vectors.products.len());
        }
        Network(_) | Benchmark(_) | Report(_) => {
            let r = pipeline::compute_all(&cfg, &mut BTreeMap::new())?;
            let attrs = report::node_attrs(&r.ingested.panel, &r.complexity.eci, &r.scored.ranking);
            let nets = &r.networks;
            match cmd {
                Network(_) => {
                    report::write_network_outputs(&nets.similarity, &attrs, dir)?;
                    println!(
                        "{} edges, average degree {:.4}",
                        nets.similarity.edges.len(),
                        nets.similarity.average_degree()
                    );
                }
                Benchmark(_) => {
                    report::write_benchmark_outputs(&nets.benchmark, &nets.improvement, &attrs, dir)?;
                    println!(
                        "{} benchmark links; mean gain {:.4} absolute, {:.4} relative",
                        nets.benchmark.edges.len(),
                        nets.improvement.mean_absolute_gain,
                        nets.improvement.mean_relative_gain
                    );
                }
                _ => report::emit_outputs(&r, dir)?,
            }
        }
        Run(_) => {
            let m = pipeline::run_pipeline(&cfg)?;
            println!(
                "ranked {} of {} panel countries; outputs in {}",
                m.counts.ranked_countries,
                m.counts.panel_countries,
                dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
