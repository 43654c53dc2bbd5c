use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use bfs2d::bench::{run_experiment, BenchError, GraphSource, RunConfig};
use bfs2d::bfs::{HeuristicParams, Mode};
use bfs2d::exec::Backend;
use bfs2d::graph::Datastructure;
use bfs2d::rmat::EdgeFormat;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Emit {
    Json,
    Csv,
}

/// Distributed 2D BFS on a simulated process grid.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// R-MAT scale (log2 of the vertex count).
    #[arg(long, default_value_t = 10, conflicts_with = "graph")]
    scale: u32,
    /// R-MAT average degree (edges per vertex before symmetrization).
    #[arg(long, default_value_t = 16)]
    degree: u64,
    /// Read the graph from an edge-list file instead of generating it.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Edge-list file format.
    #[arg(long, default_value = "text", value_parser = parse::<EdgeFormat>)]
    format: EdgeFormat,
    #[arg(long, default_value_t = 2)]
    pr: usize,
    #[arg(long, default_value_t = 2)]
    pc: usize,
    /// Total rank count; must equal pr * pc.
    #[arg(long)]
    ranks: Option<usize>,
    /// td, bu, or dir.
    #[arg(long, default_value = "dir", value_parser = parse::<Mode>)]
    mode: Mode,
    /// csr or dcsc.
    #[arg(long, default_value = "dcsc", value_parser = parse::<Datastructure>)]
    ds: Datastructure,
    /// Number of distinct random sources.
    #[arg(long, default_value_t = 16)]
    sources: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 14.0)]
    alpha: f64,
    #[arg(long, default_value_t = 24.0)]
    beta: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Emit::Json)]
    emit: Emit,
    /// Compare measured traffic with the closed-form model.
    #[arg(long)]
    compare_model: bool,
    /// Report index-array sizes per rank.
    #[arg(long)]
    memory_report: bool,
    /// seq or par.
    #[arg(long, default_value = "par", value_parser = parse::<Backend>)]
    backend: Backend,
    /// Leave wall time and TEPS out so output is byte-for-byte reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Relabel vertices with a seeded permutation.
    #[arg(long)]
    permute: bool,
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

impl Cli {
    fn config(&self) -> RunConfig {
        let graph = match &self.graph {
            Some(path) => GraphSource::File {
                path: path.clone(),
                format: self.format,
            },
            None => GraphSource::Rmat {
                scale: self.scale,
                degree: self.degree,
            },
        };
        RunConfig {
            graph,
            p_r: self.pr,
            p_c: self.pc,
            ranks: self.ranks,
            mode: self.mode,
            datastructure: self.ds,
            num_sources: self.sources,
            seed: self.seed,
            heuristic: HeuristicParams {
                alpha: self.alpha,
                beta: self.beta,
            },
            permute: self.permute,
            timing: !self.no_timing,
            compare_model: self.compare_model,
            memory_report: self.memory_report,
            backend: self.backend,
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let report = run_experiment(&cli.config())?;
    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match cli.emit {
        Emit::Json => out.write_all(report.to_json().as_bytes())?,
        Emit::Csv => {
            report.write_csv(&mut out)?;
            // tables go to stderr so the CSV stays machine-readable
            for r in &report.runs {
                if let Some(m) = &r.model {
                    eprintln!("source {}\n{}", r.source, m.to_table());
                }
            }
            if let Some(mem) = &report.memory {
                eprint!("{}", mem.to_table());
            }
        }
    }
    out.flush()?;
    if let Some(h) = report.harmonic_mean_teps {
        eprintln!("harmonic mean TEPS: {h:.4e}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<BenchError>() {
                Some(BenchError::Validation { .. }) => ExitCode::from(3),
                Some(BenchError::Config(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
