//! Experiment driver: graph construction, source sampling, validated
//! searches, TEPS, and report export.

use std::io::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bfs::{
    out_adjacency, run_search, validate_tree, BfsError, DistGraph, HeuristicParams, Mode, SearchStats, Violation,
};
use crate::costmodel::{compare_measured, ModelParams, ModelReport};
use crate::exec::Backend;
use crate::graph::{Datastructure, EdgeList};
use crate::grid::{GridError, ProcGrid};
use crate::netsim::PrimitiveKind;
use crate::rmat::{self, EdgeFormat, RmatError, RmatParams};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Rmat(#[from] RmatError),
    #[error(transparent)]
    Bfs(#[from] BfsError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("search from {source_vertex} produced an invalid tree: {violation}")]
    Validation { source_vertex: u64, violation: Violation },
    #[error("output error: {0}")]
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSource {
    Rmat { scale: u32, degree: u64 },
    File { path: PathBuf, format: EdgeFormat },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub graph: GraphSource,
    pub p_r: usize,
    pub p_c: usize,
    /// Rank count the grid must cover; defaults to `p_r * p_c`.
    pub ranks: Option<usize>,
    pub mode: Mode,
    pub datastructure: Datastructure,
    pub num_sources: usize,
    pub seed: u64,
    pub heuristic: HeuristicParams,
    /// Relabel vertices with a seeded permutation after generation.
    pub permute: bool,
    /// Record wall time and TEPS. Off makes output fully reproducible.
    pub timing: bool,
    pub compare_model: bool,
    pub memory_report: bool,
    /// Execution backend; does not affect any reported value.
    #[serde(skip)]
    pub backend: Backend,
}

impl RunConfig {
    pub fn rmat(scale: u32, degree: u64, p_r: usize, p_c: usize) -> Self {
        RunConfig {
            graph: GraphSource::Rmat { scale, degree },
            p_r,
            p_c,
            ranks: None,
            mode: Mode::DirectionOptimizing,
            datastructure: Datastructure::Dcsc,
            num_sources: 16,
            seed: 1,
            heuristic: HeuristicParams::default(),
            permute: false,
            timing: true,
            compare_model: false,
            memory_report: false,
            backend: Backend::default(),
        }
    }

    pub fn validate(&self) -> Result<ProcGrid, BenchError> {
        if let Some(r) = self.ranks {
            if r != self.p_r * self.p_c {
                return Err(BenchError::Config(format!(
                    "grid {}x{} has {} ranks, {} configured",
                    self.p_r,
                    self.p_c,
                    self.p_r * self.p_c,
                    r
                )));
            }
        }
        if self.num_sources == 0 {
            return Err(BenchError::Config("at least one source is required".into()));
        }
        if !(self.heuristic.alpha > 0.0 && self.heuristic.beta > 0.0) {
            return Err(BenchError::Config("alpha and beta must be positive".into()));
        }
        Ok(ProcGrid::new(self.p_r, self.p_c)?)
    }
}

/// Canonical undirected graph for `cfg`.
pub fn build_graph(cfg: &RunConfig) -> Result<EdgeList, BenchError> {
    let raw = match &cfg.graph {
        GraphSource::Rmat { scale, degree } => {
            let p = RmatParams::graph500(*scale, *degree, cfg.seed);
            rmat::generate(&p, cfg.backend)?
        }
        GraphSource::File { path, format } => rmat::ingest_edge_list(path, *format)?,
    };
    let raw = if cfg.permute {
        rmat::permute_vertices(&raw, cfg.seed)
    } else {
        raw
    };
    Ok(rmat::canonicalize(&raw, true))
}

/// `count` distinct non-isolated vertices, chosen by `seed`.
pub fn sample_sources(g: &EdgeList, count: usize, seed: u64) -> Result<Vec<u64>, BenchError> {
    let eligible: Vec<u64> = g
        .non_isolated()
        .iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .map(|(v, _)| v as u64)
        .collect();
    if count > eligible.len() {
        return Err(BenchError::Config(format!(
            "asked for {count} sources but only {} vertices have edges",
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    Ok(rand::seq::index::sample(&mut rng, eligible.len(), count)
        .into_iter()
        .map(|i| eligible[i])
        .collect())
}

/// `k / sum(1 / x_i)`; every value must be positive.
pub fn harmonic_mean_teps(values: &[f64]) -> Result<f64, BenchError> {
    if values.is_empty() {
        return Err(BenchError::Config("harmonic mean of no values".into()));
    }
    if let Some(bad) = values.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(BenchError::Config(format!("TEPS value {bad} is not positive")));
    }
    Ok(values.len() as f64 / values.iter().map(|x| 1.0 / x).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankMemory {
    pub rank: String,
    pub nnz: u64,
    pub csr_words: u64,
    pub dcsc_words: u64,
}

/// Index-array words per rank for both formats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryReport {
    pub selected: Datastructure,
    pub per_rank: Vec<RankMemory>,
    pub csr_total: u64,
    pub dcsc_total: u64,
}

impl MemoryReport {
    pub fn selected_total(&self) -> u64 {
        match self.selected {
            Datastructure::Csr => self.csr_total,
            Datastructure::Dcsc => self.dcsc_total,
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<8} {:>12} {:>12} {:>12}\n", "rank", "nnz", "csr", "dcsc");
        for r in &self.per_rank {
            out += &format!("{:<8} {:>12} {:>12} {:>12}\n", r.rank, r.nnz, r.csr_words, r.dcsc_words);
        }
        out += &format!(
            "{:<8} {:>12} {:>12} {:>12}\n",
            "total", "", self.csr_total, self.dcsc_total
        );
        out
    }
}

pub fn memory_report(d: &DistGraph) -> MemoryReport {
    let per_rank: Vec<RankMemory> = d
        .ranks()
        .iter()
        .map(|lg| RankMemory {
            rank: lg.coords.to_string(),
            nnz: lg.nnz(),
            csr_words: lg.block_index_words(Datastructure::Csr),
            dcsc_words: lg.block_index_words(Datastructure::Dcsc),
        })
        .collect();
    MemoryReport {
        selected: d.datastructure(),
        csr_total: per_rank.iter().map(|r| r.csr_words).sum(),
        dcsc_total: per_rank.iter().map(|r| r.dcsc_words).sum(),
        per_rank,
    }
}

/// One validated search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub source: u64,
    pub mode: Mode,
    pub depth_levels: u64,
    pub sb: u64,
    pub edges_examined: u64,
    pub words_p2p: u64,
    pub words_ag: u64,
    pub words_a2a: u64,
    pub words_allreduce: u64,
    pub size_words: u64,
    pub rounds: u64,
    pub reached: u64,
    pub seconds: Option<f64>,
    pub teps: Option<f64>,
    pub levels: Vec<crate::bfs::LevelStats>,
    pub counters: serde_json::Value,
    pub traffic_digest: String,
    pub model: Option<ModelReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub n: u64,
    /// Input edges (undirected edges counted once); the TEPS numerator.
    pub m: u64,
    pub stored_edges: u64,
    pub runs: Vec<RunRecord>,
    pub harmonic_mean_teps: Option<f64>,
    pub memory: Option<MemoryReport>,
}

#[derive(Debug, Clone, Serialize)]
struct CsvRow {
    source: u64,
    mode: Mode,
    depth_levels: u64,
    sb: u64,
    edges_examined: u64,
    words_p2p: u64,
    words_ag: u64,
    words_a2a: u64,
    seconds: Option<f64>,
    teps: Option<f64>,
}

impl RunReport {
    /// Mean of edges examined, harmonic over runs.
    pub fn harmonic_mean_edges_examined(&self) -> f64 {
        let k = self.runs.len() as f64;
        k / self
            .runs
            .iter()
            .map(|r| 1.0 / r.edges_examined.max(1) as f64)
            .sum::<f64>()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.runs {
            out.serialize(CsvRow {
                source: r.source,
                mode: r.mode,
                depth_levels: r.depth_levels,
                sb: r.sb,
                edges_examined: r.edges_examined,
                words_p2p: r.words_p2p,
                words_ag: r.words_ag,
                words_a2a: r.words_a2a,
                seconds: r.seconds,
                teps: r.teps,
            })
            .map_err(|e| BenchError::Output(e.to_string()))?;
        }
        out.flush().map_err(|e| BenchError::Output(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn record(stats: &SearchStats, m: u64, timing: bool, model: Option<ModelReport>) -> RunRecord {
    let seconds = timing.then_some(stats.seconds);
    RunRecord {
        source: stats.source,
        mode: stats.mode,
        depth_levels: stats.depth(),
        sb: stats.s_b(),
        edges_examined: stats.edges_examined(),
        words_p2p: stats.words(PrimitiveKind::P2p),
        words_ag: stats.words(PrimitiveKind::Allgather),
        words_a2a: stats.words(PrimitiveKind::Alltoall),
        words_allreduce: stats.words(PrimitiveKind::Allreduce),
        size_words: stats.counters.total().size_sent,
        rounds: stats.counters.total_calls(),
        reached: stats.reached,
        seconds,
        teps: seconds.map(|s| m as f64 / s.max(f64::MIN_POSITIVE)),
        levels: stats.levels.clone(),
        counters: stats.counters.to_json(),
        traffic_digest: format!("{:016x}", stats.digest),
        model,
    }
}

/// Builds the graph, runs and validates every sampled search, and
/// aggregates the results. Any invalid tree aborts the run.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunReport, BenchError> {
    let grid = cfg.validate()?;
    let g = build_graph(cfg)?;
    let dist = DistGraph::distribute(&g, grid, cfg.datastructure, cfg.backend)?;
    let check = out_adjacency(&g);
    let sources = sample_sources(&g, cfg.num_sources, cfg.seed)?;
    let m = g.input_edge_count();

    let mut runs = Vec::with_capacity(sources.len());
    for &s in &sources {
        let (pv, stats) = run_search(&dist, s, cfg.mode, &cfg.heuristic, cfg.backend)?;
        validate_tree(&check, s, &pv).map_err(|violation| BenchError::Validation {
            source_vertex: s,
            violation,
        })?;
        let model = if cfg.compare_model {
            let p = ModelParams::new(g.n(), m, cfg.p_r as u64, cfg.p_c as u64, stats.s_b())
                .map_err(|e| BenchError::Config(e.to_string()))?;
            Some(compare_measured(&p, dist.ownership(), &stats))
        } else {
            None
        };
        runs.push(record(&stats, m, cfg.timing, model));
    }
    let harmonic_mean_teps = if cfg.timing {
        let teps: Vec<f64> = runs.iter().filter_map(|r| r.teps).collect();
        Some(harmonic_mean_teps(&teps)?)
    } else {
        None
    };
    Ok(RunReport {
        config: cfg.clone(),
        n: g.n(),
        m,
        stored_edges: g.len() as u64,
        runs,
        harmonic_mean_teps,
        memory: cfg.memory_report.then(|| memory_report(&dist)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn sources_single_edge_graph() {
        let g = EdgeList::new(5, vec![(1, 3), (3, 1)], false).unwrap();
        let s = sample_sources(&g, 1, 0).unwrap();
        assert!(s == vec![1] || s == vec![3]);
        assert!(matches!(sample_sources(&g, 3, 0), Err(BenchError::Config(_))));
    }

    #[test]
    fn sources_are_distinct_and_never_isolated() {
        let mut e: Vec<(u64, u64)> = (0..40u64).filter(|v| v % 3 != 0).map(|v| (v, (v + 1) % 40)).collect();
        e.sort_unstable();
        let g = rmat::canonicalize(&EdgeList::new(40, e, true).unwrap(), true);
        let ok = g.non_isolated();
        for seed in 0..1000 {
            let s = sample_sources(&g, 16, seed).unwrap();
            let set: BTreeSet<u64> = s.iter().copied().collect();
            assert_eq!(set.len(), 16);
            assert!(s.iter().all(|&v| ok[v as usize]));
        }
        assert_eq!(sample_sources(&g, 16, 7).unwrap(), sample_sources(&g, 16, 7).unwrap());
    }

    #[test]
    fn harmonic_mean() {
        assert_eq!(harmonic_mean_teps(&[2.0, 2.0]).unwrap(), 2.0);
        assert_eq!(harmonic_mean_teps(&[1.0, 3.0]).unwrap(), 1.5);
        assert!(harmonic_mean_teps(&[1.0, 0.0]).is_err());
        assert!(harmonic_mean_teps(&[-1.0]).is_err());
        assert!(harmonic_mean_teps(&[]).is_err());
        let xs = [3.5, 10.0, 0.25, 7.0, 1e6];
        let direct = xs.len() as f64 / xs.iter().map(|x| 1.0 / x).sum::<f64>();
        assert!((harmonic_mean_teps(&xs).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn scale_ten_end_to_end() {
        let mut cfg = RunConfig::rmat(10, 16, 2, 2);
        cfg.compare_model = true;
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.runs.len(), 16);
        assert!(rep.harmonic_mean_teps.unwrap() > 0.0);
        assert!(rep.runs.iter().all(|r| r.model.as_ref().unwrap().all_hold()));
        let csv = rep.to_csv();
        assert!(
            csv.starts_with("source,mode,depth_levels,sb,edges_examined,words_p2p,words_ag,words_a2a,seconds,teps\n")
        );
        assert_eq!(csv.lines().count(), 17);
    }

    #[test]
    fn triangle_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "0 1\n1 2\n2 0").unwrap();
        let mut cfg = RunConfig::rmat(1, 1, 1, 1);
        cfg.graph = GraphSource::File {
            path: f.path().to_path_buf(),
            format: EdgeFormat::Text,
        };
        cfg.num_sources = 1;
        let rep = run_experiment(&cfg).unwrap();
        let r = &rep.runs[0];
        assert!(r.teps.unwrap().is_finite());
        assert_eq!(r.depth_levels, 2);
        assert_eq!(r.levels[0].discovered, 2);
        assert_eq!(rep.m, 3);
    }

    #[test]
    fn mismatched_rank_count() {
        let mut cfg = RunConfig::rmat(6, 4, 2, 2);
        cfg.ranks = Some(8);
        assert!(matches!(run_experiment(&cfg), Err(BenchError::Config(_))));
    }

    #[test]
    fn memory_formulas() {
        let g = rmat::canonicalize(&EdgeList::new(6, vec![(0, 1), (2, 3), (4, 5)], true).unwrap(), true);
        let d = DistGraph::distribute(
            &g,
            ProcGrid::new(1, 1).unwrap(),
            Datastructure::Csr,
            Backend::Sequential,
        )
        .unwrap();
        let r = memory_report(&d);
        assert_eq!(r.csr_total, 6 + 6 + 1);
        let empty = EdgeList::new(10, vec![], false).unwrap();
        let d = DistGraph::distribute(
            &empty,
            ProcGrid::new(2, 3).unwrap(),
            Datastructure::Dcsc,
            Backend::Sequential,
        )
        .unwrap();
        assert_eq!(memory_report(&d).selected_total(), 6);
    }
}
