//! R-MAT generation, canonicalization and edge-list file I/O.
//!
//! The generator is counter-based: edge `e` draws its `scale` quadrant
//! choices from a ChaCha8 stream (`rand_chacha::ChaCha8Rng`, seeded with
//! `seed_from_u64(seed)`) positioned at 32-bit word `2 * scale * e`. Each draw
//! is one `next_u64` mapped to `[0, 1)` by its top 53 bits. Any split of the
//! edge range across workers therefore yields the same edge sequence.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Backend;
use crate::graph::{EdgeList, GraphError};

#[derive(Debug, Error)]
pub enum RmatError {
    #[error("invalid R-MAT parameters: {0}")]
    InvalidParams(String),
    #[error("scale {scale} with degree {degree} does not fit the address space")]
    Capacity { scale: u32, degree: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("binary edge list length {0} is not a multiple of 16 bytes")]
    TruncatedBinary(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmatParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub scale: u32,
    pub degree: u64,
    pub seed: u64,
}

impl RmatParams {
    /// Quadrant probabilities 0.57/0.19/0.19/0.05.
    pub fn graph500(scale: u32, degree: u64, seed: u64) -> Self {
        RmatParams {
            a: 0.57,
            b: 0.19,
            c: 0.19,
            d: 0.05,
            scale,
            degree,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), RmatError> {
        let probs = [self.a, self.b, self.c, self.d];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(RmatError::InvalidParams(format!(
                "quadrant probabilities must lie in [0, 1], got {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(RmatError::InvalidParams(format!("a+b+c+d must equal 1, got {sum}")));
        }
        if self.scale < 1 {
            return Err(RmatError::InvalidParams("scale must be at least 1".into()));
        }
        if self.degree < 1 {
            return Err(RmatError::InvalidParams("degree must be at least 1".into()));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> Result<u64, RmatError> {
        1u64.checked_shl(self.scale)
            .filter(|_| self.scale < 64)
            .ok_or(RmatError::Capacity {
                scale: self.scale,
                degree: self.degree,
            })
    }

    pub fn edge_count(&self) -> Result<u64, RmatError> {
        let n = self.vertex_count()?;
        n.checked_mul(self.degree)
            .filter(|&m| usize::try_from(m).is_ok())
            .ok_or(RmatError::Capacity {
                scale: self.scale,
                degree: self.degree,
            })
    }
}

const CHUNK: u64 = 1 << 14;

/// Emits `degree * 2^scale` directed edge tuples by recursive quadrant
/// descent.
pub fn generate(p: &RmatParams, backend: Backend) -> Result<EdgeList, RmatError> {
    p.validate()?;
    let n = p.vertex_count()?;
    let m = p.edge_count()?;
    let chunks = m.div_ceil(CHUNK) as usize;
    let pieces = backend.map_range(chunks, |k| {
        let start = k as u64 * CHUNK;
        let end = (start + CHUNK).min(m);
        generate_range(p, start..end)
    });
    let edges: Vec<(u64, u64)> = pieces.into_iter().flatten().collect();
    Ok(EdgeList::from_parts_unchecked(n, edges, true))
}

fn generate_range(p: &RmatParams, range: std::ops::Range<u64>) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_word_pos(range.start as u128 * 2 * p.scale as u128);
    let (ab, abc) = (p.a + p.b, p.a + p.b + p.c);
    range
        .map(|_| {
            let (mut src, mut dst) = (0u64, 0u64);
            for level in 0..p.scale {
                let bit = 1u64 << (p.scale - 1 - level);
                let r = unit(rng.next_u64());
                if r < p.a {
                } else if r < ab {
                    dst |= bit;
                } else if r < abc {
                    src |= bit;
                } else {
                    src |= bit;
                    dst |= bit;
                }
            }
            (src, dst)
        })
        .collect()
}

#[inline]
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Drops self-loops and duplicates; with `undirected`, also closes the edge
/// set under reversal. Vertex ids are kept as they are, so isolated vertices
/// stay in the id range and are only excluded later (source sampling, TEPS).
pub fn canonicalize(e: &EdgeList, undirected: bool) -> EdgeList {
    let mut edges: Vec<(u64, u64)> = Vec::with_capacity(e.len() * if undirected { 2 } else { 1 });
    for &(s, d) in e.edges() {
        if s == d {
            continue;
        }
        edges.push((s, d));
        if undirected {
            edges.push((d, s));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    EdgeList::from_parts_unchecked(e.n(), edges, !undirected)
}

/// Relabels vertices with a seeded uniform permutation.
pub fn permute_vertices(e: &EdgeList, seed: u64) -> EdgeList {
    let mut perm: Vec<u64> = (0..e.n()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let edges = e
        .edges()
        .iter()
        .map(|&(s, d)| (perm[s as usize], perm[d as usize]))
        .collect();
    EdgeList::from_parts_unchecked(e.n(), edges, e.is_directed())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFormat {
    /// `src dst` per line, ASCII decimal, optional `%n <count>` header.
    Text,
    /// Little-endian u64 pairs, no header.
    Binary,
}

impl FromStr for EdgeFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(EdgeFormat::Text),
            "binary" => Ok(EdgeFormat::Binary),
            other => Err(format!("unknown edge format `{other}` (expected text|binary)")),
        }
    }
}

pub fn ingest_edge_list(path: &Path, format: EdgeFormat) -> Result<EdgeList, RmatError> {
    match format {
        EdgeFormat::Text => read_text(BufReader::new(fs::File::open(path)?)),
        EdgeFormat::Binary => {
            let mut bytes = Vec::new();
            fs::File::open(path)?.read_to_end(&mut bytes)?;
            read_binary(&bytes)
        }
    }
}

pub fn export_edge_list(e: &EdgeList, path: &Path, format: EdgeFormat) -> Result<(), RmatError> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    match format {
        EdgeFormat::Text => {
            writeln!(out, "%n {}", e.n())?;
            for &(s, d) in e.edges() {
                writeln!(out, "{s} {d}")?;
            }
        }
        EdgeFormat::Binary => {
            for &(s, d) in e.edges() {
                out.write_all(&s.to_le_bytes())?;
                out.write_all(&d.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_text<R: BufRead>(reader: R) -> Result<EdgeList, RmatError> {
    let mut edges = Vec::new();
    let mut header_n: Option<u64> = None;
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("%n") {
            let n = parse_id(rest.trim(), line_no)?;
            header_n = Some(n);
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(RmatError::Parse {
                line: line_no,
                message: format!("expected `src dst`, found `{trimmed}`"),
            });
        };
        edges.push((parse_id(a, line_no)?, parse_id(b, line_no)?));
    }
    finish(edges, header_n)
}

pub fn read_binary(bytes: &[u8]) -> Result<EdgeList, RmatError> {
    if !bytes.len().is_multiple_of(16) {
        return Err(RmatError::TruncatedBinary(bytes.len()));
    }
    let edges = bytes
        .chunks_exact(16)
        .map(|c| {
            let s = u64::from_le_bytes(c[..8].try_into().unwrap());
            let d = u64::from_le_bytes(c[8..].try_into().unwrap());
            (s, d)
        })
        .collect();
    finish(edges, None)
}

fn finish(edges: Vec<(u64, u64)>, header_n: Option<u64>) -> Result<EdgeList, RmatError> {
    let max = edges.iter().map(|&(s, d)| s.max(d)).max();
    let n = match (header_n, max) {
        (Some(n), _) => n,
        (None, Some(max)) => max.checked_add(1).ok_or(RmatError::Parse {
            line: 0,
            message: "vertex id overflow".into(),
        })?,
        (None, None) => 0,
    };
    Ok(EdgeList::new(n, edges, true)?)
}

fn parse_id(s: &str, line: usize) -> Result<u64, RmatError> {
    s.parse::<u64>().map_err(|e| RmatError::Parse {
        line,
        message: format!("bad vertex id `{s}`: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn edge_count_is_degree_times_vertices() {
        let e = generate(&RmatParams::graph500(4, 16, 1), Backend::Sequential).unwrap();
        assert_eq!(e.len(), 256);
        assert_eq!(e.n(), 16);
    }

    #[test]
    fn degenerate_quadrant_collapses_to_origin() {
        let p = RmatParams {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            scale: 6,
            degree: 4,
            seed: 9,
        };
        let e = generate(&p, Backend::Sequential).unwrap();
        assert!(e.edges().iter().all(|&x| x == (0, 0)));
    }

    #[test]
    fn reproducible_and_backend_independent() {
        let p = RmatParams::graph500(12, 16, 42);
        let a = generate(&p, Backend::Sequential).unwrap();
        let b = generate(&p, Backend::Sequential).unwrap();
        let c = generate(&p, Backend::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let other = generate(&RmatParams { seed: 43, ..p }, Backend::Sequential).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn chunking_does_not_change_stream() {
        let p = RmatParams::graph500(5, 8, 5);
        let whole = generate_range(&p, 0..256);
        let mut split = generate_range(&p, 0..100);
        split.extend(generate_range(&p, 100..256));
        assert_eq!(whole, split);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = RmatParams::graph500(4, 16, 0);
        p.a = 0.6;
        assert!(matches!(
            generate(&p, Backend::Sequential),
            Err(RmatError::InvalidParams(_))
        ));
        let p = RmatParams::graph500(0, 16, 0);
        assert!(p.validate().is_err());
        let p = RmatParams::graph500(4, 0, 0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn huge_scale_is_a_capacity_error() {
        let p = RmatParams::graph500(64, 16, 0);
        assert!(matches!(
            generate(&p, Backend::Sequential),
            Err(RmatError::Capacity { .. })
        ));
        let p = RmatParams::graph500(62, 16, 0);
        assert!(matches!(p.edge_count(), Err(RmatError::Capacity { .. })));
    }

    #[test]
    fn canonicalize_example() {
        let e = EdgeList::new(2, vec![(1, 1), (0, 1), (0, 1)], true).unwrap();
        let c = canonicalize(&e, true);
        assert_eq!(c.edges(), &[(0, 1), (1, 0)]);
        assert!(!c.is_directed());
        let empty = canonicalize(&EdgeList::new(5, vec![], true).unwrap(), true);
        assert!(empty.is_empty());
        assert_eq!(empty.n(), 5);
    }

    #[test]
    fn canonicalize_matches_set_oracle_and_is_idempotent() {
        let raw = generate(&RmatParams::graph500(7, 8, 3), Backend::Sequential).unwrap();
        for undirected in [false, true] {
            let c = canonicalize(&raw, undirected);
            let mut oracle = BTreeSet::new();
            for &(s, d) in raw.edges() {
                if s != d {
                    oracle.insert((s, d));
                    if undirected {
                        oracle.insert((d, s));
                    }
                }
            }
            assert_eq!(c.edges(), oracle.into_iter().collect::<Vec<_>>().as_slice());
            assert_eq!(canonicalize(&c, undirected), c);
            if undirected {
                let set: BTreeSet<_> = c.edges().iter().copied().collect();
                assert!(set.iter().all(|&(s, d)| set.contains(&(d, s))));
            }
        }
    }

    #[test]
    fn permutation_preserves_degree_multiset() {
        let raw = canonicalize(
            &generate(&RmatParams::graph500(6, 4, 1), Backend::Sequential).unwrap(),
            true,
        );
        let p = permute_vertices(&raw, 77);
        let mut a = raw.out_degrees();
        let mut b = p.out_degrees();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        assert_eq!(p.len(), raw.len());
    }

    #[test]
    fn text_parsing() {
        let e = read_text("0 1\n1 2\n".as_bytes()).unwrap();
        assert_eq!(e.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(e.n(), 3);

        let e = read_text("%n 10\n0 1\n".as_bytes()).unwrap();
        assert_eq!(e.n(), 10);

        let err = read_text("0 1\n1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, RmatError::Parse { line: 2, .. }), "{err}");
        let err = read_text("0 1\n1 2 3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, RmatError::Parse { line: 2, .. }));
        let err = read_text("0 18446744073709551616\n".as_bytes()).unwrap_err();
        assert!(matches!(err, RmatError::Parse { line: 1, .. }));
        // header smaller than the ids it must cover
        assert!(read_text("%n 2\n0 5\n".as_bytes()).is_err());
    }

    #[test]
    fn binary_roundtrip_through_export() {
        let dir = tempfile::tempdir().unwrap();
        let e = EdgeList::new(8, vec![(0, 7), (3, 2), (7, 0)], true).unwrap();
        for (fmt, name) in [(EdgeFormat::Binary, "g.bin"), (EdgeFormat::Text, "g.txt")] {
            let path = dir.path().join(name);
            export_edge_list(&e, &path, fmt).unwrap();
            let back = ingest_edge_list(&path, fmt).unwrap();
            assert_eq!(back.edges(), e.edges());
            assert_eq!(back.n(), 8);
        }
        assert!(matches!(read_binary(&[0u8; 15]), Err(RmatError::TruncatedBinary(15))));
    }
}
