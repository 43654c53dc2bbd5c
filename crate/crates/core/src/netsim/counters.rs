use std::collections::BTreeMap;
use std::fmt;
use std::ops::{AddAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::grid::ProcGrid;

/// Communication primitive a transfer is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    P2p,
    Allgather,
    Alltoall,
    Allreduce,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 4] = [
        PrimitiveKind::P2p,
        PrimitiveKind::Allgather,
        PrimitiveKind::Alltoall,
        PrimitiveKind::Allreduce,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::P2p => "p2p",
            PrimitiveKind::Allgather => "allgather",
            PrimitiveKind::Alltoall => "alltoall",
            PrimitiveKind::Allreduce => "allreduce",
        }
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Algorithm step a collective call belongs to. Each phase maps to exactly
/// one primitive kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    TopDownTranspose,
    TopDownExpand,
    TopDownFold,
    BottomUpTranspose,
    BottomUpGather,
    BottomUpParentUpdate,
    BottomUpRotate,
    Reduce,
}

impl Phase {
    pub const ALL: [Phase; 8] = [
        Phase::TopDownTranspose,
        Phase::TopDownExpand,
        Phase::TopDownFold,
        Phase::BottomUpTranspose,
        Phase::BottomUpGather,
        Phase::BottomUpParentUpdate,
        Phase::BottomUpRotate,
        Phase::Reduce,
    ];

    pub fn kind(self) -> PrimitiveKind {
        match self {
            Phase::TopDownTranspose
            | Phase::BottomUpTranspose
            | Phase::BottomUpParentUpdate
            | Phase::BottomUpRotate => PrimitiveKind::P2p,
            Phase::TopDownExpand | Phase::BottomUpGather => PrimitiveKind::Allgather,
            Phase::TopDownFold => PrimitiveKind::Alltoall,
            Phase::Reduce => PrimitiveKind::Allreduce,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Word tallies. Payload words and size (count) words are kept apart.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tally {
    pub payload_sent: u64,
    pub payload_recv: u64,
    pub size_sent: u64,
    pub size_recv: u64,
    pub messages: u64,
}

impl AddAssign for Tally {
    fn add_assign(&mut self, o: Tally) {
        self.payload_sent += o.payload_sent;
        self.payload_recv += o.payload_recv;
        self.size_sent += o.size_sent;
        self.size_recv += o.size_recv;
        self.messages += o.messages;
    }
}

impl Sub for Tally {
    type Output = Tally;

    fn sub(self, o: Tally) -> Tally {
        Tally {
            payload_sent: self.payload_sent - o.payload_sent,
            payload_recv: self.payload_recv - o.payload_recv,
            size_sent: self.size_sent - o.size_sent,
            size_recv: self.size_recv - o.size_recv,
            messages: self.messages - o.messages,
        }
    }
}

/// Per-rank, per-primitive word counts plus a per-phase breakdown and the
/// number of collective calls (communication rounds) per phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficCounters {
    grid: ProcGrid,
    per_rank: Vec<[Tally; 4]>,
    per_phase: [Tally; 8],
    calls: [u64; 8],
}

impl TrafficCounters {
    pub fn new(grid: ProcGrid) -> Self {
        TrafficCounters {
            grid,
            per_rank: vec![[Tally::default(); 4]; grid.size()],
            per_phase: [Tally::default(); 8],
            calls: [0; 8],
        }
    }

    pub fn reset(&mut self) {
        *self = TrafficCounters::new(self.grid);
    }

    pub(crate) fn begin_call(&mut self, phase: Phase) {
        self.calls[phase.index()] += 1;
    }

    pub(crate) fn record(&mut self, phase: Phase, from: usize, to: usize, payload: u64, size: u64) {
        let k = phase.kind().index();
        let s = &mut self.per_rank[from][k];
        s.payload_sent += payload;
        s.size_sent += size;
        s.messages += 1;
        let r = &mut self.per_rank[to][k];
        r.payload_recv += payload;
        r.size_recv += size;
        let p = &mut self.per_phase[phase.index()];
        p.payload_sent += payload;
        p.payload_recv += payload;
        p.size_sent += size;
        p.size_recv += size;
        p.messages += 1;
    }

    pub fn grid(&self) -> ProcGrid {
        self.grid
    }

    pub fn rank(&self, rank: usize, kind: PrimitiveKind) -> Tally {
        self.per_rank[rank][kind.index()]
    }

    pub fn phase(&self, phase: Phase) -> Tally {
        self.per_phase[phase.index()]
    }

    pub fn calls(&self, phase: Phase) -> u64 {
        self.calls[phase.index()]
    }

    /// Total communication rounds over all phases.
    pub fn total_calls(&self) -> u64 {
        self.calls.iter().sum()
    }

    /// Global tally of one primitive kind, summed over ranks.
    pub fn kind(&self, kind: PrimitiveKind) -> Tally {
        let mut t = Tally::default();
        for r in &self.per_rank {
            t += r[kind.index()];
        }
        t
    }

    pub fn total(&self) -> Tally {
        let mut t = Tally::default();
        for k in PrimitiveKind::ALL {
            t += self.kind(k);
        }
        t
    }

    /// Snapshot of the per-phase tallies and calls, for level deltas.
    pub fn phase_snapshot(&self) -> PhaseSnapshot {
        PhaseSnapshot {
            tallies: self.per_phase,
            calls: self.calls,
        }
    }

    /// JSON object keyed by rank coords (`"i,j"`), then primitive kind.
    pub fn to_json(&self) -> serde_json::Value {
        let mut ranks = BTreeMap::new();
        for r in 0..self.grid.size() {
            let kinds: BTreeMap<&str, Tally> = PrimitiveKind::ALL
                .iter()
                .map(|&k| (k.name(), self.per_rank[r][k.index()]))
                .collect();
            ranks.insert(self.grid.coords(r).to_string(), kinds);
        }
        serde_json::to_value(ranks).expect("counter map serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseSnapshot {
    tallies: [Tally; 8],
    calls: [u64; 8],
}

impl PhaseSnapshot {
    pub fn phase(&self, phase: Phase) -> Tally {
        self.tallies[phase.index()]
    }

    pub fn calls(&self, phase: Phase) -> u64 {
        self.calls[phase.index()]
    }

    /// Payload words per primitive kind accumulated between two snapshots.
    pub fn kind_delta(&self, earlier: &PhaseSnapshot, kind: PrimitiveKind) -> Tally {
        let mut t = Tally::default();
        for p in Phase::ALL.into_iter().filter(|p| p.kind() == kind) {
            t += self.phase(p) - earlier.phase(p);
        }
        t
    }

    pub fn calls_delta(&self, earlier: &PhaseSnapshot) -> u64 {
        self.calls.iter().sum::<u64>() - earlier.calls.iter().sum::<u64>()
    }
}
