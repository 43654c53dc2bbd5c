//! Simulated message passing between the ranks of a process grid.
//!
//! The network is bulk-synchronous: a collective is one call carrying every
//! participant's contribution, which doubles as the synchronization point.
//! If some member of the group has not contributed, no rank in the call can
//! make progress, and the call fails with a deadlock diagnostic that lists
//! the blocked ranks.
//!
//! Accounting rules, in 64-bit words:
//!
//! * every addressed message (point-to-point, all-to-all) is charged to its
//!   sender and receiver, including messages a rank addresses to itself;
//! * an allgather charges each member `|own part|` per other member sent, and
//!   the sum of the other parts received;
//! * an allreduce moves one size word between every ordered pair of members.

mod counters;
mod payload;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::grid::{Coords, Group, ProcGrid, VertexOwnership};

pub use counters::{Phase, PhaseSnapshot, PrimitiveKind, Tally, TrafficCounters};
pub use payload::{Payload, SegmentPayload};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("deadlock in {primitive}: blocked ranks {blocked:?}, waiting on {missing:?}")]
    Deadlock {
        primitive: PrimitiveKind,
        blocked: Vec<Coords>,
        missing: Vec<Coords>,
    },
    #[error("rank {rank} contributed to {primitive} more than once or outside its group")]
    BadParticipant { primitive: PrimitiveKind, rank: Coords },
    #[error("phase {phase:?} cannot be carried by {primitive}")]
    PhaseMismatch { phase: Phase, primitive: PrimitiveKind },
    #[error("rank {rank} supplied {got} destination payloads to a group of {expected}")]
    FanoutMismatch { rank: Coords, expected: usize, got: usize },
}

/// One rank's half of a paired exchange.
#[derive(Debug, Clone)]
pub struct SendRecv<P> {
    pub rank: Coords,
    pub dest: Coords,
    pub src: Coords,
    pub payload: P,
}

/// The simulated interconnect plus its counters.
#[derive(Debug, Clone)]
pub struct Network {
    grid: ProcGrid,
    counters: TrafficCounters,
    history: u64,
}

impl Network {
    pub fn new(grid: ProcGrid) -> Self {
        Network {
            grid,
            counters: TrafficCounters::new(grid),
            history: 0,
        }
    }

    pub fn grid(&self) -> ProcGrid {
        self.grid
    }

    pub fn counters(&self) -> &TrafficCounters {
        &self.counters
    }

    /// Clears counters and payload history (per-search reset).
    pub fn reset(&mut self) {
        self.counters.reset();
        self.history = 0;
    }

    /// Digest of every payload moved since the last reset, in call order.
    pub fn history_digest(&self) -> u64 {
        self.history
    }

    fn fold_history(&mut self, call: u64) {
        let mut h = DefaultHasher::new();
        (self.history, call).hash(&mut h);
        self.history = h.finish();
    }

    fn expect_kind(phase: Phase, primitive: PrimitiveKind) -> Result<(), NetError> {
        if phase.kind() != primitive {
            return Err(NetError::PhaseMismatch { phase, primitive });
        }
        Ok(())
    }

    /// Orders contributions by group position, rejecting strangers and
    /// duplicates, and reporting a deadlock when members are missing.
    fn arrange<T>(primitive: PrimitiveKind, group: &Group, parts: Vec<(Coords, T)>) -> Result<Vec<T>, NetError> {
        let mut slots: Vec<Option<T>> = (0..group.len()).map(|_| None).collect();
        for (rank, t) in parts {
            let pos = group
                .position(rank)
                .ok_or(NetError::BadParticipant { primitive, rank })?;
            if slots[pos].replace(t).is_some() {
                return Err(NetError::BadParticipant { primitive, rank });
            }
        }
        let missing: Vec<Coords> = group
            .members()
            .iter()
            .zip(&slots)
            .filter(|(_, s)| s.is_none())
            .map(|(&c, _)| c)
            .collect();
        if !missing.is_empty() {
            let blocked = group
                .members()
                .iter()
                .zip(&slots)
                .filter(|(_, s)| s.is_some())
                .map(|(&c, _)| c)
                .collect();
            return Err(NetError::Deadlock {
                primitive,
                blocked,
                missing,
            });
        }
        Ok(slots.into_iter().map(|s| s.expect("checked above")).collect())
    }

    /// Every member receives the concatenation of all parts in group order.
    pub fn allgatherv<P: Payload>(
        &mut self,
        phase: Phase,
        group: &Group,
        parts: Vec<(Coords, P)>,
    ) -> Result<P, NetError> {
        Self::expect_kind(phase, PrimitiveKind::Allgather)?;
        let parts = Self::arrange(PrimitiveKind::Allgather, group, parts)?;
        self.counters.begin_call(phase);
        Ok(self.move_gather(phase, group, parts))
    }

    /// One allgather per processor column, all in the same round. `parts`
    /// holds every rank's contribution; the result is indexed by column.
    pub fn allgatherv_columns<P: Payload>(
        &mut self,
        phase: Phase,
        parts: Vec<(Coords, P)>,
    ) -> Result<Vec<P>, NetError> {
        Self::expect_kind(phase, PrimitiveKind::Allgather)?;
        let groups: Vec<Group> = (0..self.grid.p_c()).map(|j| self.grid.col_group(j)).collect();
        let split = self.split_by(PrimitiveKind::Allgather, parts, self.grid.p_c(), |c| c.col)?;
        let arranged = groups
            .iter()
            .zip(split)
            .map(|(g, p)| Self::arrange(PrimitiveKind::Allgather, g, p))
            .collect::<Result<Vec<_>, _>>()?;
        self.counters.begin_call(phase);
        Ok(groups
            .iter()
            .zip(arranged)
            .map(|(g, p)| self.move_gather(phase, g, p))
            .collect())
    }

    fn split_by<T>(
        &self,
        primitive: PrimitiveKind,
        parts: Vec<(Coords, T)>,
        buckets: usize,
        key: impl Fn(Coords) -> usize,
    ) -> Result<Vec<Vec<(Coords, T)>>, NetError> {
        let mut out: Vec<Vec<(Coords, T)>> = (0..buckets).map(|_| Vec::new()).collect();
        for (c, t) in parts {
            if !self.grid.contains(c) {
                return Err(NetError::BadParticipant { primitive, rank: c });
            }
            out[key(c)].push((c, t));
        }
        Ok(out)
    }

    fn move_gather<P: Payload>(&mut self, phase: Phase, group: &Group, parts: Vec<P>) -> P {
        let mut h = DefaultHasher::new();
        phase.hash(&mut h);
        for (a, part) in parts.iter().enumerate() {
            let from = self.grid.rank(group.members()[a]);
            part.hash(&mut h);
            for (b, &member) in group.members().iter().enumerate() {
                if a != b {
                    let to = self.grid.rank(member);
                    self.counters
                        .record(phase, from, to, part.payload_words(), part.size_words());
                }
            }
        }
        self.fold_history(h.finish());
        P::concat(parts)
    }

    fn check_fanout<P>(group: &Group, sends: &[Vec<P>]) -> Result<(), NetError> {
        for (a, s) in sends.iter().enumerate() {
            if s.len() != group.len() {
                return Err(NetError::FanoutMismatch {
                    rank: group.members()[a],
                    expected: group.len(),
                    got: s.len(),
                });
            }
        }
        Ok(())
    }

    /// `sends[k]` is rank k's list of payloads, one per destination in group
    /// order. Returns, for each member in group order, the payloads it
    /// received indexed by source position.
    pub fn alltoallv<P: Payload>(
        &mut self,
        phase: Phase,
        group: &Group,
        sends: Vec<(Coords, Vec<P>)>,
    ) -> Result<Vec<Vec<P>>, NetError> {
        Self::expect_kind(phase, PrimitiveKind::Alltoall)?;
        let sends = Self::arrange(PrimitiveKind::Alltoall, group, sends)?;
        Self::check_fanout(group, &sends)?;
        self.counters.begin_call(phase);
        Ok(self.move_alltoall(phase, group, sends))
    }

    /// One all-to-all per processor row, all in the same round. The result
    /// is indexed by linear rank; each entry lists payloads by source column.
    pub fn alltoallv_rows<P: Payload>(
        &mut self,
        phase: Phase,
        sends: Vec<(Coords, Vec<P>)>,
    ) -> Result<Vec<Vec<P>>, NetError> {
        Self::expect_kind(phase, PrimitiveKind::Alltoall)?;
        let groups: Vec<Group> = (0..self.grid.p_r()).map(|i| self.grid.row_group(i)).collect();
        let split = self.split_by(PrimitiveKind::Alltoall, sends, self.grid.p_r(), |c| c.row)?;
        let mut arranged = Vec::with_capacity(groups.len());
        for (g, part) in groups.iter().zip(split) {
            let a = Self::arrange(PrimitiveKind::Alltoall, g, part)?;
            Self::check_fanout(g, &a)?;
            arranged.push(a);
        }
        self.counters.begin_call(phase);
        let mut out: Vec<Vec<P>> = (0..self.grid.size()).map(|_| Vec::new()).collect();
        for (g, a) in groups.iter().zip(arranged) {
            for (b, recv) in self.move_alltoall(phase, g, a).into_iter().enumerate() {
                out[self.grid.rank(g.members()[b])] = recv;
            }
        }
        Ok(out)
    }

    fn move_alltoall<P: Payload>(&mut self, phase: Phase, group: &Group, sends: Vec<Vec<P>>) -> Vec<Vec<P>> {
        let g = group.len();
        let mut h = DefaultHasher::new();
        phase.hash(&mut h);
        let mut recv: Vec<Vec<Option<P>>> = (0..g).map(|_| (0..g).map(|_| None).collect()).collect();
        for (a, row) in sends.into_iter().enumerate() {
            let from = self.grid.rank(group.members()[a]);
            for (b, payload) in row.into_iter().enumerate() {
                let to = self.grid.rank(group.members()[b]);
                payload.hash(&mut h);
                self.counters
                    .record(phase, from, to, payload.payload_words(), payload.size_words());
                recv[b][a] = Some(payload);
            }
        }
        self.fold_history(h.finish());
        recv.into_iter()
            .map(|r| r.into_iter().map(|p| p.expect("full matrix")).collect())
            .collect()
    }

    /// Paired exchange: each rank sends to `dest` and receives from `src`.
    /// Returns each rank's received payload in the order of `ops`.
    pub fn sendrecv<P: Payload>(&mut self, phase: Phase, ops: Vec<SendRecv<P>>) -> Result<Vec<(Coords, P)>, NetError> {
        Self::expect_kind(phase, PrimitiveKind::P2p)?;
        let mut by_rank: BTreeMap<Coords, usize> = BTreeMap::new();
        for (k, op) in ops.iter().enumerate() {
            if !self.grid.contains(op.rank) || by_rank.insert(op.rank, k).is_some() {
                return Err(NetError::BadParticipant {
                    primitive: PrimitiveKind::P2p,
                    rank: op.rank,
                });
            }
        }
        // a rank can finish only if its dest expects it and its src targets it
        let mut blocked = Vec::new();
        let mut missing = Vec::new();
        for op in &ops {
            let send_ok = by_rank.get(&op.dest).is_some_and(|&k| ops[k].src == op.rank);
            let recv_ok = by_rank.get(&op.src).is_some_and(|&k| ops[k].dest == op.rank);
            if !(send_ok && recv_ok) {
                blocked.push(op.rank);
                for peer in [op.dest, op.src] {
                    if !by_rank.contains_key(&peer) && !missing.contains(&peer) {
                        missing.push(peer);
                    }
                }
            }
        }
        if !blocked.is_empty() {
            return Err(NetError::Deadlock {
                primitive: PrimitiveKind::P2p,
                blocked,
                missing,
            });
        }
        self.counters.begin_call(phase);
        let mut h = DefaultHasher::new();
        phase.hash(&mut h);
        for op in &ops {
            op.payload.hash(&mut h);
            self.counters.record(
                phase,
                self.grid.rank(op.rank),
                self.grid.rank(op.dest),
                op.payload.payload_words(),
                op.payload.size_words(),
            );
        }
        self.fold_history(h.finish());
        Ok(ops
            .iter()
            .map(|op| (op.rank, ops[by_rank[&op.src]].payload.clone()))
            .collect())
    }

    /// Moves vector pieces from the segment layout to the gather-segment
    /// layout (see [`crate::grid`]). On square grids this sends rank
    /// `(i, j)`'s segment to rank `(j, i)`. `parts` must hold one payload per
    /// rank covering its segment; the result is indexed by linear rank.
    pub fn transpose_vector<P: SegmentPayload>(
        &mut self,
        phase: Phase,
        owner: &VertexOwnership,
        parts: Vec<(Coords, P)>,
    ) -> Result<Vec<P>, NetError> {
        Self::expect_kind(phase, PrimitiveKind::P2p)?;
        let world = self.grid.world();
        let parts = Self::arrange(PrimitiveKind::P2p, &world, parts)?;
        self.counters.begin_call(phase);
        let mut h = DefaultHasher::new();
        phase.hash(&mut h);
        let p = self.grid.size();
        let mut inbox: Vec<Vec<P>> = (0..p).map(|_| Vec::new()).collect();
        for (from, part) in parts.iter().enumerate() {
            let seg = owner.segment(self.grid.coords(from));
            if seg.is_empty() {
                continue;
            }
            // destinations are the gather segments overlapping this segment
            for (to, slot) in inbox.iter_mut().enumerate() {
                let gs = owner.gather_segment(self.grid.coords(to));
                let lo = seg.start.max(gs.start);
                let hi = seg.end.min(gs.end);
                if lo >= hi {
                    continue;
                }
                let piece = part.restrict(seg.start, lo..hi);
                piece.hash(&mut h);
                self.counters
                    .record(phase, from, to, piece.payload_words(), piece.size_words());
                slot.push(piece);
            }
        }
        self.fold_history(h.finish());
        Ok(inbox
            .into_iter()
            .enumerate()
            .map(|(to, pieces)| {
                if pieces.is_empty() {
                    P::empty_over(owner.gather_segment(self.grid.coords(to)), owner.n())
                } else {
                    P::concat(pieces)
                }
            })
            .collect())
    }

    /// Sum over the group, delivered to every member.
    pub fn allreduce_sum(&mut self, group: &Group, values: Vec<(Coords, u64)>) -> Result<u64, NetError> {
        let values = Self::arrange(PrimitiveKind::Allreduce, group, values)?;
        self.counters.begin_call(Phase::Reduce);
        for (a, &ma) in group.members().iter().enumerate() {
            for (b, &mb) in group.members().iter().enumerate() {
                if a != b {
                    self.counters
                        .record(Phase::Reduce, self.grid.rank(ma), self.grid.rank(mb), 0, 1);
                }
            }
        }
        let mut h = DefaultHasher::new();
        values.hash(&mut h);
        self.fold_history(h.finish());
        Ok(values.iter().sum())
    }
}
