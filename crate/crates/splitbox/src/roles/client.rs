//! The client endpoint: reassembles per-packet fragments (the blinded
//! packet plus one share message per processor), merges, unblinds, and
//! issues the verdict.
//!
//! Fragments arrive in any order over lossy links, so reassembly is
//! defensive: slots are keyed by sequence number, capped in count, aged
//! out, and poisoned when fragments disagree about the pad index. The
//! first copy of a fragment wins; later copies only bump counters.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::nfmodel::Packet;
use crate::protocol::{
    merge_flag, merge_shares, BlindIndex, ClientConfig, CumulativeShare, MergeOutcome,
};

use super::messages::ClientInput;
use super::stats::render_stats;
use super::RoleError;

/// Reassembly guard rails.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReassemblyLimits {
    /// Most slots open at once; opening one more evicts the oldest.
    pub capacity: usize,
    /// A slot expires when now exceeds its first-fragment time by more
    /// than this (strictly).
    pub timeout_ns: u64,
}

impl Default for ReassemblyLimits {
    fn default() -> Self {
        ReassemblyLimits {
            capacity: 4096,
            timeout_ns: 1_000_000_000,
        }
    }
}

#[derive(Clone, Debug)]
struct Slot {
    index: BlindIndex,
    arrived_ns: u64,
    packet: Option<Packet>,
    /// By processor id − 1: (cumulative share, flag share).
    shares: Vec<Option<(CumulativeShare, u8)>>,
    poisoned: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClientStats {
    pub forwarded: u64,
    pub dropped: u64,
    pub dummies_discarded: u64,
    /// Extra copies of a fragment for a still-open slot.
    pub duplicate_fragments: u64,
    /// Fragments for an already-completed sequence number.
    pub late_fragments: u64,
    /// Slots tombstoned by an index disagreement (counted once each).
    pub poisoned_slots: u64,
    /// Slots removed incomplete — timed out or evicted.
    pub expired_slots: u64,
    /// The subset of expired slots removed by capacity pressure.
    pub evicted_slots: u64,
}

impl ClientStats {
    pub fn render(&self) -> String {
        render_stats(&[
            ("dropped", self.dropped),
            ("dummies_discarded", self.dummies_discarded),
            ("duplicate_fragments", self.duplicate_fragments),
            ("evicted_slots", self.evicted_slots),
            ("expired_slots", self.expired_slots),
            ("forwarded", self.forwarded),
            ("late_fragments", self.late_fragments),
            ("poisoned_slots", self.poisoned_slots),
        ])
    }
}

/// The client's reaction to one ingested fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClientOutcome {
    /// All fragments merged; the packet passed filtering.
    Forwarded { seq: u64, packet: Packet },
    /// All fragments merged; the policy zeroed the header.
    Dropped { seq: u64 },
    /// All fragments merged; the flag shares said dummy.
    DummyDiscarded { seq: u64 },
    /// Nothing decided: slot still waiting, or the fragment was swallowed
    /// (duplicate, late, or aimed at a poisoned slot).
    Pending,
}

/// Running client endpoint.
pub struct ClientState {
    cfg: ClientConfig,
    limits: ReassemblyLimits,
    slots: HashMap<u64, Slot>,
    /// Slot creation order (oldest first); stale entries are skipped lazily.
    order: VecDeque<u64>,
    /// Ring of recently completed sequence numbers, for late-fragment
    /// detection.
    completed_ring: VecDeque<u64>,
    completed: HashSet<u64>,
    stats: ClientStats,
}

impl ClientState {
    pub fn new(cfg: ClientConfig) -> Self {
        Self::with_limits(cfg, ReassemblyLimits::default())
    }

    pub fn with_limits(cfg: ClientConfig, limits: ReassemblyLimits) -> Self {
        assert!(limits.capacity > 0, "capacity must be positive");
        ClientState {
            cfg,
            limits,
            slots: HashMap::new(),
            order: VecDeque::new(),
            completed_ring: VecDeque::new(),
            completed: HashSet::new(),
            stats: ClientStats::default(),
        }
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &ClientStats {
        &self.stats
    }

    /// Slots currently open.
    pub fn open_slots(&self) -> usize {
        self.slots.len()
    }

    /// Ingests one fragment at virtual time `now_ns`.
    pub fn ingest(
        &mut self,
        input: &ClientInput,
        now_ns: u64,
    ) -> Result<ClientOutcome, RoleError> {
        let n = self.cfg.params.header_len;
        let t = self.cfg.params.share_count;
        match input {
            ClientInput::Packet(m) => {
                if m.packet.header_len() != n {
                    return Err(RoleError::Protocol(
                        crate::protocol::ProtocolError::Model(
                            crate::nfmodel::ModelError::LengthMismatch {
                                expected: n,
                                got: m.packet.header_len(),
                            },
                        ),
                    ));
                }
            }
            ClientInput::Shares(m) => {
                if m.processor_id == 0 || m.processor_id as u32 > t {
                    return Err(RoleError::BadProcessorId(m.processor_id));
                }
                if m.flag_share > 1 {
                    return Err(RoleError::BadFlagShare(m.flag_share));
                }
                if m.share.len() != n {
                    return Err(RoleError::Protocol(
                        crate::protocol::ProtocolError::Model(
                            crate::nfmodel::ModelError::LengthMismatch {
                                expected: n,
                                got: m.share.len(),
                            },
                        ),
                    ));
                }
            }
        }

        let seq = input.seq();
        if self.completed.contains(&seq) {
            self.stats.late_fragments += 1;
            return Ok(ClientOutcome::Pending);
        }

        if !self.slots.contains_key(&seq) {
            if self.slots.len() >= self.limits.capacity {
                self.evict_oldest();
            }
            self.slots.insert(
                seq,
                Slot {
                    index: input.index(),
                    arrived_ns: now_ns,
                    packet: None,
                    shares: vec![None; t as usize],
                    poisoned: false,
                },
            );
            self.order.push_back(seq);
        }
        let slot = self.slots.get_mut(&seq).unwrap();

        if slot.poisoned {
            return Ok(ClientOutcome::Pending);
        }
        if input.index() != slot.index {
            slot.poisoned = true;
            self.stats.poisoned_slots += 1;
            return Ok(ClientOutcome::Pending);
        }

        match input {
            ClientInput::Packet(m) => {
                if slot.packet.is_some() {
                    self.stats.duplicate_fragments += 1;
                    return Ok(ClientOutcome::Pending);
                }
                slot.packet = Some(m.packet.clone());
            }
            ClientInput::Shares(m) => {
                let cell = &mut slot.shares[m.processor_id as usize - 1];
                if cell.is_some() {
                    self.stats.duplicate_fragments += 1;
                    return Ok(ClientOutcome::Pending);
                }
                *cell = Some((m.share.clone(), m.flag_share));
            }
        }

        if slot.packet.is_none() || slot.shares.iter().any(|s| s.is_none()) {
            return Ok(ClientOutcome::Pending);
        }

        // Complete: take the slot out and merge.
        let slot = self.slots.remove(&seq).unwrap();
        self.mark_completed(seq);
        let packet = slot.packet.unwrap();
        let parts: Vec<(CumulativeShare, u8)> =
            slot.shares.into_iter().map(|s| s.unwrap()).collect();
        let real = merge_flag(parts.iter().map(|(_, f)| *f));
        if !real {
            self.stats.dummies_discarded += 1;
            return Ok(ClientOutcome::DummyDiscarded { seq });
        }
        let shares: Vec<CumulativeShare> = parts.into_iter().map(|(s, _)| s).collect();
        match merge_shares(&self.cfg, &packet, slot.index, &shares)? {
            MergeOutcome::Forward(packet) => {
                self.stats.forwarded += 1;
                Ok(ClientOutcome::Forwarded { seq, packet })
            }
            MergeOutcome::Drop => {
                self.stats.dropped += 1;
                Ok(ClientOutcome::Dropped { seq })
            }
        }
    }

    /// Ages out slots whose first fragment is older than the timeout
    /// (strictly). Returns the expired sequence numbers, oldest first.
    pub fn expire(&mut self, now_ns: u64) -> Vec<u64> {
        let mut out = Vec::new();
        // First-fragment times are nondecreasing in creation order, so the
        // scan can stop at the first live slot that is young enough.
        while let Some(&seq) = self.order.front() {
            let Some(slot) = self.slots.get(&seq) else {
                self.order.pop_front();
                continue;
            };
            if now_ns > slot.arrived_ns.saturating_add(self.limits.timeout_ns) {
                self.slots.remove(&seq);
                self.order.pop_front();
                self.stats.expired_slots += 1;
                out.push(seq);
            } else {
                break;
            }
        }
        out
    }

    fn evict_oldest(&mut self) {
        while let Some(seq) = self.order.pop_front() {
            if self.slots.remove(&seq).is_some() {
                self.stats.expired_slots += 1;
                self.stats.evicted_slots += 1;
                return;
            }
        }
    }

    fn mark_completed(&mut self, seq: u64) {
        self.completed_ring.push_back(seq);
        self.completed.insert(seq);
        while self.completed_ring.len() > self.limits.capacity {
            if let Some(old) = self.completed_ring.pop_front() {
                self.completed.remove(&old);
            }
        }
    }
}
