//! One-call topology runner over the simulated fabric.
//!
//! Feeds a trace of timestamped packets into the entry, runs the event
//! schedule to quiescence and folds the raw outcome stream back onto the
//! input trace: each input packet ends [`TraceVerdict::Forwarded`],
//! [`TraceVerdict::Dropped`], or — if the network swallowed a fragment it
//! needed — [`TraceVerdict::Lost`]. Reports render to a stable text form
//! whose digest is byte-identical across runs of the same seeds.

use sha2::{Digest, Sha256};

use crate::nfmodel::Packet;
use crate::protocol::SetupBundle;
use crate::roles::{ClientOutcome, ClientStats, EntryStats, ProcessorStats, ReassemblyLimits};

use super::fabric::{CostModel, Fabric, FaultPlan, LinkTraffic};
use super::TransportError;

/// Everything a run needs besides the bundle and the traffic.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub cost: CostModel,
    pub faults: FaultPlan,
    pub limits: ReassemblyLimits,
    /// Seed for the entry's dummy/pad scheduling.
    pub entry_seed: u64,
    /// Seed for loss/duplication/reordering decisions.
    pub fault_seed: u64,
}

/// Final fate of one input packet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceVerdict {
    /// Egressed with this (possibly rewritten) content.
    Forwarded(Packet),
    /// The policy zeroed the header; the client discarded it.
    Dropped,
    /// The client never assembled a decision for it.
    Lost,
}

/// Outcome of [`run_topology`].
#[derive(Clone, Debug)]
pub struct RunReport {
    /// One verdict per input packet, in input order.
    pub verdicts: Vec<TraceVerdict>,
    /// Ingest-to-decision latency per input packet; `None` when lost.
    pub delays_ns: Vec<Option<u64>>,
    pub entry_stats: EntryStats,
    pub processor_stats: Vec<ProcessorStats>,
    pub client_stats: ClientStats,
    pub queue_drops: Vec<(String, u64)>,
    pub links: Vec<LinkTraffic>,
    /// Virtual time of the last event.
    pub end_ns: u64,
    /// Total entry emissions, dummies included.
    pub emitted: u64,
}

impl RunReport {
    pub fn forwarded(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| matches!(v, TraceVerdict::Forwarded(_)))
            .count()
    }

    pub fn dropped(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| matches!(v, TraceVerdict::Dropped))
            .count()
    }

    pub fn lost(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| matches!(v, TraceVerdict::Lost))
            .count()
    }

    /// Cross-checks the per-trace verdicts against the endpoint counters.
    /// These identities hold under any fault plan.
    pub fn verify_conservation(&self) -> Result<(), String> {
        let traces = self.verdicts.len() as u64;
        let entry_queue_drops = self
            .queue_drops
            .iter()
            .find(|(n, _)| n == "entry")
            .map(|(_, d)| *d)
            .unwrap_or(0);
        if self.entry_stats.real_packets + entry_queue_drops != traces {
            return Err(format!(
                "entry ingested {} + dropped-at-queue {} != {} traces",
                self.entry_stats.real_packets, entry_queue_drops, traces
            ));
        }
        if self.client_stats.forwarded != self.forwarded() as u64 {
            return Err(format!(
                "client forwarded {} but {} traces ended Forwarded",
                self.client_stats.forwarded,
                self.forwarded()
            ));
        }
        if self.client_stats.dropped != self.dropped() as u64 {
            return Err(format!(
                "client dropped {} but {} traces ended Dropped",
                self.client_stats.dropped,
                self.dropped()
            ));
        }
        if self.forwarded() + self.dropped() + self.lost() != self.verdicts.len() {
            return Err("verdict kinds do not partition the trace".into());
        }
        Ok(())
    }

    /// SHA-256 over the verdict stream, so two reports can be compared for
    /// exact equality with one line.
    pub fn verdict_digest(&self) -> String {
        let mut h = Sha256::new();
        for (i, v) in self.verdicts.iter().enumerate() {
            h.update((i as u64).to_be_bytes());
            match v {
                TraceVerdict::Forwarded(p) => {
                    h.update([1u8]);
                    h.update(p.header().as_bytes());
                    h.update(p.payload().as_bytes());
                }
                TraceVerdict::Dropped => h.update([2u8]),
                TraceVerdict::Lost => h.update([3u8]),
            }
        }
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Stable, line-oriented text form.
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("traces {}\n", self.verdicts.len()));
        s.push_str(&format!("forwarded {}\n", self.forwarded()));
        s.push_str(&format!("dropped {}\n", self.dropped()));
        s.push_str(&format!("lost {}\n", self.lost()));
        s.push_str(&format!("emitted {}\n", self.emitted));
        s.push_str(&format!("end_ns {}\n", self.end_ns));
        s.push_str(&format!("verdict_digest {}\n", self.verdict_digest()));
        for (name, drops) in &self.queue_drops {
            s.push_str(&format!("queue {name} drops {drops}\n"));
        }
        for l in &self.links {
            s.push_str(&format!(
                "link {} messages {} bytes {} lost {} duplicated {}\n",
                l.name, l.messages, l.bytes, l.lost, l.duplicated
            ));
        }
        s
    }
}

/// Runs the full entry → processors → client topology over a timed trace.
pub fn run_topology(
    bundle: &SetupBundle,
    arrivals: &[(u64, Packet)],
    cfg: &RunConfig,
) -> Result<RunReport, TransportError> {
    let sim = Fabric::new(
        bundle,
        &cfg.cost,
        &cfg.faults,
        cfg.limits,
        cfg.entry_seed,
        cfg.fault_seed,
    )
    .run(arrivals)?;

    let mut verdicts = vec![TraceVerdict::Lost; arrivals.len()];
    let mut delays_ns = vec![None; arrivals.len()];
    for (at, seq, outcome) in sim.verdicts {
        let Some(&trace) = sim.seq_to_trace.get(&seq) else {
            continue; // dummy traffic has no trace to answer for
        };
        match outcome {
            ClientOutcome::Forwarded { packet, .. } => {
                verdicts[trace] = TraceVerdict::Forwarded(packet);
            }
            ClientOutcome::Dropped { .. } => verdicts[trace] = TraceVerdict::Dropped,
            ClientOutcome::DummyDiscarded { .. } => {
                return Err(TransportError::Internal(
                    "a real emission came back flagged as dummy".into(),
                ))
            }
            ClientOutcome::Pending => continue,
        }
        delays_ns[trace] = Some(at.saturating_sub(arrivals[trace].0));
    }

    Ok(RunReport {
        verdicts,
        delays_ns,
        entry_stats: sim.entry_stats,
        processor_stats: sim.processor_stats,
        client_stats: sim.client_stats,
        queue_drops: sim.queue_drops,
        links: sim.links,
        end_ns: sim.end_ns,
        emitted: sim.emitted,
    })
}
