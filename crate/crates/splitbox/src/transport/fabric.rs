//! The deterministic event-driven fabric.
//!
//! Real computation, virtual time: every packet is actually blinded,
//! every digest actually compared, every share actually merged — the
//! fabric only decides *when* each step happens, by charging fixed
//! per-work-unit costs on a virtual integer-nanosecond clock. Links
//! serialize bytes at a configured rate and add propagation delay;
//! endpoints have bounded ingress queues and a configurable number of
//! service workers. With the same inputs and seeds the event order, and
//! therefore every counter and verdict, is identical on every run.

use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::Rng;

use crate::nfmodel::Packet;
use crate::protocol::{ProtocolRng, SetupBundle};
use crate::roles::{
    ClientInput, ClientOutcome, ClientState, ClientStats, EntryState, EntryStats,
    ProcessorState, ProcessorStats, ReassemblyLimits,
};

use super::wire::WireMessage;
use super::TransportError;

/// Deterministic service and link costs, all integer nanoseconds (links
/// use picoseconds per byte so 10 GbE-class rates stay integral). The
/// defaults are of realistic magnitude for the work each station does;
/// every throughput/latency result is a trend or ratio over these, never
/// a hard-coded outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostModel {
    /// Entry work per emission: pad lookup, header XOR, flag split, fanout.
    pub entry_emit_ns: u64,
    /// One keyed-digest computation plus table comparison.
    pub hash_match_ns: u64,
    /// One action-share XOR into the accumulator.
    pub share_absorb_ns: u64,
    /// Fixed per-input processor overhead (parse, tree bookkeeping).
    pub proc_fixed_ns: u64,
    /// Client cost to file one arriving fragment.
    pub client_fragment_ns: u64,
    /// Client cost per share merged at completion.
    pub merge_share_ns: u64,
    /// Client cost to unblind and apply the combined overwrite.
    pub unblind_ns: u64,
    /// Plaintext-baseline: fixed per-packet cost of the reference filter.
    pub plain_fixed_ns: u64,
    /// Plaintext-baseline: one tri-state field comparison.
    pub plain_compare_ns: u64,
    /// Plaintext-baseline: one header rewrite.
    pub plain_action_ns: u64,
    /// Propagation delay per link.
    pub link_propagation_ns: u64,
    /// Serialization cost, picoseconds per byte (800 ≈ 10 Gb/s).
    pub link_ps_per_byte: u64,
    /// Ingress queue bound per endpoint; overflow drops the message.
    pub queue_capacity: usize,
    /// Parallel service workers per processor (entry and client have 1).
    pub processor_workers: u32,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            entry_emit_ns: 150,
            hash_match_ns: 260,
            share_absorb_ns: 40,
            proc_fixed_ns: 90,
            client_fragment_ns: 70,
            merge_share_ns: 80,
            unblind_ns: 120,
            plain_fixed_ns: 45,
            plain_compare_ns: 18,
            plain_action_ns: 25,
            link_propagation_ns: 20_000,
            link_ps_per_byte: 800,
            queue_capacity: 1024,
            processor_workers: 1,
        }
    }
}

/// Seeded fault injection, applied per message send. Probabilities in
/// parts per million.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FaultPlan {
    pub loss_ppm: u32,
    pub duplicate_ppm: u32,
    pub reorder_ppm: u32,
    /// Extra delivery delay drawn uniformly from 0..=this when a message
    /// is reordered.
    pub reorder_max_ns: u64,
}

impl FaultPlan {
    fn is_active(&self) -> bool {
        self.loss_ppm > 0 || self.duplicate_ppm > 0 || self.reorder_ppm > 0
    }
}

/// Per-link transfer counters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinkTraffic {
    pub name: String,
    pub messages: u64,
    pub bytes: u64,
    pub lost: u64,
    pub duplicated: u64,
}

/// Everything one simulation produces, before the runner shapes it into a
/// report.
pub(super) struct SimOutput {
    /// (virtual completion time, sequence number, outcome) in completion
    /// order. Only decisive outcomes appear.
    pub verdicts: Vec<(u64, u64, ClientOutcome)>,
    /// Entry sequence number → arrival index, for real packets.
    pub seq_to_trace: HashMap<u64, usize>,
    pub entry_stats: EntryStats,
    pub processor_stats: Vec<ProcessorStats>,
    pub client_stats: ClientStats,
    /// (node name, messages dropped at its full ingress queue).
    pub queue_drops: Vec<(String, u64)>,
    pub links: Vec<LinkTraffic>,
    /// Virtual time of the last event.
    pub end_ns: u64,
    /// Total emissions (real + dummy).
    pub emitted: u64,
}

enum WorkItem {
    Arrival(usize, Packet),
    Msg(WireMessage),
}

enum Station {
    Entry(EntryState),
    Proc(ProcessorState),
    Client(ClientState),
}

struct Node {
    name: String,
    station: Station,
    queue: VecDeque<WorkItem>,
    capacity: usize,
    workers: u32,
    busy: u32,
    drops: u64,
}

struct Link {
    to: usize,
    busy_until: u64,
    traffic: LinkTraffic,
}

enum EventKind {
    Arrival(usize),
    Deliver { link: usize, frame: Vec<u8> },
    Done {
        node: usize,
        sends: Vec<(usize, WireMessage)>,
        verdicts: Vec<(u64, ClientOutcome)>,
    },
}

struct Event {
    at: u64,
    tie: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.tie == other.tie
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; invert for earliest-first. Ties break
        // by insertion order, so execution is fully deterministic.
        (other.at, other.tie).cmp(&(self.at, self.tie))
    }
}

pub(super) struct Fabric<'a> {
    cost: &'a CostModel,
    faults: &'a FaultPlan,
    header_len: usize,
    nodes: Vec<Node>,
    links: Vec<Link>,
    heap: BinaryHeap<Event>,
    next_tie: u64,
    fault_rng: ProtocolRng,
    seq_to_trace: HashMap<u64, usize>,
    verdicts: Vec<(u64, u64, ClientOutcome)>,
    end_ns: u64,
}

const ENTRY_NODE: usize = 0;

impl<'a> Fabric<'a> {
    pub fn new(
        bundle: &SetupBundle,
        cost: &'a CostModel,
        faults: &'a FaultPlan,
        limits: ReassemblyLimits,
        entry_seed: u64,
        fault_seed: u64,
    ) -> Self {
        let t = bundle.entry.params.share_count as usize;
        let mut nodes = Vec::with_capacity(t + 2);
        nodes.push(Node {
            name: "entry".into(),
            station: Station::Entry(EntryState::new(
                bundle.entry.clone(),
                ProtocolRng::from_seed(entry_seed),
            )),
            queue: VecDeque::new(),
            capacity: cost.queue_capacity,
            workers: 1,
            busy: 0,
            drops: 0,
        });
        for p in &bundle.processors {
            nodes.push(Node {
                name: format!("processor{}", p.processor_id),
                station: Station::Proc(ProcessorState::new(p.clone())),
                queue: VecDeque::new(),
                capacity: cost.queue_capacity,
                workers: cost.processor_workers.max(1),
                busy: 0,
                drops: 0,
            });
        }
        let client_node = nodes.len();
        nodes.push(Node {
            name: "client".into(),
            station: Station::Client(ClientState::with_limits(bundle.client.clone(), limits)),
            queue: VecDeque::new(),
            capacity: cost.queue_capacity,
            workers: 1,
            busy: 0,
            drops: 0,
        });

        // Link layout: entry→processor j at j−1, entry→client at t, then
        // processor j→client at t+j.
        let mut links = Vec::with_capacity(2 * t + 1);
        for j in 1..=t {
            links.push(Link {
                to: j,
                busy_until: 0,
                traffic: LinkTraffic {
                    name: format!("entry->processor{j}"),
                    ..LinkTraffic::default()
                },
            });
        }
        links.push(Link {
            to: client_node,
            busy_until: 0,
            traffic: LinkTraffic {
                name: "entry->client".into(),
                ..LinkTraffic::default()
            },
        });
        for j in 1..=t {
            links.push(Link {
                to: client_node,
                busy_until: 0,
                traffic: LinkTraffic {
                    name: format!("processor{j}->client"),
                    ..LinkTraffic::default()
                },
            });
        }

        Fabric {
            cost,
            faults,
            header_len: bundle.entry.params.header_len,
            nodes,
            links,
            heap: BinaryHeap::new(),
            next_tie: 0,
            fault_rng: ProtocolRng::from_seed(fault_seed),
            seq_to_trace: HashMap::new(),
            verdicts: Vec::new(),
            end_ns: 0,
        }
    }

    fn push(&mut self, at: u64, kind: EventKind) {
        let tie = self.next_tie;
        self.next_tie += 1;
        self.heap.push(Event { at, tie, kind });
    }

    /// Runs the whole schedule to quiescence, then flushes the client's
    /// leftover slots.
    pub fn run(
        mut self,
        arrivals: &[(u64, Packet)],
    ) -> Result<SimOutput, TransportError> {
        for (i, (at, _)) in arrivals.iter().enumerate() {
            self.push(*at, EventKind::Arrival(i));
        }

        while let Some(ev) = self.heap.pop() {
            let now = ev.at;
            self.end_ns = now;
            match ev.kind {
                EventKind::Arrival(i) => {
                    let packet = arrivals[i].1.clone();
                    self.offer(ENTRY_NODE, WorkItem::Arrival(i, packet), now)?;
                }
                EventKind::Deliver { link, frame } => {
                    let msg = WireMessage::decode(&frame, self.header_len)?;
                    let to = self.links[link].to;
                    self.offer(to, WorkItem::Msg(msg), now)?;
                }
                EventKind::Done {
                    node,
                    sends,
                    verdicts,
                } => {
                    for (link, msg) in sends {
                        self.send(link, msg, now);
                    }
                    for (seq, outcome) in verdicts {
                        self.verdicts.push((now, seq, outcome));
                    }
                    self.nodes[node].busy -= 1;
                    self.try_start(node, now)?;
                }
            }
        }

        // Flush: age out anything still pending well past the deadline.
        let client_idx = self.nodes.len() - 1;
        let flush_at = self.end_ns.saturating_add(u64::MAX / 2);
        if let Station::Client(c) = &mut self.nodes[client_idx].station {
            c.expire(flush_at);
        }

        let mut entry_stats = EntryStats::default();
        let mut processor_stats = Vec::new();
        let mut client_stats = ClientStats::default();
        let mut queue_drops = Vec::new();
        let mut emitted = 0;
        for node in &self.nodes {
            queue_drops.push((node.name.clone(), node.drops));
            match &node.station {
                Station::Entry(e) => {
                    entry_stats = e.stats().clone();
                    emitted = entry_stats.real_packets + entry_stats.dummy_packets;
                }
                Station::Proc(p) => processor_stats.push(p.stats().clone()),
                Station::Client(c) => client_stats = c.stats().clone(),
            }
        }
        Ok(SimOutput {
            verdicts: self.verdicts,
            seq_to_trace: self.seq_to_trace,
            entry_stats,
            processor_stats,
            client_stats,
            queue_drops,
            links: self.links.into_iter().map(|l| l.traffic).collect(),
            end_ns: self.end_ns,
            emitted,
        })
    }

    /// Offers an item to a node's ingress queue; full queue drops it.
    fn offer(&mut self, node: usize, item: WorkItem, now: u64) -> Result<(), TransportError> {
        let n = &mut self.nodes[node];
        if n.queue.len() >= n.capacity {
            n.drops += 1;
            return Ok(());
        }
        n.queue.push_back(item);
        self.try_start(node, now)
    }

    fn try_start(&mut self, node: usize, now: u64) -> Result<(), TransportError> {
        while self.nodes[node].busy < self.nodes[node].workers
            && !self.nodes[node].queue.is_empty()
        {
            let item = self.nodes[node].queue.pop_front().unwrap();
            let (cost, sends, verdicts) = self.execute(node, item, now)?;
            self.nodes[node].busy += 1;
            self.push(
                now + cost,
                EventKind::Done {
                    node,
                    sends,
                    verdicts,
                },
            );
        }
        Ok(())
    }

    /// Performs the real work for one item and prices it. Outputs are held
    /// until the matching `Done` event so they enter the links at service
    /// completion time.
    #[allow(clippy::type_complexity)]
    fn execute(
        &mut self,
        node: usize,
        item: WorkItem,
        now: u64,
    ) -> Result<(u64, Vec<(usize, WireMessage)>, Vec<(u64, ClientOutcome)>), TransportError>
    {
        let t = self.links.len() / 2; // links = 2t + 1
        match (&mut self.nodes[node].station, item) {
            (Station::Entry(e), WorkItem::Arrival(idx, packet)) => {
                let emissions = e.ingest(&packet).map_err(TransportError::Role)?;
                let mut sends = Vec::new();
                for em in &emissions {
                    if em.is_real {
                        self.seq_to_trace.insert(em.seq, idx);
                    }
                    for m in &em.to_processors {
                        let link = m.processor_id as usize - 1;
                        sends.push((link, WireMessage::ToProcessor(m.clone())));
                    }
                    sends.push((t, WireMessage::ToClientPacket(em.to_client.clone())));
                }
                let cost = emissions.len() as u64 * self.cost.entry_emit_ns;
                Ok((cost, sends, Vec::new()))
            }
            (Station::Proc(p), WorkItem::Msg(WireMessage::ToProcessor(input))) => {
                let reply = p.handle(&input).map_err(TransportError::Role)?;
                let cost = self.cost.proc_fixed_ns
                    + reply.match_attempts as u64 * self.cost.hash_match_ns
                    + reply.actions_applied as u64 * self.cost.share_absorb_ns;
                let link = t + node; // node = processor id
                Ok((
                    cost,
                    vec![(link, WireMessage::ToClientShares(reply.message))],
                    Vec::new(),
                ))
            }
            (Station::Client(c), WorkItem::Msg(msg)) => {
                c.expire(now);
                let input = match msg {
                    WireMessage::ToClientPacket(m) => ClientInput::Packet(m),
                    WireMessage::ToClientShares(m) => ClientInput::Shares(m),
                    WireMessage::ToProcessor(_) => {
                        return Err(TransportError::Internal(
                            "processor-bound message delivered to client".into(),
                        ))
                    }
                };
                let seq = input.seq();
                let outcome = c.ingest(&input, now).map_err(TransportError::Role)?;
                let (cost, verdicts) = match outcome {
                    ClientOutcome::Pending => (self.cost.client_fragment_ns, Vec::new()),
                    decided => {
                        let merge = c.config().params.share_count as u64
                            * self.cost.merge_share_ns
                            + self.cost.unblind_ns;
                        (
                            self.cost.client_fragment_ns + merge,
                            vec![(seq, decided)],
                        )
                    }
                };
                Ok((cost, Vec::new(), verdicts))
            }
            _ => Err(TransportError::Internal(
                "message kind delivered to the wrong station".into(),
            )),
        }
    }

    /// Serializes one message onto a link, applying the fault plan.
    fn send(&mut self, link: usize, msg: WireMessage, now: u64) {
        let frame = msg.encode();
        let l = &mut self.links[link];
        l.traffic.messages += 1;
        l.traffic.bytes += frame.len() as u64;
        let tx = (frame.len() as u64 * self.cost.link_ps_per_byte).div_ceil(1000);
        let start = l.busy_until.max(now);
        l.busy_until = start + tx;
        let mut deliver_at = l.busy_until + self.cost.link_propagation_ns;

        if self.faults.is_active() {
            if self.fault_rng.ratio_event(self.faults.loss_ppm, 1_000_000) {
                self.links[link].traffic.lost += 1;
                return;
            }
            if self.fault_rng.ratio_event(self.faults.reorder_ppm, 1_000_000) {
                deliver_at += self.fault_rng.random_range(0..=self.faults.reorder_max_ns);
            }
            if self.fault_rng.ratio_event(self.faults.duplicate_ppm, 1_000_000) {
                self.links[link].traffic.duplicated += 1;
                self.push(
                    deliver_at + 500,
                    EventKind::Deliver {
                        link,
                        frame: frame.clone(),
                    },
                );
            }
        }
        self.push(deliver_at, EventKind::Deliver { link, frame });
    }
}
