//! Loopback-UDP deployment of the three roles.
//!
//! Same stations, same wire frames as the simulated fabric, but carried by
//! real `UdpSocket`s with one OS thread per station. End of stream is an
//! empty datagram per link: the entry sends one to every processor and to
//! the client once its traffic is out; each processor forwards one to the
//! client when it sees it; the client stops after collecting all of them
//! and draining quiet for a grace period. Content verdicts must agree with
//! a faultless fabric run seeded the same way — the test below holds the
//! two transports to that.

use std::collections::HashMap;
use std::net::UdpSocket;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use crate::nfmodel::Packet;
use crate::protocol::{ProtocolRng, SetupBundle};
use crate::roles::{
    ClientInput, ClientOutcome, ClientState, ClientStats, EntryState, EntryStats,
    ProcessorState, ProcessorStats, ReassemblyLimits,
};

use super::runner::TraceVerdict;
use super::wire::WireMessage;
use super::TransportError;

/// Outcome of one loopback deployment.
#[derive(Clone, Debug)]
pub struct UdpReport {
    /// One verdict per input packet, in input order.
    pub verdicts: Vec<TraceVerdict>,
    pub entry_stats: EntryStats,
    pub processor_stats: Vec<ProcessorStats>,
    pub client_stats: ClientStats,
    /// Frames put on the wire, fin markers excluded.
    pub datagrams_sent: u64,
}

const MAX_DATAGRAM: usize = 65_536;
const DRAIN_QUIET: Duration = Duration::from_millis(200);
const HARD_DEADLINE: Duration = Duration::from_secs(60);

/// Runs the topology over real loopback sockets. `pace` is the gap between
/// input packets at the entry; enough pacing keeps kernel socket buffers
/// from overflowing, since UDP gives no backpressure.
pub fn run_udp_topology(
    bundle: &SetupBundle,
    arrivals: &[Packet],
    entry_seed: u64,
    limits: ReassemblyLimits,
    pace: Duration,
) -> Result<UdpReport, TransportError> {
    let t = bundle.processors.len();
    let header_len = bundle.entry.params.header_len;

    let client_sock = UdpSocket::bind("127.0.0.1:0")?;
    client_sock.set_read_timeout(Some(DRAIN_QUIET))?;
    let client_addr = client_sock.local_addr()?;

    let mut proc_socks = Vec::with_capacity(t);
    let mut proc_addrs = Vec::with_capacity(t);
    for _ in 0..t {
        let s = UdpSocket::bind("127.0.0.1:0")?;
        s.set_read_timeout(Some(HARD_DEADLINE))?;
        proc_addrs.push(s.local_addr()?);
        proc_socks.push(s);
    }

    // Client first: it must be listening before anyone transmits.
    let client_cfg = bundle.client.clone();
    let fins_expected = t + 1;
    let client_handle = thread::spawn(move || -> Result<_, TransportError> {
        let mut client = ClientState::with_limits(client_cfg, limits);
        let mut outcomes: Vec<(u64, ClientOutcome)> = Vec::new();
        let mut buf = vec![0u8; MAX_DATAGRAM];
        let started = Instant::now();
        let mut fins = 0usize;
        loop {
            if started.elapsed() > HARD_DEADLINE {
                return Err(TransportError::Io("client drain deadline".into()));
            }
            let n = match client_sock.recv_from(&mut buf) {
                Ok((n, _)) => n,
                Err(e)
                    if e.kind() == std::io::ErrorKind::WouldBlock
                        || e.kind() == std::io::ErrorKind::TimedOut =>
                {
                    if fins >= fins_expected {
                        break; // all senders done and the line went quiet
                    }
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            if n == 0 {
                fins += 1;
                continue;
            }
            let now = started.elapsed().as_nanos() as u64;
            client.expire(now);
            let input = match WireMessage::decode(&buf[..n], header_len)? {
                WireMessage::ToClientPacket(m) => ClientInput::Packet(m),
                WireMessage::ToClientShares(m) => ClientInput::Shares(m),
                WireMessage::ToProcessor(_) => {
                    return Err(TransportError::Internal(
                        "processor frame reached the client port".into(),
                    ))
                }
            };
            let seq = input.seq();
            match client.ingest(&input, now)? {
                ClientOutcome::Pending => {}
                decided => outcomes.push((seq, decided)),
            }
        }
        client.expire(u64::MAX / 2);
        Ok((outcomes, client.stats().clone()))
    });

    // Processors: decode, evaluate, relay the share to the client.
    let mut proc_handles = Vec::with_capacity(t);
    for (i, sock) in proc_socks.into_iter().enumerate() {
        let cfg = bundle.processors[i].clone();
        let proc_handle = thread::spawn(move || -> Result<_, TransportError> {
            let mut proc = ProcessorState::new(cfg);
            let mut buf = vec![0u8; MAX_DATAGRAM];
            let mut sent = 0u64;
            loop {
                let (n, _) = sock.recv_from(&mut buf)?;
                if n == 0 {
                    sock.send_to(&[], client_addr)?;
                    break;
                }
                let input = match WireMessage::decode(&buf[..n], header_len)? {
                    WireMessage::ToProcessor(m) => m,
                    _ => {
                        return Err(TransportError::Internal(
                            "non-processor frame on a processor port".into(),
                        ))
                    }
                };
                let reply = proc.handle(&input)?;
                sock.send_to(&WireMessage::ToClientShares(reply.message).encode(), client_addr)?;
                sent += 1;
            }
            Ok((proc.stats().clone(), sent))
        });
        proc_handles.push(proc_handle);
    }

    // Entry feeds the trace from this thread's spawn to keep setup simple.
    let entry_cfg = bundle.entry.clone();
    let inputs: Vec<Packet> = arrivals.to_vec();
    let (trace_tx, trace_rx) = mpsc::channel();
    let entry_handle = thread::spawn(move || -> Result<_, TransportError> {
        let sock = UdpSocket::bind("127.0.0.1:0")?;
        let mut entry = EntryState::new(entry_cfg, ProtocolRng::from_seed(entry_seed));
        let mut seq_to_trace: HashMap<u64, usize> = HashMap::new();
        let mut sent = 0u64;
        for (idx, packet) in inputs.iter().enumerate() {
            for em in entry.ingest(packet)? {
                if em.is_real {
                    seq_to_trace.insert(em.seq, idx);
                }
                for m in &em.to_processors {
                    let addr = proc_addrs[m.processor_id as usize - 1];
                    sock.send_to(&WireMessage::ToProcessor(m.clone()).encode(), addr)?;
                    sent += 1;
                }
                sock.send_to(
                    &WireMessage::ToClientPacket(em.to_client).encode(),
                    client_addr,
                )?;
                sent += 1;
            }
            if !pace.is_zero() {
                thread::sleep(pace);
            }
        }
        for addr in &proc_addrs {
            sock.send_to(&[], *addr)?;
        }
        sock.send_to(&[], client_addr)?;
        trace_tx.send(seq_to_trace).ok();
        Ok((entry.stats().clone(), sent))
    });

    fn join<T>(h: thread::JoinHandle<Result<T, TransportError>>) -> Result<T, TransportError> {
        h.join()
            .map_err(|_| TransportError::Internal("worker thread panicked".into()))?
    }

    let (entry_stats, entry_sent) = join(entry_handle)?;
    let mut processor_stats = Vec::with_capacity(t);
    let mut relay_sent = 0u64;
    for h in proc_handles {
        let (stats, sent) = join(h)?;
        processor_stats.push(stats);
        relay_sent += sent;
    }
    let (outcomes, client_stats) = join(client_handle)?;
    let seq_to_trace = trace_rx
        .recv()
        .map_err(|_| TransportError::Internal("entry finished without a trace map".into()))?;

    let mut verdicts = vec![TraceVerdict::Lost; arrivals.len()];
    for (seq, outcome) in outcomes {
        let Some(&trace) = seq_to_trace.get(&seq) else {
            continue;
        };
        verdicts[trace] = match outcome {
            ClientOutcome::Forwarded { packet, .. } => TraceVerdict::Forwarded(packet),
            ClientOutcome::Dropped { .. } => TraceVerdict::Dropped,
            ClientOutcome::DummyDiscarded { .. } => {
                return Err(TransportError::Internal(
                    "a real emission came back flagged as dummy".into(),
                ))
            }
            ClientOutcome::Pending => unreachable!("pending outcomes are not recorded"),
        };
    }

    Ok(UdpReport {
        verdicts,
        entry_stats,
        processor_stats,
        client_stats,
        datagrams_sent: entry_sent + relay_sent,
    })
}
