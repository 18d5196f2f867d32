//! Synthetic traffic: seeded generators and the `SBTR` binary file form.
//!
//! Two generators cover the evaluation needs. [`generate_trace`] draws
//! free-form traffic from a [`TraceSpec`] — uniform tuples, payload sizes
//! spread evenly around a target mean. [`controlled_match_set`] instead
//! builds a (ruleset, trace) *pair* tuned so every packet scans exactly
//! `r` rules and then matches an accepting one: the knob the throughput
//! benchmarks turn when they plot cost against rules traversed.
//!
//! An all-zero 5-tuple encodes the same bits as the pipeline's drop
//! marker, so no generator ever emits one and the codec refuses to read
//! or write one.
//!
//! File layout, all integers big-endian:
//!
//! ```text
//! "SBTR" ‖ version u8 = 1 ‖ count u32 ‖ count × record
//! record = srcIP u32 ‖ dstIP u32 ‖ proto u8 ‖ sport u16 ‖ dport u16
//!          ‖ payloadBytes u32                            (17 bytes)
//! ```

use rand::Rng;

use crate::bytes::{PutBytes, Reader, ShortRead};
use crate::protocol::ProtocolRng;

use super::header::FiveTuple;
use super::rules::{FirewallRule, IpPattern, Verdict};

/// One trace record: who the packet claims to be, and how big its payload
/// is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub tuple: FiveTuple,
    pub payload_bytes: u32,
}

/// Knobs for [`generate_trace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceSpec {
    pub count: usize,
    /// Target mean payload size. Sizes are drawn uniformly from
    /// `mean/2 ..= 3*mean/2`, so the sample mean converges on this.
    pub mean_payload: u32,
}

impl Default for TraceSpec {
    fn default() -> Self {
        // Packets around a kilobyte, a plausible mix for border traffic.
        TraceSpec {
            count: 10_000,
            mean_payload: 1024,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("not a trace file: bad magic")]
    BadMagic,
    #[error("unsupported trace version {0}")]
    BadVersion(u8),
    #[error("trace file truncated: need {need} more bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("{0} bytes after the last record")]
    TrailingBytes(usize),
    #[error("record {index} has an all-zero 5-tuple, which collides with the drop marker")]
    ZeroHeader { index: usize },
}

impl From<ShortRead> for TraceError {
    fn from(s: ShortRead) -> Self {
        TraceError::Truncated {
            need: s.need,
            have: s.have,
        }
    }
}

const MAGIC: &[u8; 4] = b"SBTR";
const VERSION: u8 = 1;

fn is_zero(t: &FiveTuple) -> bool {
    *t == FiveTuple::default()
}

fn draw_payload(spec: &TraceSpec, rng: &mut ProtocolRng) -> u32 {
    let lo = spec.mean_payload / 2;
    let hi = spec.mean_payload + spec.mean_payload / 2;
    rng.random_range(lo..=hi)
}

/// Draws `spec.count` records with uniform tuples. Redraws the rare tuple
/// that comes out all zeros.
pub fn generate_trace(spec: &TraceSpec, rng: &mut ProtocolRng) -> Vec<TraceRecord> {
    (0..spec.count)
        .map(|_| {
            let tuple = loop {
                let t = FiveTuple {
                    src_ip: rng.random(),
                    dst_ip: rng.random(),
                    protocol: rng.random(),
                    src_port: rng.random(),
                    dst_port: rng.random(),
                };
                if !is_zero(&t) {
                    break t;
                }
            };
            TraceRecord {
                tuple,
                payload_bytes: draw_payload(spec, rng),
            }
        })
        .collect()
}

/// Builds a ruleset and a trace locked to each other: `r − 1` decoys that
/// can never match (they pin three leading source octets inside 240/8,
/// which the trace never uses) followed by one accepter every packet hits
/// (the trace shares its protocol and ports). The reference filter thus
/// reports exactly `r` attempts per packet and zero drops.
///
/// Decoys pin 24 bits and the accepter 40, so the pair clears the default
/// match-weight floor. `r` must be at least 1 and at most 65 537.
pub fn controlled_match_set(
    r: usize,
    spec: &TraceSpec,
    rng: &mut ProtocolRng,
) -> (Vec<FirewallRule>, Vec<TraceRecord>) {
    assert!(r >= 1, "need at least the accepting rule");
    assert!(r - 1 <= 0x1_0000, "only 2^16 distinct decoy prefixes");
    const PROTO: u8 = 6;
    const SPORT: u16 = 9999;
    const DPORT: u16 = 80;

    let mut rules: Vec<FirewallRule> = (0..r - 1)
        .map(|i| FirewallRule {
            verdict: Verdict::Drop, // would be loud if one ever matched
            src: IpPattern::new(0xf000_0000 | ((i as u32) << 8), 0xffff_ff00),
            dst: IpPattern::ANY,
            protocol: None,
            src_port: None,
            dst_port: None,
            line: i + 1,
        })
        .collect();
    rules.push(FirewallRule {
        verdict: Verdict::Allow,
        src: IpPattern::ANY,
        dst: IpPattern::ANY,
        protocol: Some(PROTO),
        src_port: Some(SPORT),
        dst_port: Some(DPORT),
        line: r,
    });

    let trace = (0..spec.count)
        .map(|_| {
            // Any source outside 240/8; the fixed ports make the accepter
            // a guaranteed hit, and the tuple can never be all zeros.
            let src_ip = loop {
                let ip: u32 = rng.random();
                if ip >> 28 != 0xf {
                    break ip;
                }
            };
            TraceRecord {
                tuple: FiveTuple {
                    src_ip,
                    dst_ip: rng.random(),
                    protocol: PROTO,
                    src_port: SPORT,
                    dst_port: DPORT,
                },
                payload_bytes: draw_payload(spec, rng),
            }
        })
        .collect();
    (rules, trace)
}

/// Draws a ruleset for randomized testing. Every rule pins at least 16
/// header bits (a /16 or longer source prefix, often ports or a protocol
/// on top), so the set clears the default match-weight floor without any
/// override. Verdicts alternate randomly.
pub fn random_ruleset(count: usize, rng: &mut ProtocolRng) -> Vec<FirewallRule> {
    (0..count)
        .map(|i| {
            let mask = match rng.random_range(0..4u32) {
                0 => 0xffff_0000,
                1 => 0xffff_ff00,
                2 => 0xffff_ffff,
                _ => 0xff00_00ff, // first and last octet pinned
            };
            FirewallRule {
                verdict: if rng.random_range(0..2u32) == 0 {
                    Verdict::Allow
                } else {
                    Verdict::Drop
                },
                src: IpPattern::new(rng.random(), mask),
                dst: if rng.random_range(0..2u32) == 0 {
                    IpPattern::ANY
                } else {
                    IpPattern::new(rng.random(), 0xff00_0000)
                },
                protocol: if rng.random_range(0..2u32) == 0 {
                    None
                } else {
                    Some(if rng.random_range(0..2u32) == 0 { 6 } else { 17 })
                },
                src_port: None,
                dst_port: if rng.random_range(0..3u32) == 0 {
                    Some(rng.random_range(1..1024u32) as u16)
                } else {
                    None
                },
                line: i + 1,
            }
        })
        .collect()
}

/// A trace aimed at a ruleset: roughly `hit_ppm` of records are engineered
/// to satisfy a uniformly chosen rule (free bits random), the rest drawn
/// uniformly. Uniform tuples almost never collide with 16-bit-plus
/// patterns, so without this bias a randomized run would exercise nothing
/// but the fall-through path.
pub fn biased_trace(
    rules: &[FirewallRule],
    hit_ppm: u32,
    spec: &TraceSpec,
    rng: &mut ProtocolRng,
) -> Vec<TraceRecord> {
    (0..spec.count)
        .map(|_| {
            let tuple = loop {
                let t = if !rules.is_empty() && rng.ratio_event(hit_ppm, 1_000_000) {
                    let r = &rules[rng.random_range(0..rules.len() as u32) as usize];
                    let free: u32 = rng.random();
                    FiveTuple {
                        src_ip: r.src.value() | (free & !r.src.mask()),
                        dst_ip: r.dst.value() | (rng.random::<u32>() & !r.dst.mask()),
                        protocol: r.protocol.unwrap_or_else(|| rng.random()),
                        src_port: r.src_port.unwrap_or_else(|| rng.random()),
                        dst_port: r.dst_port.unwrap_or_else(|| rng.random()),
                    }
                } else {
                    FiveTuple {
                        src_ip: rng.random(),
                        dst_ip: rng.random(),
                        protocol: rng.random(),
                        src_port: rng.random(),
                        dst_port: rng.random(),
                    }
                };
                if !is_zero(&t) {
                    break t;
                }
            };
            TraceRecord {
                tuple,
                payload_bytes: draw_payload(spec, rng),
            }
        })
        .collect()
}

/// Serializes a trace. Refuses an all-zero record rather than write a file
/// the decoder would reject.
pub fn encode_trace(records: &[TraceRecord]) -> Result<Vec<u8>, TraceError> {
    let mut out = Vec::with_capacity(9 + records.len() * 17);
    out.extend_from_slice(MAGIC);
    out.put_u8(VERSION);
    out.put_u32(records.len() as u32);
    for (index, rec) in records.iter().enumerate() {
        if is_zero(&rec.tuple) {
            return Err(TraceError::ZeroHeader { index });
        }
        out.extend_from_slice(&rec.tuple.to_bytes());
        out.put_u32(rec.payload_bytes);
    }
    Ok(out)
}

/// Reads a trace file back. Strict: magic, version, the declared count,
/// no stray bytes, no all-zero tuples.
pub fn decode_trace(bytes: &[u8]) -> Result<Vec<TraceRecord>, TraceError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(TraceError::BadMagic);
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(TraceError::BadVersion(version));
    }
    let count = r.u32()? as usize;
    let mut records = Vec::new();
    for index in 0..count {
        let tuple: [u8; 13] = r.take(13)?.try_into().unwrap();
        let tuple = FiveTuple::from_bytes(&tuple);
        if is_zero(&tuple) {
            return Err(TraceError::ZeroHeader { index });
        }
        records.push(TraceRecord {
            tuple,
            payload_bytes: r.u32()?,
        });
    }
    let extra = r.remaining();
    if extra != 0 {
        return Err(TraceError::TrailingBytes(extra));
    }
    Ok(records)
}
