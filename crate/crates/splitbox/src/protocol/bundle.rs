//! Binary container for per-role configs, so setup output can be moved to
//! the machines that run each role.
//!
//! One file holds one role's view. Byte layout (all integers big-endian):
//!
//! ```text
//! offset size  field
//!      0    4  magic "SPBX"
//!      4    2  container version, currently 1
//!      6    1  role tag: 1 entry, 2 processor, 3 client
//!      7    1  hash tag: 1 SHA-1, 2 SHA-256
//!      8    4  header width in bits
//!     12    4  blind table length
//!     16    4  processor count
//!     20    4  digest width in bits
//!     24    4  minimum match weight
//!     28    4  real-ratio numerator
//!     32    4  real-ratio denominator
//!     36    1  flags: bit0 weak-match override, bit1 seed recorded
//!     37    8  setup seed (zero and ignored unless flag bit1)
//!     45    …  role section
//! ```
//!
//! Role sections (`hb` = header bytes = ceil(header width / 8)):
//!
//! * **entry**: the blind table, `blind_count × hb` raw bytes in index order.
//! * **processor**: id u8 · node count u32 · nodes in id order (action id
//!   u32, branch? u8, and if 1: match id u32, miss u32, hit u32) ·
//!   match count u32 · projections (`match_count × hb`) · digest grid
//!   (`blind_count × match_count × digest_bytes`, row-major by blind) ·
//!   action count u32 · shares (value then mask, `hb` each, in id order).
//! * **client**: the blind table as for the entry, then match count u32 and
//!   action count u32.
//!
//! Decoding is strict: unknown flag bits, out-of-range ids, nonzero padding
//! bits in any bitmap, and trailing bytes are all rejected.

use crate::bytes::{PutBytes, Reader, ShortRead};
use crate::nfmodel::{BitString, ModelError};

use super::config::{ClientConfig, EntryConfig, ProcessorConfig, SetupBundle};
use super::hash::HashAlgo;
use super::private_tree::{PrivateBranch, PrivateNode, PrivatePolicyTree};
use super::shares::ActionShare;
use super::tables::{BlindTable, HashedMatchTable};
use super::{ProtocolError, ProtocolParams, Ratio};

const MAGIC: &[u8; 4] = b"SPBX";
const VERSION: u16 = 1;

const ROLE_ENTRY: u8 = 1;
const ROLE_PROCESSOR: u8 = 2;
const ROLE_CLIENT: u8 = 3;

const FLAG_WEAK_OVERRIDE: u8 = 1 << 0;
const FLAG_SEED: u8 = 1 << 1;
const KNOWN_FLAGS: u8 = FLAG_WEAK_OVERRIDE | FLAG_SEED;

/// Any single role's config, as stored in one container file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoleConfig {
    Entry(EntryConfig),
    Processor(ProcessorConfig),
    Client(ClientConfig),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BundleError {
    #[error("not a config container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown role tag {0}")]
    BadRole(u8),
    #[error("unknown hash tag {0}")]
    BadHash(u8),
    #[error("unknown flag bits in {0:#04x}")]
    BadFlags(u8),
    #[error("container truncated: needed {need} more byte(s), had {have}")]
    Truncated { need: usize, have: usize },
    #[error("{0} trailing byte(s) after container end")]
    TrailingBytes(usize),
    #[error("field `{field}` has invalid value {value}")]
    BadField { field: &'static str, value: u64 },
    #[error("{what} id {id} out of range (count {count})")]
    IdOutOfRange { what: &'static str, id: u32, count: u32 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<ShortRead> for BundleError {
    fn from(s: ShortRead) -> Self {
        BundleError::Truncated {
            need: s.need,
            have: s.have,
        }
    }
}

impl RoleConfig {
    pub fn role_name(&self) -> &'static str {
        match self {
            RoleConfig::Entry(_) => "entry",
            RoleConfig::Processor(_) => "processor",
            RoleConfig::Client(_) => "client",
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        match self {
            RoleConfig::Entry(c) => &c.params,
            RoleConfig::Processor(c) => &c.params,
            RoleConfig::Client(c) => &c.params,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let (role, params, seed) = match self {
            RoleConfig::Entry(c) => (ROLE_ENTRY, &c.params, c.setup_seed),
            RoleConfig::Processor(c) => (ROLE_PROCESSOR, &c.params, c.setup_seed),
            RoleConfig::Client(c) => (ROLE_CLIENT, &c.params, c.setup_seed),
        };
        let mut out = Vec::new();
        out.put_slice(MAGIC);
        out.put_u16(VERSION);
        out.put_u8(role);
        out.put_u8(params.hash.tag());
        out.put_u32(params.header_len as u32);
        out.put_u32(params.blind_count);
        out.put_u32(params.share_count);
        out.put_u32(params.digest_bits);
        out.put_u32(params.min_match_weight);
        out.put_u32(params.real_ratio.num);
        out.put_u32(params.real_ratio.den);
        let mut flags = 0u8;
        if params.allow_weak_matches {
            flags |= FLAG_WEAK_OVERRIDE;
        }
        if seed.is_some() {
            flags |= FLAG_SEED;
        }
        out.put_u8(flags);
        out.put_u64(seed.unwrap_or(0));
        match self {
            RoleConfig::Entry(c) => put_blinds(&mut out, &c.blinds),
            RoleConfig::Processor(c) => {
                out.put_u8(c.processor_id);
                out.put_u32(c.tree.node_count() as u32);
                for (_, node) in c.tree.nodes() {
                    out.put_u32(node.action);
                    match &node.branch {
                        None => out.put_u8(0),
                        Some(b) => {
                            out.put_u8(1);
                            out.put_u32(b.matcher);
                            out.put_u32(b.miss);
                            out.put_u32(b.hit);
                        }
                    }
                }
                out.put_u32(c.match_projections.len() as u32);
                for p in &c.match_projections {
                    out.put_slice(p.as_bytes());
                }
                out.put_slice(c.match_table.cells());
                out.put_u32(c.action_shares.len() as u32);
                for s in &c.action_shares {
                    out.put_slice(s.value.as_bytes());
                    out.put_slice(s.mask.as_bytes());
                }
            }
            RoleConfig::Client(c) => {
                put_blinds(&mut out, &c.blinds);
                out.put_u32(c.match_count);
                out.put_u32(c.action_count);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<RoleConfig, BundleError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(BundleError::BadMagic);
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(BundleError::UnsupportedVersion(version));
        }
        let role = r.u8()?;
        let hash_tag = r.u8()?;
        let hash = HashAlgo::from_tag(hash_tag).ok_or(BundleError::BadHash(hash_tag))?;
        let header_len = r.u32()? as usize;
        let blind_count = r.u32()?;
        let share_count = r.u32()?;
        let digest_bits = r.u32()?;
        let min_match_weight = r.u32()?;
        let num = r.u32()?;
        let den = r.u32()?;
        let flags = r.u8()?;
        if flags & !KNOWN_FLAGS != 0 {
            return Err(BundleError::BadFlags(flags));
        }
        let seed_raw = r.u64()?;
        let setup_seed = (flags & FLAG_SEED != 0).then_some(seed_raw);
        let params = ProtocolParams {
            header_len,
            blind_count,
            share_count,
            digest_bits,
            min_match_weight,
            real_ratio: Ratio { num, den },
            hash,
            allow_weak_matches: flags & FLAG_WEAK_OVERRIDE != 0,
        };
        params.validate().map_err(BundleError::Protocol)?;

        let cfg = match role {
            ROLE_ENTRY => {
                let blinds = take_blinds(&mut r, &params)?;
                RoleConfig::Entry(EntryConfig {
                    params,
                    setup_seed,
                    blinds,
                })
            }
            ROLE_PROCESSOR => {
                let hb = params.header_bytes();
                let processor_id = r.u8()?;
                if processor_id == 0 || processor_id as u32 > params.share_count {
                    return Err(BundleError::BadField {
                        field: "processor_id",
                        value: processor_id as u64,
                    });
                }
                let node_count = r.u32()?;
                if node_count == 0 {
                    return Err(BundleError::BadField {
                        field: "node_count",
                        value: 0,
                    });
                }
                let mut nodes = Vec::new();
                for _ in 0..node_count {
                    let action = r.u32()?;
                    let branch = match r.u8()? {
                        0 => None,
                        1 => Some(PrivateBranch {
                            matcher: r.u32()?,
                            miss: r.u32()?,
                            hit: r.u32()?,
                        }),
                        v => {
                            return Err(BundleError::BadField {
                                field: "has_branch",
                                value: v as u64,
                            })
                        }
                    };
                    nodes.push(PrivateNode { action, branch });
                }
                let match_count = r.u32()?;
                let mut match_projections = Vec::new();
                for _ in 0..match_count {
                    match_projections
                        .push(BitString::from_bytes(r.take(hb)?, params.header_len)?);
                }
                let digest_len = (params.digest_bits / 8) as usize;
                let grid_len = (params.blind_count as usize)
                    .checked_mul(match_count as usize)
                    .and_then(|x| x.checked_mul(digest_len))
                    .ok_or(BundleError::Truncated {
                        need: usize::MAX,
                        have: r.remaining(),
                    })?;
                let cells = r.take(grid_len)?.to_vec();
                let match_table = HashedMatchTable::from_raw(
                    params.blind_count,
                    match_count,
                    digest_len,
                    cells,
                )?;
                let action_count = r.u32()?;
                let mut action_shares = Vec::new();
                for _ in 0..action_count {
                    let value = BitString::from_bytes(r.take(hb)?, params.header_len)?;
                    let mask = BitString::from_bytes(r.take(hb)?, params.header_len)?;
                    action_shares.push(ActionShare { value, mask });
                }
                for node in &nodes {
                    if node.action >= action_count {
                        return Err(BundleError::IdOutOfRange {
                            what: "action",
                            id: node.action,
                            count: action_count,
                        });
                    }
                    if let Some(b) = &node.branch {
                        if b.matcher >= match_count {
                            return Err(BundleError::IdOutOfRange {
                                what: "match",
                                id: b.matcher,
                                count: match_count,
                            });
                        }
                        for child in [b.miss, b.hit] {
                            if child >= node_count {
                                return Err(BundleError::IdOutOfRange {
                                    what: "node",
                                    id: child,
                                    count: node_count,
                                });
                            }
                        }
                    }
                }
                RoleConfig::Processor(ProcessorConfig {
                    params,
                    setup_seed,
                    processor_id,
                    tree: PrivatePolicyTree::from_nodes(nodes),
                    match_projections,
                    match_table,
                    action_shares,
                })
            }
            ROLE_CLIENT => {
                let blinds = take_blinds(&mut r, &params)?;
                let match_count = r.u32()?;
                let action_count = r.u32()?;
                RoleConfig::Client(ClientConfig {
                    params,
                    setup_seed,
                    blinds,
                    match_count,
                    action_count,
                })
            }
            t => return Err(BundleError::BadRole(t)),
        };
        r.finish().map_err(BundleError::TrailingBytes)?;
        Ok(cfg)
    }
}

fn put_blinds(out: &mut Vec<u8>, blinds: &BlindTable) {
    for b in blinds.iter() {
        out.put_slice(b.as_bytes());
    }
}

fn take_blinds(r: &mut Reader, params: &ProtocolParams) -> Result<BlindTable, BundleError> {
    let hb = params.header_bytes();
    let mut blinds = Vec::new();
    for _ in 0..params.blind_count {
        blinds.push(BitString::from_bytes(r.take(hb)?, params.header_len)?);
    }
    Ok(BlindTable::from_blinds(blinds)?)
}

/// Encodes a whole setup as (suggested file name, bytes) pairs: the entry
/// first, then each processor by id, then the client.
pub fn encode_setup(bundle: &SetupBundle) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    out.push((
        "entry.spbx".to_string(),
        RoleConfig::Entry(bundle.entry.clone()).encode(),
    ));
    for p in &bundle.processors {
        out.push((
            format!("processor{}.spbx", p.processor_id),
            RoleConfig::Processor(p.clone()).encode(),
        ));
    }
    out.push((
        "client.spbx".to_string(),
        RoleConfig::Client(bundle.client.clone()).encode(),
    ));
    out
}
