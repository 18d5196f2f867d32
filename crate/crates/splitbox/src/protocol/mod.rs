//! The split-evaluation protocol: setup artifacts and the per-packet
//! operations each party runs.
//!
//! Parties and their per-packet duties:
//!
//! * the **entry** blinds each arriving header with the next table pad and
//!   fans out one message per processor plus the blinded packet for the
//!   client ([`split_packet`]), occasionally interleaving dummy packets;
//! * each **processor** walks its id-only tree over the blinded header,
//!   deciding every on-path match by digest comparison ([`compute_match`])
//!   and XOR-accumulating its share of every on-path action
//!   ([`compute_action`], [`private_traversal`]);
//! * the **client** XORs the processors' accumulated shares, unblinds, and
//!   applies the combined overwrite ([`merge_shares`]).
//!
//! An all-zero merged header is the drop marker. A real packet whose final
//! header is legitimately all zeros is therefore indistinguishable from a
//! drop; deployments must treat the all-zero header as reserved (the
//! bundled trace generators never produce one).

mod audit;
mod config;
mod hash;
mod private_tree;
mod rng;
mod shares;
mod tables;
pub mod bundle;

pub use audit::{audit_processor_view, AuditReport, SecretInventory};
pub use config::{global_setup, ClientConfig, EntryConfig, ProcessorConfig, SetupBundle};
pub use hash::{digest, HashAlgo};
pub use private_tree::{
    strip_tree, ActionId, MatchId, PrivateBranch, PrivateNode, PrivatePolicyTree, TreeSplit,
};
pub use rng::ProtocolRng;
pub use shares::{merge_flag, split_action, split_flag, ActionShare, CumulativeShare};
pub use tables::{BlindIndex, BlindTable, HashedMatchTable};

use crate::nfmodel::{mask, BitString, ModelError, Packet, TriStateString};
use rand::RngCore;

/// Ratio of real packets among emitted packets, as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub num: u32,
    pub den: u32,
}

impl Ratio {
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self, ProtocolError> {
        let r = Ratio { num, den };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.den == 0 || self.num == 0 || self.num > self.den {
            return Err(ProtocolError::BadRatio {
                num: self.num,
                den: self.den,
            });
        }
        Ok(())
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Deployment-wide constants. Every party holds an identical copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolParams {
    /// Header width `n` in bits. Fixed per deployment; shorter inputs are
    /// zero-prefixed.
    pub header_len: usize,
    /// Blind table length `l`. The counter wraps here.
    pub blind_count: u32,
    /// Number of processors `t` (= shares per action). At least 2.
    pub share_count: u32,
    /// Digest width `q` in bits stored per table cell.
    pub digest_bits: u32,
    /// Weakest match weight installable without the override. Matches fixing
    /// fewer bits are trivially guessable from their public projection.
    pub min_match_weight: u32,
    /// Fraction of emitted packets that are real; the rest are dummies.
    pub real_ratio: Ratio,
    pub hash: HashAlgo,
    pub allow_weak_matches: bool,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            header_len: 104,
            blind_count: 1024,
            share_count: 2,
            digest_bits: 160,
            min_match_weight: 16,
            real_ratio: Ratio::ONE,
            hash: HashAlgo::Sha1,
            allow_weak_matches: false,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.header_len == 0 || self.header_len > u16::MAX as usize {
            return Err(ProtocolError::BadHeaderLen(self.header_len));
        }
        if self.blind_count == 0 {
            return Err(ProtocolError::NoBlinds);
        }
        if self.share_count < 2 || self.share_count > u8::MAX as u32 {
            return Err(ProtocolError::BadShareCount(self.share_count));
        }
        if self.digest_bits == 0
            || !self.digest_bits.is_multiple_of(8)
            || self.digest_bits > self.hash.max_digest_bits()
        {
            return Err(ProtocolError::BadDigestBits {
                bits: self.digest_bits,
                max: self.hash.max_digest_bits(),
            });
        }
        self.real_ratio.validate()?;
        Ok(())
    }

    /// Packed header width in bytes.
    pub fn header_bytes(&self) -> usize {
        crate::nfmodel::byte_len(self.header_len)
    }
}

/// Errors raised by setup and the per-packet operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("header width must be 1..=65535 bits, got {0}")]
    BadHeaderLen(usize),
    #[error("blind table needs at least one entry")]
    NoBlinds,
    #[error("blind table entries have differing widths")]
    RaggedBlinds,
    #[error("processor count must be 2..=255, got {0}")]
    BadShareCount(u32),
    #[error("digest width {bits} unusable (need a multiple of 8 in 8..={max})")]
    BadDigestBits { bits: u32, max: u32 },
    #[error("real-packet ratio {num}/{den} must satisfy 0 < num ≤ den")]
    BadRatio { num: u32, den: u32 },
    #[error("match {index} fixes {weight} bits, below the floor {min}; weak matches are guessable from their projection — set the override to install anyway")]
    WeakMatch { index: usize, weight: u32, min: u32 },
    #[error("counter index {index} outside the table of {count} blinds")]
    IndexOutOfRange { index: u32, count: u32 },
    #[error("counter index 0 is never valid")]
    ZeroIndex,
    #[error("unknown match id {0}")]
    UnknownMatch(u32),
    #[error("unknown action id {0}")]
    UnknownAction(u32),
    #[error("expected {expected} cumulative shares, got {got}")]
    ShareCount { expected: usize, got: usize },
    #[error("digest grid shape disagrees with its dimensions")]
    TableShape,
    #[error("policy tree rejected: {0}")]
    InvalidTree(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Builds the blind table and digest grid for a bare match list (no tree).
/// Enforces the match-weight floor unless the params override it.
pub fn setup_lookup_tables(
    params: &ProtocolParams,
    matches: &[TriStateString],
    rng: &mut ProtocolRng,
) -> Result<(BlindTable, HashedMatchTable), ProtocolError> {
    params.validate()?;
    config::check_match_weights(params, matches)?;
    let blinds = BlindTable::generate(params.header_len, params.blind_count, rng);
    let table = HashedMatchTable::build(params.hash, params.digest_bits, &blinds, matches)?;
    Ok((blinds, table))
}

/// The public residue of a match: its projection. Everything else about the
/// match reaches processors only through digests.
pub fn hide_match(m: &TriStateString) -> BitString {
    m.projection()
}

/// Entry-side blinding: XORs pad `index` onto the header. Returns the bare
/// blinded header for the processors and the blinded packet (header
/// swapped, payload untouched) for the client.
pub fn split_packet(
    packet: &Packet,
    index: BlindIndex,
    blinds: &BlindTable,
) -> Result<(BitString, Packet), ProtocolError> {
    if packet.header_len() != blinds.header_len() {
        return Err(ProtocolError::Model(ModelError::LengthMismatch {
            expected: blinds.header_len(),
            got: packet.header_len(),
        }));
    }
    let blinded = packet.header().xor(blinds.blind(index)?);
    Ok((blinded.clone(), packet.with_header(blinded)))
}

/// Processor-side match test: masks the blinded header with the match's
/// public projection, hashes, and compares against cell `(index, match_id)`.
/// Equal digests mean the plaintext header satisfies the match (up to hash
/// collision).
pub fn compute_match(
    params: &ProtocolParams,
    table: &HashedMatchTable,
    projection: &BitString,
    blinded_header: &BitString,
    index: BlindIndex,
    match_id: MatchId,
) -> Result<bool, ProtocolError> {
    let masked = mask(projection, blinded_header)?;
    let got = digest(params.hash, params.digest_bits, masked.as_bytes());
    Ok(got.as_slice() == table.digest_at(index, match_id)?)
}

/// Processor-side action step: XOR the share into the packet's running
/// accumulator.
pub fn compute_action(cumulative: &mut CumulativeShare, share: &ActionShare) {
    cumulative.absorb(share);
}

/// What one processor reports for one packet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraversalOutcome {
    pub index: BlindIndex,
    pub share: CumulativeShare,
    /// Digest comparisons actually performed (one per branch on the path).
    pub match_attempts: u32,
    /// Action shares absorbed (one per node on the path).
    pub actions_applied: u32,
}

/// Walks the id-only tree over a blinded header: absorbs the action share at
/// every visited node, decides each branch by digest comparison, stops at
/// the first leaf. Matches off the taken path are never evaluated.
pub fn private_traversal(
    cfg: &ProcessorConfig,
    blinded_header: &BitString,
    index: BlindIndex,
) -> Result<TraversalOutcome, ProtocolError> {
    if blinded_header.len() != cfg.params.header_len {
        return Err(ProtocolError::Model(ModelError::LengthMismatch {
            expected: cfg.params.header_len,
            got: blinded_header.len(),
        }));
    }
    let mut share = CumulativeShare::zero(cfg.params.header_len);
    let mut match_attempts = 0u32;
    let mut actions_applied = 0u32;
    let mut at = cfg.tree.root();
    loop {
        let node = cfg.tree.node(at);
        let action = cfg
            .action_shares
            .get(node.action as usize)
            .ok_or(ProtocolError::UnknownAction(node.action))?;
        compute_action(&mut share, action);
        actions_applied += 1;
        match &node.branch {
            None => {
                return Ok(TraversalOutcome {
                    index,
                    share,
                    match_attempts,
                    actions_applied,
                })
            }
            Some(b) => {
                let projection = cfg
                    .match_projections
                    .get(b.matcher as usize)
                    .ok_or(ProtocolError::UnknownMatch(b.matcher))?;
                let hit = compute_match(
                    &cfg.params,
                    &cfg.match_table,
                    projection,
                    blinded_header,
                    index,
                    b.matcher,
                )?;
                match_attempts += 1;
                at = if hit { b.hit } else { b.miss };
            }
        }
    }
}

/// The client's verdict for one reconstructed packet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergeOutcome {
    Forward(Packet),
    Drop,
}

/// Client-side merge: XORs the processors' accumulated share pairs,
/// unblinds the header with pad `index`, overwrites the bits the combined
/// mask selects, and drops iff the resulting header is all zeros.
pub fn merge_shares(
    cfg: &ClientConfig,
    blinded: &Packet,
    index: BlindIndex,
    shares: &[CumulativeShare],
) -> Result<MergeOutcome, ProtocolError> {
    let n = cfg.params.header_len;
    if shares.len() != cfg.params.share_count as usize {
        return Err(ProtocolError::ShareCount {
            expected: cfg.params.share_count as usize,
            got: shares.len(),
        });
    }
    if blinded.header_len() != n {
        return Err(ProtocolError::Model(ModelError::LengthMismatch {
            expected: n,
            got: blinded.header_len(),
        }));
    }
    let mut value = BitString::zeros(n);
    let mut write_mask = BitString::zeros(n);
    for s in shares {
        if s.len() != n {
            return Err(ProtocolError::Model(ModelError::LengthMismatch {
                expected: n,
                got: s.len(),
            }));
        }
        value.xor_assign(&s.value);
        write_mask.xor_assign(&s.mask);
    }
    let mut header = blinded.header().xor(cfg.blinds.blind(index)?);
    header.overwrite_masked(&value, &write_mask);
    if header.is_zero() {
        return Ok(MergeOutcome::Drop);
    }
    Ok(MergeOutcome::Forward(blinded.with_header(header)))
}

/// A dummy packet: uniform header and payload, indistinguishable on the
/// wire from real traffic once blinded.
pub fn make_dummy_packet(
    header_len: usize,
    payload_bits: usize,
    rng: &mut dyn RngCore,
) -> Packet {
    Packet::new(
        BitString::random(header_len, rng),
        BitString::random(payload_bits, rng),
    )
}
