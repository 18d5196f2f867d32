//! The typed messages the three roles exchange. The transport layer owns
//! their byte encoding; everything here is already validated structure.

use crate::nfmodel::{BitString, Packet};
use crate::protocol::{BlindIndex, CumulativeShare};

/// Entry → one processor: a blinded header to evaluate.
///
/// `flag_share` is this processor's share of the real/dummy flag; it is
/// uniform on its own, so the processor learns nothing from it and must
/// echo it back to the client unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessorInput {
    pub seq: u64,
    pub index: BlindIndex,
    pub processor_id: u8,
    pub blinded_header: BitString,
    pub flag_share: u8,
}

/// Entry → client, on their direct link: the blinded packet itself. The
/// payload travels only here — processors never see it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlindedPacketMsg {
    pub seq: u64,
    pub index: BlindIndex,
    pub packet: Packet,
}

/// Processor → client: its accumulated share for one packet, plus the
/// echoed flag share.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareMessage {
    pub seq: u64,
    pub index: BlindIndex,
    pub processor_id: u8,
    pub share: CumulativeShare,
    pub flag_share: u8,
}

/// Anything the client can receive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClientInput {
    Packet(BlindedPacketMsg),
    Shares(ShareMessage),
}

impl ClientInput {
    pub fn seq(&self) -> u64 {
        match self {
            ClientInput::Packet(m) => m.seq,
            ClientInput::Shares(m) => m.seq,
        }
    }

    pub fn index(&self) -> BlindIndex {
        match self {
            ClientInput::Packet(m) => m.index,
            ClientInput::Shares(m) => m.index,
        }
    }
}

/// One entry emission: everything fanned out for one (real or dummy)
/// packet. `is_real` is the entry's private bookkeeping — on the wire that
/// bit exists only as the XOR of the per-processor flag shares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Emission {
    pub seq: u64,
    pub index: BlindIndex,
    pub is_real: bool,
    pub to_processors: Vec<ProcessorInput>,
    pub to_client: BlindedPacketMsg,
}
