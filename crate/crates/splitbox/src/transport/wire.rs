//! Datagram encoding for the three message kinds.
//!
//! Every message is one self-contained datagram (all integers big-endian):
//!
//! ```text
//! offset size  field
//!      0    2  magic "SB"
//!      2    1  wire version, currently 1
//!      3    1  kind: 1 to-processor, 2 to-client packet, 3 to-client shares
//!      4    8  sequence number
//!     12    4  counter index (1-based; 0 is invalid)
//!     16    1  processor id (destination for kind 1, sender for kind 3,
//!              must be 0 for kind 2)
//!     17    1  flag share (0 or 1; must be 0 for kind 2)
//!     18    4  body length in bytes
//!     22    …  body
//! ```
//!
//! Bodies (`hb` = ceil(header width / 8)):
//!
//! * **kind 1** (entry → processor): the blinded header bitmap, `hb` bytes.
//! * **kind 2** (entry → client): ingestion pad width u16, payload width in
//!   bits u32, the blinded header bitmap (`hb`), the payload bitmap.
//! * **kind 3** (processor → client): cumulative value bitmap then
//!   cumulative mask bitmap, `hb` each.
//!
//! Decoding is strict: wrong magic/version/kind, a non-bit flag, a zero
//! counter index, a processor id that breaks its kind's rule, a body length
//! that is not exactly right, nonzero bitmap padding bits, and trailing
//! bytes are all errors. The declared body length must also match the
//! actual remaining bytes, so a datagram cannot smuggle a second message.

use crate::bytes::{PutBytes, Reader, ShortRead};
use crate::nfmodel::{byte_len, BitString, ModelError, Packet};
use crate::protocol::{BlindIndex, CumulativeShare};
use crate::roles::{BlindedPacketMsg, ProcessorInput, ShareMessage};

const MAGIC: &[u8; 2] = b"SB";
const VERSION: u8 = 1;
pub const HEADER_BYTES: usize = 22;

const KIND_TO_PROCESSOR: u8 = 1;
const KIND_TO_CLIENT_PACKET: u8 = 2;
const KIND_TO_CLIENT_SHARES: u8 = 3;

/// Any message that can cross a link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WireMessage {
    ToProcessor(ProcessorInput),
    ToClientPacket(BlindedPacketMsg),
    ToClientShares(ShareMessage),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("not a protocol datagram (bad magic)")]
    BadMagic,
    #[error("unsupported wire version {0}")]
    BadVersion(u8),
    #[error("unknown message kind {0}")]
    BadKind(u8),
    #[error("flag byte {0} is not a bit")]
    BadFlag(u8),
    #[error("processor id {pid} invalid for message kind {kind}")]
    BadProcessorId { kind: u8, pid: u8 },
    #[error("counter index 0 is never valid on the wire")]
    ZeroIndex,
    #[error("declared body length {declared} but {actual} byte(s) follow")]
    BodyLength { declared: usize, actual: usize },
    #[error("body size {got} does not fit its kind (expected {expected})")]
    BodySize { expected: usize, got: usize },
    #[error("ingestion pad {pad} exceeds the {len}-bit header")]
    PadTooWide { pad: u16, len: usize },
    #[error("datagram truncated: needed {need} more byte(s), had {have}")]
    Truncated { need: usize, have: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<ShortRead> for WireError {
    fn from(s: ShortRead) -> Self {
        WireError::Truncated {
            need: s.need,
            have: s.have,
        }
    }
}

impl WireMessage {
    pub fn seq(&self) -> u64 {
        match self {
            WireMessage::ToProcessor(m) => m.seq,
            WireMessage::ToClientPacket(m) => m.seq,
            WireMessage::ToClientShares(m) => m.seq,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let (kind, seq, index, pid, flag) = match self {
            WireMessage::ToProcessor(m) => {
                (KIND_TO_PROCESSOR, m.seq, m.index, m.processor_id, m.flag_share)
            }
            WireMessage::ToClientPacket(m) => (KIND_TO_CLIENT_PACKET, m.seq, m.index, 0, 0),
            WireMessage::ToClientShares(m) => (
                KIND_TO_CLIENT_SHARES,
                m.seq,
                m.index,
                m.processor_id,
                m.flag_share,
            ),
        };
        let mut body = Vec::new();
        match self {
            WireMessage::ToProcessor(m) => body.put_slice(m.blinded_header.as_bytes()),
            WireMessage::ToClientPacket(m) => {
                body.put_u16(m.packet.pad_bits());
                body.put_u32(m.packet.payload().len() as u32);
                body.put_slice(m.packet.header().as_bytes());
                body.put_slice(m.packet.payload().as_bytes());
            }
            WireMessage::ToClientShares(m) => {
                body.put_slice(m.share.value.as_bytes());
                body.put_slice(m.share.mask.as_bytes());
            }
        }
        let mut out = Vec::with_capacity(HEADER_BYTES + body.len());
        out.put_slice(MAGIC);
        out.put_u8(VERSION);
        out.put_u8(kind);
        out.put_u64(seq);
        out.put_u32(index.value());
        out.put_u8(pid);
        out.put_u8(flag);
        out.put_u32(body.len() as u32);
        out.put_slice(&body);
        out
    }

    /// Decodes one datagram for a deployment with `header_len`-bit headers.
    pub fn decode(bytes: &[u8], header_len: usize) -> Result<WireMessage, WireError> {
        let hb = byte_len(header_len);
        let mut r = Reader::new(bytes);
        if r.take(2)? != MAGIC {
            return Err(WireError::BadMagic);
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(WireError::BadVersion(version));
        }
        let kind = r.u8()?;
        let seq = r.u64()?;
        let index_raw = r.u32()?;
        let pid = r.u8()?;
        let flag = r.u8()?;
        let declared = r.u32()? as usize;
        if declared != r.remaining() {
            return Err(WireError::BodyLength {
                declared,
                actual: r.remaining(),
            });
        }
        if flag > 1 {
            return Err(WireError::BadFlag(flag));
        }
        let index = BlindIndex::new(index_raw).map_err(|_| WireError::ZeroIndex)?;

        let msg = match kind {
            KIND_TO_PROCESSOR => {
                if pid == 0 {
                    return Err(WireError::BadProcessorId { kind, pid });
                }
                if declared != hb {
                    return Err(WireError::BodySize {
                        expected: hb,
                        got: declared,
                    });
                }
                let blinded_header = BitString::from_bytes(r.take(hb)?, header_len)?;
                WireMessage::ToProcessor(ProcessorInput {
                    seq,
                    index,
                    processor_id: pid,
                    blinded_header,
                    flag_share: flag,
                })
            }
            KIND_TO_CLIENT_PACKET => {
                if pid != 0 {
                    return Err(WireError::BadProcessorId { kind, pid });
                }
                if flag != 0 {
                    return Err(WireError::BadFlag(flag));
                }
                let pad_bits = r.u16()?;
                if pad_bits as usize > header_len {
                    return Err(WireError::PadTooWide {
                        pad: pad_bits,
                        len: header_len,
                    });
                }
                let payload_bits = r.u32()? as usize;
                let payload_bytes = byte_len(payload_bits);
                let expected = 2 + 4 + hb + payload_bytes;
                if declared != expected {
                    return Err(WireError::BodySize {
                        expected,
                        got: declared,
                    });
                }
                let header = BitString::from_bytes(r.take(hb)?, header_len)?;
                let payload = BitString::from_bytes(r.take(payload_bytes)?, payload_bits)?;
                WireMessage::ToClientPacket(BlindedPacketMsg {
                    seq,
                    index,
                    packet: Packet::from_wire_parts(header, payload, pad_bits),
                })
            }
            KIND_TO_CLIENT_SHARES => {
                if pid == 0 {
                    return Err(WireError::BadProcessorId { kind, pid });
                }
                if declared != 2 * hb {
                    return Err(WireError::BodySize {
                        expected: 2 * hb,
                        got: declared,
                    });
                }
                let value = BitString::from_bytes(r.take(hb)?, header_len)?;
                let mask = BitString::from_bytes(r.take(hb)?, header_len)?;
                WireMessage::ToClientShares(ShareMessage {
                    seq,
                    index,
                    processor_id: pid,
                    share: CumulativeShare { value, mask },
                    flag_share: flag,
                })
            }
            k => return Err(WireError::BadKind(k)),
        };
        debug_assert_eq!(r.remaining(), 0);
        Ok(msg)
    }
}

/// Upper bound on one encoded datagram for a deployment, used to size
/// receive buffers. The widest body is either a client-packet message with
/// `payload_bits` of payload or a share message (two header-width bitmaps).
pub fn max_datagram_len(header_len: usize, payload_bits: usize) -> usize {
    let hb = byte_len(header_len);
    let packet_body = 2 + 4 + hb + byte_len(payload_bits);
    HEADER_BYTES + packet_body.max(2 * hb)
}
