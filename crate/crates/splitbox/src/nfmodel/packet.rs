//! Packets: a fixed-width header followed by an arbitrary payload.

use super::bits::BitString;
use super::tristate::TriStateString;
use super::ModelError;

/// A packet as the filter sees it. The header is exactly the deployment's
/// header width; everything after it is opaque payload. Inputs shorter than
/// the header width are zero-prefixed on ingestion and the pad width is
/// remembered so the prefix can be stripped again on egress.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Packet {
    header: BitString,
    payload: BitString,
    pad_bits: u16,
}

impl Packet {
    pub fn new(header: BitString, payload: BitString) -> Self {
        Packet {
            header,
            payload,
            pad_bits: 0,
        }
    }

    /// Splits a raw bit string into header and payload for a deployment with
    /// `header_len`-bit headers, zero-prefixing inputs that are too short.
    pub fn from_bits(x: &BitString, header_len: usize) -> Self {
        if x.len() >= header_len {
            Packet {
                header: x.prefix(header_len),
                payload: x.suffix_from(header_len),
                pad_bits: 0,
            }
        } else {
            let pad = header_len - x.len();
            Packet {
                header: BitString::zeros(pad).concat(x),
                payload: BitString::zeros(0),
                pad_bits: pad as u16,
            }
        }
    }

    /// Reassembles the raw bit string, stripping any ingestion pad.
    pub fn to_bits(&self) -> BitString {
        self.header
            .suffix_from(self.pad_bits as usize)
            .concat(&self.payload)
    }

    pub fn header(&self) -> &BitString {
        &self.header
    }

    pub fn payload(&self) -> &BitString {
        &self.payload
    }

    pub fn header_len(&self) -> usize {
        self.header.len()
    }

    pub fn pad_bits(&self) -> u16 {
        self.pad_bits
    }

    /// Same packet with the header replaced (used for blinding/unblinding;
    /// the payload always travels untouched).
    pub fn with_header(&self, header: BitString) -> Self {
        assert_eq!(header.len(), self.header.len());
        Packet {
            header,
            payload: self.payload.clone(),
            pad_bits: self.pad_bits,
        }
    }

    /// Rebuilds a packet received off the wire, where the pad width rides
    /// beside the body.
    pub fn from_wire_parts(header: BitString, payload: BitString, pad_bits: u16) -> Self {
        Packet {
            header,
            payload,
            pad_bits,
        }
    }

    /// Total size in whole bytes when serialized (packed header + packed
    /// payload), used by the link cost model.
    pub fn packed_len(&self) -> usize {
        self.header.as_bytes().len() + self.payload.as_bytes().len()
    }
}

/// Applies an action to the packet: every fixed position of `a` overwrites
/// the corresponding header bit, wildcards leave theirs alone. The payload
/// is untouched.
pub fn apply_action(p: &Packet, a: &TriStateString) -> Result<Packet, ModelError> {
    if a.len() != p.header_len() {
        return Err(ModelError::LengthMismatch {
            expected: p.header_len(),
            got: a.len(),
        });
    }
    let mut header = p.header().clone();
    header.overwrite_masked(&a.embed_zeros(), &a.projection());
    Ok(p.with_header(header))
}
