//! Fixed bit layout for IPv4 5-tuple headers.
//!
//! srcIP(32) ‖ dstIP(32) ‖ protocol(8) ‖ srcPort(16) ‖ dstPort(16), each
//! field in network byte order, 104 bits total. Bit 0 is the most
//! significant bit of the source address.

use std::fmt;

use crate::nfmodel::{BitString, ModelError};

/// Width of an encoded 5-tuple.
pub const HEADER_BITS: usize = 104;

/// One IPv4 5-tuple. Addresses are held as host-order integers
/// (`10.0.0.1` is `0x0a000001`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FiveTuple {
    pub src_ip: u32,
    pub dst_ip: u32,
    pub protocol: u8,
    pub src_port: u16,
    pub dst_port: u16,
}

impl FiveTuple {
    /// The 13 bytes backing the bit encoding.
    pub fn to_bytes(self) -> [u8; 13] {
        let mut b = [0u8; 13];
        b[0..4].copy_from_slice(&self.src_ip.to_be_bytes());
        b[4..8].copy_from_slice(&self.dst_ip.to_be_bytes());
        b[8] = self.protocol;
        b[9..11].copy_from_slice(&self.src_port.to_be_bytes());
        b[11..13].copy_from_slice(&self.dst_port.to_be_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; 13]) -> Self {
        FiveTuple {
            src_ip: u32::from_be_bytes(b[0..4].try_into().unwrap()),
            dst_ip: u32::from_be_bytes(b[4..8].try_into().unwrap()),
            protocol: b[8],
            src_port: u16::from_be_bytes(b[9..11].try_into().unwrap()),
            dst_port: u16::from_be_bytes(b[11..13].try_into().unwrap()),
        }
    }
}

fn quad(ip: u32) -> String {
    let b = ip.to_be_bytes();
    format!("{}.{}.{}.{}", b[0], b[1], b[2], b[3])
}

impl fmt::Display for FiveTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{} -> {}:{} proto {}",
            quad(self.src_ip),
            self.src_port,
            quad(self.dst_ip),
            self.dst_port,
            self.protocol
        )
    }
}

/// Packs a tuple into its 104-bit header.
pub fn encode_header(t: &FiveTuple) -> BitString {
    BitString::from_bytes(&t.to_bytes(), HEADER_BITS).unwrap()
}

/// Unpacks a 104-bit header. Anything but exactly 104 bits is an error.
pub fn decode_header(bits: &BitString) -> Result<FiveTuple, ModelError> {
    if bits.len() != HEADER_BITS {
        return Err(ModelError::LengthMismatch {
            expected: HEADER_BITS,
            got: bits.len(),
        });
    }
    let b: [u8; 13] = bits.as_bytes().try_into().unwrap();
    Ok(FiveTuple::from_bytes(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ProtocolRng;
    use rand::Rng;

    #[test]
    fn each_field_lands_at_its_offset() {
        // The last bit of each field, one field at a time.
        let cases = [
            (FiveTuple { src_ip: 1, ..FiveTuple::default() }, 31),
            (FiveTuple { dst_ip: 1, ..FiveTuple::default() }, 63),
            (FiveTuple { protocol: 1, ..FiveTuple::default() }, 71),
            (FiveTuple { src_port: 1, ..FiveTuple::default() }, 87),
            (FiveTuple { dst_port: 1, ..FiveTuple::default() }, 103),
        ];
        for (tuple, expect) in cases {
            let bits = encode_header(&tuple);
            assert_eq!(bits.len(), HEADER_BITS);
            for i in 0..HEADER_BITS {
                assert_eq!(bits.bit(i), i == expect, "tuple {tuple}, bit {i}");
            }
        }
        // And the first bit: top of the source address.
        let top = FiveTuple { src_ip: 0x8000_0000, ..FiveTuple::default() };
        assert!(encode_header(&top).bit(0));
    }

    #[test]
    fn roundtrip_over_random_tuples() {
        let mut rng = ProtocolRng::from_seed(3001);
        for _ in 0..10_000 {
            let t = FiveTuple {
                src_ip: rng.random(),
                dst_ip: rng.random(),
                protocol: rng.random(),
                src_port: rng.random(),
                dst_port: rng.random(),
            };
            assert_eq!(decode_header(&encode_header(&t)).unwrap(), t);
        }
    }

    #[test]
    fn wrong_width_is_rejected() {
        let short = BitString::zeros(96);
        assert_eq!(
            decode_header(&short),
            Err(ModelError::LengthMismatch {
                expected: 104,
                got: 96
            })
        );
    }

    #[test]
    fn display_is_dotted() {
        let t = FiveTuple {
            src_ip: 0x7f00_0001,
            dst_ip: 0x0a01_0203,
            protocol: 6,
            src_port: 443,
            dst_port: 8080,
        };
        assert_eq!(t.to_string(), "127.0.0.1:443 -> 10.1.2.3:8080 proto 6");
    }
}
