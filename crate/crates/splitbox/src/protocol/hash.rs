//! The keyed-comparison hash.
//!
//! Match lookups compare digests of masked, blinded headers. The algorithm
//! is pinned per deployment; the default is SHA-1 with its full 160-bit
//! digest, and the digest width is a parameter so a wider function can be
//! swapped in without touching table layouts elsewhere.

use sha1::{Digest as _, Sha1};
use sha2::Sha256;

/// Hash algorithm selector, pinned in the deployment parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HashAlgo {
    Sha1,
    Sha256,
}

impl HashAlgo {
    /// Widest digest the algorithm can produce, in bits.
    pub fn max_digest_bits(self) -> u32 {
        match self {
            HashAlgo::Sha1 => 160,
            HashAlgo::Sha256 => 256,
        }
    }

    /// Single-byte tag used in config bundles.
    pub fn tag(self) -> u8 {
        match self {
            HashAlgo::Sha1 => 1,
            HashAlgo::Sha256 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(HashAlgo::Sha1),
            2 => Some(HashAlgo::Sha256),
            _ => None,
        }
    }
}

/// Digests `input` and truncates to `digest_bits / 8` bytes. `digest_bits`
/// must be a multiple of 8 no wider than the algorithm's output; parameter
/// validation enforces that before any table is built.
pub fn digest(algo: HashAlgo, digest_bits: u32, input: &[u8]) -> Vec<u8> {
    let want = (digest_bits / 8) as usize;
    match algo {
        HashAlgo::Sha1 => {
            let mut out = Sha1::digest(input).to_vec();
            out.truncate(want);
            out
        }
        HashAlgo::Sha256 => {
            let mut out = Sha256::digest(input).to_vec();
            out.truncate(want);
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha1_known_answer() {
        // Published test vector: SHA1("abc").
        let d = digest(HashAlgo::Sha1, 160, b"abc");
        assert_eq!(
            d,
            [
                0xa9, 0x99, 0x3e, 0x36, 0x47, 0x06, 0x81, 0x6a, 0xba, 0x3e, 0x25, 0x71, 0x78,
                0x50, 0xc2, 0x6c, 0x9c, 0xd0, 0xd8, 0x9d
            ]
        );
    }

    #[test]
    fn sha256_known_answer_truncated() {
        // SHA256("abc") starts ba7816bf 8f01cfea…
        let d = digest(HashAlgo::Sha256, 64, b"abc");
        assert_eq!(d, [0xba, 0x78, 0x16, 0xbf, 0x8f, 0x01, 0xcf, 0xea]);
    }

    #[test]
    fn truncation_prefixes_full_digest() {
        let full = digest(HashAlgo::Sha1, 160, b"xyz");
        let short = digest(HashAlgo::Sha1, 80, b"xyz");
        assert_eq!(short, full[..10]);
    }
}
