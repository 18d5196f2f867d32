//! Preinstalled tables: one-time-pad blinds and the digest grid they key.
//!
//! Setup samples `l` uniform header-width blinds. The entry XORs blind `i`
//! onto packet `i mod l`'s header; the processors hold, for every
//! (blind, match) pair, the digest of the match's embedded value XORed with
//! the masked blind. A processor can then test a match against a blinded
//! header by masking, hashing and comparing — without ever holding the
//! match, the blind, or the header.

use rand::RngCore;

use crate::nfmodel::{mask, BitString, TriStateString};

use super::hash::{digest, HashAlgo};
use super::ProtocolError;

/// 1-based position in the blind table. This is the value that travels in
/// messages; 0 is never valid on the wire. Lookups subtract one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlindIndex(u32);

impl BlindIndex {
    pub fn new(value: u32) -> Result<Self, ProtocolError> {
        if value == 0 {
            return Err(ProtocolError::ZeroIndex);
        }
        Ok(BlindIndex(value))
    }

    /// The first counter value a fresh entry uses.
    pub fn first() -> Self {
        BlindIndex(1)
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub(crate) fn slot(self) -> usize {
        self.0 as usize - 1
    }

    /// The successor under wraparound: `l` steps back to 1. The flag reports
    /// the wrap so callers can count cycles.
    pub fn next(self, blind_count: u32) -> (Self, bool) {
        if self.0 >= blind_count {
            (BlindIndex(1), true)
        } else {
            (BlindIndex(self.0 + 1), false)
        }
    }
}

/// The table of one-time-pad blinds shared by entry and client.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlindTable {
    header_len: usize,
    blinds: Vec<BitString>,
}

impl BlindTable {
    pub fn generate(header_len: usize, count: u32, rng: &mut dyn RngCore) -> Self {
        let blinds = (0..count)
            .map(|_| BitString::random(header_len, rng))
            .collect();
        BlindTable { header_len, blinds }
    }

    pub fn from_blinds(blinds: Vec<BitString>) -> Result<Self, ProtocolError> {
        let Some(first) = blinds.first() else {
            return Err(ProtocolError::NoBlinds);
        };
        let header_len = first.len();
        if blinds.iter().any(|b| b.len() != header_len) {
            return Err(ProtocolError::RaggedBlinds);
        }
        Ok(BlindTable { header_len, blinds })
    }

    pub fn len(&self) -> u32 {
        self.blinds.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.blinds.is_empty()
    }

    pub fn header_len(&self) -> usize {
        self.header_len
    }

    pub fn blind(&self, index: BlindIndex) -> Result<&BitString, ProtocolError> {
        self.blinds
            .get(index.slot())
            .ok_or(ProtocolError::IndexOutOfRange {
                index: index.value(),
                count: self.len(),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = &BitString> {
        self.blinds.iter()
    }

    /// Resident size of the packed table.
    pub fn byte_size(&self) -> usize {
        self.blinds.iter().map(|b| b.as_bytes().len()).sum()
    }
}

/// The processors' digest grid: cell `(i, j)` holds
/// `H(embed(match_j) XOR mask(projection_j, blind_i))`, truncated to the
/// configured digest width. Row-major, flat storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashedMatchTable {
    blind_count: u32,
    match_count: u32,
    digest_len: usize,
    cells: Vec<u8>,
}

impl HashedMatchTable {
    pub fn build(
        algo: HashAlgo,
        digest_bits: u32,
        blinds: &BlindTable,
        matches: &[TriStateString],
    ) -> Result<Self, ProtocolError> {
        let digest_len = (digest_bits / 8) as usize;
        let mut cells = Vec::with_capacity(blinds.len() as usize * matches.len() * digest_len);
        for blind in blinds.iter() {
            for m in matches {
                if m.len() != blinds.header_len() {
                    return Err(ProtocolError::Model(
                        crate::nfmodel::ModelError::LengthMismatch {
                            expected: blinds.header_len(),
                            got: m.len(),
                        },
                    ));
                }
                let keyed = m.embed_zeros().xor(&mask(&m.projection(), blind)?);
                cells.extend_from_slice(&digest(algo, digest_bits, keyed.as_bytes()));
            }
        }
        Ok(HashedMatchTable {
            blind_count: blinds.len(),
            match_count: matches.len() as u32,
            digest_len,
            cells,
        })
    }

    pub(crate) fn from_raw(
        blind_count: u32,
        match_count: u32,
        digest_len: usize,
        cells: Vec<u8>,
    ) -> Result<Self, ProtocolError> {
        if cells.len() != blind_count as usize * match_count as usize * digest_len {
            return Err(ProtocolError::TableShape);
        }
        Ok(HashedMatchTable {
            blind_count,
            match_count,
            digest_len,
            cells,
        })
    }

    pub fn blind_count(&self) -> u32 {
        self.blind_count
    }

    pub fn match_count(&self) -> u32 {
        self.match_count
    }

    pub fn digest_len(&self) -> usize {
        self.digest_len
    }

    pub fn digest_at(&self, index: BlindIndex, match_id: u32) -> Result<&[u8], ProtocolError> {
        if index.slot() >= self.blind_count as usize {
            return Err(ProtocolError::IndexOutOfRange {
                index: index.value(),
                count: self.blind_count,
            });
        }
        if match_id >= self.match_count {
            return Err(ProtocolError::UnknownMatch(match_id));
        }
        let at = (index.slot() * self.match_count as usize + match_id as usize) * self.digest_len;
        Ok(&self.cells[at..at + self.digest_len])
    }

    pub(crate) fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// Resident size of the digest grid.
    pub fn byte_size(&self) -> usize {
        self.cells.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn index_wraps_at_table_end() {
        let i = BlindIndex::first();
        assert_eq!(i.value(), 1);
        let (next, wrapped) = i.next(4);
        assert_eq!((next.value(), wrapped), (2, false));
        let (next, wrapped) = BlindIndex::new(4).unwrap().next(4);
        assert_eq!((next.value(), wrapped), (1, true));
        // A single-entry table wraps every step.
        let (next, wrapped) = BlindIndex::first().next(1);
        assert_eq!((next.value(), wrapped), (1, true));
    }

    #[test]
    fn zero_index_rejected() {
        assert!(matches!(BlindIndex::new(0), Err(ProtocolError::ZeroIndex)));
    }

    #[test]
    fn blind_lookup_bounds() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let table = BlindTable::generate(16, 3, &mut rng);
        assert_eq!(table.len(), 3);
        assert!(table.blind(BlindIndex::new(3).unwrap()).is_ok());
        let err = table.blind(BlindIndex::new(4).unwrap()).unwrap_err();
        assert!(matches!(err, ProtocolError::IndexOutOfRange { index: 4, count: 3 }));
    }

    #[test]
    fn table_sizes_are_linear() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let blinds = BlindTable::generate(104, 64, &mut rng);
        assert_eq!(blinds.byte_size(), 64 * 13);
        let matches = vec![TriStateString::from_text(&"1".repeat(104)).unwrap()];
        let grid = HashedMatchTable::build(HashAlgo::Sha1, 160, &blinds, &matches).unwrap();
        assert_eq!(grid.byte_size(), 64 * 20);
    }
}
