//! XOR sharing of actions and flags.
//!
//! An action is a pair of header-width bit strings: the overwrite values
//! (wildcards embedded as zero) and the overwrite mask (the projection).
//! Splitting hands each of the `t` processors one uniformly random-looking
//! share pair; the XOR across all `t` reconstructs the pair, and any `t − 1`
//! shares are jointly uniform. The real/dummy flag is shared the same way,
//! one bit wide.

use rand::RngCore;

use crate::nfmodel::{BitString, TriStateString};

/// One processor's share of one action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionShare {
    pub value: BitString,
    pub mask: BitString,
}

/// Splits an action into `share_count` XOR shares. The first
/// `share_count − 1` shares are sampled uniformly (value then mask, in share
/// order); the last is the correction term.
pub fn split_action(
    action: &TriStateString,
    share_count: u32,
    rng: &mut dyn RngCore,
) -> Vec<ActionShare> {
    assert!(share_count >= 2, "need at least two shares");
    let n = action.len();
    let mut value_rest = action.embed_zeros();
    let mut mask_rest = action.projection();
    let mut out = Vec::with_capacity(share_count as usize);
    for _ in 0..share_count - 1 {
        let value = BitString::random(n, rng);
        let mask = BitString::random(n, rng);
        value_rest.xor_assign(&value);
        mask_rest.xor_assign(&mask);
        out.push(ActionShare { value, mask });
    }
    out.push(ActionShare {
        value: value_rest,
        mask: mask_rest,
    });
    out
}

/// A processor's running XOR of the action shares it applied along one
/// packet's path. Starts at zero for every packet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CumulativeShare {
    pub value: BitString,
    pub mask: BitString,
}

impl CumulativeShare {
    pub fn zero(len: usize) -> Self {
        CumulativeShare {
            value: BitString::zeros(len),
            mask: BitString::zeros(len),
        }
    }

    pub fn absorb(&mut self, share: &ActionShare) {
        self.value.xor_assign(&share.value);
        self.mask.xor_assign(&share.mask);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Splits a one-bit flag into `share_count` parity shares (each 0 or 1).
pub fn split_flag(is_set: bool, share_count: u32, rng: &mut dyn RngCore) -> Vec<u8> {
    assert!(share_count >= 2, "need at least two shares");
    let mut rest = is_set as u8;
    let mut out = Vec::with_capacity(share_count as usize);
    for _ in 0..share_count - 1 {
        let bit = (rng.next_u32() & 1) as u8;
        rest ^= bit;
        out.push(bit);
    }
    out.push(rest);
    out
}

/// Reconstructs a flag from its parity shares.
pub fn merge_flag(shares: impl IntoIterator<Item = u8>) -> bool {
    shares.into_iter().fold(0u8, |acc, s| acc ^ (s & 1)) == 1
}
