//! Per-role configuration and global setup.
//!
//! Setup is run by the policy owner. It validates the tree, strips it to an
//! id-only skeleton, samples the blind table, builds the digest grid, splits
//! every action into XOR shares, and packages three mutually blind views:
//! the entry sees blinds but no policy, each processor sees structure,
//! projections, digests and its own shares but no patterns, and the client
//! sees blinds plus bookkeeping metadata.

use crate::nfmodel::{validate_tree, BitString, PolicyTree, TriStateString};

use super::private_tree::{strip_tree, PrivatePolicyTree};
use super::rng::ProtocolRng;
use super::shares::{split_action, ActionShare};
use super::tables::{BlindTable, HashedMatchTable};
use super::{ProtocolError, ProtocolParams};

/// What the entry middlebox holds: the pads, nothing about the policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryConfig {
    pub params: ProtocolParams,
    pub setup_seed: Option<u64>,
    pub blinds: BlindTable,
}

/// What one processor holds. No match pattern, no action pattern, no blind,
/// and no way to name one: patterns appear only as ids, digests, public
/// projections and uniformly distributed shares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessorConfig {
    pub params: ProtocolParams,
    pub setup_seed: Option<u64>,
    /// 1-based; also the share index this processor applies.
    pub processor_id: u8,
    pub tree: PrivatePolicyTree,
    /// Indexed by match id. Projections are the declared public leakage.
    pub match_projections: Vec<BitString>,
    pub match_table: HashedMatchTable,
    /// Indexed by action id: this processor's share of each action.
    pub action_shares: Vec<ActionShare>,
}

/// What the client holds: the same pads as the entry plus policy metadata
/// for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientConfig {
    pub params: ProtocolParams,
    pub setup_seed: Option<u64>,
    pub blinds: BlindTable,
    pub match_count: u32,
    pub action_count: u32,
}

/// Everything global setup produces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetupBundle {
    pub entry: EntryConfig,
    pub processors: Vec<ProcessorConfig>,
    pub client: ClientConfig,
}

/// Runs global setup over a validated policy tree. Fails if the tree has
/// validation defects or any match is weaker than the configured minimum
/// (unless the override is set). Deterministic for a given seed: the bundle
/// records the seed so any deployment can be reproduced.
pub fn global_setup(
    params: &ProtocolParams,
    tree: &PolicyTree,
    rng: &mut ProtocolRng,
) -> Result<SetupBundle, ProtocolError> {
    params.validate()?;
    if tree.header_len() != params.header_len {
        return Err(ProtocolError::Model(
            crate::nfmodel::ModelError::LengthMismatch {
                expected: params.header_len,
                got: tree.header_len(),
            },
        ));
    }
    let defects = validate_tree(tree);
    if !defects.is_empty() {
        let msgs: Vec<String> = defects.iter().map(|d| d.to_string()).collect();
        return Err(ProtocolError::InvalidTree(msgs.join("; ")));
    }
    let split = strip_tree(tree);
    check_match_weights(params, &split.matches)?;

    let blinds = BlindTable::generate(params.header_len, params.blind_count, rng);
    let match_table =
        HashedMatchTable::build(params.hash, params.digest_bits, &blinds, &split.matches)?;
    let match_projections: Vec<BitString> =
        split.matches.iter().map(|m| m.projection()).collect();

    // shares_by_processor[p][a] = processor p's share of action a.
    let t = params.share_count as usize;
    let mut shares_by_processor: Vec<Vec<ActionShare>> = vec![Vec::new(); t];
    for action in &split.actions {
        let shares = split_action(action, params.share_count, rng);
        for (p, share) in shares.into_iter().enumerate() {
            shares_by_processor[p].push(share);
        }
    }

    let seed = Some(rng.seed());
    let processors = shares_by_processor
        .into_iter()
        .enumerate()
        .map(|(p, action_shares)| ProcessorConfig {
            params: params.clone(),
            setup_seed: seed,
            processor_id: (p + 1) as u8,
            tree: split.tree.clone(),
            match_projections: match_projections.clone(),
            match_table: match_table.clone(),
            action_shares,
        })
        .collect();

    Ok(SetupBundle {
        entry: EntryConfig {
            params: params.clone(),
            setup_seed: seed,
            blinds: blinds.clone(),
        },
        processors,
        client: ClientConfig {
            params: params.clone(),
            setup_seed: seed,
            blinds,
            match_count: split.matches.len() as u32,
            action_count: split.actions.len() as u32,
        },
    })
}

pub(super) fn check_match_weights(
    params: &ProtocolParams,
    matches: &[TriStateString],
) -> Result<(), ProtocolError> {
    if params.allow_weak_matches {
        return Ok(());
    }
    for (index, m) in matches.iter().enumerate() {
        let weight = m.weight();
        if weight < params.min_match_weight {
            return Err(ProtocolError::WeakMatch {
                index,
                weight,
                min: params.min_match_weight,
            });
        }
    }
    Ok(())
}
