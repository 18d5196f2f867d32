//! The processors' view of a policy tree: shape with opaque ids.
//!
//! Setup strips a validated tree into (a) a structural skeleton whose nodes
//! and branches reference matches and actions by id only, (b) the deduplicated
//! match list, and (c) the deduplicated action list. Processors receive the
//! skeleton plus per-match public projections; the match and action contents
//! stay with the setup party (digested resp. shared). Duplicate patterns get
//! one id, so "the same action on two branches" is visible structure — which
//! is exactly the declared leakage, the tree shape.

use std::collections::HashMap;

use crate::nfmodel::{NodeId, PolicyTree, TriStateString};

/// Index into the deduplicated match list.
pub type MatchId = u32;
/// Index into the deduplicated action list.
pub type ActionId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateNode {
    pub action: ActionId,
    pub branch: Option<PrivateBranch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateBranch {
    pub matcher: MatchId,
    pub miss: NodeId,
    pub hit: NodeId,
}

/// A policy tree with every pattern replaced by an id. Same arena layout and
/// node ids as the tree it was stripped from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivatePolicyTree {
    nodes: Vec<PrivateNode>,
}

impl PrivatePolicyTree {
    pub(crate) fn from_nodes(nodes: Vec<PrivateNode>) -> Self {
        PrivatePolicyTree { nodes }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &PrivateNode {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &PrivateNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (i as NodeId, n))
    }
}

/// The product of stripping a tree: skeleton plus the id-indexed pattern
/// lists the setup party keeps to itself.
#[derive(Clone, Debug)]
pub struct TreeSplit {
    pub tree: PrivatePolicyTree,
    pub matches: Vec<TriStateString>,
    pub actions: Vec<TriStateString>,
}

/// Strips patterns out of a tree, deduplicating by value: every occurrence
/// of the same match (or action) maps to one id.
pub fn strip_tree(tree: &PolicyTree) -> TreeSplit {
    let mut matches: Vec<TriStateString> = Vec::new();
    let mut actions: Vec<TriStateString> = Vec::new();
    let mut match_ids: HashMap<TriStateString, MatchId> = HashMap::new();
    let mut action_ids: HashMap<TriStateString, ActionId> = HashMap::new();
    let mut nodes = Vec::with_capacity(tree.node_count());
    for (_, node) in tree.nodes() {
        let action = *action_ids.entry(node.action.clone()).or_insert_with(|| {
            actions.push(node.action.clone());
            actions.len() as ActionId - 1
        });
        let branch = node.branch.as_ref().map(|b| {
            let matcher = *match_ids.entry(b.matcher.clone()).or_insert_with(|| {
                matches.push(b.matcher.clone());
                matches.len() as MatchId - 1
            });
            PrivateBranch {
                matcher,
                miss: b.miss,
                hit: b.hit,
            }
        });
        nodes.push(PrivateNode { action, branch });
    }
    TreeSplit {
        tree: PrivatePolicyTree { nodes },
        matches,
        actions,
    }
}
