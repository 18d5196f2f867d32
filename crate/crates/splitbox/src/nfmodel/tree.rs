//! Binary decision trees over tri-state matches and actions.
//!
//! Interior nodes carry an action and branch on one match: the *hit* child
//! is taken when the match succeeds, the *miss* child otherwise. Traversal
//! applies each visited node's action and stops at the first leaf. By
//! construction the root and every miss child carry the identity action, so
//! a rule chain compiles to an identity spine with the real actions hanging
//! off the hit side.
//!
//! Matching always reads the packet as it arrived; actions write to a
//! separate working copy. The two never mix, which is what lets the
//! traversal be evaluated on shares later without changing which path is
//! taken.

use std::collections::HashMap;
use std::fmt;

use super::bits::BitString;
use super::packet::{apply_action, Packet};
use super::tristate::{tri_match, TriStateString};
use super::ModelError;

/// Index of a node in the tree arena. The root is always node 0.
pub type NodeId = u32;

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub action: TriStateString,
    pub branch: Option<TreeBranch>,
}

#[derive(Clone, Debug)]
pub struct TreeBranch {
    pub matcher: TriStateString,
    /// Child taken when the match fails. Carries the identity action in any
    /// well-formed tree.
    pub miss: NodeId,
    /// Child taken when the match succeeds.
    pub hit: NodeId,
}

/// A finite binary decision tree. Nodes live in an arena; children are
/// always freshly allocated, so the structure is acyclic by construction.
#[derive(Clone, Debug)]
pub struct PolicyTree {
    header_len: usize,
    nodes: Vec<TreeNode>,
}

impl PolicyTree {
    /// A single identity leaf: accepts everything unchanged.
    pub fn new(header_len: usize) -> Self {
        PolicyTree {
            header_len,
            nodes: vec![TreeNode {
                action: TriStateString::wildcard(header_len),
                branch: None,
            }],
        }
    }

    pub fn header_len(&self) -> usize {
        self.header_len
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id as usize]
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &TreeNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (i as NodeId, n))
    }

    /// Turns the leaf `parent` into a branch on `matcher`. The miss child is
    /// a fresh identity leaf, the hit child a fresh leaf with `hit_action`.
    /// Returns `(miss, hit)` ids.
    pub fn add_branch(
        &mut self,
        parent: NodeId,
        matcher: TriStateString,
        hit_action: TriStateString,
    ) -> Result<(NodeId, NodeId), ModelError> {
        if matcher.len() != self.header_len {
            return Err(ModelError::LengthMismatch {
                expected: self.header_len,
                got: matcher.len(),
            });
        }
        if hit_action.len() != self.header_len {
            return Err(ModelError::LengthMismatch {
                expected: self.header_len,
                got: hit_action.len(),
            });
        }
        let p = self
            .nodes
            .get_mut(parent as usize)
            .ok_or(ModelError::NoSuchNode { id: parent })?;
        if p.branch.is_some() {
            return Err(ModelError::NodeAlreadyBranches { id: parent });
        }
        let miss = self.nodes.len() as NodeId;
        let hit = miss + 1;
        self.nodes[parent as usize].branch = Some(TreeBranch {
            matcher,
            miss,
            hit,
        });
        self.nodes.push(TreeNode {
            action: TriStateString::wildcard(self.header_len),
            branch: None,
        });
        self.nodes.push(TreeNode {
            action: hit_action,
            branch: None,
        });
        Ok((miss, hit))
    }

    /// Replaces a node's action. Exists so tests can build ill-formed trees
    /// for the validator; normal construction never needs it.
    pub fn set_action(&mut self, id: NodeId, action: TriStateString) -> Result<(), ModelError> {
        if action.len() != self.header_len {
            return Err(ModelError::LengthMismatch {
                expected: self.header_len,
                got: action.len(),
            });
        }
        self.nodes
            .get_mut(id as usize)
            .ok_or(ModelError::NoSuchNode { id })?
            .action = action;
        Ok(())
    }
}

/// Compiles an ordered list of `(match, action)` policies into a first-match
/// chain: an identity spine whose hit leaves carry the actions. A chain of
/// `k` policies has exactly `2k + 1` nodes; zero policies give the single
/// identity leaf.
pub fn build_chain(
    header_len: usize,
    policies: &[(TriStateString, TriStateString)],
) -> Result<PolicyTree, ModelError> {
    let mut tree = PolicyTree::new(header_len);
    let mut spine = tree.root();
    for (matcher, action) in policies {
        let (miss, _hit) = tree.add_branch(spine, matcher.clone(), action.clone())?;
        spine = miss;
    }
    Ok(tree)
}

/// Runs the tree over a packet: applies each visited node's action to a
/// working copy, decides each branch against the packet as it arrived, and
/// returns the working copy at the first leaf.
pub fn traverse(tree: &PolicyTree, packet: &Packet) -> Result<Packet, ModelError> {
    let (out, _) = traverse_instrumented(tree, packet, |_| {})?;
    Ok(out)
}

/// `traverse` with two observation points for tests: `tamper` may mutate the
/// working copy after every action application, and the returned vector
/// records each branch decision in order. Branch decisions depend only on
/// the arrival copy, so tampering never changes the path.
pub fn traverse_instrumented(
    tree: &PolicyTree,
    packet: &Packet,
    mut tamper: impl FnMut(&mut Packet),
) -> Result<(Packet, Vec<bool>), ModelError> {
    if packet.header_len() != tree.header_len {
        return Err(ModelError::LengthMismatch {
            expected: tree.header_len,
            got: packet.header_len(),
        });
    }
    let arrival = packet.header().clone();
    let mut working = packet.clone();
    let mut path = Vec::new();
    let mut at = tree.root();
    loop {
        let node = tree.node(at);
        working = apply_action(&working, &node.action)?;
        tamper(&mut working);
        match &node.branch {
            None => return Ok((working, path)),
            Some(b) => {
                let hit = tri_match(&arrival, &b.matcher)?;
                path.push(hit);
                at = if hit { b.hit } else { b.miss };
            }
        }
    }
}

/// A well-formedness defect found by [`validate_tree`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeDiagnostic {
    /// The root must carry the identity action.
    RootNotIdentity,
    /// Every miss child must carry the identity action.
    MissChildNotIdentity { parent: NodeId, child: NodeId },
    /// Two actions on one root-to-leaf path write the same header bit, so
    /// their effects cannot be merged independently of application order.
    /// `bit` is 0-based; rendered 1-based.
    OverlappingWrites {
        first: NodeId,
        second: NodeId,
        bit: usize,
    },
}

impl fmt::Display for TreeDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeDiagnostic::RootNotIdentity => write!(f, "root action is not the identity"),
            TreeDiagnostic::MissChildNotIdentity { parent, child } => write!(
                f,
                "miss child {child} of node {parent} is not the identity"
            ),
            TreeDiagnostic::OverlappingWrites { first, second, bit } => write!(
                f,
                "actions at nodes {first} and {second} on one path both write bit {}",
                bit + 1
            ),
        }
    }
}

/// Checks the invariants a tree must satisfy before it can be installed:
/// identity at the root and at every miss child, and no two actions on a
/// single root-to-leaf path writing the same bit. A repeated non-identity
/// action on one path is rejected by the overlap rule (it collides with
/// itself). Returns every defect found; an empty vector means the tree is
/// clean.
pub fn validate_tree(tree: &PolicyTree) -> Vec<TreeDiagnostic> {
    let mut found = Vec::new();
    if !tree.node(tree.root()).action.is_identity() {
        found.push(TreeDiagnostic::RootNotIdentity);
    }
    // DFS carrying the non-identity actions seen on the current path.
    let mut stack: Vec<(NodeId, Vec<(NodeId, BitString)>)> = vec![(tree.root(), Vec::new())];
    while let Some((at, mut writes)) = stack.pop() {
        let node = tree.node(at);
        if !node.action.is_identity() {
            let proj = node.action.projection();
            for (prev, prev_proj) in &writes {
                let clash = prev_proj.and(&proj);
                if !clash.is_zero() {
                    let bit = (0..clash.len()).find(|i| clash.bit(*i)).unwrap();
                    found.push(TreeDiagnostic::OverlappingWrites {
                        first: *prev,
                        second: at,
                        bit,
                    });
                }
            }
            writes.push((at, proj));
        }
        if let Some(b) = &node.branch {
            if !tree.node(b.miss).action.is_identity() {
                found.push(TreeDiagnostic::MissChildNotIdentity {
                    parent: at,
                    child: b.miss,
                });
            }
            stack.push((b.hit, writes.clone()));
            stack.push((b.miss, writes));
        }
    }
    found
}

/// Error from [`PolicyTree::from_text`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct TreeTextError {
    pub line: usize,
    pub msg: String,
}

fn text_err<T>(line: usize, msg: impl Into<String>) -> Result<T, TreeTextError> {
    Err(TreeTextError {
        line,
        msg: msg.into(),
    })
}

impl PolicyTree {
    /// Canonical text form: one `node` line per node in preorder, followed by
    /// its two `edge` lines (miss first). `#` starts a comment.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![self.root()];
        while let Some(at) = stack.pop() {
            let node = self.node(at);
            out.push_str(&format!("node {at} action={}\n", node.action));
            if let Some(b) = &node.branch {
                out.push_str(&format!(
                    "edge {at} {} match={} polarity=neg\n",
                    b.miss, b.matcher
                ));
                out.push_str(&format!(
                    "edge {at} {} match={} polarity=pos\n",
                    b.hit, b.matcher
                ));
                stack.push(b.hit);
                stack.push(b.miss);
            }
        }
        out
    }

    /// Parses the text form. Node ids must be dense (0..count), the root is
    /// node 0, and every non-root node must be referenced by exactly one
    /// edge pair (one `neg`, one `pos`, same match).
    pub fn from_text(text: &str) -> Result<Self, TreeTextError> {
        struct EdgePair {
            matcher: TriStateString,
            miss: Option<NodeId>,
            hit: Option<NodeId>,
        }
        let mut actions: HashMap<NodeId, TriStateString> = HashMap::new();
        let mut edges: HashMap<NodeId, EdgePair> = HashMap::new();
        let mut parent_of: HashMap<NodeId, NodeId> = HashMap::new();
        let mut header_len: Option<usize> = None;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "node" => {
                    if fields.len() != 3 {
                        return text_err(lineno, "expected: node <id> action=<pattern>");
                    }
                    let id: NodeId = match fields[1].parse() {
                        Ok(v) => v,
                        Err(_) => return text_err(lineno, format!("bad node id {:?}", fields[1])),
                    };
                    let Some(pat) = fields[2].strip_prefix("action=") else {
                        return text_err(lineno, "expected action=<pattern>");
                    };
                    let action = match TriStateString::from_text(pat) {
                        Ok(a) => a,
                        Err(e) => return text_err(lineno, format!("bad action: {e}")),
                    };
                    match header_len {
                        None => header_len = Some(action.len()),
                        Some(n) if n != action.len() => {
                            return text_err(
                                lineno,
                                format!("pattern width {} differs from {}", action.len(), n),
                            )
                        }
                        _ => {}
                    }
                    if actions.insert(id, action).is_some() {
                        return text_err(lineno, format!("node {id} defined twice"));
                    }
                }
                "edge" => {
                    if fields.len() != 5 {
                        return text_err(
                            lineno,
                            "expected: edge <parent> <child> match=<pattern> polarity=<pos|neg>",
                        );
                    }
                    let parent: NodeId = match fields[1].parse() {
                        Ok(v) => v,
                        Err(_) => return text_err(lineno, format!("bad node id {:?}", fields[1])),
                    };
                    let child: NodeId = match fields[2].parse() {
                        Ok(v) => v,
                        Err(_) => return text_err(lineno, format!("bad node id {:?}", fields[2])),
                    };
                    let Some(pat) = fields[3].strip_prefix("match=") else {
                        return text_err(lineno, "expected match=<pattern>");
                    };
                    let matcher = match TriStateString::from_text(pat) {
                        Ok(m) => m,
                        Err(e) => return text_err(lineno, format!("bad match: {e}")),
                    };
                    let positive = match fields[4] {
                        "polarity=pos" => true,
                        "polarity=neg" => false,
                        other => return text_err(lineno, format!("bad polarity field {other:?}")),
                    };
                    if child == 0 {
                        return text_err(lineno, "the root cannot be an edge target");
                    }
                    if parent_of.insert(child, parent).is_some() {
                        return text_err(lineno, format!("node {child} has two parents"));
                    }
                    let pair = edges.entry(parent).or_insert_with(|| EdgePair {
                        matcher: matcher.clone(),
                        miss: None,
                        hit: None,
                    });
                    if pair.matcher != matcher {
                        return text_err(
                            lineno,
                            format!("edges of node {parent} carry different matches"),
                        );
                    }
                    let slot = if positive { &mut pair.hit } else { &mut pair.miss };
                    if slot.is_some() {
                        return text_err(
                            lineno,
                            format!(
                                "node {parent} has two {} edges",
                                if positive { "pos" } else { "neg" }
                            ),
                        );
                    }
                    *slot = Some(child);
                }
                other => return text_err(lineno, format!("unknown directive {other:?}")),
            }
        }

        let count = actions.len();
        if count == 0 {
            return text_err(0, "empty tree");
        }
        for id in 0..count as NodeId {
            if !actions.contains_key(&id) {
                return text_err(0, format!("node ids are not dense: {id} missing"));
            }
        }
        if !actions.contains_key(&0) {
            return text_err(0, "missing root node 0");
        }
        for (child, parent) in &parent_of {
            if !actions.contains_key(parent) || !actions.contains_key(child) {
                return text_err(0, format!("edge {parent} -> {child} references unknown node"));
            }
        }
        let mut nodes = Vec::with_capacity(count);
        for id in 0..count as NodeId {
            let branch = match edges.get(&id) {
                None => None,
                Some(pair) => {
                    let (Some(miss), Some(hit)) = (pair.miss, pair.hit) else {
                        return text_err(0, format!("node {id} has only one edge"));
                    };
                    Some(TreeBranch {
                        matcher: pair.matcher.clone(),
                        miss,
                        hit,
                    })
                }
            };
            nodes.push(TreeNode {
                action: actions[&id].clone(),
                branch,
            });
        }
        // Every non-root node needs a parent; together with single-parent
        // and dense-id checks this rules out cycles and orphans.
        for id in 1..count as NodeId {
            if !parent_of.contains_key(&id) {
                return text_err(0, format!("node {id} is unreachable"));
            }
        }
        let tree = PolicyTree {
            header_len: nodes[0].action.len(),
            nodes,
        };
        // Reject sharing: each node referenced as a child exactly once, and
        // branch targets must not include the root (checked above), so the
        // reachable structure is a tree.
        Ok(tree)
    }
}
