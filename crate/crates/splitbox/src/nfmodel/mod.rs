//! The plaintext filtering model: bit strings, tri-state matches and
//! actions, packets, and policy trees.
//!
//! Everything in this module computes in the clear. It is both the semantics
//! the private pipeline must reproduce bit-for-bit and the reference oracle
//! the tests compare against.

mod bits;
mod packet;
mod tree;
mod tristate;

pub use bits::BitString;
pub use packet::{apply_action, Packet};
pub use tree::{
    build_chain, traverse, traverse_instrumented, validate_tree, NodeId, PolicyTree,
    TreeBranch, TreeDiagnostic, TreeNode, TreeTextError,
};
pub use tristate::{mask, tri_match, TriStateString};

pub(crate) use bits::byte_len;

/// Errors from the plaintext model's constructors and operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("length mismatch: expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("input of {got} bits is shorter than the {need}-bit pattern; zero-prefix it first")]
    InputTooShort { need: usize, got: usize },
    #[error("invalid symbol {found:?} at position {position}")]
    BadSymbol { position: usize, found: char },
    #[error("byte buffer holds {have} bytes, need {need} for {bits} bits")]
    BufferSize { have: usize, need: usize, bits: usize },
    #[error("padding bits past position {bits} must be zero")]
    DirtyPadding { bits: usize },
    #[error("value has a fixed bit outside the projection")]
    ValueOutsideProjection,
    #[error("no node with id {id}")]
    NoSuchNode { id: NodeId },
    #[error("node {id} already branches")]
    NodeAlreadyBranches { id: NodeId },
}
