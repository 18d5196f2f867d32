//! SplitBox: packet filtering split across mutually distrusting middleboxes.
//!
//! A filtering policy — an ordered set of tri-state match/action rules — is
//! compiled into a binary decision tree and then *split*: an entry middlebox
//! blinds each packet header with a one-time pad from a preinstalled table,
//! `t` processor middleboxes evaluate the tree over the blinded header using
//! a table of keyed digests (for matching) and XOR shares (for actions), and
//! the policy owner's client merges the processors' shares, unblinds, and
//! applies the combined rewrite. No single processor sees the rules, the
//! actions, the blinds, or a plaintext header; the entry sees traffic but no
//! policy. Correctness requires all `t` processor shares, so privacy holds
//! against any `t − 1` of them colluding.
//!
//! Module map:
//!
//! * [`nfmodel`] — the plaintext model: bit strings, tri-state patterns,
//!   packets, policy trees, and the reference traversal.
//! * [`protocol`] — setup (blind tables, digest tables, share splitting) and
//!   the per-packet operations each party runs.
//! * [`roles`] — stateful entry / processor / client endpoints driven by
//!   messages.
//! * [`transport`] — the wire codec, a deterministic in-process fabric with
//!   a virtual clock, and a UDP loopback carrier.
//! * [`firewall`] — the concrete 104-bit five-tuple instantiation: rule DSL,
//!   header codec, trace generation, and a plaintext reference filter.
//! * [`bench`] — equivalence, throughput, latency, table-size and
//!   dummy-rate experiments with CSV output.

mod bytes;

pub mod bench;
pub mod nfmodel;
pub mod protocol;
pub mod firewall;
pub mod roles;
pub mod transport;

pub use nfmodel::{BitString, Packet, PolicyTree, TriStateString};
pub use protocol::{ProtocolError, ProtocolParams};
