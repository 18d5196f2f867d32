//! Moving messages between the roles: the datagram codec, a deterministic
//! in-process fabric with a virtual clock, and a real UDP loopback carrier.
//!
//! The fabric is the workhorse: it executes the real role logic (real
//! blinding, real digest comparisons, real merges) while time is simulated
//! — each unit of actually performed work is charged a fixed cost from a
//! [`CostModel`], links serialize bytes at a configured rate, queues are
//! bounded, and faults (loss, duplication, reordering) come from a seeded
//! plan. Identical inputs give byte-identical reports.
//!
//! The UDP carrier sends the same datagrams over real sockets on loopback,
//! one thread per role, as a carrier-level cross-check of the fabric's
//! verdicts.

mod fabric;
mod runner;
mod udp;
mod wire;

pub use fabric::{CostModel, FaultPlan, LinkTraffic};
pub use runner::{run_topology, RunConfig, RunReport, TraceVerdict};
pub use udp::{run_udp_topology, UdpReport};
pub use wire::{max_datagram_len, WireError, WireMessage, HEADER_BYTES};

use crate::roles::RoleError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Role(#[from] RoleError),
    #[error("transport invariant broken: {0}")]
    Internal(String),
    #[error("socket error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TransportError {
    fn from(e: std::io::Error) -> Self {
        TransportError::Io(e.to_string())
    }
}
