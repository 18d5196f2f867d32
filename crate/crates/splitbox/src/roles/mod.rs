//! Stateful endpoints for the three roles, driven by typed messages.
//!
//! The [`protocol`](crate::protocol) module holds the pure per-packet math;
//! this module wraps it in the running state each box actually keeps: the
//! entry's pad/sequence counters and dummy scheduling, the processors'
//! work counters, and the client's fragment reassembly with its guard
//! rails. Everything here is transport-agnostic — the fabric and the UDP
//! carrier both drive these same types.

mod client;
mod entry;
mod messages;
mod processor;
mod stats;

pub use client::{ClientOutcome, ClientState, ClientStats, ReassemblyLimits};
pub use entry::{EntryState, EntryStats};
pub use messages::{BlindedPacketMsg, ClientInput, Emission, ProcessorInput, ShareMessage};
pub use processor::{ProcessorReply, ProcessorState, ProcessorStats};
pub use stats::render_stats;

use crate::protocol::ProtocolError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoleError {
    #[error("input addressed to processor {got}, this is processor {expected}")]
    WrongProcessor { expected: u8, got: u8 },
    #[error("processor id {0} does not exist in this deployment")]
    BadProcessorId(u8),
    #[error("flag share {0} is not a bit")]
    BadFlagShare(u8),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
