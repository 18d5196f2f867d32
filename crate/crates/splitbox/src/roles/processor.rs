//! A processor middlebox: evaluates its tree share over blinded headers.

use crate::protocol::{private_traversal, ProcessorConfig};

use super::messages::{ProcessorInput, ShareMessage};
use super::stats::render_stats;
use super::RoleError;

/// Running processor endpoint. Per-packet it is pure — all state is
/// statistics.
pub struct ProcessorState {
    cfg: ProcessorConfig,
    stats: ProcessorStats,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProcessorStats {
    pub packets: u64,
    /// Digest comparisons actually performed (path branches only).
    pub match_attempts: u64,
    /// Action shares absorbed.
    pub actions_applied: u64,
}

impl ProcessorStats {
    pub fn render(&self) -> String {
        render_stats(&[
            ("actions_applied", self.actions_applied),
            ("match_attempts", self.match_attempts),
            ("packets", self.packets),
        ])
    }
}

/// What a processor produces for one input: the outgoing share message and
/// how much matching work the traversal did (the transport's cost model
/// charges for it).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessorReply {
    pub message: ShareMessage,
    pub match_attempts: u32,
    pub actions_applied: u32,
}

impl ProcessorState {
    pub fn new(cfg: ProcessorConfig) -> Self {
        ProcessorState {
            cfg,
            stats: ProcessorStats::default(),
        }
    }

    pub fn config(&self) -> &ProcessorConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &ProcessorStats {
        &self.stats
    }

    /// Handles one blinded header: walks the tree, accumulates this
    /// processor's share, echoes the flag share.
    pub fn handle(&mut self, input: &ProcessorInput) -> Result<ProcessorReply, RoleError> {
        if input.processor_id != self.cfg.processor_id {
            return Err(RoleError::WrongProcessor {
                expected: self.cfg.processor_id,
                got: input.processor_id,
            });
        }
        if input.flag_share > 1 {
            return Err(RoleError::BadFlagShare(input.flag_share));
        }
        let outcome = private_traversal(&self.cfg, &input.blinded_header, input.index)?;
        self.stats.packets += 1;
        self.stats.match_attempts += outcome.match_attempts as u64;
        self.stats.actions_applied += outcome.actions_applied as u64;
        Ok(ProcessorReply {
            message: ShareMessage {
                seq: input.seq,
                index: input.index,
                processor_id: self.cfg.processor_id,
                share: outcome.share,
                flag_share: input.flag_share,
            },
            match_attempts: outcome.match_attempts,
            actions_applied: outcome.actions_applied,
        })
    }
}
