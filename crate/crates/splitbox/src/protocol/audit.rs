//! Leak auditing: scans everything a processor can see for byte-identical
//! occurrences of deployment secrets.
//!
//! The scan is a plumbing check, not a cryptographic proof: it catches the
//! class of bug where a pad, a plaintext header, or an unsplit action value
//! is copied wholesale into a processor config or message stream. Two scans
//! run:
//!
//! * an **equality scan** comparing every semantic atom of the view (each
//!   projection, digest cell, share half, observed blinded header) against
//!   every registered secret — exhaustive, hash-indexed, cheap;
//! * a **substring scan** hunting byte-aligned copies of secrets inside the
//!   large flat blobs (the digest grid and any raw streams handed in) —
//!   sampled down to a fixed needle budget when the inventory is large.
//!
//! Secrets that would collide with innocent data by chance are never
//! registered: all-zero strings, strings under 16 bits, and match values
//! equal to their own public projection (an all-ones pattern says nothing
//! the projection didn't already say).

use std::collections::HashMap;

use super::config::ProcessorConfig;
use crate::nfmodel::{BitString, TriStateString};

/// Smallest secret worth scanning for, in bits. Below this, chance
/// collisions drown real findings.
const MIN_SECRET_BITS: usize = 16;

/// Needle budget for the substring scan. The equality scan always covers
/// the full inventory; the substring scan samples evenly when over budget.
const SUBSTRING_NEEDLE_BUDGET: usize = 48;

#[derive(Clone, Debug)]
struct Secret {
    label: String,
    bytes: Vec<u8>,
}

/// The set of byte strings that must never surface in a processor's view:
/// blinds, plaintext headers, match values, unsplit action patterns.
#[derive(Clone, Debug, Default)]
pub struct SecretInventory {
    secrets: Vec<Secret>,
    /// bytes → indices into `secrets`, for O(1) equality lookups.
    by_bytes: HashMap<Vec<u8>, Vec<usize>>,
    skipped: usize,
}

impl SecretInventory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers one secret. Unscannable secrets (all zero, under
    /// 16 bits) are counted but not stored.
    pub fn register(&mut self, label: impl Into<String>, bits: &BitString) {
        if bits.len() < MIN_SECRET_BITS || bits.is_zero() {
            self.skipped += 1;
            return;
        }
        let bytes = bits.as_bytes().to_vec();
        let idx = self.secrets.len();
        self.secrets.push(Secret {
            label: label.into(),
            bytes: bytes.clone(),
        });
        self.by_bytes.entry(bytes).or_default().push(idx);
    }

    /// Registers the hidden half of a match (its embedded values). Skipped
    /// when the values equal the public projection: every fixed bit is 1,
    /// so the "secret" is already published.
    pub fn register_match(&mut self, index: usize, m: &TriStateString) {
        let embed = m.embed_zeros();
        if embed == m.projection() {
            self.skipped += 1;
            return;
        }
        self.register(format!("match[{index}].values"), &embed);
    }

    /// Registers an unsplit action pattern (both halves).
    pub fn register_action(&mut self, index: usize, a: &TriStateString) {
        self.register(format!("action[{index}].values"), &a.embed_zeros());
        // The write mask doubles as the projection of the action, which is
        // not published anywhere (only its XOR shares are).
        self.register(format!("action[{index}].mask"), &a.projection());
    }

    pub fn len(&self) -> usize {
        self.secrets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secrets.is_empty()
    }

    /// Secrets refused at registration time.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Equality scan of one view atom against the whole inventory.
    pub fn scan_atom(&self, atom_label: &str, bytes: &[u8], report: &mut AuditReport) {
        report.atoms_checked += 1;
        report.bytes_scanned += bytes.len() as u64;
        if let Some(hits) = self.by_bytes.get(bytes) {
            for &i in hits {
                report.findings.push(format!(
                    "secret `{}` appears verbatim as view atom `{}`",
                    self.secrets[i].label, atom_label
                ));
            }
        }
    }

    /// Byte-aligned substring scan of one flat blob. Samples the inventory
    /// evenly when it exceeds the needle budget.
    pub fn scan_stream(&self, stream_label: &str, haystack: &[u8], report: &mut AuditReport) {
        if self.secrets.is_empty() || haystack.is_empty() {
            return;
        }
        let step = self.secrets.len().div_ceil(SUBSTRING_NEEDLE_BUDGET).max(1);
        let mut needles = 0u64;
        for s in self.secrets.iter().step_by(step) {
            needles += 1;
            if s.bytes.len() > haystack.len() {
                continue;
            }
            if haystack.windows(s.bytes.len()).any(|w| w == s.bytes) {
                report.findings.push(format!(
                    "secret `{}` occurs inside stream `{}`",
                    s.label, stream_label
                ));
            }
        }
        report.bytes_scanned += haystack.len() as u64 * needles;
    }
}

/// What an audit saw and found. Empty `findings` means clean.
#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub atoms_checked: u64,
    pub bytes_scanned: u64,
    pub findings: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    /// Merges another report into this one.
    pub fn absorb(&mut self, other: AuditReport) {
        self.atoms_checked += other.atoms_checked;
        self.bytes_scanned += other.bytes_scanned;
        self.findings.extend(other.findings);
    }
}

/// Audits one processor's entire view: its static config (projections,
/// digest grid, tree-share table) plus the blinded headers it observed on
/// the wire. Every atom is equality-scanned; the digest grid — the one
/// large flat blob — is substring-scanned as well.
pub fn audit_processor_view(
    inventory: &SecretInventory,
    cfg: &ProcessorConfig,
    observed_blinded_headers: &[BitString],
) -> AuditReport {
    let mut report = AuditReport::default();
    if inventory.is_empty() {
        return report;
    }
    for (i, p) in cfg.match_projections.iter().enumerate() {
        inventory.scan_atom(&format!("projection[{i}]"), p.as_bytes(), &mut report);
    }
    for (i, s) in cfg.action_shares.iter().enumerate() {
        inventory.scan_atom(&format!("share[{i}].value"), s.value.as_bytes(), &mut report);
        inventory.scan_atom(&format!("share[{i}].mask"), s.mask.as_bytes(), &mut report);
    }
    let grid = cfg.match_table.cells();
    let digest_len = cfg.match_table.digest_len();
    if digest_len > 0 {
        for (i, cell) in grid.chunks(digest_len).enumerate() {
            inventory.scan_atom(&format!("digest_cell[{i}]"), cell, &mut report);
        }
    }
    inventory.scan_stream("digest_grid", grid, &mut report);
    for (i, h) in observed_blinded_headers.iter().enumerate() {
        inventory.scan_atom(&format!("blinded_header[{i}]"), h.as_bytes(), &mut report);
    }
    report
}
