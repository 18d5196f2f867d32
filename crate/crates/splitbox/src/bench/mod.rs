//! The measurement harness: five benchmark modes over the full pipeline.
//!
//! - [`run_equivalence`] — the correctness gate. Random rulesets and
//!   steered traces through the private pipeline, cross-checked packet by
//!   packet against the plaintext tree walk *and* the field-compare
//!   reference filter; any disagreement aborts with the reproducer seed.
//! - [`run_throughput`] — sustainable packet rate as the rule count
//!   grows, private pipeline vs the plaintext baseline, with a processor
//!   worker sweep.
//! - [`run_latency`] — entry-to-exit delay percentiles under light and
//!   heavy offered load.
//! - [`run_lsweep`] — sensitivity to the pad-table length `l`, plus
//!   config footprint and counter-wrap soak.
//! - [`run_dummyrate`] — effective real-packet throughput as the cover
//!   traffic ratio varies.
//!
//! Every mode runs on the deterministic in-process fabric (equivalence
//! can also ride loopback UDP), takes all randomness from one seed, and
//! emits a fixed-column CSV; identical configs give byte-identical CSV.
//! Rates are found by binary-searching the offered rate for the largest
//! value whose loss stays within the pinned bound — at desk scale, one
//! packet or 0.001% of the run, whichever is larger.

mod equivalence;
mod harness;
mod latency;
mod rates;

pub use equivalence::{run_equivalence, EquivalenceReport, TrialRow};
pub use harness::loss_bound;
pub use latency::{run_latency, LatencyPoint, LatencyReport};
pub use rates::{
    run_dummyrate, run_lsweep, run_throughput, DummyRatePoint, DummyRateReport,
    LsweepPoint, LsweepReport, ThroughputPoint, ThroughputReport,
};

use crate::firewall::{RuleError, TraceSpec};
use crate::protocol::{ProtocolError, Ratio};
use crate::transport::{CostModel, TransportError};

/// Which carrier moves the datagrams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Carrier {
    /// Deterministic virtual-time fabric.
    Inproc,
    /// Real loopback sockets, wall-clock time. Only the equivalence mode
    /// supports it; rate measurements need the virtual clock.
    Udp,
}

/// Shared knobs for every mode. Each `run_*` reads the subset it needs.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Rule counts the throughput and latency sweeps visit.
    pub rule_counts: Vec<usize>,
    /// Packets per measurement point, and their payload sizing.
    pub trace: TraceSpec,
    /// Processor count t.
    pub share_count: u32,
    /// Pad-table length l outside the l-sweep.
    pub blind_count: u32,
    /// The l values the l-sweep visits.
    pub blind_counts: Vec<u32>,
    /// Real-traffic ratios the dummy-rate mode visits.
    pub ratios: Vec<Ratio>,
    pub carrier: Carrier,
    /// Master seed; everything else derives from it.
    pub seed: u64,
    pub cost: CostModel,
    /// Equivalence trials (rule counts spread over 1..=60 across them).
    pub trials: usize,
    /// Processor worker counts the throughput sweep visits.
    pub worker_counts: Vec<u32>,
    /// Fixed rule count for the l-sweep.
    pub lsweep_rules: usize,
    /// Offered load, in parts per million of the measured maximum, that
    /// the latency mode visits.
    pub load_fracs_ppm: Vec<u32>,
    /// A caller-supplied ruleset: the equivalence mode verifies it as an
    /// extra trial on top of the synthesized ones.
    pub user_rules: Option<Vec<crate::firewall::FirewallRule>>,
    /// A caller-supplied trace for the extra trial; synthesized against
    /// the user ruleset when absent.
    pub user_records: Option<Vec<crate::firewall::TraceRecord>>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let mut rule_counts: Vec<usize> = (1..=60).step_by(5).collect();
        rule_counts.push(60);
        BenchConfig {
            rule_counts,
            trace: TraceSpec::default(),
            share_count: 2,
            blind_count: 1024,
            blind_counts: vec![64, 1024, 65536],
            ratios: vec![Ratio::ONE, Ratio { num: 1, den: 2 }],
            carrier: Carrier::Inproc,
            seed: 7,
            cost: CostModel::default(),
            trials: 10,
            worker_counts: vec![1, 2],
            lsweep_rules: 15,
            load_fracs_ppm: vec![100_000, 900_000],
            user_rules: None,
            user_records: None,
        }
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum BenchError {
    /// The flagship failure: pipeline and oracle disagreed. The seed
    /// reproduces the exact trial.
    #[error(
        "verdict mismatch in trial {trial}, packet {packet} (reproducer seed \
         {seed:#018x}): {detail}"
    )]
    Mismatch {
        seed: u64,
        trial: usize,
        packet: usize,
        detail: String,
    },
    /// A faultless run lost traffic it had no business losing.
    #[error("packets lost on a faultless run (reproducer seed {seed:#018x}): {detail}")]
    UnexpectedLoss { seed: u64, detail: String },
    /// A cross-cutting pipeline guarantee (conservation, cover-traffic
    /// accounting, tree well-formedness) failed during a benchmark run.
    #[error("pipeline invariant violated (reproducer seed {seed:#018x}): {detail}")]
    Invariant { seed: u64, detail: String },
    #[error("{mode} mode runs only on the in-process carrier")]
    UnsupportedCarrier { mode: &'static str },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Model(#[from] crate::nfmodel::ModelError),
}

/// Renders one CSV document: fixed header row, then the data rows. Every
/// mode formats its numbers itself so the schema and formatting stay
/// byte-stable.
pub(crate) fn to_csv(columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}
