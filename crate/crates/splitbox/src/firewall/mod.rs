//! A 5-tuple wildcard firewall on top of the policy-tree pipeline.
//!
//! This is the showcase workload: a line-oriented rule DSL, a fixed
//! 104-bit header codec for IPv4 5-tuples, a compiler from rule lists to
//! first-match policy chains, seeded synthetic trace generation with a
//! binary file form, and a plaintext reference filter that serves as the
//! independent correctness oracle and performance baseline.
//!
//! The pieces compose: [`parse_rules`] → [`compile_rules`] gives a tree the
//! protocol stack can privatize, [`encode_header`] turns tuples into the
//! bit headers it consumes, and [`reference_filter`] must agree with the
//! tree verdict for every packet — a property the tests here and the
//! acceptance suite both enforce.

mod header;
mod reference;
mod rules;
mod trace;

pub use header::{decode_header, encode_header, FiveTuple, HEADER_BITS};
pub use reference::{reference_filter, FilterReport};
pub use rules::{
    compile_rules, parse_rules, FirewallRule, IpPattern, RuleError, Verdict,
};
pub use trace::{
    biased_trace, controlled_match_set, decode_trace, encode_trace, generate_trace,
    random_ruleset, TraceError, TraceRecord, TraceSpec,
};
