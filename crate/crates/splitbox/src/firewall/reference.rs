//! Plaintext reference filter.
//!
//! First-match over the structured rule fields — integer compares on
//! addresses, protocol and ports, no bit strings, no trees. It exists to
//! be *independent*: the compiled pipeline and this scan share no code
//! below the parsed rules, so their agreement on every packet is a real
//! check, and its per-packet attempt counts anchor the workload knob the
//! benchmarks turn.

use super::rules::{FirewallRule, Verdict};
use super::trace::TraceRecord;

/// Verdicts plus the work it took to reach them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterReport {
    /// One verdict per input record. A record no rule matches is allowed.
    pub verdicts: Vec<Verdict>,
    /// Rules examined per record: the 1-based index of the first hit, or
    /// the full ruleset length when nothing matched.
    pub attempts: Vec<u32>,
}

impl FilterReport {
    pub fn drops(&self) -> usize {
        self.verdicts.iter().filter(|v| **v == Verdict::Drop).count()
    }

    pub fn total_attempts(&self) -> u64 {
        self.attempts.iter().map(|a| u64::from(*a)).sum()
    }
}

fn rule_hits(rule: &FirewallRule, rec: &TraceRecord) -> bool {
    rule.src.matches(rec.tuple.src_ip)
        && rule.dst.matches(rec.tuple.dst_ip)
        && rule.protocol.is_none_or(|p| p == rec.tuple.protocol)
        && rule.src_port.is_none_or(|p| p == rec.tuple.src_port)
        && rule.dst_port.is_none_or(|p| p == rec.tuple.dst_port)
}

/// Scans every record against the rules in order, stopping at the first
/// hit.
pub fn reference_filter(rules: &[FirewallRule], trace: &[TraceRecord]) -> FilterReport {
    let mut verdicts = Vec::with_capacity(trace.len());
    let mut attempts = Vec::with_capacity(trace.len());
    for rec in trace {
        let mut verdict = Verdict::Allow;
        let mut tried = rules.len() as u32;
        for (i, rule) in rules.iter().enumerate() {
            if rule_hits(rule, rec) {
                verdict = rule.verdict;
                tried = i as u32 + 1;
                break;
            }
        }
        verdicts.push(verdict);
        attempts.push(tried);
    }
    FilterReport { verdicts, attempts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firewall::header::{encode_header, FiveTuple};
    use crate::firewall::rules::{compile_rules, parse_rules, IpPattern};
    use crate::nfmodel::{traverse, Packet};
    use crate::protocol::ProtocolRng;
    use rand::Rng;

    fn record(tuple: FiveTuple) -> TraceRecord {
        TraceRecord {
            tuple,
            payload_bytes: 64,
        }
    }

    #[test]
    fn first_hit_wins_and_attempts_count_the_scan() {
        let rules = parse_rules(
            "\
drop src=10.0.0.0/8 dst=* proto=* sport=* dport=*
allow src=* dst=* proto=6 sport=* dport=*
drop src=* dst=* proto=* sport=* dport=*
",
        )
        .unwrap();
        let inside = record(FiveTuple {
            src_ip: 0x0a01_0203,
            protocol: 6,
            ..FiveTuple::default()
        });
        let tcp = record(FiveTuple {
            src_ip: 0x7f00_0001,
            protocol: 6,
            ..FiveTuple::default()
        });
        let other = record(FiveTuple {
            src_ip: 0x7f00_0001,
            protocol: 17,
            ..FiveTuple::default()
        });
        let rep = reference_filter(&rules, &[inside, tcp, other]);
        assert_eq!(rep.verdicts, vec![Verdict::Drop, Verdict::Allow, Verdict::Drop]);
        assert_eq!(rep.attempts, vec![1, 2, 3]);
        assert_eq!(rep.drops(), 2);
        assert_eq!(rep.total_attempts(), 6);
    }

    #[test]
    fn no_match_allows_after_the_full_scan() {
        let rules =
            parse_rules("drop src=10.0.0.0/8 dst=* proto=* sport=* dport=*").unwrap();
        let rec = record(FiveTuple {
            src_ip: 0x0b00_0000,
            ..FiveTuple::default()
        });
        let rep = reference_filter(&rules, &[rec]);
        assert_eq!(rep.verdicts, vec![Verdict::Allow]);
        assert_eq!(rep.attempts, vec![1]);
        // And an empty ruleset allows with zero work.
        let rep = reference_filter(&[], &[rec]);
        assert_eq!(rep.verdicts, vec![Verdict::Allow]);
        assert_eq!(rep.attempts, vec![0]);
    }

    /// Draws a ruleset whose patterns hit real traffic often enough to
    /// exercise every rule position and both verdicts.
    fn random_rules(rng: &mut ProtocolRng, count: usize) -> Vec<FirewallRule> {
        (0..count)
            .map(|i| {
                let octet = rng.random_range(0..4u32);
                let mask = match rng.random_range(0..4u32) {
                    0 => 0,
                    1 => 0xff00_0000,
                    2 => 0xffff_0000,
                    _ => 0xff00_00ff,
                };
                FirewallRule {
                    verdict: if rng.random_range(0..2u32) == 0 {
                        Verdict::Allow
                    } else {
                        Verdict::Drop
                    },
                    src: IpPattern::new((octet << 24) | rng.random_range(0..4u32), mask),
                    dst: if rng.random_range(0..2u32) == 0 {
                        IpPattern::ANY
                    } else {
                        IpPattern::new(rng.random_range(0..4u32) << 24, 0xff00_0000)
                    },
                    protocol: if rng.random_range(0..2u32) == 0 {
                        None
                    } else {
                        Some(rng.random_range(0..3u32) as u8)
                    },
                    src_port: None,
                    dst_port: if rng.random_range(0..3u32) == 0 {
                        Some(rng.random_range(0..4u32) as u16)
                    } else {
                        None
                    },
                    line: i + 1,
                }
            })
            .collect()
    }

    fn random_record(rng: &mut ProtocolRng) -> TraceRecord {
        record(FiveTuple {
            src_ip: (rng.random_range(0..4u32) << 24) | rng.random_range(0..4u32),
            dst_ip: rng.random_range(0..4u32) << 24,
            protocol: rng.random_range(0..3u32) as u8,
            // Never all-zero: a zero header doubles as the drop marker.
            src_port: 1,
            dst_port: rng.random_range(0..4u32) as u16,
        })
    }

    #[test]
    fn field_scan_and_compiled_tree_agree_everywhere() {
        let mut rng = ProtocolRng::from_seed(3200);
        for _ in 0..40 {
            let count = rng.random_range(0..12u32) as usize;
            let rules = random_rules(&mut rng, count);
            let tree = compile_rules(&rules).unwrap();
            let trace: Vec<TraceRecord> =
                (0..50).map(|_| random_record(&mut rng)).collect();
            let rep = reference_filter(&rules, &trace);
            for (rec, verdict) in trace.iter().zip(&rep.verdicts) {
                let packet = Packet::new(encode_header(&rec.tuple), rng.bits(8));
                let out = traverse(&tree, &packet).unwrap();
                let tree_verdict = if out.header().is_zero() {
                    Verdict::Drop
                } else {
                    Verdict::Allow
                };
                assert_eq!(
                    *verdict,
                    tree_verdict,
                    "disagreement on {} under {} rules",
                    rec.tuple,
                    rules.len()
                );
                // Allowed traffic passes through this firewall unchanged.
                if tree_verdict == Verdict::Allow {
                    assert_eq!(out.header(), packet.header());
                }
            }
            // The drawn space is small enough that both verdicts show up
            // across the session; spot-check the report is not degenerate.
            if rules.iter().any(|r| r.verdict == Verdict::Drop) {
                assert!(rep.attempts.iter().all(|a| *a <= rules.len() as u32));
            }
        }
    }

    #[test]
    fn tuples_that_match_on_all_but_one_field_get_past_the_rule() {
        let rules = parse_rules(
            "drop src=127.0.0.1 dst=10.0.0.0/8 proto=6 sport=1000 dport=80",
        )
        .unwrap();
        let tree = compile_rules(&rules).unwrap();
        let hit = FiveTuple {
            src_ip: 0x7f00_0001,
            dst_ip: 0x0a63_0000,
            protocol: 6,
            src_port: 1000,
            dst_port: 80,
        };
        assert_eq!(reference_filter(&rules, &[record(hit)]).verdicts[0], Verdict::Drop);
        // Perturb one field at a time; every variant must slip through.
        let misses = [
            FiveTuple { src_ip: 0x7f00_0002, ..hit },
            FiveTuple { dst_ip: 0x0b63_0000, ..hit },
            FiveTuple { protocol: 17, ..hit },
            FiveTuple { src_port: 1001, ..hit },
            FiveTuple { dst_port: 81, ..hit },
        ];
        for t in misses {
            let rep = reference_filter(&rules, &[record(t)]);
            assert_eq!(rep.verdicts[0], Verdict::Allow); // fell off the end
            assert_eq!(rep.attempts[0], 1);
            // The compiled matcher must miss the same way.
            let p = Packet::new(encode_header(&t), crate::nfmodel::BitString::zeros(8));
            assert_eq!(traverse(&tree, &p).unwrap(), p);
        }
    }
}
