//! The correctness gate: random rulesets and steered traces through the
//! private pipeline, with every verdict cross-checked against two
//! independent oracles — the plaintext tree walk and the field-compare
//! reference filter. A rewrite trial (destination NAT plus a drop rule)
//! checks edited packet bits against the tree walk alone, since the
//! field-compare filter has no rewrite vocabulary.

use std::time::Duration;

use rand::Rng;

use crate::firewall::{
    biased_trace, compile_rules, random_ruleset, reference_filter, FirewallRule,
    FiveTuple, TraceSpec, Verdict, HEADER_BITS,
};
use crate::nfmodel::{
    build_chain, traverse, validate_tree, BitString, Packet, PolicyTree, TriStateString,
};
use crate::protocol::{global_setup, ProtocolParams, ProtocolRng, Ratio, SetupBundle};
use crate::roles::ReassemblyLimits;
use crate::transport::{
    run_topology, run_udp_topology, FaultPlan, RunConfig, TraceVerdict,
};

use super::harness::{materialize, mix, paced};
use super::{to_csv, BenchConfig, BenchError, Carrier};

/// Gap between offered packets: far above the worst per-packet service
/// time, so a faultless run must decide everything.
const RELAXED_PPS: u64 = 10_000;
/// Real-time pacing for the loopback carrier.
const UDP_PACE: Duration = Duration::from_micros(100);

/// One verified trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRow {
    pub trial: usize,
    pub rules: usize,
    pub share_count: u32,
    pub real_ratio: Ratio,
    pub packets: usize,
    pub forwarded: u64,
    pub dropped: u64,
    /// Forwarded packets whose bits were edited in flight.
    pub rewritten: u64,
    /// Wire packets the entry emitted, cover traffic included.
    pub emitted: u64,
    pub dummies: u64,
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub rows: Vec<TrialRow>,
    pub packets_checked: u64,
}

const COLUMNS: &[&str] = &[
    "trial",
    "rules",
    "share_count",
    "real_ratio",
    "packets",
    "forwarded",
    "dropped",
    "rewritten",
    "emitted",
    "dummies",
    "mismatches",
];

impl EquivalenceReport {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.trial.to_string(),
                    r.rules.to_string(),
                    r.share_count.to_string(),
                    format!("{}/{}", r.real_ratio.num, r.real_ratio.den),
                    r.packets.to_string(),
                    r.forwarded.to_string(),
                    r.dropped.to_string(),
                    r.rewritten.to_string(),
                    r.emitted.to_string(),
                    r.dummies.to_string(),
                    // A report only exists when every check passed.
                    "0".to_string(),
                ]
            })
            .collect();
        to_csv(COLUMNS, &rows)
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "equivalence: {} packets across {} trials, zero mismatches\n",
            self.packets_checked,
            self.rows.len()
        );
        for r in &self.rows {
            s.push_str(&format!(
                "  trial {:>2}: rules={:<2} t={} ratio={}/{} packets={} \
                 forwarded={} dropped={} rewritten={} dummies={}\n",
                r.trial,
                r.rules,
                r.share_count,
                r.real_ratio.num,
                r.real_ratio.den,
                r.packets,
                r.forwarded,
                r.dropped,
                r.rewritten,
                r.dummies,
            ));
        }
        s
    }
}

/// Everything one trial needs verified against ground truth.
struct Trial<'a> {
    index: usize,
    seed: u64,
    tree: &'a PolicyTree,
    bundle: &'a SetupBundle,
    packets: &'a [Packet],
    /// Per-packet drop expectation from the field-compare oracle, when
    /// the ruleset is expressible there.
    field_drops: Option<&'a [bool]>,
    rules: usize,
    real_ratio: Ratio,
}

/// Runs random-ruleset trials plus the rewrite trial, failing fast with a
/// reproducer seed on the first disagreement.
pub fn run_equivalence(cfg: &BenchConfig) -> Result<EquivalenceReport, BenchError> {
    let trials = cfg.trials.max(1);
    let per_trial = (cfg.trace.count / trials).max(1);
    let mut rows = Vec::with_capacity(trials + 1);
    let mut packets_checked = 0u64;

    for k in 0..trials {
        let seed = mix(mix(cfg.seed, 0x6571_7576), k as u64);
        let mut rng = ProtocolRng::from_seed(seed);
        // Spread rule counts across the full 1..=60 band; alternate the
        // processor count so both small fan-outs get exercised.
        let rules = if trials == 1 { 60 } else { 1 + k * 59 / (trials - 1) };
        let share_count = if k % 2 == 0 { 2 } else { 3 };
        // One designated trial runs with cover traffic enabled.
        let real_ratio = if k == trials / 2 { Ratio { num: 1, den: 2 } } else { Ratio::ONE };

        let ruleset = random_ruleset(rules, &mut rng);
        let tree = compile_rules(&ruleset)?;
        let params = ProtocolParams {
            header_len: HEADER_BITS,
            blind_count: cfg.blind_count,
            share_count,
            real_ratio,
            ..ProtocolParams::default()
        };
        let bundle = global_setup(&params, &tree, &mut rng)?;
        let spec = TraceSpec { count: per_trial, mean_payload: cfg.trace.mean_payload };
        let records = biased_trace(&ruleset, 500_000, &spec, &mut rng);
        let packets = materialize(&records, &mut rng);
        let field = reference_filter(&ruleset, &records);
        let field_drops: Vec<bool> =
            field.verdicts.iter().map(|v| *v == Verdict::Drop).collect();

        let row = check_trial(
            cfg,
            Trial {
                index: k,
                seed,
                tree: &tree,
                bundle: &bundle,
                packets: &packets,
                field_drops: Some(&field_drops),
                rules,
                real_ratio,
            },
        )?;
        packets_checked += row.packets as u64;
        rows.push(row);
    }

    let rewrite = rewrite_trial(cfg, trials, per_trial)?;
    packets_checked += rewrite.packets as u64;
    rows.push(rewrite);

    if let Some(ruleset) = &cfg.user_rules {
        let row = user_trial(cfg, ruleset, trials + 1)?;
        packets_checked += row.packets as u64;
        rows.push(row);
    }

    Ok(EquivalenceReport { rows, packets_checked })
}

/// Verifies a caller-supplied ruleset — and trace, when given — exactly
/// like a synthesized trial.
fn user_trial(
    cfg: &BenchConfig,
    ruleset: &[FirewallRule],
    index: usize,
) -> Result<TrialRow, BenchError> {
    let seed = mix(cfg.seed, 0x7573_6572);
    let mut rng = ProtocolRng::from_seed(seed);
    let tree = compile_rules(ruleset)?;
    let params = ProtocolParams {
        header_len: HEADER_BITS,
        blind_count: cfg.blind_count,
        share_count: cfg.share_count.max(2),
        ..ProtocolParams::default()
    };
    let bundle = global_setup(&params, &tree, &mut rng)?;
    let records = match &cfg.user_records {
        Some(r) => r.clone(),
        None => {
            let spec = TraceSpec {
                count: cfg.trace.count.max(1),
                mean_payload: cfg.trace.mean_payload,
            };
            biased_trace(ruleset, 500_000, &spec, &mut rng)
        }
    };
    let packets = materialize(&records, &mut rng);
    let field = reference_filter(ruleset, &records);
    let field_drops: Vec<bool> =
        field.verdicts.iter().map(|v| *v == Verdict::Drop).collect();
    check_trial(
        cfg,
        Trial {
            index,
            seed,
            tree: &tree,
            bundle: &bundle,
            packets: &packets,
            field_drops: Some(&field_drops),
            rules: ruleset.len(),
            real_ratio: Ratio::ONE,
        },
    )
}

/// Pushes one prepared trial through the configured carrier and compares
/// every verdict against the oracles.
fn check_trial(cfg: &BenchConfig, trial: Trial<'_>) -> Result<TrialRow, BenchError> {
    let Trial { index, seed, tree, bundle, packets, field_drops, rules, real_ratio } = trial;
    let entry_seed = mix(seed, 0x6361_7272);

    let (verdicts, emitted, dummies) = match cfg.carrier {
        Carrier::Inproc => {
            let arrivals = paced(packets, RELAXED_PPS);
            let run_cfg = RunConfig {
                cost: cfg.cost.clone(),
                faults: FaultPlan::default(),
                limits: ReassemblyLimits::default(),
                entry_seed,
                fault_seed: 0,
            };
            let report = run_topology(bundle, &arrivals, &run_cfg)?;
            report
                .verify_conservation()
                .map_err(|detail| BenchError::Invariant { seed, detail })?;
            let dummies = report.entry_stats.dummy_packets;
            if report.client_stats.dummies_discarded != dummies {
                return Err(BenchError::Invariant {
                    seed,
                    detail: format!(
                        "entry emitted {} dummies but the client discarded {}",
                        dummies, report.client_stats.dummies_discarded
                    ),
                });
            }
            (report.verdicts, report.emitted, dummies)
        }
        Carrier::Udp => {
            let report = run_udp_topology(
                bundle,
                packets,
                entry_seed,
                ReassemblyLimits::default(),
                UDP_PACE,
            )?;
            let dummies = report.entry_stats.dummy_packets;
            let emitted = report.entry_stats.real_packets + dummies;
            (report.verdicts, emitted, dummies)
        }
    };

    if real_ratio != Ratio::ONE && dummies == 0 {
        return Err(BenchError::Invariant {
            seed,
            detail: format!(
                "ratio {}/{} produced no cover traffic over {} packets",
                real_ratio.num,
                real_ratio.den,
                packets.len()
            ),
        });
    }

    let mut forwarded = 0u64;
    let mut dropped = 0u64;
    let mut rewritten = 0u64;
    for (i, verdict) in verdicts.iter().enumerate() {
        let expected = traverse(tree, &packets[i])?;
        let tree_drop = expected.header().is_zero();
        if let Some(drops) = field_drops {
            if drops[i] != tree_drop {
                return Err(BenchError::Mismatch {
                    seed,
                    trial: index,
                    packet: i,
                    detail: format!(
                        "oracles disagree: field compare says {}, tree walk says {}",
                        if drops[i] { "drop" } else { "forward" },
                        if tree_drop { "drop" } else { "forward" },
                    ),
                });
            }
        }
        match verdict {
            TraceVerdict::Forwarded(got) => {
                if tree_drop {
                    return Err(BenchError::Mismatch {
                        seed,
                        trial: index,
                        packet: i,
                        detail: "pipeline forwarded a packet the policy drops".into(),
                    });
                }
                if *got != expected {
                    return Err(BenchError::Mismatch {
                        seed,
                        trial: index,
                        packet: i,
                        detail: "forwarded bits differ from the tree-walk output".into(),
                    });
                }
                forwarded += 1;
                if *got != packets[i] {
                    rewritten += 1;
                }
            }
            TraceVerdict::Dropped => {
                if !tree_drop {
                    return Err(BenchError::Mismatch {
                        seed,
                        trial: index,
                        packet: i,
                        detail: "pipeline dropped a packet the policy forwards".into(),
                    });
                }
                dropped += 1;
            }
            TraceVerdict::Lost => {
                return Err(BenchError::UnexpectedLoss {
                    seed,
                    detail: format!("packet {i} of trial {index} never got a verdict"),
                });
            }
        }
    }

    Ok(TrialRow {
        trial: index,
        rules,
        share_count: bundle.entry.params.share_count,
        real_ratio,
        packets: packets.len(),
        forwarded,
        dropped,
        rewritten,
        emitted,
        dummies,
    })
}

/// The rewrite trial: a two-rule chain whose first rule NATs the
/// destination of web traffic and whose second drops one /16. Checked
/// against the tree walk only.
fn rewrite_trial(
    cfg: &BenchConfig,
    index: usize,
    count: usize,
) -> Result<TrialRow, BenchError> {
    let seed = mix(cfg.seed, 0x6e61_745f);
    let mut rng = ProtocolRng::from_seed(seed);

    // Match proto=6, dport=80; rewrite dst to 10.0.0.1.
    let nat_match = tuple_pattern(None, None, Some(6), None, Some(80));
    let nat_action = tri13(
        &[0, 0, 0, 0, 0xff, 0xff, 0xff, 0xff, 0, 0, 0, 0, 0],
        &[0, 0, 0, 0, 10, 0, 0, 1, 0, 0, 0, 0, 0],
    );
    // Drop everything from 10.99.0.0/16 that got past the NAT rule.
    let drop_match = tuple_pattern(Some((0x0a63_0000, 0xffff_0000)), None, None, None, None);
    let drop_action = tri13(&[0xff; 13], &[0; 13]);

    let tree = build_chain(
        HEADER_BITS,
        &[(nat_match, nat_action), (drop_match, drop_action)],
    )?;
    let diagnostics = validate_tree(&tree);
    if !diagnostics.is_empty() {
        return Err(BenchError::Invariant {
            seed,
            detail: format!("rewrite chain failed validation: {diagnostics:?}"),
        });
    }

    let params = ProtocolParams {
        header_len: HEADER_BITS,
        blind_count: cfg.blind_count,
        share_count: cfg.share_count.max(2),
        ..ProtocolParams::default()
    };
    let bundle = global_setup(&params, &tree, &mut rng)?;

    // A third each: NAT hits, drop hits, misses. Sources stay nonzero.
    let tuples: Vec<FiveTuple> = (0..count.max(3))
        .map(|i| match i % 3 {
            0 => FiveTuple {
                src_ip: 0xc0a8_0000 | rng.random_range(0..0x10000),
                dst_ip: 0xc0a8_0000 | rng.random_range(0..0x10000),
                protocol: 6,
                src_port: rng.random_range(1024..u16::MAX as u32) as u16,
                dst_port: 80,
            },
            1 => FiveTuple {
                src_ip: 0x0a63_0000 | rng.random_range(0..0x10000),
                dst_ip: rng.random(),
                protocol: 17,
                src_port: rng.random_range(1..u16::MAX as u32) as u16,
                dst_port: 53,
            },
            _ => FiveTuple {
                src_ip: 0xac10_0000 | rng.random_range(0..0x10000),
                dst_ip: rng.random(),
                protocol: 17,
                src_port: rng.random_range(1..u16::MAX as u32) as u16,
                dst_port: 443,
            },
        })
        .collect();
    let packets: Vec<Packet> = tuples
        .iter()
        .map(|t| {
            Packet::new(
                crate::firewall::encode_header(t),
                rng.bits(cfg.trace.mean_payload.max(1) as usize * 8),
            )
        })
        .collect();

    let row = check_trial(
        cfg,
        Trial {
            index,
            seed,
            tree: &tree,
            bundle: &bundle,
            packets: &packets,
            field_drops: None,
            rules: 2,
            real_ratio: Ratio::ONE,
        },
    )?;

    // Every NAT hit must have visibly changed bits.
    let expected_rewrites = packets.len().div_ceil(3) as u64;
    if row.rewritten != expected_rewrites {
        return Err(BenchError::Invariant {
            seed,
            detail: format!(
                "expected {expected_rewrites} rewritten packets, saw {}",
                row.rewritten
            ),
        });
    }
    Ok(row)
}

/// Builds the 104-bit tri-state matcher for a five-field template:
/// masked source/destination words plus optional exact protocol/ports.
fn tuple_pattern(
    src: Option<(u32, u32)>,
    dst: Option<(u32, u32)>,
    protocol: Option<u8>,
    src_port: Option<u16>,
    dst_port: Option<u16>,
) -> TriStateString {
    let mut fixed = [0u8; 13];
    let mut value = [0u8; 13];
    let mut put32 = |at: usize, word: Option<(u32, u32)>| {
        if let Some((v, m)) = word {
            fixed[at..at + 4].copy_from_slice(&m.to_be_bytes());
            value[at..at + 4].copy_from_slice(&(v & m).to_be_bytes());
        }
    };
    put32(0, src);
    put32(4, dst);
    if let Some(p) = protocol {
        fixed[8] = 0xff;
        value[8] = p;
    }
    let mut put16 = |at: usize, port: Option<u16>| {
        if let Some(p) = port {
            fixed[at..at + 2].copy_from_slice(&[0xff, 0xff]);
            value[at..at + 2].copy_from_slice(&p.to_be_bytes());
        }
    };
    put16(9, src_port);
    put16(11, dst_port);
    tri13(&fixed, &value)
}

/// Packs a fixed-mask/value byte pair into a 104-bit tri-state string.
fn tri13(fixed: &[u8; 13], value: &[u8; 13]) -> TriStateString {
    TriStateString::from_parts(
        BitString::from_bytes(fixed, HEADER_BITS).unwrap(),
        BitString::from_bytes(value, HEADER_BITS).unwrap(),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> BenchConfig {
        BenchConfig {
            trials: 4,
            trace: TraceSpec { count: 240, mean_payload: 32 },
            blind_count: 64,
            seed,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn random_rulesets_agree_with_both_oracles() {
        let report = run_equivalence(&small_cfg(5000)).unwrap();
        // 4 random trials + the rewrite trial, 60 packets each.
        assert_eq!(report.rows.len(), 5);
        assert_eq!(report.packets_checked, 5 * 60);
        // The steered trace guarantees traffic on both sides of the policy.
        let totals: (u64, u64) = report
            .rows
            .iter()
            .fold((0, 0), |(f, d), r| (f + r.forwarded, d + r.dropped));
        assert!(totals.0 > 0 && totals.1 > 0, "one-sided traffic: {totals:?}");
        // Rule counts span the band and processor counts alternate.
        assert_eq!(report.rows[0].rules, 1);
        assert_eq!(report.rows[3].rules, 60);
        assert_eq!(report.rows[0].share_count, 2);
        assert_eq!(report.rows[1].share_count, 3);
    }

    #[test]
    fn the_cover_traffic_trial_actually_emits_dummies() {
        let report = run_equivalence(&small_cfg(5001)).unwrap();
        let covered: Vec<&TrialRow> =
            report.rows.iter().filter(|r| r.real_ratio != Ratio::ONE).collect();
        assert_eq!(covered.len(), 1);
        let row = covered[0];
        assert!(row.dummies > 0);
        assert_eq!(row.emitted, row.packets as u64 + row.dummies);
        // Dummies never surface as verdicts: every input got exactly one.
        assert_eq!(row.forwarded + row.dropped, row.packets as u64);
    }

    #[test]
    fn the_rewrite_trial_edits_a_third_of_the_traffic() {
        let report = run_equivalence(&small_cfg(5002)).unwrap();
        let nat = report.rows.last().unwrap();
        assert_eq!(nat.rules, 2);
        assert_eq!(nat.packets, 60);
        assert_eq!(nat.rewritten, 20);
        // NAT hits are forwarded (rewritten), drop hits vanish, misses pass.
        assert_eq!(nat.dropped, 20);
        assert_eq!(nat.forwarded, 40);
    }

    #[test]
    fn identical_configs_give_identical_csv() {
        let a = run_equivalence(&small_cfg(5003)).unwrap().to_csv();
        let b = run_equivalence(&small_cfg(5003)).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("trial,rules,share_count,real_ratio,packets,"));
    }

    #[test]
    fn a_supplied_ruleset_gets_its_own_verified_trial() {
        let text = "\
            drop src=10.0.0.0/8 dst=* proto=* sport=* dport=22\n\
            allow src=* dst=* proto=6 sport=* dport=443\n";
        let rules = crate::firewall::parse_rules(text).unwrap();
        let cfg = BenchConfig {
            user_rules: Some(rules),
            ..small_cfg(5005)
        };
        let report = run_equivalence(&cfg).unwrap();
        // 4 random + rewrite + user.
        assert_eq!(report.rows.len(), 6);
        let user = report.rows.last().unwrap();
        assert_eq!(user.rules, 2);
        assert_eq!(user.trial, 5);
        assert_eq!(user.packets, 240);
        assert!(user.forwarded > 0 && user.dropped > 0);
    }

    #[test]
    fn the_loopback_carrier_reaches_the_same_verdicts() {
        let mut cfg = BenchConfig {
            trials: 2,
            trace: TraceSpec { count: 80, mean_payload: 32 },
            blind_count: 64,
            seed: 5004,
            ..BenchConfig::default()
        };
        let inproc = run_equivalence(&cfg).unwrap();
        cfg.carrier = Carrier::Udp;
        let udp = run_equivalence(&cfg).unwrap();
        // Verdict counts per trial match exactly; only emission pacing
        // differs between the carriers.
        for (a, b) in inproc.rows.iter().zip(&udp.rows) {
            assert_eq!((a.forwarded, a.dropped, a.rewritten), (b.forwarded, b.dropped, b.rewritten));
        }
    }
}
