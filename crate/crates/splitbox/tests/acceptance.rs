//! The release gate: nine end-to-end checks over the public API. Each
//! prints one `ACCEPTANCE <k> <name>: PASS` line on success (visible with
//! `--nocapture`); a failure panics with the same line flipped to FAIL
//! plus the details, so the verdict also lands in the harness's failure
//! output. Every tolerance is a named constant here, not a magic number
//! buried in an assertion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, RngCore};

use splitbox::bench::{
    run_dummyrate, run_equivalence, run_latency, run_lsweep, run_throughput, BenchConfig,
    Carrier,
};
use splitbox::firewall::{
    biased_trace, compile_rules, decode_trace, encode_header, encode_trace, generate_trace,
    random_ruleset, TraceSpec,
};
use splitbox::nfmodel::{traverse, tri_match, BitString, Packet, PolicyTree, TriStateString};
use splitbox::protocol::bundle::RoleConfig;
use splitbox::protocol::{
    audit_processor_view, compute_match, global_setup, setup_lookup_tables, split_action,
    split_packet, strip_tree, BlindIndex, CumulativeShare, ProtocolParams, ProtocolRng, Ratio,
    SecretInventory, SetupBundle,
};
use splitbox::roles::{BlindedPacketMsg, ProcessorInput, ReassemblyLimits, ShareMessage};
use splitbox::transport::{
    run_topology, run_udp_topology, CostModel, FaultPlan, RunConfig, RunReport, TraceVerdict,
    WireMessage,
};

/// Wall-clock budget for the flagship equivalence sweep.
const SWEEP_TIME_BUDGET: Duration = Duration::from_secs(120);
/// Random packets the flagship sweep must verify, steered trials excluded.
const SWEEP_MIN_PACKETS: u64 = 10_000;
/// Samples drawn for the share-algebra check.
const SHARE_SAMPLES: usize = 100_000;
/// Window around 1/2 for the per-bit frequency of a fixed t−1 share subset.
const SHARE_BIAS_TOLERANCE: f64 = 0.005;
/// The 60-rule rate must sit at least this fraction below the 1-rule rate.
const RATE_DROP_FLOOR: f64 = 0.30;
/// A sweep point may exceed its predecessor by at most this fraction.
const TREND_NOISE_BAND: f64 = 0.10;
/// Allowed relative spread of sustained rates across pad-table lengths.
const PAD_SPREAD_CEILING: f64 = 0.10;
/// Counter wraps the small-table runs must cross.
const WRAP_FLOOR: u64 = 100;
/// Allowed relative error of the half-cover rate against half the full rate.
const HALVING_TOLERANCE: f64 = 0.10;
/// Byte strings thrown at each decoder.
const FUZZ_CASES: usize = 100_000;

fn gate(k: u32, name: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("ACCEPTANCE {k} {name}: PASS");
    } else {
        let line = format!("ACCEPTANCE {k} {name}: FAIL ({})", failures.join("; "));
        println!("{line}");
        panic!("{line}");
    }
}

/// A ready-to-run deployment: a random ruleset compiled to a tree, keys
/// dealt, and a steered trace materialized into packets.
fn deployment(
    rules: usize,
    share_count: u32,
    blind_count: u32,
    count: usize,
    seed: u64,
) -> (PolicyTree, SetupBundle, Vec<Packet>) {
    let mut rng = ProtocolRng::from_seed(seed);
    let ruleset = random_ruleset(rules, &mut rng);
    let tree = compile_rules(&ruleset).expect("generated rulesets always compile");
    let params = ProtocolParams {
        share_count,
        blind_count,
        ..ProtocolParams::default()
    };
    let bundle = global_setup(&params, &tree, &mut rng).expect("setup");
    let spec = TraceSpec {
        count,
        mean_payload: 64,
    };
    let trace = biased_trace(&ruleset, 500_000, &spec, &mut rng);
    let packets = trace
        .iter()
        .map(|r| Packet::new(encode_header(&r.tuple), rng.bits(r.payload_bytes as usize * 8)))
        .collect();
    (tree, bundle, packets)
}

/// Arrivals at a fixed, deliberately easy pace.
fn paced(packets: &[Packet], pps: u64) -> Vec<(u64, Packet)> {
    let gap = 1_000_000_000 / pps;
    packets
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (i as u64 * gap, p))
        .collect()
}

/// One fabric run far below saturation, so any loss comes from the fault
/// plan alone.
fn relaxed_run(
    bundle: &SetupBundle,
    packets: &[Packet],
    faults: FaultPlan,
    seed: u64,
) -> RunReport {
    let cfg = RunConfig {
        cost: CostModel::default(),
        faults,
        limits: ReassemblyLimits::default(),
        entry_seed: seed,
        fault_seed: seed ^ 0x5eed,
    };
    run_topology(bundle, &paced(packets, 10_000), &cfg).expect("fabric run")
}

/// Compares pipeline verdicts against the plaintext tree walk; reports at
/// most the first three disagreements.
fn oracle_failures(
    tree: &PolicyTree,
    packets: &[Packet],
    verdicts: &[TraceVerdict],
) -> Vec<String> {
    let mut out = Vec::new();
    if packets.len() != verdicts.len() {
        out.push(format!(
            "{} packets but {} verdicts",
            packets.len(),
            verdicts.len()
        ));
        return out;
    }
    for (i, (packet, verdict)) in packets.iter().zip(verdicts).enumerate() {
        let expected = traverse(tree, packet).expect("oracle traversal");
        let drop = expected.header().is_zero();
        let agree = match verdict {
            TraceVerdict::Forwarded(got) => !drop && *got == expected,
            TraceVerdict::Dropped => drop,
            TraceVerdict::Lost => false,
        };
        if agree {
            continue;
        }
        let detail = match verdict {
            TraceVerdict::Forwarded(_) if drop => "forwarded a packet the tree drops",
            TraceVerdict::Forwarded(_) => "forwarded different bits than the tree produces",
            TraceVerdict::Dropped => "dropped a packet the tree forwards",
            TraceVerdict::Lost => "lost the packet on a faultless run",
        };
        out.push(format!("packet {i}: {detail}"));
        if out.len() == 3 {
            break;
        }
    }
    out
}

#[test]
fn acceptance_1_oracle_equivalence() {
    let started = Instant::now();
    let cfg = BenchConfig {
        trace: TraceSpec {
            count: 10_000,
            mean_payload: 64,
        },
        trials: 10,
        carrier: Carrier::Inproc,
        seed: 0xACC0_0001,
        ..BenchConfig::default()
    };
    let mut failures = Vec::new();
    match run_equivalence(&cfg) {
        Ok(report) => {
            let random_packets: u64 = report
                .rows
                .iter()
                .filter(|r| r.trial < cfg.trials)
                .map(|r| r.packets as u64)
                .sum();
            if random_packets < SWEEP_MIN_PACKETS {
                failures.push(format!(
                    "only {random_packets} random packets verified, need {SWEEP_MIN_PACKETS}"
                ));
            }
            let lo = report.rows.iter().map(|r| r.rules).min().unwrap_or(0);
            let hi = report.rows.iter().map(|r| r.rules).max().unwrap_or(0);
            if lo != 1 || hi != 60 {
                failures.push(format!("rule counts span {lo}..{hi}, need 1..60"));
            }
            let t: BTreeSet<u32> = report.rows.iter().map(|r| r.share_count).collect();
            if !t.contains(&2) || !t.contains(&3) {
                failures.push(format!("processor counts tested {t:?}, need 2 and 3"));
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    let elapsed = started.elapsed();
    if elapsed > SWEEP_TIME_BUDGET {
        failures.push(format!(
            "sweep took {elapsed:?}, budget {SWEEP_TIME_BUDGET:?}"
        ));
    }
    gate(1, "oracle equivalence across rules and processor counts", failures);
}

#[test]
fn acceptance_2_share_algebra() {
    let mut rng = ProtocolRng::from_seed(0xACC0_0002);
    let n = 104;
    let mut value_ones = vec![0u64; n];
    let mut mask_ones = vec![0u64; n];
    let mut broken_identities = 0u64;
    for _ in 0..SHARE_SAMPLES {
        let t: u32 = rng.random_range(2..=5);
        let fixed = rng.bits(n);
        let values = rng.bits(n).and(&fixed);
        let action = TriStateString::from_parts(fixed, values).expect("values fit the mask");
        let shares = split_action(&action, t, &mut rng);

        let mut value_sum = BitString::zeros(n);
        let mut mask_sum = BitString::zeros(n);
        for s in &shares {
            value_sum.xor_assign(&s.value);
            mask_sum.xor_assign(&s.mask);
        }
        if value_sum != action.embed_zeros() || mask_sum != action.projection() {
            broken_identities += 1;
        }

        // A fixed t−1 subset: everything but the first share. It contains
        // the correction term, so its uniformity is not inherited from the
        // sampler for free.
        let mut sub_value = BitString::zeros(n);
        let mut sub_mask = BitString::zeros(n);
        for s in &shares[1..] {
            sub_value.xor_assign(&s.value);
            sub_mask.xor_assign(&s.mask);
        }
        for i in 0..n {
            value_ones[i] += sub_value.bit(i) as u64;
            mask_ones[i] += sub_mask.bit(i) as u64;
        }
    }
    let mut failures = Vec::new();
    if broken_identities > 0 {
        failures.push(format!(
            "{broken_identities} of {SHARE_SAMPLES} samples failed exact reconstruction"
        ));
    }
    let worst = value_ones
        .iter()
        .chain(&mask_ones)
        .map(|&ones| (ones as f64 / SHARE_SAMPLES as f64 - 0.5).abs())
        .fold(0.0_f64, f64::max);
    if worst > SHARE_BIAS_TOLERANCE {
        failures.push(format!(
            "worst per-bit bias {worst:.5} exceeds {SHARE_BIAS_TOLERANCE}"
        ));
    }
    gate(2, "share algebra identities and subset uniformity", failures);
}

#[test]
fn acceptance_3_exhaustive_small_width_matching() {
    let mut rng = ProtocolRng::from_seed(0xACC0_0003);
    let params = ProtocolParams {
        header_len: 8,
        blind_count: 4,
        allow_weak_matches: true,
        ..ProtocolParams::default()
    };
    let matches: Vec<TriStateString> = (0..50)
        .map(|_| {
            let fixed = rng.bits(8);
            let values = rng.bits(8).and(&fixed);
            TriStateString::from_parts(fixed, values).expect("values fit the mask")
        })
        .collect();
    let (blinds, table) = setup_lookup_tables(&params, &matches, &mut rng).expect("setup");
    let mut failures = Vec::new();
    let mut checked = 0u64;
    for header_byte in 0..=255u8 {
        let header = BitString::from_bytes(&[header_byte], 8).unwrap();
        for index_value in 1..=params.blind_count {
            let index = BlindIndex::new(index_value).unwrap();
            let blinded = header.xor(blinds.blind(index).unwrap());
            for (id, m) in matches.iter().enumerate() {
                let hashed =
                    compute_match(&params, &table, &m.projection(), &blinded, index, id as u32)
                        .unwrap();
                let plain = tri_match(&header, m).unwrap();
                checked += 1;
                if hashed != plain && failures.len() < 3 {
                    failures.push(format!(
                        "header {header_byte:#04x}, blind {index_value}, match {id}: \
                         hashed {hashed}, plain {plain}"
                    ));
                }
            }
        }
    }
    if checked != 256 * 4 * 50 {
        failures.push(format!(
            "checked {checked} combinations, expected {}",
            256 * 4 * 50
        ));
    }
    gate(3, "exhaustive small-width match agreement", failures);
}

#[test]
fn acceptance_4_throughput_falls_with_rule_count() {
    let cfg = BenchConfig {
        rule_counts: vec![1, 15, 30, 45, 60],
        worker_counts: vec![1],
        trace: TraceSpec {
            count: 3_000,
            mean_payload: 64,
        },
        seed: 0xACC0_0004,
        ..BenchConfig::default()
    };
    let mut failures = Vec::new();
    match run_throughput(&cfg) {
        Ok(report) => {
            for p in &report.points {
                println!(
                    "  rules {:>2}: private {:>9} pps, plaintext {:>9} pps, ratio {:.4}",
                    p.rules,
                    p.private_pps,
                    p.plaintext_pps,
                    p.private_pps as f64 / p.plaintext_pps.max(1) as f64
                );
            }
            match (report.points.first(), report.points.last()) {
                (Some(one), Some(sixty)) if one.rules == 1 && sixty.rules == 60 => {
                    let ceiling = one.private_pps as f64 * (1.0 - RATE_DROP_FLOOR);
                    if sixty.private_pps as f64 > ceiling {
                        failures.push(format!(
                            "60-rule rate {} pps is not {:.0}% below the 1-rule rate {} pps",
                            sixty.private_pps,
                            RATE_DROP_FLOOR * 100.0,
                            one.private_pps
                        ));
                    }
                }
                _ => failures.push("sweep endpoints missing".into()),
            }
            for pair in report.points.windows(2) {
                let band = pair[0].private_pps as f64 * (1.0 + TREND_NOISE_BAND);
                if pair[1].private_pps as f64 > band {
                    failures.push(format!(
                        "rate rose from {} pps at {} rules to {} pps at {} rules",
                        pair[0].private_pps, pair[0].rules, pair[1].private_pps, pair[1].rules
                    ));
                }
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    gate(4, "throughput falls with rule count", failures);
}

#[test]
fn acceptance_5_latency_rises_with_load() {
    let cfg = BenchConfig {
        rule_counts: vec![1, 30, 60],
        load_fracs_ppm: vec![100_000, 900_000],
        trace: TraceSpec {
            count: 2_000,
            mean_payload: 64,
        },
        seed: 0xACC0_0005,
        ..BenchConfig::default()
    };
    let mut failures = Vec::new();
    match run_latency(&cfg) {
        Ok(report) => {
            for &rules in &cfg.rule_counts {
                let at = |ppm: u32| {
                    report
                        .points
                        .iter()
                        .find(|p| p.rules == rules && p.load_ppm == ppm)
                };
                match (at(100_000), at(900_000)) {
                    (Some(light), Some(heavy)) => {
                        if heavy.p50_delay_ns <= light.p50_delay_ns {
                            failures.push(format!(
                                "rules {rules}: p50 {} ns at 90% load not above {} ns at 10%",
                                heavy.p50_delay_ns, light.p50_delay_ns
                            ));
                        }
                    }
                    _ => failures.push(format!("rules {rules}: sweep points missing")),
                }
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    gate(5, "median delay rises with offered load", failures);
}

#[test]
fn acceptance_6_pad_table_length_insensitivity() {
    let mut failures = Vec::new();
    let cfg = BenchConfig {
        blind_counts: vec![64, 1024, 65_536],
        lsweep_rules: 15,
        trace: TraceSpec {
            count: 10_000,
            mean_payload: 64,
        },
        seed: 0xACC0_0006,
        ..BenchConfig::default()
    };
    match run_lsweep(&cfg) {
        Ok(report) => {
            let spread = report.rate_spread();
            if spread >= PAD_SPREAD_CEILING {
                failures.push(format!(
                    "rate spread {spread:.4} across pad-table lengths, ceiling {PAD_SPREAD_CEILING}"
                ));
            }
            match report.points.iter().find(|p| p.blind_count == 64) {
                Some(p) if p.counter_wraps >= WRAP_FLOOR => {}
                Some(p) => failures.push(format!(
                    "sustained run wrapped {} times at the 64-entry table, need {WRAP_FLOOR}",
                    p.counter_wraps
                )),
                None => failures.push("no 64-entry point in the sweep".into()),
            }
        }
        Err(e) => failures.push(e.to_string()),
    }

    // Verdicts must stay oracle-correct while the counter laps a 64-entry
    // table over a hundred times.
    let (tree, bundle, packets) = deployment(12, 2, 64, 10_000, 0xACC0_0060);
    let report = relaxed_run(&bundle, &packets, FaultPlan::default(), 0x60);
    if report.entry_stats.counter_wraps < WRAP_FLOOR {
        failures.push(format!(
            "soak run wrapped {} times, need {WRAP_FLOOR}",
            report.entry_stats.counter_wraps
        ));
    }
    failures.extend(oracle_failures(&tree, &packets, &report.verdicts));
    gate(6, "pad-table length insensitivity and wrap correctness", failures);
}

#[test]
fn acceptance_7_cover_traffic_rate_law() {
    let cfg = BenchConfig {
        ratios: vec![Ratio::ONE, Ratio { num: 1, den: 2 }],
        lsweep_rules: 10,
        trace: TraceSpec {
            count: 3_000,
            mean_payload: 64,
        },
        seed: 0xACC0_0007,
        ..BenchConfig::default()
    };
    let mut failures = Vec::new();
    match run_dummyrate(&cfg) {
        Ok(report) => {
            let rate = |num: u32, den: u32| {
                report
                    .points
                    .iter()
                    .find(|p| p.real_ratio == (Ratio { num, den }))
                    .map(|p| p.effective_pps)
            };
            match (rate(1, 1), rate(1, 2)) {
                (Some(full), Some(half)) => {
                    let target = full as f64 / 2.0;
                    let error = (half as f64 - target).abs() / target;
                    println!(
                        "  full-cover {full} pps, half-cover {half} pps, \
                         target {target:.0} pps, error {error:.3}"
                    );
                    if error > HALVING_TOLERANCE {
                        failures.push(format!(
                            "half-cover rate {half} pps sits {:.1}% from half the \
                             full rate {full} pps",
                            error * 100.0
                        ));
                    }
                }
                _ => failures.push("ratio points missing".into()),
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    gate(7, "cover traffic halves the effective rate", failures);
}

/// One valid frame of each wire kind, one encoded config per role, and an
/// encoded trace — seeds for the mutation half of the fuzz.
fn valid_frames(rng: &mut ProtocolRng) -> Vec<Vec<u8>> {
    let header_len = 104;
    let index = BlindIndex::new(3).unwrap();
    let mut frames = vec![
        WireMessage::ToProcessor(ProcessorInput {
            seq: 41,
            index,
            processor_id: 1,
            blinded_header: rng.bits(header_len),
            flag_share: 1,
        })
        .encode(),
        WireMessage::ToClientPacket(BlindedPacketMsg {
            seq: 42,
            index,
            packet: Packet::new(rng.bits(header_len), rng.bits(256)),
        })
        .encode(),
        WireMessage::ToClientShares(ShareMessage {
            seq: 43,
            index,
            processor_id: 2,
            share: CumulativeShare {
                value: rng.bits(header_len),
                mask: rng.bits(header_len),
            },
            flag_share: 0,
        })
        .encode(),
    ];
    let (_, bundle, _) = deployment(3, 2, 16, 1, 0xACC0_0080);
    frames.push(RoleConfig::Entry(bundle.entry.clone()).encode());
    frames.push(RoleConfig::Processor(bundle.processors[0].clone()).encode());
    frames.push(RoleConfig::Client(bundle.client.clone()).encode());
    let spec = TraceSpec {
        count: 20,
        mean_payload: 64,
    };
    frames.push(encode_trace(&generate_trace(&spec, rng)).unwrap());
    frames
}

#[test]
fn acceptance_8_codec_and_fault_robustness() {
    let mut failures = Vec::new();

    // Stage 1: decoder fuzz — pure random bytes alternating with mutated
    // valid frames, through every decoder.
    let mut rng = ProtocolRng::from_seed(0xACC0_0008);
    let frames = valid_frames(&mut rng);
    let mut panics = 0u64;
    for case in 0..FUZZ_CASES {
        let bytes = if case % 2 == 0 {
            let len = rng.random_range(0..=192usize);
            let mut b = vec![0u8; len];
            rng.fill_bytes(&mut b);
            b
        } else {
            let mut b = frames[rng.random_range(0..frames.len())].clone();
            for _ in 0..rng.random_range(1..=8usize) {
                let at = rng.random_range(0..b.len());
                b[at] ^= rng.random_range(1..=255u32) as u8;
            }
            if rng.random_range(0..4u32) == 0 {
                b.truncate(rng.random_range(0..=b.len()));
            }
            b
        };
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let _ = WireMessage::decode(&bytes, 104);
            let _ = RoleConfig::decode(&bytes);
            let _ = decode_trace(&bytes);
        }));
        if outcome.is_err() {
            panics += 1;
        }
    }
    if panics > 0 {
        failures.push(format!(
            "{panics} of {FUZZ_CASES} fuzz inputs panicked a decoder"
        ));
    }

    // Stage 2: a 1% share-loss plan must leave the books balanced.
    let (_, bundle, packets) = deployment(10, 2, 1024, 2_000, 0xACC0_0081);
    let lossy = FaultPlan {
        loss_ppm: 10_000,
        ..FaultPlan::default()
    };
    let report = relaxed_run(&bundle, &packets, lossy, 0x81);
    if let Err(e) = report.verify_conservation() {
        failures.push(format!("share-loss books unbalanced: {e}"));
    }
    if report.lost() == 0 {
        failures.push("1% loss plan lost nothing; the fault plan is not engaging".into());
    }

    // Stage 3: loopback UDP must reach the in-process verdicts, loss-free.
    let (tree, bundle, packets) = deployment(8, 2, 1024, 1_000, 0xACC0_0082);
    let inproc = relaxed_run(&bundle, &packets, FaultPlan::default(), 0x82);
    failures.extend(oracle_failures(&tree, &packets, &inproc.verdicts));
    match run_udp_topology(
        &bundle,
        &packets,
        0x82,
        ReassemblyLimits::default(),
        Duration::from_micros(100),
    ) {
        Ok(udp) => {
            if udp.verdicts != inproc.verdicts {
                let first = udp
                    .verdicts
                    .iter()
                    .zip(&inproc.verdicts)
                    .position(|(a, b)| a != b);
                failures.push(format!("carriers disagree, first at packet {first:?}"));
            }
        }
        Err(e) => failures.push(format!("loopback run failed: {e}")),
    }

    gate(8, "codec fuzz, loss accounting, carrier agreement", failures);
}

#[test]
fn acceptance_9_processor_view_audit() {
    let mut failures = Vec::new();
    let mut atoms = 0u64;
    let cases: [(usize, u32); 6] = [(1, 2), (15, 3), (30, 2), (45, 3), (60, 2), (60, 3)];
    for (case, &(rules, share_count)) in cases.iter().enumerate() {
        let mut rng = ProtocolRng::from_seed(0xACC0_0009 + case as u64);
        let ruleset = random_ruleset(rules, &mut rng);
        let tree = compile_rules(&ruleset).expect("compile");
        let params = ProtocolParams {
            share_count,
            ..ProtocolParams::default()
        };
        let bundle = global_setup(&params, &tree, &mut rng).expect("setup");

        let mut inventory = SecretInventory::new();
        for (i, blind) in bundle.entry.blinds.iter().enumerate() {
            inventory.register(format!("blind[{i}]"), blind);
        }
        let split = strip_tree(&tree);
        for (i, m) in split.matches.iter().enumerate() {
            inventory.register_match(i, m);
        }
        for (i, a) in split.actions.iter().enumerate() {
            inventory.register_action(i, a);
        }

        let spec = TraceSpec {
            count: 300,
            mean_payload: 32,
        };
        let trace = biased_trace(&ruleset, 500_000, &spec, &mut rng);
        let mut observed = Vec::with_capacity(trace.len());
        let mut plain_packets = Vec::with_capacity(trace.len());
        for (k, record) in trace.iter().enumerate() {
            let header = encode_header(&record.tuple);
            inventory.register(format!("plain_header[{k}]"), &header);
            let packet = Packet::new(header, rng.bits(record.payload_bytes as usize * 8));
            let index = BlindIndex::new(1 + (k as u32 % params.blind_count)).unwrap();
            let (blinded, _) = split_packet(&packet, index, &bundle.entry.blinds).unwrap();
            observed.push(blinded);
            plain_packets.push(packet);
        }

        // The audited deployments are live ones: the same bundle must run
        // and agree with the plaintext walk.
        let report = relaxed_run(&bundle, &plain_packets, FaultPlan::default(), 0x90 + case as u64);
        failures.extend(oracle_failures(&tree, &plain_packets, &report.verdicts));

        for (pid, processor) in bundle.processors.iter().enumerate() {
            let audit = audit_processor_view(&inventory, processor, &observed);
            atoms += audit.atoms_checked;
            if !audit.is_clean() {
                for finding in audit.findings.iter().take(3) {
                    failures.push(format!(
                        "rules {rules}, t {share_count}, processor {pid}: {finding}"
                    ));
                }
            }
        }
    }
    if atoms == 0 {
        failures.push("audit checked nothing".into());
    }
    gate(9, "processor views free of pads, patterns, and plaintext", failures);
}
