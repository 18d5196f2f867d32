//! Rate measurements: sustainable throughput vs rule count (private
//! pipeline against the plaintext baseline, with a processor worker
//! sweep), sensitivity to the pad-table length, and the cost of cover
//! traffic.

use crate::protocol::bundle::encode_setup;
use crate::protocol::Ratio;
use crate::transport::RunReport;

use super::harness::{
    controlled_workload, mix, percentile, plain_sustainable, probe_cost, PrivateProbe,
    Workload,
};
use super::{to_csv, BenchConfig, BenchError, Carrier};

fn require_inproc(cfg: &BenchConfig, mode: &'static str) -> Result<(), BenchError> {
    match cfg.carrier {
        Carrier::Inproc => Ok(()),
        Carrier::Udp => Err(BenchError::UnsupportedCarrier { mode }),
    }
}

/// Delay percentiles and loss of a finished run.
struct RunDigest {
    p50_ns: u64,
    p99_ns: u64,
    loss_fraction: f64,
    emitted: u64,
    match_attempts: u64,
    bytes_per_sec: u64,
}

fn digest_run(report: &RunReport) -> RunDigest {
    let mut delays: Vec<u64> = report.delays_ns.iter().flatten().copied().collect();
    let p50_ns = percentile(&mut delays, 50.0);
    let p99_ns = percentile(&mut delays, 99.0);
    let n = report.verdicts.len().max(1);
    let bytes: u64 = report.links.iter().map(|l| l.bytes).sum();
    let bytes_per_sec = if report.end_ns == 0 {
        0
    } else {
        ((bytes as u128 * 1_000_000_000) / report.end_ns as u128) as u64
    };
    RunDigest {
        p50_ns,
        p99_ns,
        loss_fraction: report.lost() as f64 / n as f64,
        emitted: report.emitted,
        match_attempts: report.processor_stats.iter().map(|s| s.match_attempts).sum(),
        bytes_per_sec,
    }
}

// ---------------------------------------------------------------------
// Throughput vs rule count.

#[derive(Clone, Debug)]
pub struct ThroughputPoint {
    pub rules: usize,
    pub workers: u32,
    /// Highest offered rate the private pipeline decides within the loss
    /// bound.
    pub private_pps: u64,
    /// Same search against the plaintext single-server baseline.
    pub plaintext_pps: u64,
    pub bytes_per_sec: u64,
    pub p50_delay_ns: u64,
    pub p99_delay_ns: u64,
    pub loss_fraction: f64,
    pub emitted: u64,
    pub match_attempts: u64,
}

#[derive(Clone, Debug)]
pub struct ThroughputReport {
    pub points: Vec<ThroughputPoint>,
    pub share_count: u32,
    pub packets: usize,
}

const THROUGHPUT_COLUMNS: &[&str] = &[
    "rules",
    "workers",
    "private_pps",
    "plaintext_pps",
    "private_to_plaintext",
    "bytes_per_sec",
    "p50_delay_ns",
    "p99_delay_ns",
    "loss_fraction",
    "emitted",
    "match_attempts",
];

impl ThroughputReport {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                vec![
                    p.rules.to_string(),
                    p.workers.to_string(),
                    p.private_pps.to_string(),
                    p.plaintext_pps.to_string(),
                    format!("{:.4}", p.private_pps as f64 / p.plaintext_pps.max(1) as f64),
                    p.bytes_per_sec.to_string(),
                    p.p50_delay_ns.to_string(),
                    p.p99_delay_ns.to_string(),
                    format!("{:.6}", p.loss_fraction),
                    p.emitted.to_string(),
                    p.match_attempts.to_string(),
                ]
            })
            .collect();
        to_csv(THROUGHPUT_COLUMNS, &rows)
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "throughput: t={} processors, {} packets per point\n",
            self.share_count, self.packets
        );
        for p in &self.points {
            s.push_str(&format!(
                "  rules={:<2} workers={} private={:>9} pps plaintext={:>9} pps \
                 ratio={:.4} p50={} ns\n",
                p.rules,
                p.workers,
                p.private_pps,
                p.plaintext_pps,
                p.private_pps as f64 / p.plaintext_pps.max(1) as f64,
                p.p50_delay_ns,
            ));
        }
        s
    }
}

/// Sweeps rule count and processor workers, binary-searching the
/// sustainable rate of the private pipeline and its plaintext twin on
/// identical workloads.
pub fn run_throughput(cfg: &BenchConfig) -> Result<ThroughputReport, BenchError> {
    require_inproc(cfg, "throughput")?;
    let mut points = Vec::new();
    for &rules in &cfg.rule_counts {
        let seed = mix(cfg.seed, rules as u64);
        let wl = controlled_workload(
            rules,
            &cfg.trace,
            cfg.share_count,
            cfg.blind_count,
            Ratio::ONE,
            seed,
        )?;
        let plaintext_pps =
            plain_sustainable(&wl.attempts, &wl.actions, &probe_cost(cfg, 1))?;
        for &workers in &cfg.worker_counts {
            let probe = PrivateProbe {
                workload: &wl,
                cost: probe_cost(cfg, workers.max(1)),
                seed,
            };
            let (private_pps, report) = probe.sustainable()?;
            let d = digest_run(&report);
            points.push(ThroughputPoint {
                rules,
                workers: workers.max(1),
                private_pps,
                plaintext_pps,
                bytes_per_sec: d.bytes_per_sec,
                p50_delay_ns: d.p50_ns,
                p99_delay_ns: d.p99_ns,
                loss_fraction: d.loss_fraction,
                emitted: d.emitted,
                match_attempts: d.match_attempts,
            });
        }
    }
    Ok(ThroughputReport {
        points,
        share_count: cfg.share_count,
        packets: cfg.trace.count,
    })
}

// ---------------------------------------------------------------------
// Pad-table length sweep.

#[derive(Clone, Debug)]
pub struct LsweepPoint {
    pub blind_count: u32,
    pub private_pps: u64,
    /// Bytes of the full encoded deployment (all role files).
    pub config_bytes: u64,
    /// Bytes of the processor files alone — the part that scales with
    /// the table.
    pub processor_bytes: u64,
    pub counter_wraps: u64,
    pub p50_delay_ns: u64,
}

#[derive(Clone, Debug)]
pub struct LsweepReport {
    pub points: Vec<LsweepPoint>,
    pub rules: usize,
}

const LSWEEP_COLUMNS: &[&str] = &[
    "blind_count",
    "private_pps",
    "config_bytes",
    "processor_bytes",
    "counter_wraps",
    "p50_delay_ns",
];

impl LsweepReport {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                vec![
                    p.blind_count.to_string(),
                    p.private_pps.to_string(),
                    p.config_bytes.to_string(),
                    p.processor_bytes.to_string(),
                    p.counter_wraps.to_string(),
                    p.p50_delay_ns.to_string(),
                ]
            })
            .collect();
        to_csv(LSWEEP_COLUMNS, &rows)
    }

    pub fn render(&self) -> String {
        let mut s = format!("pad-table sweep at {} rules\n", self.rules);
        for p in &self.points {
            s.push_str(&format!(
                "  l={:<6} private={:>9} pps config={} B wraps={}\n",
                p.blind_count, p.private_pps, p.config_bytes, p.counter_wraps,
            ));
        }
        s
    }

    /// Largest relative spread of the measured rates: (max-min)/max.
    pub fn rate_spread(&self) -> f64 {
        let lo = self.points.iter().map(|p| p.private_pps).min().unwrap_or(0);
        let hi = self.points.iter().map(|p| p.private_pps).max().unwrap_or(0);
        if hi == 0 {
            return 0.0;
        }
        (hi - lo) as f64 / hi as f64
    }
}

/// Reruns one fixed workload with different pad-table lengths: the rate
/// should barely move, while the config footprint grows linearly and the
/// counter wraps freely at small l.
pub fn run_lsweep(cfg: &BenchConfig) -> Result<LsweepReport, BenchError> {
    require_inproc(cfg, "lsweep")?;
    let rules = cfg.lsweep_rules.max(1);
    let seed = mix(cfg.seed, 0x6c73_7765);
    let mut points = Vec::new();
    for &blind_count in &cfg.blind_counts {
        // Same seed across l: identical rules, trace, and packets; only
        // the pad table differs.
        let wl = controlled_workload(
            rules,
            &cfg.trace,
            cfg.share_count,
            blind_count,
            Ratio::ONE,
            seed,
        )?;
        let (config_bytes, processor_bytes) = footprint(&wl);
        let probe = PrivateProbe { workload: &wl, cost: probe_cost(cfg, 1), seed };
        let (private_pps, report) = probe.sustainable()?;
        let d = digest_run(&report);
        points.push(LsweepPoint {
            blind_count,
            private_pps,
            config_bytes,
            processor_bytes,
            counter_wraps: report.entry_stats.counter_wraps,
            p50_delay_ns: d.p50_ns,
        });
    }
    Ok(LsweepReport { points, rules })
}

fn footprint(wl: &Workload) -> (u64, u64) {
    let files = encode_setup(&wl.bundle);
    let total: u64 = files.iter().map(|(_, b)| b.len() as u64).sum();
    let processors: u64 = files
        .iter()
        .filter(|(name, _)| name.starts_with("processor"))
        .map(|(_, b)| b.len() as u64)
        .sum();
    (total, processors)
}

// ---------------------------------------------------------------------
// Cover-traffic cost.

#[derive(Clone, Debug)]
pub struct DummyRatePoint {
    pub real_ratio: Ratio,
    /// Highest sustainable rate of *real* packets at this ratio.
    pub effective_pps: u64,
    pub dummy_fraction: f64,
    pub emitted: u64,
    pub real_packets: u64,
    pub dummy_packets: u64,
    pub loss_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct DummyRateReport {
    pub points: Vec<DummyRatePoint>,
    pub rules: usize,
}

const DUMMYRATE_COLUMNS: &[&str] = &[
    "real_ratio",
    "effective_pps",
    "dummy_fraction",
    "emitted",
    "real_packets",
    "dummy_packets",
    "loss_fraction",
];

impl DummyRateReport {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                vec![
                    format!("{}/{}", p.real_ratio.num, p.real_ratio.den),
                    p.effective_pps.to_string(),
                    format!("{:.4}", p.dummy_fraction),
                    p.emitted.to_string(),
                    p.real_packets.to_string(),
                    p.dummy_packets.to_string(),
                    format!("{:.6}", p.loss_fraction),
                ]
            })
            .collect();
        to_csv(DUMMYRATE_COLUMNS, &rows)
    }

    pub fn render(&self) -> String {
        let mut s = format!("cover-traffic cost at {} rules\n", self.rules);
        for p in &self.points {
            s.push_str(&format!(
                "  ratio={}/{} effective={:>9} pps dummies={:.4} of emissions\n",
                p.real_ratio.num, p.real_ratio.den, p.effective_pps, p.dummy_fraction,
            ));
        }
        s
    }
}

/// Measures how the sustainable *real* packet rate shrinks as the real
/// ratio drops and dummies take wire and processor capacity.
pub fn run_dummyrate(cfg: &BenchConfig) -> Result<DummyRateReport, BenchError> {
    require_inproc(cfg, "dummyrate")?;
    let rules = cfg.lsweep_rules.max(1);
    let seed = mix(cfg.seed, 0x6475_6d79);
    let mut points = Vec::new();
    for &real_ratio in &cfg.ratios {
        // Same seed: same rules and packets; only the dummy schedule and
        // keys differ through the ratio.
        let wl = controlled_workload(
            rules,
            &cfg.trace,
            cfg.share_count,
            cfg.blind_count,
            real_ratio,
            seed,
        )?;
        let probe = PrivateProbe { workload: &wl, cost: probe_cost(cfg, 1), seed };
        let (effective_pps, report) = probe.sustainable()?;
        let d = digest_run(&report);
        let real_packets = report.entry_stats.real_packets;
        let dummy_packets = report.entry_stats.dummy_packets;
        points.push(DummyRatePoint {
            real_ratio,
            effective_pps,
            dummy_fraction: dummy_packets as f64 / report.emitted.max(1) as f64,
            emitted: report.emitted,
            real_packets,
            dummy_packets,
            loss_fraction: d.loss_fraction,
        });
    }
    Ok(DummyRateReport { points, rules })
}
