//! Delay percentiles under load: for each rule count, find the
//! sustainable rate, then offer Poisson traffic at fractions of it and
//! read the decision delays off the virtual clock.

use crate::protocol::{ProtocolRng, Ratio};
use crate::roles::ReassemblyLimits;
use crate::transport::{run_topology, FaultPlan, RunConfig};

use super::harness::{
    controlled_workload, mix, percentile, poisson, probe_cost, PrivateProbe,
};
use super::{to_csv, BenchConfig, BenchError, Carrier};

#[derive(Clone, Debug)]
pub struct LatencyPoint {
    pub rules: usize,
    /// Offered load as parts per million of the measured maximum.
    pub load_ppm: u32,
    pub offered_pps: u64,
    pub p50_delay_ns: u64,
    pub p99_delay_ns: u64,
    pub decided: u64,
    pub lost: u64,
}

#[derive(Clone, Debug)]
pub struct LatencyReport {
    pub points: Vec<LatencyPoint>,
    pub packets: usize,
}

const COLUMNS: &[&str] = &[
    "rules",
    "load_ppm",
    "offered_pps",
    "p50_delay_ns",
    "p99_delay_ns",
    "decided",
    "lost",
];

impl LatencyReport {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                vec![
                    p.rules.to_string(),
                    p.load_ppm.to_string(),
                    p.offered_pps.to_string(),
                    p.p50_delay_ns.to_string(),
                    p.p99_delay_ns.to_string(),
                    p.decided.to_string(),
                    p.lost.to_string(),
                ]
            })
            .collect();
        to_csv(COLUMNS, &rows)
    }

    pub fn render(&self) -> String {
        let mut s = format!("latency under load, {} packets per point\n", self.packets);
        for p in &self.points {
            s.push_str(&format!(
                "  rules={:<2} load={:>3}% offered={:>9} pps p50={:>8} ns p99={:>8} ns\n",
                p.rules,
                p.load_ppm / 10_000,
                p.offered_pps,
                p.p50_delay_ns,
                p.p99_delay_ns,
            ));
        }
        s
    }
}

/// For each rule count: measure the ceiling, then sample delays at the
/// configured load fractions with Poisson arrivals.
pub fn run_latency(cfg: &BenchConfig) -> Result<LatencyReport, BenchError> {
    if cfg.carrier == Carrier::Udp {
        return Err(BenchError::UnsupportedCarrier { mode: "latency" });
    }
    let mut points = Vec::new();
    for &rules in &cfg.rule_counts {
        let seed = mix(cfg.seed, 0x6c61_7400 | rules as u64);
        let wl = controlled_workload(
            rules,
            &cfg.trace,
            cfg.share_count,
            cfg.blind_count,
            Ratio::ONE,
            seed,
        )?;
        let cost = probe_cost(cfg, 1);
        let probe = PrivateProbe { workload: &wl, cost: cost.clone(), seed };
        let (ceiling_pps, _) = probe.sustainable()?;
        for &load_ppm in &cfg.load_fracs_ppm {
            let offered_pps =
                ((ceiling_pps as u128 * load_ppm as u128) / 1_000_000).max(1) as u64;
            let mut arrival_rng = ProtocolRng::from_seed(mix(seed, load_ppm as u64));
            let arrivals = poisson(&wl.packets, offered_pps, &mut arrival_rng);
            let run_cfg = RunConfig {
                cost: cost.clone(),
                faults: FaultPlan::default(),
                limits: ReassemblyLimits::default(),
                entry_seed: mix(seed, 0x6172_7273),
                fault_seed: 0,
            };
            let report = run_topology(&wl.bundle, &arrivals, &run_cfg)?;
            let mut delays: Vec<u64> =
                report.delays_ns.iter().flatten().copied().collect();
            points.push(LatencyPoint {
                rules,
                load_ppm,
                offered_pps,
                p50_delay_ns: percentile(&mut delays, 50.0),
                p99_delay_ns: percentile(&mut delays, 99.0),
                decided: delays.len() as u64,
                lost: report.lost() as u64,
            });
        }
    }
    Ok(LatencyReport { points, packets: cfg.trace.count })
}
