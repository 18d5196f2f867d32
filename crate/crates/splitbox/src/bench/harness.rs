//! Shared machinery for the benchmark modes: workload construction,
//! arrival pacing, the loss bound, binary rate search, and the plaintext
//! single-server baseline.

use rand::Rng;

use crate::firewall::{
    compile_rules, controlled_match_set, encode_header, reference_filter, TraceRecord,
    TraceSpec, Verdict, HEADER_BITS,
};
use crate::nfmodel::Packet;
use crate::protocol::{global_setup, ProtocolParams, ProtocolRng, Ratio, SetupBundle};
use crate::roles::ReassemblyLimits;
use crate::transport::{run_topology, CostModel, FaultPlan, RunConfig, RunReport};

use super::BenchError;

/// SplitMix64 finalizer: derives a stream seed from the master seed and a
/// salt, so the modes never share randomness by accident.
pub(crate) fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Largest tolerable undecided-packet count for a run of `n`: one packet
/// or 0.001% of the offer, whichever is larger.
pub fn loss_bound(n: u64) -> u64 {
    (n / 100_000).max(1)
}

/// Measurement queue: small enough that overload turns into loss within
/// one run instead of hiding in a deep buffer.
const PROBE_QUEUE: usize = 128;

/// The cost model rate probes run under.
pub(crate) fn probe_cost(cfg: &super::BenchConfig, workers: u32) -> CostModel {
    CostModel {
        queue_capacity: PROBE_QUEUE,
        processor_workers: workers.max(1),
        ..cfg.cost.clone()
    }
}

/// One fully prepared measurement input: the keyed pipeline plus the
/// packets and their plaintext ground truth.
pub(crate) struct Workload {
    pub bundle: SetupBundle,
    pub packets: Vec<Packet>,
    /// Reference scan length per packet — the plaintext cost driver.
    pub attempts: Vec<u32>,
    /// Whether the plaintext box edits the packet (here: drops it).
    pub actions: Vec<bool>,
}

/// Builds a workload whose every packet scans exactly `rules` rules
/// before matching, so the per-packet work is a constant of the point
/// being measured rather than an average.
pub(crate) fn controlled_workload(
    rules: usize,
    spec: &TraceSpec,
    share_count: u32,
    blind_count: u32,
    real_ratio: Ratio,
    seed: u64,
) -> Result<Workload, BenchError> {
    let mut rng = ProtocolRng::from_seed(mix(seed, 0x776f_726b));
    let (ruleset, records) = controlled_match_set(rules, spec, &mut rng);
    let tree = compile_rules(&ruleset)?;
    let params = ProtocolParams {
        header_len: HEADER_BITS,
        blind_count,
        share_count,
        real_ratio,
        ..ProtocolParams::default()
    };
    let mut setup_rng = ProtocolRng::from_seed(mix(seed, 0x7365_7475));
    let bundle = global_setup(&params, &tree, &mut setup_rng)?;
    let packets = materialize(&records, &mut rng);
    let report = reference_filter(&ruleset, &records);
    let actions = report.verdicts.iter().map(|v| *v == Verdict::Drop).collect();
    Ok(Workload {
        bundle,
        packets,
        attempts: report.attempts,
        actions,
    })
}

/// Turns trace records into packets, drawing payload bits for each.
pub(crate) fn materialize(records: &[TraceRecord], rng: &mut ProtocolRng) -> Vec<Packet> {
    records
        .iter()
        .map(|r| {
            let header = encode_header(&r.tuple);
            let payload = rng.bits(r.payload_bytes as usize * 8);
            Packet::new(header, payload)
        })
        .collect()
}

/// Evenly spaced arrivals at `pps` packets per second.
pub(crate) fn paced(packets: &[Packet], pps: u64) -> Vec<(u64, Packet)> {
    let gap = 1_000_000_000 / pps.max(1);
    packets
        .iter()
        .enumerate()
        .map(|(i, p)| (i as u64 * gap, p.clone()))
        .collect()
}

/// Poisson arrivals averaging `pps` packets per second.
pub(crate) fn poisson(packets: &[Packet], pps: u64, rng: &mut ProtocolRng) -> Vec<(u64, Packet)> {
    let mean_gap = 1e9 / pps.max(1) as f64;
    let mut now = 0u64;
    packets
        .iter()
        .map(|p| {
            let u: f64 = rng.random();
            // 1 - u is in (0, 1], so the log is finite.
            let gap = -(1.0 - u).ln() * mean_gap;
            now += gap as u64;
            (now, p.clone())
        })
        .collect()
}

/// One private-pipeline measurement point: reruns the same workload at
/// different offered rates with a tight queue, so overload shows up as
/// loss instead of unbounded buffering.
pub(crate) struct PrivateProbe<'a> {
    pub workload: &'a Workload,
    pub cost: CostModel,
    pub seed: u64,
}

impl PrivateProbe<'_> {
    pub fn run_at(&self, pps: u64) -> Result<RunReport, BenchError> {
        let arrivals = paced(&self.workload.packets, pps);
        let cfg = RunConfig {
            cost: self.cost.clone(),
            faults: FaultPlan::default(),
            limits: ReassemblyLimits::default(),
            entry_seed: mix(self.seed, 0x656e_7472),
            fault_seed: 0,
        };
        run_topology(&self.workload.bundle, &arrivals, &cfg).map_err(Into::into)
    }

    fn holds_at(&self, pps: u64) -> Result<bool, BenchError> {
        let report = self.run_at(pps)?;
        Ok(report.lost() as u64 <= loss_bound(self.workload.packets.len() as u64))
    }

    /// Highest rate the pipeline sustains within the loss bound, plus the
    /// report taken at that rate.
    pub fn sustainable(&self) -> Result<(u64, RunReport), BenchError> {
        let pps = search_max_rate(|r| self.holds_at(r), 2_000, 4_000_000_000)?;
        let report = self.run_at(pps)?;
        Ok((pps, report))
    }
}

/// Binary search for the largest rate that still passes: doubles from
/// `start` until the probe fails, then bisects to about 1.5% precision.
/// `start` is assumed low enough to pass; if even it fails, it is
/// returned as a floor.
pub(crate) fn search_max_rate(
    mut passes: impl FnMut(u64) -> Result<bool, BenchError>,
    start: u64,
    cap: u64,
) -> Result<u64, BenchError> {
    let mut lo = start;
    if !passes(lo)? {
        return Ok(lo);
    }
    let mut hi = lo;
    loop {
        if hi >= cap {
            return Ok(cap);
        }
        hi = (hi * 2).min(cap);
        if !passes(hi)? {
            break;
        }
        lo = hi;
    }
    while hi - lo > (lo / 64).max(1) {
        let mid = lo + (hi - lo) / 2;
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The plaintext middlebox as a single-server queue in the same cost
/// vocabulary: a fixed per-packet charge, one compare per rule scanned,
/// one edit charge when a rule fires. Same bounded queue, same loss
/// discipline as the private probe. Returns the shed-packet count.
pub(crate) fn plain_run(
    attempts: &[u32],
    actions: &[bool],
    cost: &CostModel,
    pps: u64,
) -> u64 {
    let gap = 1_000_000_000 / pps.max(1);
    let cap = cost.queue_capacity.max(1);
    let mut queue: std::collections::VecDeque<u64> = std::collections::VecDeque::new();
    let mut last_finish = 0u64;
    let mut drops = 0u64;
    for (i, (&att, &act)) in attempts.iter().zip(actions).enumerate() {
        let arrival = i as u64 * gap;
        while queue.front().is_some_and(|&f| f <= arrival) {
            queue.pop_front();
        }
        if queue.len() >= cap {
            drops += 1;
            continue;
        }
        let service = cost.plain_fixed_ns
            + u64::from(att) * cost.plain_compare_ns
            + u64::from(act) * cost.plain_action_ns;
        let start = arrival.max(last_finish);
        last_finish = start + service;
        queue.push_back(last_finish);
    }
    drops
}

/// Highest rate the plaintext baseline sustains within the loss bound.
pub(crate) fn plain_sustainable(
    attempts: &[u32],
    actions: &[bool],
    cost: &CostModel,
) -> Result<u64, BenchError> {
    let n = attempts.len() as u64;
    search_max_rate(
        |pps| Ok(plain_run(attempts, actions, cost, pps) <= loss_bound(n)),
        2_000,
        4_000_000_000,
    )
}

/// Nearest-rank percentile of an unsorted sample; 0 for an empty one.
pub(crate) fn percentile(samples: &mut [u64], p: f64) -> u64 {
    if samples.is_empty() {
        return 0;
    }
    samples.sort_unstable();
    let rank = ((p / 100.0) * samples.len() as f64).ceil() as usize;
    samples[rank.clamp(1, samples.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_bound_is_one_packet_or_ten_ppm() {
        assert_eq!(loss_bound(0), 1);
        assert_eq!(loss_bound(99_999), 1);
        assert_eq!(loss_bound(100_000), 1);
        assert_eq!(loss_bound(200_000), 2);
        assert_eq!(loss_bound(10_000_000), 100);
    }

    #[test]
    fn rate_search_finds_a_hidden_threshold() {
        for threshold in [2_500u64, 40_000, 777_777, 12_345_678] {
            let found =
                search_max_rate(|r| Ok(r <= threshold), 2_000, 4_000_000_000).unwrap();
            assert!(found <= threshold, "found {found} above {threshold}");
            // Precision: within ~1.6% of the true edge.
            assert!(
                threshold - found <= threshold / 32,
                "found {found} too far below {threshold}"
            );
        }
    }

    #[test]
    fn rate_search_returns_the_floor_when_nothing_passes() {
        assert_eq!(search_max_rate(|_| Ok(false), 2_000, 1 << 32).unwrap(), 2_000);
    }

    #[test]
    fn rate_search_returns_the_cap_when_everything_passes() {
        assert_eq!(search_max_rate(|_| Ok(true), 2_000, 50_000).unwrap(), 50_000);
    }

    #[test]
    fn plain_queue_drops_exactly_under_sustained_overload() {
        let cost = CostModel::default();
        // Service is plain_fixed + 10 compares: 45 + 180 = 225 ns/packet.
        let attempts = vec![10u32; 4_000];
        let actions = vec![false; 4_000];
        // Well under the service rate: nothing drops.
        assert_eq!(plain_run(&attempts, &actions, &cost, 1_000_000), 0);
        // Double the service rate: the bounded queue sheds close to half.
        let shed = plain_run(&attempts, &actions, &cost, 9_000_000);
        assert!(shed > 1_000, "expected heavy shedding, saw {shed}");
        assert!(shed < 4_000);
    }

    #[test]
    fn plain_sustainable_rate_tracks_the_service_time() {
        // Probe conditions: a shallow queue and a long run, so backlog
        // cannot mask a rate above the service bound.
        let cost = CostModel { queue_capacity: 128, ..CostModel::default() };
        let n = 20_000usize;
        let fast = plain_sustainable(&vec![1u32; n], &vec![false; n], &cost).unwrap();
        let slow = plain_sustainable(&vec![60u32; n], &vec![false; n], &cost).unwrap();
        // 60 compares cost ~18x the total service of 1 compare
        // (45+1080 vs 45+18), so the rates must be far apart.
        assert!(fast > slow * 10, "fast {fast} vs slow {slow}");
        // And the found rate is near the analytic service bound.
        let service = cost.plain_fixed_ns + 60 * cost.plain_compare_ns;
        let analytic = 1_000_000_000 / service;
        assert!(slow <= analytic + analytic / 20, "slow {slow} vs analytic {analytic}");
        assert!(slow >= analytic - analytic / 4, "slow {slow} vs analytic {analytic}");
    }

    #[test]
    fn poisson_gaps_average_to_the_requested_rate() {
        let mut rng = ProtocolRng::from_seed(4100);
        let packets: Vec<Packet> = {
            let mut work_rng = ProtocolRng::from_seed(4101);
            (0..4_000)
                .map(|_| Packet::new(work_rng.bits(16), work_rng.bits(8)))
                .collect()
        };
        let arrivals = poisson(&packets, 1_000_000, &mut rng);
        let last = arrivals.last().unwrap().0;
        // 4000 packets at 1e6 pps should span ~4 ms.
        let expect = 4_000_000u64;
        assert!(last > expect - expect / 10, "span {last}");
        assert!(last < expect + expect / 10, "span {last}");
        // Arrivals are monotone.
        assert!(arrivals.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn controlled_workload_pins_the_scan_length() {
        let wl = controlled_workload(
            7,
            &TraceSpec { count: 200, mean_payload: 64 },
            2,
            64,
            Ratio::ONE,
            4102,
        )
        .unwrap();
        assert_eq!(wl.packets.len(), 200);
        assert!(wl.attempts.iter().all(|&a| a == 7));
        assert!(wl.actions.iter().all(|&a| !a));
        assert_eq!(wl.bundle.entry.params.share_count, 2);
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let mut s = vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100];
        assert_eq!(percentile(&mut s, 50.0), 50);
        assert_eq!(percentile(&mut s, 99.0), 100);
        assert_eq!(percentile(&mut s, 10.0), 10);
        assert_eq!(percentile(&mut [], 50.0), 0);
        assert_eq!(percentile(&mut [42], 50.0), 42);
    }
}
