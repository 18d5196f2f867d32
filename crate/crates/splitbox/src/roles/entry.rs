//! The entry middlebox: blinds real traffic, interleaves dummies, fans out.

use crate::nfmodel::Packet;
use crate::protocol::{
    make_dummy_packet, split_flag, split_packet, BlindIndex, EntryConfig, ProtocolRng,
};

use super::messages::{BlindedPacketMsg, Emission, ProcessorInput};
use super::stats::render_stats;
use super::RoleError;

/// Running entry endpoint. Owns the emission counter, the pad counter, and
/// the RNG that drives dummy scheduling and flag sharing.
pub struct EntryState {
    cfg: EntryConfig,
    rng: ProtocolRng,
    next_seq: u64,
    next_index: BlindIndex,
    stats: EntryStats,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntryStats {
    pub real_packets: u64,
    pub dummy_packets: u64,
    /// Times the pad counter wrapped back to the first entry.
    pub counter_wraps: u64,
}

impl EntryStats {
    pub fn render(&self) -> String {
        render_stats(&[
            ("counter_wraps", self.counter_wraps),
            ("dummy_packets", self.dummy_packets),
            ("real_packets", self.real_packets),
        ])
    }
}

impl EntryState {
    pub fn new(cfg: EntryConfig, rng: ProtocolRng) -> Self {
        EntryState {
            cfg,
            rng,
            next_seq: 1,
            next_index: BlindIndex::first(),
            stats: EntryStats::default(),
        }
    }

    pub fn config(&self) -> &EntryConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &EntryStats {
        &self.stats
    }

    /// Pad index the next emission will use.
    pub fn next_index(&self) -> BlindIndex {
        self.next_index
    }

    /// Ingests one real packet. Emits a geometric run of dummies first —
    /// each emission is the real one with probability ρ — so the long-run
    /// real fraction is exactly ρ. Every emission consumes one pad index
    /// and one sequence number.
    pub fn ingest(&mut self, packet: &Packet) -> Result<Vec<Emission>, RoleError> {
        let n = self.cfg.params.header_len;
        if packet.header_len() != n {
            return Err(RoleError::Protocol(crate::protocol::ProtocolError::Model(
                crate::nfmodel::ModelError::LengthMismatch {
                    expected: n,
                    got: packet.header_len(),
                },
            )));
        }
        let ratio = self.cfg.params.real_ratio;
        let mut out = Vec::new();
        while !self.rng.ratio_event(ratio.num, ratio.den) {
            let dummy = make_dummy_packet(n, packet.payload().len(), &mut self.rng);
            out.push(self.emit(&dummy, false)?);
        }
        out.push(self.emit(packet, true)?);
        Ok(out)
    }

    fn emit(&mut self, packet: &Packet, is_real: bool) -> Result<Emission, RoleError> {
        let seq = self.next_seq;
        let index = self.next_index;
        let (blinded_header, blinded_packet) =
            split_packet(packet, index, &self.cfg.blinds)?;

        let t = self.cfg.params.share_count;
        let flag_shares = split_flag(is_real, t, &mut self.rng);
        let to_processors = flag_shares
            .into_iter()
            .enumerate()
            .map(|(p, flag_share)| ProcessorInput {
                seq,
                index,
                processor_id: (p + 1) as u8,
                blinded_header: blinded_header.clone(),
                flag_share,
            })
            .collect();

        self.next_seq += 1;
        let (next, wrapped) = index.next(self.cfg.params.blind_count);
        self.next_index = next;
        if wrapped {
            self.stats.counter_wraps += 1;
        }
        if is_real {
            self.stats.real_packets += 1;
        } else {
            self.stats.dummy_packets += 1;
        }

        Ok(Emission {
            seq,
            index,
            is_real,
            to_processors,
            to_client: BlindedPacketMsg {
                seq,
                index,
                packet: blinded_packet,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfmodel::{build_chain, BitString};
    use crate::protocol::{global_setup, merge_flag, ProtocolParams, Ratio};

    fn entry(blind_count: u32, ratio: Ratio, seed: u64) -> EntryState {
        let params = ProtocolParams {
            header_len: 16,
            blind_count,
            real_ratio: ratio,
            ..ProtocolParams::default()
        };
        let tree = build_chain(16, &[]).unwrap();
        let bundle = global_setup(&params, &tree, &mut ProtocolRng::from_seed(seed)).unwrap();
        EntryState::new(bundle.entry, ProtocolRng::from_seed(seed + 1))
    }

    fn packet(rng: &mut ProtocolRng) -> Packet {
        Packet::new(rng.bits(16), rng.bits(32))
    }

    #[test]
    fn no_dummies_at_ratio_one() {
        let mut e = entry(4, Ratio::ONE, 1);
        let mut rng = ProtocolRng::from_seed(2);
        for k in 0..6 {
            let emissions = e.ingest(&packet(&mut rng)).unwrap();
            assert_eq!(emissions.len(), 1);
            let em = &emissions[0];
            assert!(em.is_real);
            assert_eq!(em.seq, k + 1);
            // Counter walks 1,2,3,4,1,2.
            assert_eq!(em.index.value(), (k % 4) as u32 + 1);
        }
        assert_eq!(e.stats().counter_wraps, 1);
        assert_eq!(e.stats().real_packets, 6);
        assert_eq!(e.stats().dummy_packets, 0);
    }

    #[test]
    fn emission_blinds_with_its_own_index() {
        let mut e = entry(4, Ratio::ONE, 3);
        let mut rng = ProtocolRng::from_seed(4);
        let p = packet(&mut rng);
        let em = e.ingest(&p).unwrap().pop().unwrap();
        let pad = e.config().blinds.blind(em.index).unwrap();
        assert_eq!(&em.to_client.packet.header().xor(pad), p.header());
        assert_eq!(em.to_client.packet.payload(), p.payload());
        for (i, m) in em.to_processors.iter().enumerate() {
            assert_eq!(m.processor_id as usize, i + 1);
            assert_eq!(&m.blinded_header, em.to_client.packet.header());
            assert_eq!(m.seq, em.seq);
            assert_eq!(m.index, em.index);
        }
    }

    #[test]
    fn flag_shares_reconstruct_reality() {
        let mut e = entry(1024, Ratio { num: 1, den: 2 }, 5);
        let mut rng = ProtocolRng::from_seed(6);
        for _ in 0..50 {
            for em in e.ingest(&packet(&mut rng)).unwrap() {
                let merged = merge_flag(em.to_processors.iter().map(|m| m.flag_share));
                assert_eq!(merged, em.is_real);
                for m in &em.to_processors {
                    assert!(m.flag_share <= 1);
                }
            }
        }
    }

    #[test]
    fn dummy_run_matches_ratio() {
        // ρ = 1/2 over enough ingests: real fraction within ±0.02 of 1/2.
        let mut e = entry(1024, Ratio { num: 1, den: 2 }, 7);
        let mut rng = ProtocolRng::from_seed(8);
        let mut total = 0u64;
        let mut real = 0u64;
        while real < 10_000 {
            for em in e.ingest(&packet(&mut rng)).unwrap() {
                total += 1;
                real += em.is_real as u64;
            }
        }
        let fraction = real as f64 / total as f64;
        assert!(
            (fraction - 0.5).abs() < 0.02,
            "real fraction {fraction} too far from 0.5"
        );
        // Dummies share the triggering packet's payload size.
        let em = e.ingest(&Packet::new(rng.bits(16), rng.bits(48))).unwrap();
        for m in em {
            assert_eq!(m.to_client.packet.payload().len(), 48);
        }
    }

    #[test]
    fn sequence_numbers_count_every_emission() {
        let mut e = entry(1024, Ratio { num: 2, den: 3 }, 9);
        let mut rng = ProtocolRng::from_seed(10);
        let mut expected = 1u64;
        for _ in 0..200 {
            for em in e.ingest(&packet(&mut rng)).unwrap() {
                assert_eq!(em.seq, expected);
                expected += 1;
            }
        }
        assert_eq!(
            e.stats().real_packets + e.stats().dummy_packets,
            expected - 1
        );
    }

    #[test]
    fn wrong_width_packet_refused() {
        let mut e = entry(4, Ratio::ONE, 11);
        let bad = Packet::new(BitString::zeros(8), BitString::zeros(0));
        assert!(e.ingest(&bad).is_err());
    }
}
