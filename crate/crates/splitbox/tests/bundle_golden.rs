//! Byte-level regression tests for the binary formats. The files under
//! `tests/golden/` freeze the exact container encodings of one fixed
//! deployment, so a format change shows up here as a byte diff before it
//! breaks configs already shipped to machines. The wire and trace checks
//! decode with separate hand-written readers, pinning the documented
//! offsets rather than trusting the codec to invert itself.

use std::fs;
use std::path::PathBuf;

use splitbox::firewall::{encode_trace, parse_rules, compile_rules, decode_trace, TraceRecord};
use splitbox::firewall::FiveTuple;
use splitbox::nfmodel::BitString;
use splitbox::protocol::bundle::{encode_setup, RoleConfig};
use splitbox::protocol::{
    global_setup, BlindIndex, CumulativeShare, ProtocolParams, ProtocolRng, SetupBundle,
};
use splitbox::roles::ShareMessage;
use splitbox::transport::WireMessage;

const SETUP_SEED: u64 = 0x601D;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden")).join(name)
}

/// The frozen deployment: two rules, a tiny pad table, two processors.
fn fixture() -> (SetupBundle, Vec<(String, Vec<u8>)>) {
    let rules = parse_rules(
        "drop src=10.0.0.0/8 dst=* proto=* sport=* dport=23\n\
         allow src=* dst=192.168.1.0/24 proto=6 sport=* dport=443\n",
    )
    .expect("fixture rules parse");
    let tree = compile_rules(&rules).expect("fixture rules compile");
    let params = ProtocolParams {
        blind_count: 8,
        ..ProtocolParams::default()
    };
    let mut rng = ProtocolRng::from_seed(SETUP_SEED);
    let bundle = global_setup(&params, &tree, &mut rng).expect("fixture setup");
    let files = encode_setup(&bundle);
    (bundle, files)
}

#[test]
fn golden_container_bytes_are_stable() {
    let (_, files) = fixture();
    assert_eq!(files.len(), 4, "one container per role");
    for (name, bytes) in &files {
        let path = golden_path(name);
        let frozen = fs::read(&path).unwrap_or_else(|e| {
            panic!(
                "missing golden file {path:?} ({e}); run the ignored \
                 regenerate_golden_files test to create it"
            )
        });
        assert_eq!(
            bytes, &frozen,
            "{name} no longer encodes to its frozen bytes; if the format \
             change is intentional, bump the container version and \
             regenerate the golden files"
        );
    }
}

#[test]
fn golden_containers_decode_to_the_live_configs() {
    let (bundle, files) = fixture();
    for (name, _) in &files {
        let frozen = fs::read(golden_path(name)).expect("golden file present");
        let decoded = RoleConfig::decode(&frozen).expect("golden file decodes");
        let expected = match name.as_str() {
            "entry.spbx" => RoleConfig::Entry(bundle.entry.clone()),
            "processor1.spbx" => RoleConfig::Processor(bundle.processors[0].clone()),
            "processor2.spbx" => RoleConfig::Processor(bundle.processors[1].clone()),
            "client.spbx" => RoleConfig::Client(bundle.client.clone()),
            other => panic!("unexpected container name {other}"),
        };
        assert_eq!(decoded, expected, "{name} decodes to a different config");
    }
}

/// The frozen share frame: explicit bitmap bytes, no randomness.
fn fixture_share_frame() -> (ShareMessage, Vec<u8>) {
    let value_bytes: [u8; 13] = [
        0xde, 0xad, 0xbe, 0xef, 0x01, 0x23, 0x45, 0x67, 0x89, 0xab, 0xcd, 0xef, 0x10,
    ];
    let mask_bytes: [u8; 13] = [
        0x0f, 0xf0, 0x55, 0xaa, 0xff, 0x00, 0xc3, 0x3c, 0x99, 0x66, 0x01, 0x80, 0x7e,
    ];
    let msg = ShareMessage {
        seq: 0x0102_0304_0506_0708,
        index: BlindIndex::new(5).unwrap(),
        processor_id: 2,
        share: CumulativeShare {
            value: BitString::from_bytes(&value_bytes, 104).unwrap(),
            mask: BitString::from_bytes(&mask_bytes, 104).unwrap(),
        },
        flag_share: 1,
    };
    let frame = WireMessage::ToClientShares(msg.clone()).encode();
    (msg, frame)
}

#[test]
fn share_frame_matches_documented_offsets() {
    let (msg, frame) = fixture_share_frame();

    // Hand decoder: fixed offsets, big-endian integers, no codec involved.
    assert_eq!(frame.len(), 22 + 13 + 13);
    assert_eq!(&frame[0..2], b"SB", "magic");
    assert_eq!(frame[2], 1, "wire version");
    assert_eq!(frame[3], 3, "share-frame kind");
    assert_eq!(
        u64::from_be_bytes(frame[4..12].try_into().unwrap()),
        msg.seq,
        "sequence number"
    );
    assert_eq!(
        u32::from_be_bytes(frame[12..16].try_into().unwrap()),
        5,
        "counter index"
    );
    assert_eq!(frame[16], 2, "sender processor id");
    assert_eq!(frame[17], 1, "flag share");
    assert_eq!(
        u32::from_be_bytes(frame[18..22].try_into().unwrap()),
        26,
        "body length"
    );
    assert_eq!(&frame[22..35], msg.share.value.as_bytes(), "value bitmap");
    assert_eq!(&frame[35..48], msg.share.mask.as_bytes(), "mask bitmap");

    // The codec agrees with the hand reading.
    let decoded = WireMessage::decode(&frame, 104).expect("frame decodes");
    assert_eq!(decoded, WireMessage::ToClientShares(msg));

    // And the frozen copy on disk still matches.
    let frozen = fs::read(golden_path("wire_share.bin")).expect(
        "missing golden wire_share.bin; run the ignored regenerate_golden_files test",
    );
    assert_eq!(frame, frozen, "share frame drifted from its frozen bytes");
}

/// The frozen trace: three explicit records.
fn fixture_trace() -> Vec<TraceRecord> {
    vec![
        TraceRecord {
            tuple: FiveTuple {
                src_ip: 0xc0a8_0001,
                dst_ip: 0x0a01_0203,
                protocol: 6,
                src_port: 1234,
                dst_port: 80,
            },
            payload_bytes: 512,
        },
        TraceRecord {
            tuple: FiveTuple {
                src_ip: 0x0808_0808,
                dst_ip: 0xac10_0009,
                protocol: 17,
                src_port: 53,
                dst_port: 5353,
            },
            payload_bytes: 0,
        },
        TraceRecord {
            tuple: FiveTuple {
                src_ip: 0x0102_0304,
                dst_ip: 0x0506_0708,
                protocol: 255,
                src_port: 65535,
                dst_port: 1,
            },
            payload_bytes: 1500,
        },
    ]
}

#[test]
fn trace_records_match_documented_offsets() {
    let records = fixture_trace();
    let bytes = encode_trace(&records).expect("fixture trace encodes");

    assert_eq!(bytes.len(), 4 + 1 + 4 + 3 * 17);
    assert_eq!(&bytes[0..4], b"SBTR", "magic");
    assert_eq!(bytes[4], 1, "trace version");
    assert_eq!(
        u32::from_be_bytes(bytes[5..9].try_into().unwrap()),
        3,
        "record count"
    );
    // First record, field by field at its documented offsets.
    let r = &bytes[9..26];
    assert_eq!(u32::from_be_bytes(r[0..4].try_into().unwrap()), 0xc0a8_0001);
    assert_eq!(u32::from_be_bytes(r[4..8].try_into().unwrap()), 0x0a01_0203);
    assert_eq!(r[8], 6);
    assert_eq!(u16::from_be_bytes(r[9..11].try_into().unwrap()), 1234);
    assert_eq!(u16::from_be_bytes(r[11..13].try_into().unwrap()), 80);
    assert_eq!(u32::from_be_bytes(r[13..17].try_into().unwrap()), 512);

    assert_eq!(decode_trace(&bytes).expect("round trip"), records);

    let frozen = fs::read(golden_path("trace.sbtr")).expect(
        "missing golden trace.sbtr; run the ignored regenerate_golden_files test",
    );
    assert_eq!(bytes, frozen, "trace encoding drifted from its frozen bytes");
}

/// Rewrites every golden file from the fixtures. Run explicitly after an
/// intentional format change: `cargo test -p splitbox --test bundle_golden
/// -- --ignored regenerate_golden_files`.
#[test]
#[ignore]
fn regenerate_golden_files() {
    let dir = golden_path("");
    fs::create_dir_all(&dir).expect("create golden dir");
    let (_, files) = fixture();
    for (name, bytes) in &files {
        fs::write(golden_path(name), bytes).expect("write golden container");
    }
    let (_, frame) = fixture_share_frame();
    fs::write(golden_path("wire_share.bin"), frame).expect("write golden frame");
    let trace = encode_trace(&fixture_trace()).expect("fixture trace encodes");
    fs::write(golden_path("trace.sbtr"), trace).expect("write golden trace");
}
