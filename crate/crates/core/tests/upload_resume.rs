mod common;

use fairhaven_core::id::sha256_hex;
use fairhaven_core::upload::{ClientEntryView, EntrySpec, EntryStatus, MAX_FILE_SIZE};
use fairhaven_core::Error;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, RngCore, SeedableRng};

const ZEROS_1MIB_SHA256: &str = "30e14955ebf1352266dc2ff8067e68104607e750abb9d3b36582b8af909fcb58";
const ONES_1MIB_SHA256: &str = "f5fb04aa5b882706b9309e885f19477261336ef76a150c3b4d3489dfac3953ec";

fn spec(path: &str, bytes: &[u8]) -> EntrySpec {
    EntrySpec { path: path.into(), size: bytes.len() as u64, checksum: sha256_hex(bytes) }
}

/// Upload `data` in `chunk`-sized pieces, stop after `kill_after` chunks,
/// then resume from the server's offset as a fresh client would.
fn trial(seed: u64) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let w = common::world(seed);
    let size = if rng.random_bool(0.1) { rng.random_range(1..64) } else { rng.random_range(1..=8 << 20) };
    let mut data = vec![0u8; size];
    rng.fill_bytes(&mut data);
    let chunk = rng.random_range(1usize..=(1 << 20)).min(size.max(1));
    let chunks = size.div_ceil(chunk);
    let kill_after = rng.random_range(0..=chunks);

    let m = w.p.create_manifest(w.ds, w.owner, &[spec("trial.bin", &data)]).map_err(|e| e.to_string())?;
    let send = |offset: usize| {
        let end = (offset + chunk).min(size);
        w.p.upload_chunk(m.id, w.owner, "trial.bin", offset as u64, &data[offset..end])
    };
    let mut offset = 0;
    for _ in 0..kill_after {
        let ack = send(offset).map_err(|e| e.to_string())?;
        offset = ack.bytes_received as usize;
    }
    if kill_after > 0 && rng.random_bool(0.5) {
        // the client never saw the last ack and retransmits it
        let last = offset - ((offset - 1) % chunk + 1);
        let ack = send(last).map_err(|e| e.to_string())?;
        if !ack.duplicate || ack.bytes_received as usize != offset {
            return Err(format!("retransmission at {last} was not absorbed"));
        }
    }

    // a fresh client only knows what sync tells it
    let view = w
        .p
        .sync_manifest(m.id, w.owner, &[ClientEntryView { path: "trial.bin".into(), status: EntryStatus::Registered, bytes_received: 0 }])
        .map_err(|e| e.to_string())?;
    let mut offset = view.entries[0].resume_offset as usize;
    if offset != (kill_after * chunk).min(size) {
        return Err(format!("resume offset {offset}, expected {}", (kill_after * chunk).min(size)));
    }
    while offset < size {
        offset = send(offset).map_err(|e| e.to_string())?.bytes_received as usize;
    }
    let out = w.p.finalize_entry(m.id, w.owner, "trial.bin").map_err(|e| e.to_string())?;
    if out.status != EntryStatus::Verified {
        return Err(format!("status {:?}", out.status));
    }
    let stored = w.p.read_file(w.ds, w.owner, "trial.bin", None).map_err(|e| e.to_string())?;
    if stored != data {
        return Err("stored bytes differ from source".into());
    }
    Ok(())
}

#[test]
fn hundred_randomized_resumes_end_verified() {
    for seed in 0..100 {
        trial(seed).unwrap_or_else(|e| panic!("trial {seed}: {e}"));
    }
}

#[test]
fn reference_digests() {
    let w = common::world(1);
    let zeros = vec![0u8; 1 << 20];
    let m = w
        .p
        .create_manifest(
            w.ds,
            w.owner,
            &[
                EntrySpec { path: "zeros".into(), size: 1 << 20, checksum: ZEROS_1MIB_SHA256.into() },
                EntrySpec { path: "claims-ones".into(), size: 1 << 20, checksum: ONES_1MIB_SHA256.into() },
            ],
        )
        .unwrap();
    for path in ["zeros", "claims-ones"] {
        w.p.upload_chunk(m.id, w.owner, path, 0, &zeros).unwrap();
    }
    assert_eq!(w.p.finalize_entry(m.id, w.owner, "zeros").unwrap().status, EntryStatus::Verified);
    let failed = w.p.finalize_entry(m.id, w.owner, "claims-ones").unwrap();
    assert_eq!(failed.status, EntryStatus::Failed);
    let mismatch = failed.mismatch.unwrap();
    assert_eq!(mismatch.expected, ONES_1MIB_SHA256);
    assert_eq!(mismatch.actual, ZEROS_1MIB_SHA256);
    // a failed entry never reaches the tree
    assert!(w.p.read_file(w.ds, w.owner, "claims-ones", None).is_err());
}

#[test]
fn protocol_errors() {
    let w = common::world(2);
    let data = vec![7u8; 16384];
    let m = w.p.create_manifest(w.ds, w.owner, &[spec("a", &data)]).unwrap();
    w.p.upload_chunk(m.id, w.owner, "a", 0, &data[..4096]).unwrap();
    assert_eq!(
        w.p.upload_chunk(m.id, w.owner, "a", 8192, &data[..4096]).unwrap_err(),
        Error::OffsetMismatch { expected: 4096 }
    );
    assert!(matches!(w.p.upload_chunk(m.id, w.owner, "nope", 0, b"x").unwrap_err(), Error::EntryNotFound(_)));
    assert!(matches!(
        w.p.upload_chunk(m.id, w.owner, "a", 4096, &vec![0u8; 16384]).unwrap_err(),
        Error::Overflow { .. }
    ));
    w.p.upload_chunk(m.id, w.owner, "a", 4096, &data[4096..16383]).unwrap();
    assert_eq!(
        w.p.finalize_entry(m.id, w.owner, "a").unwrap_err(),
        Error::Incomplete { received: 16383, declared: 16384 }
    );
    w.p.upload_chunk(m.id, w.owner, "a", 16383, &data[16383..]).unwrap();
    w.p.finalize_entry(m.id, w.owner, "a").unwrap();
    assert_eq!(w.p.upload_chunk(m.id, w.owner, "a", 0, b"x").unwrap_err(), Error::ManifestFinalized);

    let limit = |size| EntrySpec { path: "huge".into(), size, checksum: "0".repeat(64) };
    assert!(w.p.create_manifest(w.ds, w.owner, &[limit(MAX_FILE_SIZE)]).is_ok());
    assert!(matches!(
        w.p.create_manifest(w.ds, w.owner, &[limit(MAX_FILE_SIZE + 1)]).unwrap_err(),
        Error::FileTooLarge { size: 5_497_558_138_881, .. }
    ));
    assert!(matches!(
        w.p.create_manifest(w.ds, w.owner, &[spec("a/b.dat", b"1"), spec("a/b.dat", b"2")]).unwrap_err(),
        Error::DuplicatePath(_)
    ));
}

#[test]
fn server_view_wins_over_client_claims() {
    let w = common::world(3);
    let data = vec![1u8; 10];
    let m = w.p.create_manifest(w.ds, w.owner, &[spec("x", &data)]).unwrap();
    let untouched = w.p.sync_manifest(m.id, w.owner, &[]).unwrap();
    assert!(untouched.entries.iter().all(|e| e.status == EntryStatus::Registered));
    w.p.upload_chunk(m.id, w.owner, "x", 0, &data[..4]).unwrap();
    let claim = ClientEntryView { path: "x".into(), status: EntryStatus::Verified, bytes_received: 10 };
    let view = w.p.sync_manifest(m.id, w.owner, &[claim]).unwrap();
    assert_eq!(view.entries[0].status, EntryStatus::InProgress);
    assert_eq!(view.entries[0].resume_offset, 4);
    assert_eq!(view.conflicts, ["x"]);
    // no node exists before verification
    assert!(w.p.list_tree(w.ds, w.owner).unwrap().is_empty());
}

/// Entry states only move forward, except the explicit failed → registered reset.
fn legal_step(from: EntryStatus, to: EntryStatus) -> bool {
    use EntryStatus::*;
    let rank = |s| match s {
        Registered => 0,
        InProgress => 1,
        Uploaded => 2,
        Failed => 3,
        Verified => 4,
    };
    from == to
        || matches!((from, to), (Failed, Registered) | (Uploaded, Failed))
        || (to != Failed && from != Failed && rank(to) > rank(from))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Verification counts match a recount of entry states under random
    /// interleavings, and duplicated chunks never change the stored bytes.
    #[test]
    fn verification_counts_match_recount(
        sizes in prop::collection::vec(1usize..3000, 1..6),
        corrupt in prop::collection::vec(any::<bool>(), 6),
        schedule in prop::collection::vec((0usize..6, 0u8..4), 1..80),
    ) {
        let w = common::world(4);
        let files: Vec<(String, Vec<u8>)> = sizes
            .iter()
            .enumerate()
            .map(|(i, n)| (format!("f{i}"), (0..*n).map(|b| (b * 31 + i) as u8).collect()))
            .collect();
        let specs: Vec<EntrySpec> = files.iter().map(|(p, b)| spec(p, b)).collect();
        let m = w.p.create_manifest(w.ds, w.owner, &specs).unwrap();
        let mut sent = vec![0usize; files.len()];
        let mut previous = vec![EntryStatus::Registered; files.len()];
        for (i, action) in schedule {
            let i = i % files.len();
            let (path, bytes) = &files[i];
            match action {
                0 | 1 if sent[i] < bytes.len() => {
                    let end = (sent[i] + 700).min(bytes.len());
                    let mut chunk = bytes[sent[i]..end].to_vec();
                    if corrupt[i] && end == bytes.len() {
                        chunk[0] ^= 0xff;
                    }
                    w.p.upload_chunk(m.id, w.owner, path, sent[i] as u64, &chunk).unwrap();
                    if action == 1 {
                        let again = w.p.upload_chunk(m.id, w.owner, path, sent[i] as u64, &chunk).unwrap();
                        prop_assert!(again.duplicate);
                    }
                    sent[i] = end;
                }
                2 => {
                    let _ = w.p.finalize_entry(m.id, w.owner, path);
                }
                _ => {
                    let _ = w.p.reset_entry(m.id, w.owner, path).map(|_| sent[i] = 0);
                }
            }
            let v = w.p.verify_manifest(m.id, w.owner).unwrap();
            let entries = w.p.manifest(m.id, w.owner).unwrap().entries;
            let count = |s: EntryStatus| entries.iter().filter(|e| e.status == s).count() as u64;
            let verified = count(EntryStatus::Verified);
            let failed = count(EntryStatus::Failed);
            let pending = entries.len() as u64 - verified - failed;
            prop_assert_eq!((v.total, v.verified, v.failed, v.pending), (entries.len() as u64, verified, failed, pending));
            prop_assert_eq!(v.complete, failed == 0 && pending == 0);
            for (j, e) in entries.iter().enumerate() {
                prop_assert!(e.bytes_received <= e.declared_size);
                prop_assert!(legal_step(previous[j], e.status), "{:?} -> {:?}", previous[j], e.status);
                previous[j] = e.status;
            }
        }
        for (path, bytes) in &files {
            if let Ok(stored) = w.p.read_file(w.ds, w.owner, path, None) {
                prop_assert_eq!(&stored, bytes);
            }
        }
    }
}
