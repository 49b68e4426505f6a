mod common;

use common::*;
use serde_json::Value;

#[test]
fn manifest_create_then_upload_verifies_everything() {
    let env = Env::new();
    let ds = env.dataset("uploads");
    let a = bytes(1, 12_345);
    let b = bytes(2, 1);
    let c = bytes(3, 70_000);
    let fa = env.write("a.bin", &a);
    env.write("session/eeg/b.bin", &b);
    env.write("session/c.bin", &c);
    let session = env.work.path().join("session");

    let (code, out) = env.fh_json(&["manifest", "create", &ds, fa.to_str().unwrap(), session.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let mid = out["manifest_id"].as_str().unwrap().to_string();
    let ledger: Value = serde_json::from_slice(&std::fs::read(env.ledger_file(&mid)).unwrap()).unwrap();
    let paths: Vec<&str> = ledger["entries"].as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap()).collect();
    assert_eq!(paths, ["a.bin", "session/c.bin", "session/eeg/b.bin"]);
    assert!(ledger["entries"].as_array().unwrap().iter().all(|e| e["status"] == "registered"));
    let server = env.get(&format!("/v1/manifests/{mid}"), OWNER);
    for entry in server["entries"].as_array().unwrap() {
        let local = ledger["entries"].as_array().unwrap().iter().find(|e| e["path"] == entry["path"]).unwrap();
        assert_eq!(entry["declared_checksum"], local["checksum"]);
        assert_eq!(entry["declared_size"], local["size"]);
        assert_eq!(entry["status"], "registered");
    }

    let (code, summary) = env.fh_json(&["upload", &mid, "--chunk-size", "4096", "--workers", "3"]);
    assert_eq!(code, 0, "{summary}");
    assert_eq!(summary["verified"], 3);
    assert_eq!(summary["failed"], 0);
    assert_eq!(summary["offset_mismatches"], 0);
    assert_eq!(summary["uploaded_bytes"], (a.len() + b.len() + c.len()) as u64);
    assert_eq!(env.server_file(&ds, "a.bin"), a);
    assert_eq!(env.server_file(&ds, "session/eeg/b.bin"), b);
    assert_eq!(env.server_file(&ds, "session/c.bin"), c);

    let (code, again) = env.fh_json(&["upload", &mid]);
    assert_eq!(code, 0);
    assert_eq!(again["uploaded_bytes"], 0);
    assert_eq!(again["verified"], 3);
}

#[test]
fn killed_upload_resumes_from_server_offsets() {
    let env = Env::new();
    let ds = env.dataset("resume");
    let data = bytes(9, 50_000);
    let f = env.write("big.bin", &data);
    let (_, out) = env.fh_json(&["manifest", "create", &ds, f.to_str().unwrap()]);
    let mid = out["manifest_id"].as_str().unwrap().to_string();

    let killed = env.fh_with(
        &["upload", &mid, "--chunk-size", "4000", "--workers", "1"],
        &[("FH_FAULT_KILL_AFTER_CHUNKS", "5")],
    );
    assert!(!killed.status.success());
    let server = env.get(&format!("/v1/manifests/{mid}"), OWNER);
    assert_eq!(server["entries"][0]["bytes_received"], 20_000);

    // the ledger may lag the server; the server wins
    let (code, summary) = env.fh_json(&["upload", &mid, "--chunk-size", "7000"]);
    assert_eq!(code, 0, "{summary}");
    assert_eq!(summary["resumed_from_bytes"], 20_000);
    assert_eq!(summary["uploaded_bytes"], 30_000);
    assert_eq!(env.server_file(&ds, "big.bin"), data);
}

#[test]
fn corrupted_source_fails_only_its_entry() {
    let env = Env::new();
    let ds = env.dataset("corrupt");
    let good = env.write("good.bin", &bytes(4, 3000));
    let bad = env.write("bad.bin", &bytes(5, 3000));
    let (_, out) = env.fh_json(&["manifest", "create", &ds, good.to_str().unwrap(), bad.to_str().unwrap()]);
    let mid = out["manifest_id"].as_str().unwrap().to_string();
    let mut changed = bytes(5, 3000);
    changed[1234] ^= 0xff;
    std::fs::write(&bad, &changed).unwrap();

    let out = env.fh(&["--json", "upload", &mid]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["verified"], 1);
    assert_eq!(summary["failed"], 1);
    assert!(stderr(&out).contains("bad.bin"));
}

#[test]
fn oversized_files_are_refused_by_the_server() {
    let env = Env::new();
    let ds = env.dataset("huge");
    let path = env.work.path().join("huge.raw");
    let f = std::fs::File::create(&path).unwrap();
    f.set_len(fairhaven_core::upload::MAX_FILE_SIZE + 1).unwrap();
    drop(f);
    let out = env.fh(&["manifest", "create", &ds, path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("FileTooLarge"));
}

#[test]
fn missing_server_manifest_exits_two_and_keeps_the_ledger() {
    let env = Env::new();
    let ds = env.dataset("gone");
    let f = env.write("x.bin", b"xyz");
    let (_, out) = env.fh_json(&["manifest", "create", &ds, f.to_str().unwrap()]);
    let mid = out["manifest_id"].as_str().unwrap().to_string();
    let fake = "0".repeat(32);
    let mut ledger: Value = serde_json::from_slice(&std::fs::read(env.ledger_file(&mid)).unwrap()).unwrap();
    ledger["manifest_id"] = Value::String(fake.clone());
    std::fs::write(env.ledger_file(&fake), serde_json::to_vec(&ledger).unwrap()).unwrap();

    let out = env.fh(&["upload", &fake]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(env.ledger_file(&fake).exists());
}

#[test]
fn local_errors_exit_one() {
    let env = Env::new();
    let ds = env.dataset("local");
    let out = env.fh(&["manifest", "create", &ds, "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(1));
    let out = env.fh(&["upload", &"a".repeat(32)]);
    assert_eq!(out.status.code(), Some(1), "no ledger");
    let empty = tempfile::tempdir().unwrap();
    let out = env.fh(&["--config-dir", empty.path().to_str().unwrap(), "ds", "ls", &ds]);
    assert_eq!(out.status.code(), Some(1), "no profile");
}

#[test]
fn ledger_converges_after_random_kill_points() {
    let env = Env::new();
    let mut state = 0x5eed_u64;
    let mut next = |bound: u64| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) % bound
    };
    for trial in 0..8 {
        let ds = env.dataset(&format!("kill {trial}"));
        let files: Vec<(String, Vec<u8>)> = (0..3)
            .map(|i| (format!("t{trial}/f{i}.bin"), bytes(trial * 10 + i, 1 + next(40_000) as usize)))
            .collect();
        for (name, data) in &files {
            env.write(name, data);
        }
        let dir = env.work.path().join(format!("t{trial}"));
        let (_, out) = env.fh_json(&["manifest", "create", &ds, dir.to_str().unwrap()]);
        let mid = out["manifest_id"].as_str().unwrap().to_string();
        let chunk = (512 + next(8000)).to_string();
        let kill = (1 + next(6)).to_string();
        let killed = env.fh_with(
            &["upload", &mid, "--chunk-size", &chunk, "--workers", "2"],
            &[("FH_FAULT_KILL_AFTER_CHUNKS", &kill)],
        );
        if !killed.status.success() {
            let (code, summary) = env.fh_json(&["upload", &mid, "--chunk-size", &chunk]);
            assert_eq!(code, 0, "trial {trial}: {summary}");
            assert_eq!(summary["offset_mismatches"], 0);
        }
        let ledger: Value = serde_json::from_slice(&std::fs::read(env.ledger_file(&mid)).unwrap()).unwrap();
        assert!(ledger["entries"].as_array().unwrap().iter().all(|e| e["status"] == "verified"), "trial {trial}");
        for (name, data) in &files {
            let rel = name.split_once('/').unwrap().1;
            assert_eq!(&env.server_file(&ds, &format!("t{trial}/{rel}")), data, "trial {trial} {name}");
        }
    }
}
