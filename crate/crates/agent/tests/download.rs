mod common;

use common::*;
use serde_json::Value;

fn upload_files(env: &Env, ds: &str, files: &[(&str, Vec<u8>)]) {
    let paths: Vec<String> = files
        .iter()
        .map(|(name, data)| env.write(name, data).to_str().unwrap().to_string())
        .collect();
    let mut args = vec!["manifest", "create", ds];
    args.extend(paths.iter().map(String::as_str));
    let (code, out) = env.fh_json(&args);
    assert_eq!(code, 0, "{out}");
    let mid = out["manifest_id"].as_str().unwrap().to_string();
    let (code, summary) = env.fh_json(&["upload", &mid]);
    assert_eq!(code, 0, "{summary}");
}

#[test]
fn download_by_doi_and_by_version() {
    let env = Env::new();
    let ds = env.dataset("downloads");
    let v1_bytes = bytes(21, 9000);
    upload_files(&env, &ds, &[("trace.bin", v1_bytes.clone())]);
    let v1 = env.publish(&ds, 0);
    let doi1 = v1["doi"].as_str().unwrap().to_string();

    let v2_bytes = bytes(22, 100);
    std::fs::remove_file(env.work.path().join("trace.bin")).unwrap();
    upload_files(&env, &ds, &[("extra.bin", v2_bytes.clone())]);
    let v2 = env.publish(&ds, 0);
    assert_ne!(v2["doi"], v1["doi"]);

    let by_doi = env.work.path().join("by-doi");
    let (code, out) = env.fh_json(&["download", &doi1, by_doi.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out["version"], 1);
    let manifest: Value = serde_json::from_slice(&std::fs::read(by_doi.join("manifest.json")).unwrap()).unwrap();
    for file in manifest["files"].as_array().unwrap() {
        let local = std::fs::read(by_doi.join("files").join(file["path"].as_str().unwrap())).unwrap();
        assert_eq!(sha256_hex(&local), file["sha256"].as_str().unwrap());
    }
    assert_eq!(std::fs::read(by_doi.join("files/trace.bin")).unwrap(), v1_bytes);
    assert!(!by_doi.join("files/extra.bin").exists());
    assert!(by_doi.join("metadata").is_dir());

    let old = env.work.path().join("old");
    let (code, out) = env.fh_json(&["download", &ds, old.to_str().unwrap(), "--version", "1"]);
    assert_eq!(code, 0, "{out}");
    assert!(!old.join("files/extra.bin").exists());
    let latest = env.work.path().join("latest");
    let (code, out) = env.fh_json(&["download", "downloads", latest.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out["version"], 2);
    assert_eq!(std::fs::read(latest.join("files/extra.bin")).unwrap(), v2_bytes);
}

#[test]
fn embargoed_version_is_refused_without_rights() {
    let env = Env::new();
    let ds = env.dataset("embargoed");
    upload_files(&env, &ds, &[("a.bin", bytes(31, 10))]);
    let v = env.publish(&ds, 30);
    let doi = v["doi"].as_str().unwrap().to_string();
    env.use_token("stranger", STRANGER);
    let dest = env.work.path().join("nope");
    let out = env.fh(&["download", &doi, dest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("403"), "{}", stderr(&out));
    let out = env.fh(&["download", &ds, dest.to_str().unwrap(), "--version", "1"]);
    assert_eq!(out.status.code(), Some(2));
    env.fh(&["profile", "use", "owner"]);
    let out = env.fh(&["download", &doi, dest.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn single_byte_corruption_in_the_store_is_caught() {
    let env = Env::persistent();
    let ds = env.dataset("mutation");
    let data = bytes(41, 2048);
    upload_files(&env, &ds, &[("signal.bin", data.clone())]);
    let v = env.publish(&ds, 0);
    let key = format!("{}files/signal.bin", v["snapshot_prefix"].as_str().unwrap());
    let object_dir = env.data_dir().join("objects").join(sha256_hex(key.as_bytes()));
    let generation = std::fs::read_dir(&object_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "bin"))
        .unwrap();

    let clean = env.work.path().join("clean");
    assert!(env.fh(&["download", &ds, clean.to_str().unwrap()]).status.success());

    for offset in [0usize, 1000, 2047] {
        let mut stored = std::fs::read(&generation).unwrap();
        stored[offset] ^= 0x01;
        std::fs::write(&generation, &stored).unwrap();
        let dest = env.work.path().join(format!("corrupt-{offset}"));
        let out = env.fh(&["download", &ds, dest.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(3), "offset {offset}: {}", stderr(&out));
        assert!(stderr(&out).contains("signal.bin"));
        stored[offset] ^= 0x01;
        std::fs::write(&generation, &stored).unwrap();
    }
}
