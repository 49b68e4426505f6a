mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use reqwest::{Method, StatusCode};
use serde_json::Value;

const TAGS: [&str; 4] = ["eeg", "mri", "rat", "human"];

fn ids(v: &Value) -> BTreeSet<String> {
    v["results"].as_array().unwrap().iter().map(|r| r["dataset_id"].as_str().unwrap().to_string()).collect()
}

#[tokio::test(flavor = "multi_thread")]
async fn tag_filter_matches_a_brute_force_scan() {
    let s = start(None).await;
    let mut public: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    let mut state = 17u64;
    for i in 0..10 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mask = (state >> 33) as usize;
        let mut tags: Vec<&str> = TAGS.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, t)| *t).collect();
        tags.push("open");
        let ds = s.dataset(&format!("set {i}")).await;
        s.complete_attributes(&ds, &tags).await;
        s.upload(&ds, OWNER, &[("x.txt", format!("payload {i}").as_bytes())]).await;
        match i % 3 {
            0 => {
                s.publish(&ds, 0).await;
                public.insert(ds, tags.into_iter().collect());
            }
            1 => {
                s.publish(&ds, 60).await;
            }
            _ => {}
        }
    }
    let mut queries: Vec<Vec<&str>> = vec![vec![]];
    queries.extend(TAGS.iter().map(|t| vec![*t]));
    for (i, a) in TAGS.iter().enumerate() {
        for b in &TAGS[i + 1..] {
            queries.push(vec![*a, *b]);
        }
    }
    for q in queries {
        let query: String = q.iter().map(|t| format!("tag={t}&")).collect();
        let got = s.get(&format!("/discover/datasets?{query}limit=500"), None).await;
        let expected: BTreeSet<String> = public
            .iter()
            .filter(|(_, tags)| q.iter().all(|t| tags.contains(t)))
            .map(|(id, _)| id.clone())
            .collect();
        assert_eq!(ids(&got), expected, "tags {q:?}");
        assert_eq!(got["total"], expected.len());
        let comma = s.get(&format!("/discover/datasets?tags={}", q.join(",")), None).await;
        assert_eq!(ids(&comma), expected, "tags {q:?}");
    }
    let paged = s.get("/discover/datasets?limit=1&offset=1", None).await;
    assert_eq!(paged["results"].as_array().unwrap().len(), 1.min(public.len().saturating_sub(1)));
    assert_eq!(paged["total"], public.len());
    s.expect(Method::GET, "/discover/datasets?status=bogus", None, None, StatusCode::BAD_REQUEST).await;
}

#[tokio::test(flavor = "multi_thread")]
async fn embargoed_and_private_content_never_leaks() {
    let s = start(None).await;
    let draft = s.dataset("draft").await;
    s.complete_attributes(&draft, &["secret"]).await;
    s.upload(&draft, OWNER, &[("x.txt", b"draft")]).await;

    let held = s.dataset("held").await;
    s.complete_attributes(&held, &["secret"]).await;
    s.upload(&held, OWNER, &[("x.txt", b"held")]).await;
    let v = s.publish(&held, 30).await;
    let doi = v["doi"].as_str().unwrap();
    let prefix = v["snapshot_prefix"].as_str().unwrap();

    let hits = s.get("/discover/datasets?q=held", None).await;
    assert_eq!(hits["total"], 0);
    let hits = s.get("/discover/datasets?tag=secret", Some(STRANGER)).await;
    assert_eq!(hits["total"], 0);

    for ds in [&draft, &held] {
        for path in [
            format!("/discover/datasets/{ds}"),
            format!("/discover/datasets/{ds}/versions/1"),
            format!("/discover/datasets/{ds}/versions/1/download"),
            format!("/discover/datasets/{ds}/versions/1/files/x.txt"),
        ] {
            let resp = s.req(Method::GET, &path, None).send().await.unwrap();
            assert_eq!(resp.status(), StatusCode::NOT_FOUND, "{path}");
            let body = resp.text().await.unwrap();
            assert!(!body.contains(ds.as_str()) || !body.contains("x.txt"), "{path}: {body}");
        }
    }

    let resp = s.req(Method::GET, &format!("/doi/{doi}"), None).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::FOUND);
    let location = resp.headers()["location"].to_str().unwrap().to_string();
    assert_eq!(s.req(Method::GET, &location, None).send().await.unwrap().status(), StatusCode::NOT_FOUND);
    let files = format!("/{prefix}files/x.txt");
    assert_eq!(s.req(Method::GET, &files, None).send().await.unwrap().status(), StatusCode::NOT_FOUND);
    assert_eq!(s.req(Method::GET, &files, Some(STRANGER)).send().await.unwrap().status(), StatusCode::FORBIDDEN);
    let own = s.req(Method::GET, &files, Some(VIEWER)).send().await.unwrap();
    assert_eq!(own.status(), StatusCode::OK);
    assert_eq!(own.text().await.unwrap(), "held");

    let versions = s.get(&format!("/v1/datasets/{held}/versions"), Some(VIEWER)).await;
    assert_eq!(versions.as_array().unwrap().len(), 1);
    let hidden = s.get(&format!("/v1/datasets/{held}/versions"), Some(STRANGER)).await;
    assert_eq!(hidden, serde_json::json!([]));

    s.advance_days(29).await;
    s.sweep().await;
    assert_eq!(s.get("/discover/datasets?tag=secret", None).await["total"], 0);
    s.advance_days(1).await;
    s.sweep().await;
    let hits = s.get("/discover/datasets?tag=secret", None).await;
    assert_eq!(ids(&hits), BTreeSet::from([held.clone()]));
    let text = s.req(Method::GET, &files, None).send().await.unwrap().text().await.unwrap();
    assert_eq!(text, "held");
    s.expect(Method::GET, &format!("/discover/datasets/{draft}"), None, None, StatusCode::NOT_FOUND).await;
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_doi_is_not_found() {
    let s = start(None).await;
    let err = s.expect(Method::GET, "/doi/10.99999/nothing", None, None, StatusCode::NOT_FOUND).await;
    assert_eq!(err["error"], "UnknownDOI");
}
