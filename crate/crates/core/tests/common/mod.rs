#![allow(dead_code)]

use std::sync::Arc;

use fairhaven_core::dataset::{AttributePatch, Contributor};
use fairhaven_core::id::sha256_hex;
use fairhaven_core::publishing::{DatasetVersion, ReviewDecision};
use fairhaven_core::upload::EntrySpec;
use fairhaven_core::{Id, ManualClock, Platform};

pub struct World {
    pub clock: ManualClock,
    pub p: Platform,
    pub owner: Id,
    pub reviewer: Id,
    pub ws: Id,
    pub ds: Id,
}

pub fn world(seed: u64) -> World {
    let clock = ManualClock::at_epoch();
    let p = Platform::builder(Arc::new(clock.clone())).id_seed(seed).build().unwrap();
    let owner = p.create_user("Owner", "owner@example.org").unwrap().id;
    let reviewer = p.create_user("Reviewer", "reviewer@example.org").unwrap().id;
    let ws = p.create_workspace("lab", owner).unwrap().id;
    p.add_workspace_member(ws, reviewer).unwrap();
    let team = p.workspace(ws).unwrap().publishing_team;
    p.add_team_member(team, reviewer).unwrap();
    let ds = p.create_dataset(ws, owner, "Study").unwrap().id;
    World { clock, p, owner, reviewer, ws, ds }
}

impl World {
    pub fn complete_attributes(&self, dataset: Id) {
        self.p
            .update_attributes(
                dataset,
                self.owner,
                &AttributePatch {
                    subtitle: Some("subtitle".into()),
                    description: Some("description".into()),
                    license: Some("CC-BY-4.0".into()),
                    tags: Some(vec!["epilepsy".into()]),
                    contributors: Some(vec![Contributor {
                        name: "A. Researcher".into(),
                        affiliation: Some("Lab".into()),
                        role: None,
                    }]),
                    ..Default::default()
                },
            )
            .unwrap();
    }

    pub fn upload(&self, dataset: Id, path: &str, bytes: &[u8]) -> Id {
        let m = self
            .p
            .create_manifest(
                dataset,
                self.owner,
                &[EntrySpec {
                    path: path.into(),
                    size: bytes.len() as u64,
                    checksum: sha256_hex(bytes),
                }],
            )
            .unwrap();
        if !bytes.is_empty() {
            self.p.upload_chunk(m.id, self.owner, path, 0, bytes).unwrap();
        }
        self.p.finalize_entry(m.id, self.owner, path).unwrap().file_id.unwrap()
    }

    pub fn publish(&self, dataset: Id, embargo_days: u32) -> DatasetVersion {
        let req = self.p.submit_for_review(dataset, self.owner, None).unwrap();
        self.p.review(req.id, self.reviewer, ReviewDecision::Accept, None).unwrap();
        self.p.publish(req.id, self.reviewer, embargo_days).unwrap()
    }
}
