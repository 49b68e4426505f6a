//! Domain core of fairhaven: datasets with file trees and metadata graphs,
//! resumable uploads, role-based sharing, peer-reviewed publication and a
//! tiered object store, tied together by [`Platform`].

pub mod access;
pub mod clock;
pub mod dataset;
pub mod error;
pub mod events;
pub mod graph;
pub mod id;
pub mod persist;
pub mod platform;
pub mod publishing;
pub mod storage;
pub mod tree;
pub mod upload;

pub use clock::{Clock, ManualClock, SystemClock};
pub use error::{Error, Result};
pub use id::Id;
pub use platform::{Platform, PlatformBuilder};
