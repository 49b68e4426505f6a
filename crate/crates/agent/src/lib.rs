//! The `fh` agent: profiles, local upload ledgers, parallel resumable
//! uploads, verified downloads and dataset tree commands, all over the
//! public REST API.

pub mod cli;
pub mod client;
pub mod download;
pub mod ds;
pub mod error;
pub mod ledger;
pub mod profile;
pub mod scan;
pub mod upload;

pub use error::{AgentError, Result};
