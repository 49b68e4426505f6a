//! HTTP front end for fairhaven: the `/v1` API, the public Discover catalog,
//! DOI resolution and webhook delivery.

pub mod app;
pub mod archive;
pub mod config;
pub mod error;
pub mod page;
mod routes;
pub mod webhooks;

pub use app::{AppState, Server, PAYER_HEADER};
pub use config::{ClockMode, Config};
pub use error::{ApiError, ServerError};
