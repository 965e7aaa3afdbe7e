//! HTTP API and file-backed store for correction sessions.

pub mod api;
pub mod store;

pub use api::{router, AppState};
pub use store::{Store, StoreError};
