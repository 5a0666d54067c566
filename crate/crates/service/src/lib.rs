//! Deployment shell around `interview-core`: an HTTP session service with a
//! pluggable session store, and the operator CLI behind the `interview` binary.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod store;

pub use api::{router, AppState};
pub use config::{BackendKind, ServiceConfig, StoreKind};
pub use error::{ApiError, ErrorCode};
pub use store::{FileStore, MemoryStore, SessionStore, SessionStoreEntry, StoreError};

/// Version stamped on every API payload.
pub const SCHEMA_VERSION: u32 = 1;
