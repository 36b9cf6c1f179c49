//! Core of the layout-mining platform: domain model, durable event store,
//! dataset analytics, scene reconstruction and annotation queries.

// Error enums carry the offending keys for diagnostics; boxing them buys nothing here.
#![allow(clippy::result_large_err)]

pub mod analysis;
pub mod annotate;
pub mod dataset;
pub mod model;
pub mod numfmt;
pub mod reconstruct;
pub mod script;
pub mod store;
#[cfg(test)]
mod testutil;

pub use dataset::{Dataset, Placement};
pub use model::*;
pub use store::{ChangeBatch, DatasetManifest, Store, StoreError, StoreOptions, SyncMode};
