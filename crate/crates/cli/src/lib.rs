//! Run manifests and the sweep plot for the `sagnac-bell` binary.

pub mod manifest;
pub mod svg;

pub use manifest::RunManifest;
