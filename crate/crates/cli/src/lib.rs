//! Experiment harness: each module turns a resolved configuration into
//! deterministic data files plus run notes.

pub mod artifacts;
pub mod boolean;
pub mod config;
pub mod cos4;
pub mod error;
pub mod gauss_fit;
pub mod qpoly;
pub mod scale;
pub mod verify;

pub use error::{LabError, LabResult};
