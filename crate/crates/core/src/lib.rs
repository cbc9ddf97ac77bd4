//! Bit allocation for variable-resolution ADCs in hybrid-combined mmWave
//! MIMO receivers.

pub mod bitalloc;
pub mod channel;
pub mod complexity;
pub mod config;
pub mod error;
pub mod experiment;
pub mod hybrid;
pub mod linalg;
pub mod metrics;
pub mod quantization;
pub mod report;

pub use error::{Error, Result};
