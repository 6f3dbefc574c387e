pub mod baseline;
pub mod context;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod merging;
pub mod splitting;
pub mod stats;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
