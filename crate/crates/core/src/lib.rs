pub mod cli;
pub mod datagen;
pub mod dataio;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod persistence;
pub mod queue;
pub mod pipeline;
pub mod rankers;
pub mod ranking;
pub mod report;
pub mod sampling;
pub mod stats;
pub mod tree;
pub mod validators;

pub use error::{Error, Result};
