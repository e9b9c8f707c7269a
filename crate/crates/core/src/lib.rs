pub mod algorithms;
pub mod cli;
pub mod error;
pub mod instances;
pub mod metric;
pub mod simulator;

pub use error::{Error, Result};
