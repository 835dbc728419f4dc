pub mod cli;
pub mod dynamics;
pub mod error;
pub mod path;
pub mod process;
pub mod rates;
pub mod rng;
pub mod stats;
pub mod transport;
pub mod ulam;

pub use error::{Error, Result};
