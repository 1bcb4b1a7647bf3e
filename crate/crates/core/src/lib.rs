pub mod energy;
pub mod error;
pub mod multop;
pub mod network;
pub mod numkernel;
pub mod randwalk;

pub use error::{Error, Result};
