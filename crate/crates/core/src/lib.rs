pub mod error;
pub mod numeric;
pub mod variance;
pub mod sampling;
pub mod queue;
pub mod asymptotics;
pub mod mc;
pub mod pickands;
pub mod criterion;
pub mod io;
pub mod config;
pub mod experiments;

pub use error::{Error, Result};
