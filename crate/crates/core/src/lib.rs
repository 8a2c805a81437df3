pub mod baselines;
pub mod cli;
pub mod config;
pub mod equivalence;
pub mod error;
pub mod graph;
pub mod io;
pub mod qw;
pub mod trajectory;

pub use error::{Error, Result};
