pub mod bench;
pub mod cli;
pub mod error;
pub mod formulations;
pub mod localsearch;
pub mod matcore;
pub mod solvers;
pub mod structure;

pub use error::{GinvError, Result};
