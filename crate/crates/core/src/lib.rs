pub mod bvp;
pub mod cli;
pub mod config;
pub mod criteria;
pub mod error;
pub mod exec;
pub mod expr;
pub mod frac;
pub mod psi;
pub mod quad;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
