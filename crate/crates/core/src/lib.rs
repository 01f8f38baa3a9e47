pub mod analytic;
pub mod elliptic;
pub mod error;
pub mod meanfield;
pub mod mqst;
pub mod poly;
pub mod quad;
pub mod qubit;
pub mod setup;
pub mod verify;

pub use error::{Error, Result};
