//! Numerical laboratory for skew products `(theta, x) -> (d theta, alpha b(theta) + h(x))`
//! over expanding circle maps, where `h` has a single critical point of order `D`.

pub mod base;
pub mod constants;
pub mod curves;
pub mod error;
pub mod hermite;
pub mod maps;
pub mod report;
pub mod skew;
pub mod stats;
pub mod suite;

pub use error::{Error, Result};
