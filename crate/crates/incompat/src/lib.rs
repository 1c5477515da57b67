pub mod compat;
pub mod covariance;
pub mod devices;
pub mod error;
pub mod linalg;
pub mod par;
pub mod random;
pub mod robustness;
pub mod theorems;

pub use error::{Error, Result};
