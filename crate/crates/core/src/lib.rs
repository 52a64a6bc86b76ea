pub mod density;
pub mod drift;
pub mod error;
pub mod grid;
pub mod model;
pub mod montecarlo;
pub mod nonlocal;
pub mod parametrix;
pub mod quad;
pub mod report;
pub mod spectral;
pub mod symbol;
pub mod verify;

pub use error::{Error, Result};
