pub mod axioms;
pub mod error;
pub mod estimators;
pub mod losses;
pub mod model;
pub mod numerics;
pub mod risk;

pub use error::{Error, Result};
