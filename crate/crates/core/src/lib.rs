pub mod cli;
pub mod distribution;
pub mod dominance;
pub mod error;
pub mod monte_carlo;
pub mod params;
pub mod quadrature;
pub mod roots;
pub mod special;
pub mod trial;
pub mod verifier;

pub use error::{Error, Result};
pub use params::{EquicorrParams, LocationArgs, QuadratureSpec};
