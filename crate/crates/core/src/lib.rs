pub mod bessel;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod groundstate;
mod ode;
pub mod spectral;
pub mod symmetry;

pub use error::{NlsError, Result};
