//! Radial spectral machinery: Bessel-zero grids, the order-0 Hankel pair,
//! Littlewood-Paley multipliers, the free propagator and `P^{+-}`.

mod band;
mod field;
mod grid;
mod inout;
pub mod snapshot;

pub use band::{bump, lp_project, FrequencyBand, BRIDGE};
pub use field::{free_evolve, free_propagator_multiplier, RadialField, SpectralField};
pub use grid::{RadialGrid, RESOLVED_FRACTION};
pub use inout::{in_out_pair, in_out_project, WaveDirection};
