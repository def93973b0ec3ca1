//! Observables and tests computed on trajectories and fields.

pub mod bubble;
pub mod conserved;
pub mod probes;
pub mod scales;
pub mod virial;

pub use bubble::{
    concentration_mass, extract_profiles, find_bubble, free_l4, Bubble, ConcentrationSample, Profile,
    ProfileDecomposition, ProfileOptions,
};
pub use conserved::{energy, mass, scattering_test, strichartz_accumulate, ScatteringReport};
pub use probes::{dispersive_ratios, probe_inequality, Probe, ProbeConfig, ProbeReport};
pub use scales::{classify_scenario, fit_scale_exponent, scale_functions, Classification, ScaleSeries, Scenario};
pub use virial::{virial, virial_identity, VirialReport};
