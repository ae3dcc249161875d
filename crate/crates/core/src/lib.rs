//! Scattering theory and spectrum toolchain for chirally coupled
//! waveguide-magnon systems.
//!
//! A magnon resonator coupled to a waveguide with direction-dependent rates
//! `kappa_R != kappa_L` scatters the two propagation directions differently;
//! at the critical point `kappa_R = 2*gamma_i`, `kappa_L = 0` one direction
//! is absorbed completely while the other passes untouched. This crate
//! models that response ([`model`]), composes multi-resonator chains
//! ([`cascade`]), analyzes the transverse field maps that produce the chiral
//! coupling ([`fieldmap`]), evaluates the slow-wave dispersion of the
//! corrugated guide ([`dispersion`]), extracts parameters from measured
//! spectra ([`fitting`]), and reads/writes the on-disk formats ([`io`]).

pub mod cascade;
pub mod dispersion;
pub mod fieldmap;
pub mod fitting;
pub mod io;
pub mod model;

pub use cascade::{cascade, star, CascadeElement, CascadeError, PropagationModel};
pub use dispersion::{beta, dispersion_curve, group_velocity, DispersionError, GrooveGeometry};
pub use fieldmap::{
    coupling_at, kappa_profile, spin_density, spin_density_raw, CouplingPrefactor, CouplingRates,
    Direction, FieldMap, FieldMapError, ProfileEntry,
};
pub use fitting::{
    fit_resonator, initial_guess, model_spectrum, residual_norm, FitError, FitProblem, FitResult,
};
pub use model::{
    absorption, absorption_checked, chirality, critical_detuning_check, field_sweep_map,
    isolation_db, magnon_frequency, required_field, s_matrix_single, CriticalityReport,
    FrequencyGrid, MagnetConfig, ModelError, ResonatorParams, TwoPortSpectrum,
};
