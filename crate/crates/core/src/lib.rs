//! Superdirective beamforming for compact uniform linear arrays.
//!
//! The crate computes the radiated-power matrix of a z-axis array by sphere
//! quadrature, the closed-form maximum-directivity excitation, and a
//! coupling-compensated excitation whose coupling matrix is estimated from
//! isolated and embedded element far fields via spherical wave expansion.
//!
//! ```
//! use superdir::{ArrayGeometry, ElementPattern, SphereQuadrature};
//! use superdir::{impedance_matrix, optimal_beamforming, steering_vector};
//!
//! let geometry = ArrayGeometry::uniform_linear(2, 0.05).unwrap();
//! let pattern = ElementPattern::isotropic();
//! let z = impedance_matrix(&geometry, &pattern, &SphereQuadrature::default()).unwrap();
//! let e = steering_vector(&geometry, &pattern, 0.0, 0.0).unwrap();
//! let beam = optimal_beamforming(&z, &e).unwrap();
//! assert!(beam.directivity > 3.9); // close to the M² = 4 limit
//! ```

pub mod array;
pub mod beamform;
pub mod coupling;
pub mod error;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod radiation;
pub mod swe;
pub mod sweep;

pub use array::{evaluate_array_pattern, steering_vector, ArrayGeometry, ElementPattern, SampledGrid, SteeringVector};
pub use beamform::{
    coupled_beamforming, coupled_directivity, gain, gain_optimal_beamforming, loss_resistance, optimal_beamforming,
    BeamMode, BeamformingSolution, Gain,
};
pub use coupling::{
    active_element_pattern, build_coefficient_set, coupled_pattern, estimate_coupling, isolated_fields_synthetic,
    synthesize_coupled_fields, CouplingMatrix, CouplingSource, ElementFieldLibrary,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use quadrature::SphereQuadrature;
pub use radiation::{directivity, impedance_matrix, impedance_matrix_certified, ImpedanceMatrix};
pub use swe::{
    basis_matrix, eval_spherical_wave_function, fit_wave_coefficients, reconstruct_field, truncation_degree,
    FieldSampleSet, SweFitter, SweIndex, WaveCoefficientSet,
};
pub use sweep::{run_sweep, run_sweep_with_threads, write_sweep_csv, CouplingSpec, SweepRow, SweepSpec};
