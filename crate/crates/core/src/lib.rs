//! Simulation and analysis of rotation-generated polarization entanglement
//! in a Sagnac fiber loop.
//!
//! Two single photons `|H V>` enter a Sagnac loop through a beam splitter;
//! platform rotation adds opposite phases to the two propagation directions,
//! and after the loop, post-selecting one photon per detection stage leaves
//! a polarization state whose entanglement is set by the rotation rate.
//!
//! - [`fock`]: sparse multimode Fock states and the mode-transform kernel
//! - [`optics`]: beam splitters, Sagnac phase, routing, and the two presets
//! - [`lang`]: the `.icl` layout language
//! - [`bell`]: post-selected state, CHSH value, closed forms, sweeps
//! - [`sampler`]: seeded shot-level Bell test with finite statistics
//!
//! Amplitude-level types are generic over [`Real`]; the aliases below fix
//! the scalar to `f64` (and `f32` where a lower-precision run is useful).

pub mod bell;
pub mod error;
pub mod fock;
pub mod lang;
pub mod optics;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use fock::{
    make_state, CountConstraint, ModeId, ModeRegistry, OccupationVector, Polarization, Role,
    StateDump,
};
pub use optics::{
    build_core_circuit, build_full_circuit, coil_area, entry_beamsplitter, exit_beamsplitter,
    sagnac_loop_element, sagnac_phase, PhaseArg, Preset, SagnacConfig, SPEED_OF_LIGHT,
};
pub use scalar::Real;

pub type FockState = fock::FockState<f64>;
pub type FockState32 = fock::FockState<f32>;
pub type Circuit = optics::Circuit<f64>;
pub type Circuit32 = optics::Circuit<f32>;
pub type OpticalElement = optics::OpticalElement<f64>;
pub type TwoQubitState = bell::TwoQubitState<f64>;
pub type TwoQubitState32 = bell::TwoQubitState<f32>;
pub type MeasurementSetting = bell::MeasurementSetting<f64>;
pub type BlochVector = bell::BlochVector<f64>;
pub type Amplitude = num_complex::Complex<f64>;
