//! FM pulse sequences, displacement and geometric-phase integrals, the FM
//! pulse optimizer and a truncated-Fock spin-boson integrator.

pub mod integrals;
pub mod modes;
pub mod optimize;
pub mod pulse;
pub mod spin_boson;

pub use integrals::{closure_integral, displacement, geometric_phase, phase_integral};
pub use modes::{equilibrium_positions, ModeCoupling, ModeStructure};
pub use optimize::{fm_optimize, FmOptions, FmSolution};
pub use pulse::{motional_phase, FmPulseSequence};
pub use spin_boson::{simulate_spin_boson, SpinBosonOptions, SpinBosonState};
