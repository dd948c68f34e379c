//! Simulation of crosstalk-dressed Mølmer–Sørensen gates in a trapped-ion
//! chain: echo suppression circuits, FM pulse design, beam-phase drift
//! Monte Carlo and parity tomography.

pub mod circuit;
pub mod config;
pub mod crosstalk;
pub mod drift;
pub mod error;
pub mod motion;
pub mod quadrature;
pub mod recipes;
pub mod simulate;
pub mod spin;
pub mod tomography;
pub mod verify;
