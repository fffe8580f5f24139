//! Quantum and classical dynamics of the kicked harmonic oscillator.
//!
//! A harmonically trapped particle kicked by a spatially periodic potential
//! at integer fractions q of the oscillator period develops a stochastic web
//! in its classical phase space. This crate simulates both sides of that
//! system in the reduced parameter set (K, q, η):
//!
//! * [`classical`] — the area-preserving web map, Monte Carlo heating curves
//!   and occupancy histograms;
//! * [`fock`] — exact kick matrix elements and the one-cycle Floquet
//!   propagator in a truncated Fock basis;
//! * [`propagation`] — stroboscopic state evolution, mean energy, leakage,
//!   and basis-convergence control;
//! * [`spectral`] — quasienergy spectra, overlap-filtered level dynamics
//!   over η grids, band tracking and avoided-crossing refinement;
//! * [`husimi`] — Husimi Q distributions and the localization measure used
//!   to tell web-extended eigenstates from island-localized ones.

pub mod classical;
pub mod error;
pub mod fock;
pub mod husimi;
mod linalg;
pub mod params;
pub mod propagate;
pub mod spectral;

pub use error::{KhoError, Result};
pub use params::{PhysicalParams, SystemParams};
