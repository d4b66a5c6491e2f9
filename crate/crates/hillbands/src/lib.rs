//! Spectra of Hill operators with energy-dependent periodic potentials, and
//! the third-order Lax operator of the good Boussinesq equation.

pub mod boussinesq;
pub mod error;
pub mod fixtures;
pub mod fundsol;
pub mod lyapunov;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod reality;
pub mod resolvent;
pub mod rootfind;
pub mod spectra;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
