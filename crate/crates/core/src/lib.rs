//! Simulation of a cold-atom beam splitter built from two crossed
//! optical dipole guides: a falling wavepacket is propagated through the
//! time-dependent transverse potential of the crossing region, thermal
//! ensembles of transverse bound states are averaged, and an interacting
//! condensate version of the same release is treated in 2D.

pub mod analysis;
pub mod check;
pub mod constants;
pub mod eigen;
pub mod error;
pub mod fft;
pub mod field;
pub mod gpe;
pub mod grid;
pub mod potentials;
pub mod propagate;

pub use error::{CoreError, Result};
