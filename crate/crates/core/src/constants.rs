//! Physical constants (SI) and the default atomic species.

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054571817e-34;

/// Boltzmann constant [J/K].
pub const KB: f64 = 1.380649e-23;

/// Standard gravitational acceleration [m/s^2].
pub const G_EARTH: f64 = 9.80665;

/// Mass of the rubidium-87 atom [kg].
pub const MASS_RB87: f64 = 1.44316e-25;

/// Effective 1D scattering length used by the reduced-dimension
/// nonlinear model [m].
pub const SCATTER_A0: f64 = 5.29e-9;
