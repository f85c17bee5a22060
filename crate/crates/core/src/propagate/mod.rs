//! Split-operator (Strang) time propagation on spectral grids: batched
//! 1D real-time evolution through the falling-frame crossing potential,
//! and 2D real/imaginary-time evolution with a cubic nonlinearity.

mod one_d;
mod two_d;

pub use one_d::{
    energy_1d, propagate_crossing_batch, propagate_static_batch, CrossingSpec, Run1DSpec,
};
pub use two_d::{
    energy_gpe_2d, propagate_gpe_2d, relax_gpe_2d, residual_gpe_2d, Gpe2DSpec, RelaxOutcome,
    RelaxSpec,
};

use crate::constants::HBAR;
use crate::error::{CoreError, Result};
use crate::grid::Grid1D;

/// Absorbing boundary layer: negative imaginary potential of the given
/// strength (J), cosine-squared ramped over `width` from each grid edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorberSpec {
    pub width: f64,
    pub strength: f64,
}

/// Number of steps covering `[t_start, t_final]` with spacing `dt`.
/// The span must be a whole number of steps (within 1e-6 relative).
pub fn step_count(t_start: f64, t_final: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CoreError::contract("time step must be > 0"));
    }
    if !(t_final.is_finite() && t_start.is_finite() && t_final > t_start) {
        return Err(CoreError::contract("need t_final > t_start"));
    }
    let raw = (t_final - t_start) / dt;
    let steps = raw.round();
    if steps < 1.0 || (raw - steps).abs() > 1e-6 * steps {
        return Err(CoreError::contract(format!(
            "time span {:.6e} is not a whole number of steps of {:.6e}",
            t_final - t_start,
            dt
        )));
    }
    Ok(steps as usize)
}

/// Require the grid to represent kinetic energies up to four times the
/// expected maximum; on failure, suggest a sufficient point count.
pub fn ensure_resolution(
    grid: &Grid1D,
    mass: f64,
    energy_estimate: f64,
    what: &str,
) -> Result<()> {
    let representable = HBAR * HBAR * grid.k_nyquist().powi(2) / (2.0 * mass);
    let needed = 4.0 * energy_estimate;
    if representable >= needed {
        return Ok(());
    }
    let k_req = (2.0 * mass * needed).sqrt() / HBAR;
    let n_req = (grid.length() * k_req / std::f64::consts::PI).ceil() as usize;
    Err(CoreError::Setup {
        message: format!(
            "{what}: grid of {} points represents kinetic energy up to {representable:.3e} J, \
             but {needed:.3e} J (4x the expected maximum) is required",
            grid.n()
        ),
        suggested_points: Some(n_req.next_power_of_two()),
    })
}
