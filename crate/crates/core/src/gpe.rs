//! Mean-field helpers for condensates in the guide plane: the
//! effective 2D coupling after freezing out one tight axis, well-model
//! potential sampling, and Thomas-Fermi chemical potentials.
//!
//! Conventions: the in-plane wavefunction is unit-norm, so every
//! formula takes the *total* coupling `G = g2d * N` for `N` atoms.

use ndarray::Array2;

use crate::constants::{G_EARTH, HBAR};
use crate::error::{CoreError, Result};
use crate::fft::FftPair2D;
use crate::field::WaveField2D;
use crate::grid::Grid2D;
use crate::potentials::{
    gaussian_trap_frequency, harmonic_well, radial_gaussian_well, GuideParams,
};
use crate::propagate::{relax_gpe_2d, residual_gpe_2d, RelaxSpec};

/// Effective 2D coupling for atoms squeezed into the ground state of a
/// harmonic axis with frequency `omega_y`:
/// `g2d = 2 hbar a sqrt(2 pi hbar omega_y / m)`.
pub fn g2d_coupling(mass: f64, scattering_length: f64, omega_y: f64) -> Result<f64> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(CoreError::contract("mass must be positive"));
    }
    if !(scattering_length.is_finite() && scattering_length > 0.0) {
        return Err(CoreError::contract("scattering length must be positive"));
    }
    if !(omega_y.is_finite() && omega_y > 0.0) {
        return Err(CoreError::contract("squeeze frequency must be positive"));
    }
    Ok(2.0 * HBAR * scattering_length * (2.0 * std::f64::consts::PI * HBAR * omega_y / mass).sqrt())
}

/// The in-plane trapping geometry a condensate is prepared in.
#[derive(Debug, Clone, Copy)]
pub enum WellModel {
    /// Both beams of the crossing, sampled in the lab frame.
    Crossed(GuideParams),
    /// A single isotropic radial Gaussian well — the transverse plane
    /// of one guide.
    RadialVertical { depth: f64, waist: f64 },
}

impl WellModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            WellModel::Crossed(p) => p.validate(),
            WellModel::RadialVertical { depth, waist } => {
                if !(depth.is_finite() && *depth > 0.0) {
                    return Err(CoreError::contract("well depth must be positive"));
                }
                if !(waist.is_finite() && *waist > 0.0) {
                    return Err(CoreError::contract("well waist must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Optical potential at a point, without gravity.
    pub fn potential(&self, x: f64, z: f64) -> f64 {
        match self {
            WellModel::Crossed(p) => p.guide_potential(x, z),
            WellModel::RadialVertical { depth, waist } => {
                radial_gaussian_well(*depth, *waist, x, z)
            }
        }
    }

    /// Depth and waist of the defining (vertical) beam.
    pub fn primary_beam(&self) -> (f64, f64) {
        match self {
            WellModel::Crossed(p) => (p.u0, p.w0),
            WellModel::RadialVertical { depth, waist } => (*depth, *waist),
        }
    }

    /// Small-oscillation frequency at the bottom of the defining beam.
    pub fn trap_frequency(&self, mass: f64) -> f64 {
        let (depth, waist) = self.primary_beam();
        gaussian_trap_frequency(depth, waist, mass)
    }

    pub fn sample(&self, grid: &Grid2D) -> Array2<f64> {
        let (nx, nz) = grid.shape();
        Array2::from_shape_fn((nx, nz), |(ix, iz)| {
            self.potential(grid.x.x(ix), grid.z.x(iz))
        })
    }

    /// Optical potential plus `m g z` for fall dynamics.
    pub fn sample_with_gravity(&self, grid: &Grid2D, mass: f64) -> Array2<f64> {
        let (nx, nz) = grid.shape();
        Array2::from_shape_fn((nx, nz), |(ix, iz)| {
            let z = grid.z.x(iz);
            self.potential(grid.x.x(ix), z) + mass * G_EARTH * z
        })
    }
}

/// Thomas-Fermi chemical potential in the harmonic approximation of a
/// Gaussian well: `mu = -U + (2 / w) sqrt(U G / pi)`.
pub fn tf_mu_harmonic(depth: f64, waist: f64, g_total: f64) -> Result<f64> {
    if !(depth.is_finite() && depth > 0.0 && waist.is_finite() && waist > 0.0) {
        return Err(CoreError::contract("well depth and waist must be positive"));
    }
    if !(g_total.is_finite() && g_total > 0.0) {
        return Err(CoreError::contract("total coupling must be positive"));
    }
    Ok(-depth + (2.0 / waist) * (depth * g_total / std::f64::consts::PI).sqrt())
}

/// Thomas-Fermi density profile in the harmonic approximation of a
/// Gaussian well: `max(0, (mu - V_H(r)) / G)` per unit area, where
/// `V_H` is the osculating parabola of the well. Integrates to one
/// over the plane when `mu` comes from [`tf_mu_harmonic`] with the
/// same total coupling `g_total` (which must be positive).
pub fn tf_density(r: f64, mu: f64, depth: f64, waist: f64, mass: f64, g_total: f64) -> f64 {
    ((mu - harmonic_well(depth, waist, mass, r)) / g_total).max(0.0)
}

/// Thomas-Fermi chemical potential on a sampled potential: the `mu`
/// solving `sum max(mu - V, 0) da / G = 1` by bisection. Valid while
/// the implied cloud is contained in the sampled region.
pub fn tf_mu_sampled(potential: &Array2<f64>, da: f64, g_total: f64) -> Result<f64> {
    if !(da.is_finite() && da > 0.0) {
        return Err(CoreError::contract("cell area must be positive"));
    }
    if !(g_total.is_finite() && g_total > 0.0) {
        return Err(CoreError::contract("total coupling must be positive"));
    }
    if potential.is_empty() || potential.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::contract("potential must be nonempty and finite"));
    }
    let norm_at = |mu: f64| -> f64 {
        potential
            .iter()
            .map(|&v| (mu - v).max(0.0))
            .sum::<f64>()
            * da
            / g_total
    };
    let v_min = potential.iter().cloned().fold(f64::INFINITY, f64::min);
    let v_max = potential.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = v_min;
    let mut hi = v_max.max(v_min + f64::MIN_POSITIVE);
    let mut grow = (v_max - v_min).max(g_total / (da * potential.len() as f64));
    let mut tries = 0;
    while norm_at(hi) < 1.0 {
        hi += grow;
        grow *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(CoreError::Convergence {
                message: "could not bracket the chemical potential".into(),
                trace: vec![lo, hi],
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_at(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A converged mean-field ground state with its audit numbers.
#[derive(Debug, Clone)]
pub struct GroundState {
    /// Unit-norm in-plane wavefunction.
    pub field: WaveField2D,
    /// Chemical potential as the expectation `<T + V + G|phi|^2>`.
    pub mu: f64,
    /// Total energy `<T> + <V> + (G/2) int |phi|^4`.
    pub energy: f64,
    /// Stationarity defect `|| (T + V + G|phi|^2 - mu) phi ||`.
    pub residual: f64,
    /// Imaginary-time steps actually taken.
    pub steps: usize,
}

/// Relax the ground state of `well` for total coupling `g_total = N g2d`
/// (zero gives the linear problem), seeded with an isotropic Gaussian of
/// the harmonic-oscillator width at the sampled potential minimum.
///
/// The grid must span at least four times the larger of that width and
/// the Thomas-Fermi radius on both axes. On success the state satisfies
/// `residual <= 1e-5 |mu + depth|` and the decay- and expectation-based
/// chemical potentials agree to one part in 1e6.
pub fn ground_state(
    grid: Grid2D,
    well: &WellModel,
    mass: f64,
    g_total: f64,
    stages: &[(f64, usize)],
    tol: f64,
) -> Result<GroundState> {
    well.validate()?;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(CoreError::contract("mass must be positive"));
    }
    if !(g_total.is_finite() && g_total >= 0.0) {
        return Err(CoreError::contract("total coupling must be finite and >= 0"));
    }

    let (depth, _) = well.primary_beam();
    let omega = well.trap_frequency(mass);
    let a_ho = (HBAR / (mass * omega)).sqrt();
    let r_tf = if g_total > 0.0 {
        let (d, w) = well.primary_beam();
        let mu_tf = tf_mu_harmonic(d, w, g_total)?;
        (2.0 * (mu_tf + d) / (mass * omega * omega)).sqrt()
    } else {
        0.0
    };
    let need = 4.0 * a_ho.max(r_tf);
    let span = grid.x.length().min(grid.z.length());
    if span < need {
        return Err(CoreError::setup(format!(
            "grid span {span:.3e} m is below 4x the cloud size estimate \
             (oscillator width {a_ho:.3e} m, Thomas-Fermi radius {r_tf:.3e} m); \
             need at least {need:.3e} m on both axes"
        )));
    }

    let v = well.sample(&grid);
    let (mut ix_min, mut iz_min) = (0, 0);
    let mut v_min = f64::INFINITY;
    for ((ix, iz), &val) in v.indexed_iter() {
        if val < v_min {
            v_min = val;
            ix_min = ix;
            iz_min = iz;
        }
    }
    let mut field = WaveField2D::gaussian(grid, grid.x.x(ix_min), grid.z.x(iz_min), a_ho)?;

    let outcome = relax_gpe_2d(
        &mut field,
        &v,
        &RelaxSpec {
            mass,
            g2d: g_total,
            stages: stages.to_vec(),
            tol,
        },
    )?;

    let mu = outcome.mu_expectation;
    let scale = mu.abs().max(HBAR * omega);
    if (outcome.mu_decay - mu).abs() > 1e-6 * scale {
        return Err(CoreError::Convergence {
            message: format!(
                "chemical potential disagrees between decay ({:.9e} J) and \
                 expectation ({mu:.9e} J) estimates",
                outcome.mu_decay
            ),
            trace: outcome.trace.iter().rev().take(16).rev().copied().collect(),
        });
    }

    let (nx, nz) = grid.shape();
    let mut pair = FftPair2D::new(nx, nz);
    let residual = residual_gpe_2d(&field, &v, mass, g_total, mu, &mut pair)?;
    let defect_cap = 1e-5 * (mu + depth).abs();
    if residual > defect_cap {
        return Err(CoreError::Convergence {
            message: format!(
                "relaxed state is not stationary: residual {residual:.3e} \
                 exceeds {defect_cap:.3e} (refine the step schedule)"
            ),
            trace: outcome.trace.iter().rev().take(16).rev().copied().collect(),
        });
    }

    Ok(GroundState {
        field,
        mu,
        energy: outcome.energy,
        residual,
        steps: outcome.steps,
    })
}
