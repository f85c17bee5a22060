//! Bound states of a 1D potential on a periodic grid, found by dense
//! diagonalization of the spectral (Fourier-grid) Hamiltonian, and
//! Boltzmann weighting of the resulting level set.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::constants::{HBAR, KB};
use crate::error::{CoreError, Result};
use crate::fft::FftPair1D;
use crate::field::WaveField1D;
use crate::grid::Grid1D;

/// One diagonalization result: energies ascending, states unit-norm.
#[derive(Debug, Clone)]
pub struct EigenSet {
    grid: Grid1D,
    pub energies: Vec<f64>,
    pub states: Vec<WaveField1D>,
}

impl EigenSet {
    /// Assemble a set from already-built states (cache rehydration,
    /// synthetic fixtures). Energies must be ascending and each state
    /// must live on `grid`.
    pub fn from_parts(
        grid: Grid1D,
        energies: Vec<f64>,
        states: Vec<WaveField1D>,
    ) -> Result<Self> {
        if energies.len() != states.len() {
            return Err(CoreError::contract(format!(
                "{} energies for {} states",
                energies.len(),
                states.len()
            )));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(CoreError::contract("energies must be ascending"));
        }
        for s in &states {
            grid.ensure_same(&s.grid(), "eigenstate")?;
        }
        Ok(Self {
            grid,
            energies,
            states,
        })
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

/// Row `d` of the periodic spectral kinetic matrix: the matrix is a
/// circulant with entries `t[(i - j) mod n]`, where `t` is the inverse
/// DFT of the kinetic energies over the FFT-ordered wavenumbers.
fn kinetic_circulant_row(grid: &Grid1D, mass: f64) -> Vec<f64> {
    let n = grid.n();
    let mut ek: Vec<Complex64> = (0..n)
        .map(|j| {
            let k = grid.k(j);
            Complex64::new(HBAR * HBAR * k * k / (2.0 * mass), 0.0)
        })
        .collect();
    let mut pair = FftPair1D::new(n);
    pair.forward(&mut ek);
    ek.iter().map(|c| c.re / n as f64).collect()
}

/// All bound states (energy below zero) of `potential` sampled on `grid`,
/// for a particle of mass `mass`.
///
/// The potential must go to (near) zero at the grid edges for "bound"
/// to be meaningful; energies are ascending and each state is unit-norm
/// with its first significant sample rotated to the positive real axis.
pub fn bound_states_fgh(grid: Grid1D, potential: &[f64], mass: f64) -> Result<EigenSet> {
    let n = grid.n();
    if potential.len() != n {
        return Err(CoreError::GridMismatch(format!(
            "potential has {} samples for a grid of {} points",
            potential.len(),
            n
        )));
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::contract("potential must be finite"));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(CoreError::contract("mass must be positive"));
    }

    let t = kinetic_circulant_row(&grid, mass);
    // Fill both triangles explicitly: `eigh` hands the buffer to LAPACK
    // column-major, so a half-filled row-major triangle would be read as
    // the wrong half.
    let mut h = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let val = t[i - j];
            h[[i, j]] = val;
            h[[j, i]] = val;
        }
        h[[i, i]] += potential[i];
    }

    let (vals, vecs) = h.eigh(UPLO::Lower).map_err(|e| CoreError::NumericFault {
        message: format!("dense symmetric eigensolve failed: {e}"),
        step: 0,
    })?;

    let n_bound = vals.iter().take_while(|&&e| e < 0.0).count();
    if n_bound == 0 {
        return Err(CoreError::NoBoundStates(format!(
            "lowest level sits at {:.3e} J",
            vals[0]
        )));
    }

    let inv_sqrt_dx = 1.0 / grid.dx().sqrt();
    let mut energies = Vec::with_capacity(n_bound);
    let mut states = Vec::with_capacity(n_bound);
    for m in 0..n_bound {
        let col = vecs.column(m);
        let peak = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let sign = col
            .iter()
            .find(|v| v.abs() > 1e-12 * peak)
            .map(|v| v.signum())
            .unwrap_or(1.0);
        let psi = Array1::from_iter(
            col.iter()
                .map(|v| Complex64::new(v * sign * inv_sqrt_dx, 0.0)),
        );
        energies.push(vals[m]);
        states.push(WaveField1D::new(grid, psi)?);
    }
    Ok(EigenSet {
        grid,
        energies,
        states,
    })
}

/// Normalized Boltzmann weights `w_i ∝ exp(-E_i / kB T)` for a
/// non-degenerate level set at temperature `temperature` (kelvin).
pub fn boltzmann_weights(energies: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if energies.is_empty() {
        return Err(CoreError::contract("no energies to weight"));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(CoreError::contract("temperature must be > 0"));
    }
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies
        .iter()
        .map(|e| (-(e - e0) / (KB * temperature)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.iter().map(|w| w / sum).collect())
}

/// A level set with its thermal occupation probabilities.
#[derive(Debug, Clone)]
pub struct ThermalEnsemble {
    pub set: EigenSet,
    pub weights: Vec<f64>,
    pub temperature: f64,
    /// Occupation fraction discarded by the negligible-level cutoff.
    pub dropped_mass: f64,
}

impl ThermalEnsemble {
    /// Boltzmann factor (relative to the ground level) below which a
    /// level's contribution to any thermal average is negligible and
    /// the level is dropped from the ensemble.
    pub const NEGLIGIBLE_FACTOR: f64 = 1e-6;

    /// Weight `set` at `temperature`, dropping levels whose Boltzmann
    /// factor relative to the ground level is below
    /// [`Self::NEGLIGIBLE_FACTOR`]; the surviving weights are
    /// renormalized and the discarded fraction recorded.
    pub fn new(mut set: EigenSet, temperature: f64) -> Result<Self> {
        if set.is_empty() {
            return Err(CoreError::contract("no levels to weight"));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(CoreError::contract("temperature must be > 0"));
        }
        let e0 = set.energies[0];
        let factors: Vec<f64> = set
            .energies
            .iter()
            .map(|e| (-(e - e0) / (KB * temperature)).exp())
            .collect();
        let total: f64 = factors.iter().sum();
        // Energies ascend, so factors descend: the kept set is a prefix.
        let keep = factors
            .iter()
            .position(|&f| f < Self::NEGLIGIBLE_FACTOR)
            .unwrap_or(factors.len());
        let kept_sum: f64 = factors[..keep].iter().sum();
        set.energies.truncate(keep);
        set.states.truncate(keep);
        let weights = factors[..keep].iter().map(|f| f / kept_sum).collect();
        Ok(Self {
            set,
            weights,
            temperature,
            dropped_mass: 1.0 - kept_sum / total,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Thermal average of per-state values (one per level).
    pub fn average(&self, per_state: &[f64]) -> Result<f64> {
        if per_state.len() != self.weights.len() {
            return Err(CoreError::contract(format!(
                "got {} values for {} levels",
                per_state.len(),
                self.weights.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(per_state)
            .map(|(w, v)| w * v)
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MASS_RB87;
    use crate::potentials;
    use crate::check::assert_rel;

    fn gaussian_well(grid: &Grid1D, u0: f64, w0: f64) -> Vec<f64> {
        (0..grid.n())
            .map(|i| {
                let x = grid.x(i);
                -u0 * (-2.0 * (x / w0).powi(2)).exp()
            })
            .collect()
    }

    #[test]
    fn deep_well_levels_approach_harmonic_ladder() {
        // Depth/spacing ratio ~200, so anharmonic shifts are ~1e-3.
        let u0 = 1.232987e-28;
        let w0 = 10e-6;
        let grid = Grid1D::new(-30e-6, 30e-6, 512).unwrap();
        let set = bound_states_fgh(grid, &gaussian_well(&grid, u0, w0), MASS_RB87).unwrap();
        let omega = potentials::gaussian_trap_frequency(u0, w0, MASS_RB87);
        let hw = HBAR * omega;

        // Ground state: E0 = -u0 + (hw/2)(1 - (3/16) hw/u0) + O(hw^3/u0^2).
        let e0_pred = -u0 + 0.5 * hw * (1.0 - 0.1875 * hw / u0);
        assert_rel(set.energies[0], e0_pred, 2e-5);

        // Low-lying spacings: hw * (1 - (3/8)*(n+1)*hw/u0 + ...).
        for n in 0..5 {
            let gap = set.energies[n + 1] - set.energies[n];
            let pred = hw * (1.0 - 0.375 * (n as f64 + 1.0) * hw / u0);
            assert_rel(gap, pred, 5e-4);
        }
    }

    #[test]
    fn states_are_orthonormal() {
        let grid = Grid1D::new(-25e-6, 25e-6, 256).unwrap();
        let set = bound_states_fgh(grid, &gaussian_well(&grid, 2e-29, 8e-6), MASS_RB87).unwrap();
        assert!(set.len() >= 4);
        for i in 0..set.len().min(8) {
            for j in 0..set.len().min(8) {
                let ov = set.states[i].overlap(&set.states[j]).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (ov.norm() - expect).abs() < 1e-8,
                    "levels {i},{j}: overlap {ov}"
                );
            }
        }
    }

    #[test]
    fn symmetric_well_states_alternate_parity() {
        let grid = Grid1D::new(-25e-6, 25e-6, 256).unwrap();
        let set = bound_states_fgh(grid, &gaussian_well(&grid, 2e-29, 8e-6), MASS_RB87).unwrap();
        let n = grid.n();
        for (m, st) in set.states.iter().enumerate().take(6) {
            let want = if m % 2 == 0 { 1.0 } else { -1.0 };
            let peak = st.psi.iter().map(|c| c.norm()).fold(0.0, f64::max);
            // Compare psi(x) with psi(-x); index 0 is its own mirror on a
            // periodic grid, so pair i with n - i.
            for i in 1..n / 2 {
                let a = st.psi[i].re;
                let b = st.psi[n - i].re;
                assert!(
                    (a - want * b).abs() < 1e-6 * peak,
                    "level {m} parity broken at {i}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn shallow_well_still_binds_and_deepest_state_is_nodeless() {
        let grid = Grid1D::new(-40e-6, 40e-6, 256).unwrap();
        let set = bound_states_fgh(grid, &gaussian_well(&grid, 2e-31, 6e-6), MASS_RB87).unwrap();
        assert!(!set.is_empty());
        assert!(set.energies[0] < 0.0);
        // Ground state has no sign change.
        let signs: Vec<f64> = set.states[0]
            .psi
            .iter()
            .map(|c| c.re)
            .filter(|r| r.abs() > 1e-4)
            .collect();
        assert!(signs.windows(2).all(|w| w[0] * w[1] > 0.0));
    }

    #[test]
    fn repulsive_bump_has_no_bound_states() {
        let grid = Grid1D::new(-20e-6, 20e-6, 128).unwrap();
        let v: Vec<f64> = (0..grid.n())
            .map(|i| {
                let x = grid.x(i);
                1e-29 * (-2.0 * (x / 5e-6_f64).powi(2)).exp()
            })
            .collect();
        match bound_states_fgh(grid, &v, MASS_RB87) {
            Err(CoreError::NoBoundStates(_)) => {}
            other => panic!("expected NoBoundStates, got {other:?}"),
        }
    }

    #[test]
    fn boltzmann_weights_normalize_and_order() {
        let e: Vec<f64> = (0..10).map(|i| -1e-28 + i as f64 * 1e-30).collect();
        let w = boltzmann_weights(&e, 1e-6).unwrap();
        assert_rel(w.iter().sum::<f64>(), 1.0, 1e-12);
        assert!(w.windows(2).all(|p| p[0] > p[1]));
        // Ratio between adjacent levels is exp(-dE/kBT).
        let expect = (-1e-30 / (KB * 1e-6)).exp();
        for p in w.windows(2) {
            assert_rel(p[1] / p[0], expect, 1e-12);
        }
    }

    #[test]
    fn ensemble_average_weights_per_state_values() {
        let grid = Grid1D::new(-25e-6, 25e-6, 128).unwrap();
        let set = bound_states_fgh(grid, &gaussian_well(&grid, 5e-30, 8e-6), MASS_RB87).unwrap();
        let k = set.len();
        let ens = ThermalEnsemble::new(set, 0.5e-6).unwrap();
        let ones = vec![1.0; k];
        assert_rel(ens.average(&ones).unwrap(), 1.0, 1e-12);
        assert!(ens.average(&ones[..k - 1]).is_err());
        assert_eq!(ens.dropped_mass, 0.0);
    }

    #[test]
    fn ensemble_drops_negligible_levels_and_records_the_mass() {
        // Energies spaced by 1.1·kT·ln(10) give factors 10^(-1.1j):
        // j = 5 sits at 3.2e-6 (kept), j = 6 at 2.5e-7 (dropped).
        let grid = Grid1D::new(-10e-6, 10e-6, 32).unwrap();
        let t = 1e-6;
        let de = 1.1 * KB * t * std::f64::consts::LN_10;
        let energies: Vec<f64> = (0..10).map(|j| j as f64 * de).collect();
        let states: Vec<WaveField1D> = (0..10)
            .map(|_| WaveField1D::gaussian(grid, 0.0, 2e-6, 0.0).unwrap())
            .collect();
        let set = EigenSet::from_parts(grid, energies, states).unwrap();
        let ens = ThermalEnsemble::new(set, t).unwrap();
        assert_eq!(ens.len(), 6);
        assert_eq!(ens.set.len(), 6);
        let factor = |j: i32| 10f64.powf(-1.1 * j as f64);
        let total: f64 = (0..10).map(factor).sum();
        let kept: f64 = (0..6).map(factor).sum();
        assert_rel(ens.dropped_mass, 1.0 - kept / total, 1e-12);
        assert_rel(ens.weights.iter().sum::<f64>(), 1.0, 1e-12);
        assert_rel(ens.weights[0], 1.0 / kept, 1e-12);
        assert_rel(ens.weights[5], factor(5) / kept, 1e-9);
    }
}
