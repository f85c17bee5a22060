//! Batched 1D split-operator propagation.
//!
//! One step is the symmetric factorization
//! `exp(-i V dt/2) exp(-i T dt) exp(-i V dt/2)` with the potential
//! evaluated at the step midpoint. The half-step potential factor is
//! shared across every field in the batch, so a thermal ensemble costs
//! little more than its FFTs.

use num_complex::Complex64;

use super::{step_count, AbsorberSpec};
use crate::constants::HBAR;
use crate::error::{CoreError, Result};
use crate::fft::{kinetic_expectation_1d, FftPair1D};
use crate::field::WaveField1D;
use crate::grid::Grid1D;
use crate::potentials::{absorber_profile, fall_height, GuideParams};

/// Timing and bookkeeping shared by the 1D runs.
#[derive(Debug, Clone, Copy)]
pub struct Run1DSpec {
    pub mass: f64,
    pub dt: f64,
    pub t_start: f64,
    pub t_final: f64,
    pub absorber: Option<AbsorberSpec>,
    /// Invoke the snapshot callback every this many steps (and at the
    /// final step). `None` disables snapshots entirely.
    pub snapshot_every: Option<usize>,
    /// Scan all fields for numeric faults every this many steps.
    pub norm_check_every: usize,
}

impl Run1DSpec {
    fn validate(&self) -> Result<usize> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(CoreError::contract("mass must be positive"));
        }
        if self.norm_check_every == 0 {
            return Err(CoreError::contract("norm_check_every must be >= 1"));
        }
        if let Some(k) = self.snapshot_every {
            if k == 0 {
                return Err(CoreError::contract("snapshot_every must be >= 1"));
            }
        }
        step_count(self.t_start, self.t_final, self.dt)
    }
}

/// The falling-frame crossed-guide scenario: the oblique beam's center
/// sweeps through the grid as the atom falls; the vertical beam may be
/// switched off partway through.
#[derive(Debug, Clone, Copy)]
pub struct CrossingSpec {
    pub params: GuideParams,
    /// Drop the vertical beam from the first step whose midpoint lies at
    /// or beyond this time.
    pub switch_off_vertical_at: Option<f64>,
}

enum Source<'a> {
    Static(&'a [f64]),
    Crossing(&'a CrossingSpec),
}

/// Full-step kinetic factor `exp(-i hbar k^2 dt / 2m)`.
fn kinetic_factor(grid: &Grid1D, mass: f64, dt: f64) -> Vec<Complex64> {
    (0..grid.n())
        .map(|j| {
            let k = grid.k(j);
            Complex64::from_polar(1.0, -HBAR * k * k * dt / (2.0 * mass))
        })
        .collect()
}

/// Half-step factor for a static real potential plus absorber magnitude:
/// `exp(-(W + iV) dt / 2hbar)`.
fn static_half_factor(potential: &[f64], absorber: Option<&[f64]>, dt: f64) -> Vec<Complex64> {
    let h = dt / (2.0 * HBAR);
    potential
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = absorber.map_or(0.0, |a| a[i]);
            Complex64::new(-w * h, -v * h).exp()
        })
        .collect()
}

fn strang_step(
    psi: &mut [Complex64],
    half_v: &[Complex64],
    kin: &[Complex64],
    pair: &mut FftPair1D,
) {
    for (p, f) in psi.iter_mut().zip(half_v) {
        *p *= f;
    }
    pair.forward(psi);
    for (p, f) in psi.iter_mut().zip(kin) {
        *p *= f;
    }
    pair.inverse(psi);
    for (p, f) in psi.iter_mut().zip(half_v) {
        *p *= f;
    }
}

fn scan_faults(fields: &[WaveField1D], initial_norms: &[f64], step: usize) -> Result<()> {
    for (m, f) in fields.iter().enumerate() {
        let n2 = f.norm_sq();
        if !n2.is_finite() {
            return Err(CoreError::NumericFault {
                message: format!("field {m} has non-finite norm"),
                step,
            });
        }
        if n2 > initial_norms[m] * (1.0 + 1e-6) {
            return Err(CoreError::NumericFault {
                message: format!(
                    "field {m} norm grew from {:.6e} to {n2:.6e}",
                    initial_norms[m]
                ),
                step,
            });
        }
    }
    Ok(())
}

fn run_batch(
    fields: &mut [WaveField1D],
    spec: &Run1DSpec,
    source: Source<'_>,
    mut on_snapshot: impl FnMut(usize, f64, &[WaveField1D]),
) -> Result<()> {
    if fields.is_empty() {
        return Err(CoreError::contract("no fields to propagate"));
    }
    let grid = fields[0].grid();
    for f in fields.iter().skip(1) {
        grid.ensure_same(&f.grid(), "batch fields")?;
    }
    let steps = spec.validate()?;
    let n = grid.n();

    let absorber_mag = match spec.absorber {
        Some(a) => Some(absorber_profile(&grid, a.width, a.strength)?),
        None => None,
    };

    let kin = kinetic_factor(&grid, spec.mass, spec.dt);
    let mut pair = FftPair1D::new(n);

    // Static half-step factor; for the crossing this holds the vertical
    // beam (while on) and the absorber, and the moving oblique factor is
    // layered on top each step.
    let mut vertical_on = true;
    let mut stat = match source {
        Source::Static(v) => {
            if v.len() != n {
                return Err(CoreError::GridMismatch(format!(
                    "potential has {} samples for a grid of {} points",
                    v.len(),
                    n
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CoreError::contract("potential must be finite"));
            }
            static_half_factor(v, absorber_mag.as_deref(), spec.dt)
        }
        Source::Crossing(c) => {
            c.params.validate()?;
            let v: Vec<f64> = (0..n).map(|i| c.params.vertical_term(grid.x(i))).collect();
            static_half_factor(&v, absorber_mag.as_deref(), spec.dt)
        }
    };

    let initial_norms: Vec<f64> = fields.iter().map(|f| f.norm_sq()).collect();
    let mut comb = vec![Complex64::default(); n];

    for step in 0..steps {
        let t_mid = spec.t_start + (step as f64 + 0.5) * spec.dt;

        let half: &[Complex64] = match source {
            Source::Static(_) => &stat,
            Source::Crossing(c) => {
                if vertical_on
                    && c.switch_off_vertical_at
                        .map_or(false, |t_off| t_mid >= t_off)
                {
                    vertical_on = false;
                    let zeros = vec![0.0; n];
                    stat = static_half_factor(&zeros, absorber_mag.as_deref(), spec.dt);
                }
                comb.copy_from_slice(&stat);
                let p = &c.params;
                if p.u1 > 0.0 {
                    let z = fall_height(t_mid);
                    let x_center = p.oblique_center_x(z);
                    // Beyond ~6 waists the phase is below 1e-16 rad.
                    let reach = 6.0 * p.w1 / p.gamma.cos();
                    let i_lo = grid.index_near(x_center - reach);
                    let i_hi = grid.index_near(x_center + reach);
                    let h = spec.dt / (2.0 * HBAR);
                    for i in i_lo..=i_hi {
                        let phase = -p.oblique_term(grid.x(i), z) * h;
                        comb[i] *= Complex64::from_polar(1.0, phase);
                    }
                }
                &comb
            }
        };

        for f in fields.iter_mut() {
            let psi = f.psi.as_slice_mut().expect("1d field is contiguous");
            strang_step(psi, half, &kin, &mut pair);
        }

        let done = step + 1;
        if done % spec.norm_check_every == 0 || done == steps {
            scan_faults(fields, &initial_norms, done)?;
        }
        if let Some(k) = spec.snapshot_every {
            if done % k == 0 || done == steps {
                on_snapshot(done, spec.t_start + done as f64 * spec.dt, fields);
            }
        }
    }
    Ok(())
}

/// Propagate a batch through a static 1D potential.
pub fn propagate_static_batch(
    fields: &mut [WaveField1D],
    potential: &[f64],
    spec: &Run1DSpec,
    on_snapshot: impl FnMut(usize, f64, &[WaveField1D]),
) -> Result<()> {
    run_batch(fields, spec, Source::Static(potential), on_snapshot)
}

/// Propagate a batch through the falling-frame crossing potential.
pub fn propagate_crossing_batch(
    fields: &mut [WaveField1D],
    crossing: &CrossingSpec,
    spec: &Run1DSpec,
    on_snapshot: impl FnMut(usize, f64, &[WaveField1D]),
) -> Result<()> {
    run_batch(fields, spec, Source::Crossing(crossing), on_snapshot)
}

/// `<T> + <V>` for a unit-norm field in a static potential.
pub fn energy_1d(
    field: &WaveField1D,
    potential: &[f64],
    mass: f64,
    pair: &mut FftPair1D,
) -> f64 {
    let g = field.grid();
    let pe: f64 = field
        .psi
        .iter()
        .zip(potential)
        .map(|(c, v)| v * c.norm_sqr())
        .sum::<f64>()
        * g.dx();
    kinetic_expectation_1d(field, mass, pair) + pe
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{assert_abs, assert_rel};
    use crate::constants::MASS_RB87;

    fn density_variance(f: &WaveField1D) -> f64 {
        let g = f.grid();
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, c) in f.psi.iter().enumerate() {
            let d = c.norm_sqr();
            let x = g.x(i);
            m0 += d;
            m1 += x * d;
            m2 += x * x * d;
        }
        let mean = m1 / m0;
        m2 / m0 - mean * mean
    }

    fn spec(dt: f64, t_final: f64) -> Run1DSpec {
        Run1DSpec {
            mass: MASS_RB87,
            dt,
            t_start: 0.0,
            t_final,
            absorber: None,
            snapshot_every: None,
            norm_check_every: 100,
        }
    }

    #[test]
    fn free_packet_disperses_analytically() {
        let grid = Grid1D::new(-40e-6, 40e-6, 512).unwrap();
        let sigma0 = 2e-6;
        let mut fields = [WaveField1D::gaussian(grid, 0.0, sigma0, 0.0).unwrap()];
        let v = vec![0.0; grid.n()];
        let t = 10e-3;
        propagate_static_batch(&mut fields, &v, &spec(1e-5, t), |_, _, _| {}).unwrap();
        let rate = HBAR * t / (2.0 * MASS_RB87 * sigma0 * sigma0);
        let expect = sigma0 * sigma0 * (1.0 + rate * rate);
        assert_rel(density_variance(&fields[0]), expect, 1e-9);
        assert_rel(fields[0].norm_sq(), 1.0, 1e-12);
    }

    #[test]
    fn static_well_conserves_energy_and_norm() {
        let grid = Grid1D::new(-30e-6, 30e-6, 512).unwrap();
        let u0 = 1.5e-29;
        let w0 = 8e-6;
        let v: Vec<f64> = (0..grid.n())
            .map(|i| {
                let x = grid.x(i);
                -u0 * (-2.0 * (x / w0).powi(2)).exp()
            })
            .collect();
        // A displaced packet sloshing in the well.
        let mut fields = [WaveField1D::gaussian(grid, 3e-6, 1.5e-6, 0.0).unwrap()];
        let mut pair = FftPair1D::new(grid.n());
        let e0 = energy_1d(&fields[0], &v, MASS_RB87, &mut pair);
        propagate_static_batch(&mut fields, &v, &spec(1e-6, 4e-3), |_, _, _| {}).unwrap();
        let e1 = energy_1d(&fields[0], &v, MASS_RB87, &mut pair);
        // The splitting error is a bounded oscillation of order
        // (omega dt)^2 ~ 7e-6 about the exact energy, not a drift.
        assert_rel(e1, e0, 2e-6);
        assert_rel(fields[0].norm_sq(), 1.0, 1e-10);
    }

    #[test]
    fn absorber_removes_outgoing_packet() {
        let grid = Grid1D::new(-50e-6, 50e-6, 512).unwrap();
        // Launch toward the right edge at ~9.5 mm/s.
        let k0 = 1.3e7;
        let mut fields = [WaveField1D::gaussian(grid, 0.0, 3e-6, k0).unwrap()];
        let v = vec![0.0; grid.n()];
        let mut sp = spec(1e-6, 8e-3);
        sp.absorber = Some(AbsorberSpec {
            width: 20e-6,
            strength: 2e-29,
        });
        propagate_static_batch(&mut fields, &v, &sp, |_, _, _| {}).unwrap();
        assert!(
            fields[0].norm_sq() < 1e-2,
            "residual norm {}",
            fields[0].norm_sq()
        );
    }

    #[test]
    fn crossing_with_zero_tilt_matches_static_double_beam() {
        // With gamma = 0 the oblique beam is x-static, so the moving-
        // factor path must reproduce a plain static two-beam run.
        let params = GuideParams {
            u0: 1.48e-29,
            w0: 10.7e-6,
            u1: 1.63e-29,
            w1: 16.1e-6,
            gamma: 0.0,
            z0: -143e-6,
        };
        let grid = Grid1D::new(-60e-6, 60e-6, 1024).unwrap();
        let start = WaveField1D::gaussian(grid, 2e-6, 2.5e-6, 0.0).unwrap();
        let sp = spec(2e-6, 3e-3);

        let mut a = [start.clone()];
        let crossing = CrossingSpec {
            params,
            switch_off_vertical_at: None,
        };
        propagate_crossing_batch(&mut a, &crossing, &sp, |_, _, _| {}).unwrap();

        let v: Vec<f64> = (0..grid.n())
            .map(|i| params.guide_potential(grid.x(i), 0.0))
            .collect();
        let mut b = [start];
        propagate_static_batch(&mut b, &v, &sp, |_, _, _| {}).unwrap();

        let ov = a[0].overlap(&b[0]).unwrap();
        assert_abs(ov.norm(), 1.0, 1e-10);
    }

    #[test]
    fn switch_off_frees_the_packet() {
        let params = GuideParams {
            u0: 1.48e-29,
            w0: 10.7e-6,
            u1: 0.0,
            w1: 16.1e-6,
            gamma: 10f64.to_radians(),
            z0: -143e-6,
        };
        let grid = Grid1D::new(-60e-6, 60e-6, 1024).unwrap();
        let mut fields = [WaveField1D::gaussian(grid, 2e-6, 2.0e-6, 0.0).unwrap()];
        let crossing = CrossingSpec {
            params,
            switch_off_vertical_at: Some(1e-3),
        };
        let mut sp = spec(1e-6, 2e-3);
        sp.snapshot_every = Some(200);
        let mut pair = FftPair1D::new(grid.n());
        let mut kinetic_trace: Vec<(f64, f64)> = Vec::new();
        propagate_crossing_batch(&mut fields, &crossing, &sp, |_, t, fs| {
            kinetic_trace.push((t, kinetic_expectation_1d(&fs[0], MASS_RB87, &mut pair)));
        })
        .unwrap();
        // While trapped the kinetic energy oscillates; after switch-off
        // the evolution is free and <T> is constant.
        let after: Vec<f64> = kinetic_trace
            .iter()
            .filter(|(t, _)| *t > 1e-3 + 1e-9)
            .map(|(_, k)| *k)
            .collect();
        assert!(after.len() >= 4);
        for k in &after[1..] {
            assert_rel(*k, after[0], 1e-9);
        }
        let before: Vec<f64> = kinetic_trace
            .iter()
            .filter(|(t, _)| *t <= 1e-3)
            .map(|(_, k)| *k)
            .collect();
        let spread = before
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
                (lo.min(*k), hi.max(*k))
            });
        assert!(
            spread.1 > spread.0 * (1.0 + 1e-3),
            "trapped kinetic energy should oscillate"
        );
    }

    #[test]
    fn snapshot_cadence_hits_final_step() {
        let grid = Grid1D::new(-20e-6, 20e-6, 64).unwrap();
        let mut fields = [WaveField1D::gaussian(grid, 0.0, 2e-6, 0.0).unwrap()];
        let v = vec![0.0; grid.n()];
        let mut sp = spec(1e-6, 1e-4);
        sp.snapshot_every = Some(30);
        let mut seen = Vec::new();
        propagate_static_batch(&mut fields, &v, &sp, |s, _, _| seen.push(s)).unwrap();
        assert_eq!(seen, vec![30, 60, 90, 100]);
    }

    #[test]
    fn batch_members_evolve_identically_and_independently() {
        let grid = Grid1D::new(-30e-6, 30e-6, 256).unwrap();
        let v: Vec<f64> = (0..grid.n())
            .map(|i| {
                let x = grid.x(i);
                -1e-29 * (-2.0 * (x / 8e-6_f64).powi(2)).exp()
            })
            .collect();
        let f0 = WaveField1D::gaussian(grid, 1e-6, 2e-6, 0.0).unwrap();
        let mut batch = [f0.clone(), f0.clone(), f0.clone()];
        propagate_static_batch(&mut batch, &v, &spec(2e-6, 1e-3), |_, _, _| {}).unwrap();
        let mut single = [f0];
        propagate_static_batch(&mut single, &v, &spec(2e-6, 1e-3), |_, _, _| {}).unwrap();
        for f in &batch {
            assert_eq!(f.psi, single[0].psi, "batch result differs bitwise");
        }
    }

    #[test]
    fn nan_potential_is_rejected_up_front() {
        let grid = Grid1D::new(-20e-6, 20e-6, 64).unwrap();
        let mut fields = [WaveField1D::gaussian(grid, 0.0, 2e-6, 0.0).unwrap()];
        let v = vec![f64::NAN; grid.n()];
        let err = propagate_static_batch(&mut fields, &v, &spec(1e-6, 1e-4), |_, _, _| {});
        assert!(matches!(err, Err(CoreError::Contract(_))));
    }

    #[test]
    fn corrupted_field_raises_a_numeric_fault_at_the_scan() {
        let grid = Grid1D::new(-20e-6, 20e-6, 64).unwrap();
        let mut f = WaveField1D::gaussian(grid, 0.0, 2e-6, 0.0).unwrap();
        f.psi[10] = Complex64::new(f64::NAN, 0.0);
        let mut fields = [f];
        let v = vec![0.0; grid.n()];
        let mut sp = spec(1e-6, 1e-4);
        sp.norm_check_every = 25;
        let err = propagate_static_batch(&mut fields, &v, &sp, |_, _, _| {});
        match err {
            Err(CoreError::NumericFault { step, .. }) => assert_eq!(step, 25),
            other => panic!("expected a numeric fault, got {other:?}"),
        }
    }
}
