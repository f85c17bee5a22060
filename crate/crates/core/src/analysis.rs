//! Guide assignment and splitting/deflection efficiency extraction.
//!
//! After a crossing run the density is divided between the two guides
//! by a watershed at the potential barrier separating their wells, and
//! everything outside both capture windows (or absorbed at the edges)
//! counts as lost.

use crate::eigen::{boltzmann_weights, ThermalEnsemble};
use crate::error::{CoreError, Result};
use crate::fft::refine_double;
use crate::field::WaveField1D;
use crate::grid::Grid1D;
use crate::potentials::{fall_height, GuideParams};
use crate::propagate::{
    ensure_resolution, propagate_crossing_batch, CrossingSpec, Run1DSpec,
};

/// Watershed split of the axis between the two guides at measurement
/// time, with the capture window of each guide.
#[derive(Debug, Clone, Copy)]
pub struct GuideAssignment {
    pub vertical_center: f64,
    pub oblique_center: f64,
    /// Potential maximum between the wells; densities on either side
    /// belong to the respective guide.
    pub barrier_x: f64,
    pub vertical_window: (f64, f64),
    pub oblique_window: (f64, f64),
}

/// Dense scan plus one parabolic refinement; deterministic.
fn refine_extremum(f: impl Fn(f64) -> f64, a: f64, b: f64, maximize: bool) -> f64 {
    const SAMPLES: usize = 4096;
    let dx = (b - a) / SAMPLES as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    let sign = if maximize { 1.0 } else { -1.0 };
    for i in 0..=SAMPLES {
        let v = sign * f(a + i as f64 * dx);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    if best_i == 0 || best_i == SAMPLES {
        return a + best_i as f64 * dx;
    }
    let x0 = a + best_i as f64 * dx;
    let fm = sign * f(x0 - dx);
    let fp = sign * f(x0 + dx);
    let denom = fm - 2.0 * best_v + fp;
    if denom.abs() < f64::MIN_POSITIVE * 1e10 {
        return x0;
    }
    let shift = 0.5 * (fm - fp) / denom;
    x0 + shift.clamp(-1.0, 1.0) * dx
}

/// Build the assignment from the configured two-beam geometry at the
/// fall height reached at `t_final`. The watershed always uses both
/// beams as configured — a later switch-off changes the dynamics, not
/// which region counts as which guide.
pub fn assign_guides(params: &GuideParams, t_final: f64) -> Result<GuideAssignment> {
    params.validate()?;
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(CoreError::contract("measurement time must be positive"));
    }
    if params.u0 == 0.0 && params.u1 == 0.0 {
        return Err(CoreError::Geometry("no guide has a nonzero depth".into()));
    }
    let z = fall_height(t_final);
    let vertical_center = 0.0;
    let oblique_center = params.oblique_center_x(z);
    let pot = |x: f64| params.guide_potential(x, z);

    let barrier_x = if params.u1 == 0.0 {
        // Only the vertical well exists; divide at the would-be center
        // of the missing guide.
        oblique_center
    } else if params.u0 == 0.0 {
        vertical_center
    } else {
        let w1x = params.w1 / params.gamma.cos();
        let min_v = refine_extremum(pot, -params.w0, params.w0, false);
        let min_o = refine_extremum(pot, oblique_center - w1x, oblique_center + w1x, false);
        let (lo, hi) = if min_v <= min_o {
            (min_v, min_o)
        } else {
            (min_o, min_v)
        };
        if hi - lo < 1e-3 * (params.w0 + params.w1) {
            return Err(CoreError::Geometry(format!(
                "guide wells are not separated at t = {t_final:.6e} s \
                 (minima at {lo:.3e} and {hi:.3e} m)"
            )));
        }
        let b = refine_extremum(pot, lo, hi, true);
        if pot(b) <= pot(min_v).max(pot(min_o)) {
            return Err(CoreError::Geometry(format!(
                "no barrier between the guide wells at t = {t_final:.6e} s"
            )));
        }
        b
    };

    let w = 4.0 * params.w0.max(params.w1);
    let clip_left = |center: f64| (center - w, (center + w).min(barrier_x));
    let clip_right = |center: f64| ((center - w).max(barrier_x), center + w);
    // Which side each guide owns follows from the center order, so a
    // degenerate barrier (a missing guide puts it exactly on a center)
    // still leaves the windows disjoint.
    let (vertical_window, oblique_window) = if vertical_center <= oblique_center {
        (clip_left(vertical_center), clip_right(oblique_center))
    } else {
        (clip_right(vertical_center), clip_left(oblique_center))
    };
    Ok(GuideAssignment {
        vertical_center,
        oblique_center,
        barrier_x,
        vertical_window,
        oblique_window,
    })
}

/// One ensemble member's capture probabilities.
#[derive(Debug, Clone, Copy)]
pub struct LevelSplit {
    pub energy: f64,
    pub weight: f64,
    pub p_vertical: f64,
    pub p_oblique: f64,
}

/// Thermally averaged capture probabilities. `p_lost` is the remainder:
/// absorbed flux plus density outside both windows.
#[derive(Debug, Clone)]
pub struct SplitReport {
    pub p_vertical: f64,
    pub p_oblique: f64,
    pub p_lost: f64,
    pub per_level: Vec<LevelSplit>,
}

/// Measure the propagated batch against an assignment. Field order must
/// match the ensemble's level order, and each field must have started
/// with unit norm.
pub fn measure_split(
    fields: &[WaveField1D],
    ensemble: &ThermalEnsemble,
    assignment: &GuideAssignment,
) -> Result<SplitReport> {
    if fields.len() != ensemble.len() {
        return Err(CoreError::contract(format!(
            "{} fields for {} ensemble levels",
            fields.len(),
            ensemble.len()
        )));
    }
    let (va, vb) = assignment.vertical_window;
    let (oa, ob) = assignment.oblique_window;
    let mut per_level = Vec::with_capacity(fields.len());
    let mut p_vertical = 0.0;
    let mut p_oblique = 0.0;
    for (i, f) in fields.iter().enumerate() {
        let pv = f.probability_in(va, vb);
        let po = f.probability_in(oa, ob);
        let w = ensemble.weights[i];
        p_vertical += w * pv;
        p_oblique += w * po;
        per_level.push(LevelSplit {
            energy: ensemble.set.energies[i],
            weight: w,
            p_vertical: pv,
            p_oblique: po,
        });
    }
    Ok(SplitReport {
        p_vertical,
        p_oblique,
        p_lost: 1.0 - p_vertical - p_oblique,
        per_level,
    })
}

/// Re-average recorded per-level probabilities at a different
/// temperature. One propagation therefore serves a whole temperature
/// scan: only the weights change.
pub fn reweight_split(per_level: &[LevelSplit], temperature: f64) -> Result<(f64, f64, f64)> {
    let energies: Vec<f64> = per_level.iter().map(|l| l.energy).collect();
    let weights = boltzmann_weights(&energies, temperature)?;
    let mut pv = 0.0;
    let mut po = 0.0;
    for (l, w) in per_level.iter().zip(&weights) {
        pv += w * l.p_vertical;
        po += w * l.p_oblique;
    }
    Ok((pv, po, 1.0 - pv - po))
}

/// Lift the ensemble's states onto the propagation grid: directly when
/// the spacings match, via band-limited doubling when the propagation
/// grid is twice as fine.
pub fn prepare_thermal_fields(
    ensemble: &ThermalEnsemble,
    prop_grid: Grid1D,
) -> Result<Vec<WaveField1D>> {
    let eigen_dx = ensemble.set.grid().dx();
    let ratio = eigen_dx / prop_grid.dx();
    let mut fields = Vec::with_capacity(ensemble.len());
    for state in &ensemble.set.states {
        let lifted = if (ratio - 1.0).abs() < 1e-9 {
            state.embed_into(prop_grid)?
        } else if (ratio - 2.0).abs() < 1e-9 {
            refine_double(state)?.embed_into(prop_grid)?
        } else {
            return Err(CoreError::GridMismatch(format!(
                "eigenstate spacing {eigen_dx:.6e} is neither equal to nor twice \
                 the propagation spacing {:.6e}",
                prop_grid.dx()
            )));
        };
        fields.push(lifted);
    }
    Ok(fields)
}

/// A complete crossing measurement.
#[derive(Debug, Clone)]
pub struct CrossingRun {
    pub assignment: GuideAssignment,
    pub report: SplitReport,
}

/// Propagate the thermal ensemble through the crossing and measure the
/// split. The snapshot callback sees the batch in ensemble level order.
pub fn run_thermal_crossing(
    ensemble: &ThermalEnsemble,
    prop_grid: Grid1D,
    crossing: &CrossingSpec,
    run: &Run1DSpec,
    on_snapshot: impl FnMut(usize, f64, &[WaveField1D]),
) -> Result<CrossingRun> {
    let p = &crossing.params;
    ensure_resolution(&prop_grid, run.mass, p.u0 + p.u1, "crossing run")?;
    let mut fields = prepare_thermal_fields(ensemble, prop_grid)?;
    propagate_crossing_batch(&mut fields, crossing, run, on_snapshot)?;
    let assignment = assign_guides(p, run.t_final)?;
    let report = measure_split(&fields, ensemble, &assignment)?;
    Ok(CrossingRun { assignment, report })
}
