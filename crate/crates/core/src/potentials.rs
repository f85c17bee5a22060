//! Optical dipole potentials for a vertical guide crossed by an oblique
//! one, plus the free-fall kinematics that turn the 2D landscape into a
//! time-dependent 1D potential in the frame of a falling atom.

use crate::constants::{G_EARTH, HBAR};
use crate::error::{CoreError, Result};
use crate::grid::Grid1D;

/// Far-detuned dipole trap depth for a two-level atom:
/// `(hbar*linewidth/2) * (linewidth/(4*|detuning|)) * (intensity/i_sat)`.
/// All rates in rad/s, intensities in the same units as each other.
pub fn depth_from_intensity(linewidth: f64, detuning_abs: f64, i_sat: f64, intensity: f64) -> f64 {
    0.5 * HBAR * linewidth * (linewidth / (4.0 * detuning_abs)) * (intensity / i_sat)
}

/// Geometry and depths of the crossed-guide arrangement.
///
/// The vertical beam runs along z with waist `w0` and depth `u0`; the
/// oblique beam crosses it at height `z0 < 0`, tilted by `gamma` from
/// vertical, with waist `w1` and depth `u1`. Depths are magnitudes in
/// joules (the potential is attractive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuideParams {
    pub u0: f64,
    pub w0: f64,
    pub u1: f64,
    pub w1: f64,
    /// Tilt of the oblique beam from the vertical axis, radians.
    pub gamma: f64,
    /// Height of the beam crossing (z = 0 is the launch point).
    pub z0: f64,
}

impl GuideParams {
    pub fn validate(&self) -> Result<()> {
        let all_finite = self.u0.is_finite()
            && self.w0.is_finite()
            && self.u1.is_finite()
            && self.w1.is_finite()
            && self.gamma.is_finite()
            && self.z0.is_finite();
        if !all_finite {
            return Err(CoreError::contract("guide parameters must be finite"));
        }
        if self.u0 < 0.0 || self.u1 < 0.0 {
            return Err(CoreError::contract("guide depths are magnitudes, need >= 0"));
        }
        if self.w0 <= 0.0 || self.w1 <= 0.0 {
            return Err(CoreError::contract("guide waists must be > 0"));
        }
        if self.gamma.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(CoreError::contract(
                "oblique tilt must satisfy |gamma| < pi/2",
            ));
        }
        if self.z0 > 0.0 {
            return Err(CoreError::contract(
                "beam crossing must sit at or below the launch point (z0 <= 0)",
            ));
        }
        Ok(())
    }

    /// Contribution of the vertical beam at transverse position `x`.
    pub fn vertical_term(&self, x: f64) -> f64 {
        -self.u0 * (-2.0 * (x / self.w0).powi(2)).exp()
    }

    /// Contribution of the oblique beam at `(x, z)`. The beam axis is the
    /// line `x*cos(gamma) + (z - z0)*sin(gamma) = 0`.
    pub fn oblique_term(&self, x: f64, z: f64) -> f64 {
        let s = x * self.gamma.cos() + (z - self.z0) * self.gamma.sin();
        -self.u1 * (-2.0 * (s / self.w1).powi(2)).exp()
    }

    /// Full static 2D landscape (no gravity).
    pub fn guide_potential(&self, x: f64, z: f64) -> f64 {
        self.vertical_term(x) + self.oblique_term(x, z)
    }

    /// Transverse center of the oblique beam at height `z`.
    pub fn oblique_center_x(&self, z: f64) -> f64 {
        -(z - self.z0) * self.gamma.tan()
    }

    /// Unit vector along the oblique beam, pointing downhill.
    pub fn oblique_axis(&self) -> (f64, f64) {
        (self.gamma.sin(), -self.gamma.cos())
    }

    /// Time for a drop from rest at z = 0 to reach the crossing height.
    pub fn crossing_time(&self) -> f64 {
        crossing_time(self.z0)
    }

    /// Transverse center of the oblique beam in the falling frame,
    /// relative to the vertical beam axis.
    pub fn oblique_center_at_time(&self, t: f64) -> f64 {
        self.oblique_center_x(fall_height(t))
    }

    /// Time after release at which the oblique beam's transverse center
    /// sits a lateral distance `s > 0` from the vertical beam axis:
    /// `sqrt(t_c^2 + 2 s / (g |tan gamma|))`. Needs a nonzero tilt.
    pub fn separation_time(&self, s: f64) -> Result<f64> {
        self.validate()?;
        if !(s.is_finite() && s > 0.0) {
            return Err(CoreError::contract("separation must be positive"));
        }
        let slope = self.gamma.tan().abs();
        if slope == 0.0 {
            return Err(CoreError::Geometry(
                "beams are parallel: the guides never separate".into(),
            ));
        }
        let tc = self.crossing_time();
        Ok((tc * tc + 2.0 * s / (G_EARTH * slope)).sqrt())
    }

    /// Small-oscillation angular frequency at the bottom of the vertical
    /// beam's transverse well.
    pub fn vertical_trap_frequency(&self, mass: f64) -> f64 {
        gaussian_trap_frequency(self.u0, self.w0, mass)
    }

    /// Same for the oblique beam, transverse to its axis.
    pub fn oblique_trap_frequency(&self, mass: f64) -> f64 {
        gaussian_trap_frequency(self.u1, self.w1, mass)
    }
}

/// Height of an atom released from rest at z = 0, a time `t` later.
pub fn fall_height(t: f64) -> f64 {
    -0.5 * G_EARTH * t * t
}

/// Free-fall time from rest at z = 0 down to height `z <= 0`.
pub fn crossing_time(z: f64) -> f64 {
    (2.0 * z.abs() / G_EARTH).sqrt()
}

/// Small-oscillation angular frequency of a Gaussian well of depth `u`
/// (magnitude) and `1/e^2` waist `w`: `omega = (2/w) * sqrt(u/m)`.
pub fn gaussian_trap_frequency(u: f64, w: f64, mass: f64) -> f64 {
    2.0 / w * (u / mass).sqrt()
}

/// Harmonic approximation of a Gaussian well of depth `u` and waist `w`
/// at distance `r` from its axis: `-u + m omega^2 r^2 / 2` with the
/// small-oscillation frequency of [`gaussian_trap_frequency`].
pub fn harmonic_well(u: f64, w: f64, mass: f64, r: f64) -> f64 {
    let omega = gaussian_trap_frequency(u, w, mass);
    -u + 0.5 * mass * omega * omega * r * r
}

/// Semiclassical estimate of how many transverse bound levels the
/// vertical beam holds: `(w0/hbar) * sqrt(2*m*u0/pi)`.
pub fn semiclassical_level_count(u0: f64, w0: f64, mass: f64) -> f64 {
    w0 / HBAR * (2.0 * mass * u0 / std::f64::consts::PI).sqrt()
}

/// Isotropic radial Gaussian well `-(depth) * exp(-2 r^2 / waist^2)`.
pub fn radial_gaussian_well(depth: f64, waist: f64, x: f64, z: f64) -> f64 {
    -depth * (-2.0 * (x * x + z * z) / (waist * waist)).exp()
}

/// Absorbing-boundary strength profile: zero in the interior, rising as
/// `strength * cos^2(pi/2 * d/width)` within `width` of either grid edge
/// (`d` = distance to that edge). Returned values are magnitudes of a
/// negative imaginary potential.
pub fn absorber_profile(grid: &Grid1D, width: f64, strength: f64) -> Result<Vec<f64>> {
    if width <= 0.0 || strength < 0.0 || !width.is_finite() || !strength.is_finite() {
        return Err(CoreError::contract(
            "absorber needs width > 0 and strength >= 0",
        ));
    }
    if width >= grid.length() / 4.0 {
        return Err(CoreError::setup(format!(
            "absorber width {width} must stay below a quarter of the grid length {}",
            grid.length()
        )));
    }
    let lo = grid.x_min();
    let hi = grid.x_max();
    Ok((0..grid.n())
        .map(|i| {
            let x = grid.x(i);
            let d = (x - lo).min(hi - x);
            if d < width {
                let c = (std::f64::consts::FRAC_PI_2 * d / width).cos();
                strength * c * c
            } else {
                0.0
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MASS_RB87;
    use crate::check::{assert_abs, assert_rel};

    fn params() -> GuideParams {
        GuideParams {
            u0: 4.2e-28,
            w0: 300e-6,
            u1: 4.6e-28,
            w1: 450e-6,
            gamma: 15f64.to_radians(),
            z0: -4e-3,
        }
    }

    #[test]
    fn depths_add_at_the_crossing() {
        let p = params();
        let v = p.guide_potential(0.0, p.z0);
        assert_rel(v, -(p.u0 + p.u1), 1e-12);
    }

    #[test]
    fn oblique_term_peaks_on_its_axis() {
        let p = params();
        for z in [-6e-3, -4e-3, -1e-3] {
            let xc = p.oblique_center_x(z);
            assert_rel(p.oblique_term(xc, z), -p.u1, 1e-12);
            let off = p.oblique_term(xc + p.w1, z);
            assert!(off > -p.u1 && off < 0.0);
        }
    }

    #[test]
    fn oblique_axis_is_unit_and_tilted() {
        let p = params();
        let (ax, az) = p.oblique_axis();
        assert_rel(ax * ax + az * az, 1.0, 1e-15);
        // Moving along the axis from the crossing keeps the beam term maximal.
        let (x, z) = (ax * 1e-3, p.z0 + az * 1e-3);
        assert_rel(p.oblique_term(x, z), -p.u1, 1e-10);
    }

    #[test]
    fn mirror_symmetry_in_tilt() {
        let p = params();
        let m = GuideParams {
            gamma: -p.gamma,
            ..p
        };
        for (x, z) in [(1e-4, -2e-3), (-3e-4, -5e-3), (2.5e-4, 0.0)] {
            assert_rel(p.guide_potential(x, z),
                m.guide_potential(-x, z), 1e-12);
        }
    }

    #[test]
    fn fall_reaches_crossing_at_crossing_time() {
        let p = params();
        let t0 = p.crossing_time();
        assert_rel(fall_height(t0), p.z0, 1e-12);
        assert_abs(p.oblique_center_at_time(t0), 0.0, 1e-18);
    }

    #[test]
    fn separation_time_puts_the_oblique_center_at_the_requested_distance() {
        let p = params();
        let s = 1.8e-3;
        let t = p.separation_time(s).unwrap();
        assert!(t > p.crossing_time());
        assert_rel(p.oblique_center_at_time(t), s, 1e-12);
        // Mirror tilt separates to the other side in the same time.
        let m = GuideParams { gamma: -p.gamma, ..p };
        let tm = m.separation_time(s).unwrap();
        assert_rel(tm, t, 1e-15);
        assert_rel(m.oblique_center_at_time(tm), -s, 1e-12);
        assert!(p.separation_time(-1.0).is_err());
        assert!(GuideParams { gamma: 0.0, ..p }.separation_time(s).is_err());
    }

    #[test]
    fn trap_frequency_matches_quadratic_expansion() {
        let u = 4.142e-28;
        let w = 300e-6;
        let omega = gaussian_trap_frequency(u, w, MASS_RB87);
        // Curvature of -u*exp(-2x^2/w^2) at x=0 is 4u/w^2 = m*omega^2.
        assert_rel(MASS_RB87 * omega * omega, 4.0 * u / (w * w), 1e-12);
    }

    #[test]
    fn harmonic_form_osculates_the_gaussian_well() {
        let u = 1.38e-28;
        let w = 30e-6;
        assert_rel(harmonic_well(u, w, MASS_RB87, 0.0), -u, 1e-15);
        // Quartic defect at small radius: harm - gauss = 2u(r/w)^4 + O(r^6).
        let r = 0.05 * w;
        let gauss = radial_gaussian_well(u, w, r, 0.0);
        let harm = harmonic_well(u, w, MASS_RB87, r);
        let quartic = 2.0 * u * (r / w).powi(4);
        assert_abs(harm - gauss, quartic, 1e-2 * quartic);
    }

    #[test]
    fn validation_catches_bad_geometry() {
        let p = params();
        assert!(p.validate().is_ok());
        assert!(GuideParams { w0: 0.0, ..p }.validate().is_err());
        assert!(GuideParams { u1: -1e-30, ..p }.validate().is_err());
        assert!(GuideParams { gamma: 1.6, ..p }.validate().is_err());
        assert!(GuideParams { z0: 1e-3, ..p }.validate().is_err());
    }

    #[test]
    fn absorber_covers_only_the_edges() {
        let g = Grid1D::new(-10.0, 10.0, 256).unwrap();
        let w = absorber_profile(&g, 2.0, 1.0).unwrap();
        assert_rel(w[0], 1.0, 1e-12);
        assert_eq!(w[128], 0.0);
        assert!(w[10] > 0.0 && w[10] < 1.0);
        let tail = *w.last().unwrap();
        assert!(tail > 0.0);
        assert!(absorber_profile(&g, 6.0, 1.0).is_err());
    }
}
