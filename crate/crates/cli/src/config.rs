//! Run configuration: TOML with the experiment's natural units at the
//! boundary (uK, mm/um, ms/us, degrees), converted to SI once at
//! ingestion and fully validated before any compute or file output.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use beamsplit_core::constants::{HBAR, KB, MASS_RB87, SCATTER_A0};
use beamsplit_core::gpe::g2d_coupling;
use beamsplit_core::grid::{Grid1D, Grid2D};
use beamsplit_core::potentials::{gaussian_trap_frequency, GuideParams};
use beamsplit_core::propagate::AbsorberSpec;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Eigen,
    SplitRun,
    SplitSweep,
    DeflectSweep,
    GpeMuCurve,
    GpeFall,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Eigen => "eigen",
            Scenario::SplitRun => "split-run",
            Scenario::SplitSweep => "split-sweep",
            Scenario::DeflectSweep => "deflect-sweep",
            Scenario::GpeMuCurve => "gpe-mu-curve",
            Scenario::GpeFall => "gpe-fall",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "eigen" => Scenario::Eigen,
            "split-run" => Scenario::SplitRun,
            "split-sweep" => Scenario::SplitSweep,
            "deflect-sweep" => Scenario::DeflectSweep,
            "gpe-mu-curve" => Scenario::GpeMuCurve,
            "gpe-fall" => Scenario::GpeFall,
            _ => return None,
        })
    }
}

// ---------------------------------------------------------------- file form

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    scenario: String,
    out_dir: Option<String>,
    #[serde(default)]
    constants: ConstantsSec,
    #[serde(default)]
    guide: GuideSec,
    grid: Option<GridSec>,
    eigen: Option<EigenSec>,
    propagation: Option<PropSec>,
    absorber: Option<AbsorberSec>,
    sweep: Option<SweepSec>,
    gpe: Option<GpeSec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsSec {
    mass_kg: Option<f64>,
    scattering_length_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GuideSec {
    u0_uK: Option<f64>,
    u1_uK: Option<f64>,
    w0_mm: Option<f64>,
    w0_um: Option<f64>,
    w1_mm: Option<f64>,
    w1_um: Option<f64>,
    z0_mm: Option<f64>,
    z0_um: Option<f64>,
    gamma_deg: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSec {
    x_min_um: f64,
    x_max_um: f64,
    n_points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EigenSec {
    x_min_um: f64,
    x_max_um: f64,
    n_points: usize,
    temperature_uK: Option<f64>,
    max_states: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropSec {
    dt_us: Option<f64>,
    t_final_ms: Option<f64>,
    t_final_us: Option<f64>,
    switch_off_vertical_at_crossing: Option<bool>,
    snapshot_every: Option<usize>,
    norm_check_every: Option<usize>,
    min_separation_um: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AbsorberSec {
    width_um: f64,
    strength_uK: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSec {
    ratios: Option<Vec<f64>>,
    gammas_deg: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GpeSec {
    atom_number: Option<f64>,
    omega_y_over_omega: Option<f64>,
    omega_y_rad_s: Option<f64>,
    curve_points: Option<usize>,
    dt_us: Option<f64>,
    t_final_us: Option<f64>,
    snapshot_every: Option<usize>,
    diag_every: Option<usize>,
    zero_coupling: Option<bool>,
    grid: Option<Grid2DSec>,
    relax: Option<RelaxSec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Grid2DSec {
    x_min_um: f64,
    x_max_um: f64,
    nx: usize,
    z_min_um: f64,
    z_max_um: f64,
    nz: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelaxSec {
    tol: Option<f64>,
    /// `[[dtau_us, steps], ...]`, coarse to fine.
    stages: Option<Vec<(f64, usize)>>,
}

// ------------------------------------------------------------ resolved form

/// Everything a run needs, in SI, validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub mass: f64,
    pub scattering_length: f64,
    pub guide: GuideParams,
    pub prop_grid: Option<Grid1D>,
    pub eigen: Option<EigenSettings>,
    pub run1d: Option<Run1DSettings>,
    pub absorber: Option<AbsorberSpec>,
    /// Oblique/vertical depth ratios for `split-sweep`.
    pub ratios: Option<Vec<f64>>,
    /// Tilt angles for `deflect-sweep`, in degrees (output unit).
    pub gammas_deg: Option<Vec<f64>>,
    pub gpe: Option<GpeSettings>,
}

#[derive(Debug, Clone)]
pub struct EigenSettings {
    pub grid: Grid1D,
    pub temperature: Option<f64>,
    pub max_states: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Run1DSettings {
    pub dt: f64,
    /// Fixed measurement time; `None` means per-tilt separation timing.
    pub t_final: Option<f64>,
    pub switch_off_at_crossing: bool,
    /// Snapshot file cadence in steps; 0 disables.
    pub snapshot_every: usize,
    pub norm_check_every: usize,
    /// Guide-center separation that defines derived measurement times.
    pub min_separation: f64,
}

#[derive(Debug, Clone)]
pub struct GpeSettings {
    pub atom_number: Option<f64>,
    pub omega_y: f64,
    /// Per-atom planar coupling [J m^2].
    pub g2d: f64,
    pub curve_points: usize,
    pub grid: Grid2D,
    pub stages: Vec<(f64, usize)>,
    pub tol: f64,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    /// Snapshot file cadence in steps; 0 disables.
    pub snapshot_every: usize,
    /// Diagnostics-row cadence in steps.
    pub diag_every: usize,
    pub zero_coupling: bool,
}

const UK: f64 = 1e-6 * KB; // 1 microkelvin in joules

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::config(msg)
}

/// Exactly one of two alternative unit keys, or a default.
fn pick_length(
    key_mm: &str,
    mm: Option<f64>,
    key_um: &str,
    um: Option<f64>,
    default_m: Option<f64>,
) -> Result<f64> {
    match (mm, um) {
        (Some(_), Some(_)) => Err(config_err(format!(
            "{key_mm} and {key_um} are mutually exclusive; set exactly one"
        ))),
        (Some(v), None) => Ok(v * 1e-3),
        (None, Some(v)) => Ok(v * 1e-6),
        (None, None) => default_m.ok_or_else(|| {
            config_err(format!("missing length: set {key_mm} or {key_um}"))
        }),
    }
}

fn require_finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("{key}: value must be finite, got {v}")))
    }
}

fn require_positive(key: &str, v: f64) -> Result<f64> {
    require_finite(key, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(config_err(format!("{key}: expected a value > 0, got {v}")))
    }
}

fn grid_1d(section: &str, x_min_um: f64, x_max_um: f64, n: usize) -> Result<Grid1D> {
    require_finite(&format!("{section}.x_min_um"), x_min_um)?;
    require_finite(&format!("{section}.x_max_um"), x_max_um)?;
    Grid1D::new(x_min_um * 1e-6, x_max_um * 1e-6, n)
        .map_err(|e| config_err(format!("{section}: {e}")))
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(&format!("reading config {}", path.display()), e))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(format!("config parse: {e}")))
    }

    /// Convert to SI and validate every setting the scenario will touch.
    pub fn resolve(self, subcommand: Scenario, out_flag: Option<PathBuf>) -> Result<Resolved> {
        let scenario = Scenario::parse(&self.scenario).ok_or_else(|| {
            config_err(format!(
                "scenario: unknown value {:?} (expected one of eigen, split-run, \
                 split-sweep, deflect-sweep, gpe-mu-curve, gpe-fall)",
                self.scenario
            ))
        })?;
        if scenario != subcommand {
            return Err(config_err(format!(
                "scenario: config says {:?} but the {} subcommand was invoked",
                self.scenario,
                subcommand.as_str()
            )));
        }

        let out_dir = match out_flag {
            Some(p) => p,
            None => PathBuf::from(self.out_dir.ok_or_else(|| {
                config_err("out_dir: missing (set out_dir in the config or pass --out)")
            })?),
        };

        let mass = match self.constants.mass_kg {
            Some(m) => require_positive("constants.mass_kg", m)?,
            None => MASS_RB87,
        };
        let scattering_length = match self.constants.scattering_length_m {
            Some(a) => require_positive("constants.scattering_length_m", a)?,
            None => SCATTER_A0,
        };

        let guide = self.resolve_guide(scenario)?;
        let needs_1d = matches!(
            scenario,
            Scenario::SplitRun | Scenario::SplitSweep | Scenario::DeflectSweep
        );

        let eigen = match (&self.eigen, needs_1d || scenario == Scenario::Eigen) {
            (Some(sec), _) => Some(self.resolve_eigen(sec, scenario)?),
            (None, true) => {
                return Err(config_err(format!(
                    "eigen: section required for the {} scenario",
                    scenario.as_str()
                )))
            }
            (None, false) => None,
        };

        let prop_grid = match (&self.grid, needs_1d) {
            (Some(sec), _) => Some(grid_1d("grid", sec.x_min_um, sec.x_max_um, sec.n_points)?),
            (None, true) => {
                return Err(config_err(format!(
                    "grid: section required for the {} scenario",
                    scenario.as_str()
                )))
            }
            (None, false) => None,
        };

        let (ratios, gammas_deg) = self.resolve_sweep(scenario)?;
        let absorber = self.resolve_absorber(prop_grid.as_ref())?;
        let run1d = if needs_1d {
            Some(self.resolve_run1d(scenario, &guide, ratios.as_deref())?)
        } else {
            None
        };
        let gpe = self.resolve_gpe(scenario, &guide, mass, scattering_length)?;

        Ok(Resolved {
            scenario,
            out_dir,
            mass,
            scattering_length,
            guide,
            prop_grid,
            eigen,
            run1d,
            absorber,
            ratios,
            gammas_deg,
            gpe,
        })
    }

    fn resolve_guide(&self, scenario: Scenario) -> Result<GuideParams> {
        let g = &self.guide;
        // Defaults: the full-scale splitter geometry.
        let u0_uk = g.u0_uK.unwrap_or(30.0);
        let u1_uk = g.u1_uK.unwrap_or(10.0);
        require_finite("guide.u0_uK", u0_uk)?;
        require_finite("guide.u1_uK", u1_uk)?;
        if u0_uk < 0.0 {
            return Err(config_err(format!(
                "guide.u0_uK: depth is a magnitude, expected >= 0, got {u0_uk}"
            )));
        }
        if u1_uk < 0.0 {
            return Err(config_err(format!(
                "guide.u1_uK: depth is a magnitude, expected >= 0, got {u1_uk}"
            )));
        }
        if u0_uk == 0.0 && scenario != Scenario::GpeFall {
            return Err(config_err(format!(
                "guide.u0_uK: the {} scenario needs a vertical guide, expected > 0",
                scenario.as_str()
            )));
        }
        let w0 = pick_length("guide.w0_mm", g.w0_mm, "guide.w0_um", g.w0_um, Some(0.3e-3))?;
        let w1 = pick_length("guide.w1_mm", g.w1_mm, "guide.w1_um", g.w1_um, Some(0.45e-3))?;
        if w0 <= 0.0 || !w0.is_finite() {
            return Err(config_err(format!(
                "guide.w0_mm/w0_um: waist must be > 0, got {w0} m"
            )));
        }
        if w1 <= 0.0 || !w1.is_finite() {
            return Err(config_err(format!(
                "guide.w1_mm/w1_um: waist must be > 0, got {w1} m"
            )));
        }
        let z0 = pick_length("guide.z0_mm", g.z0_mm, "guide.z0_um", g.z0_um, Some(-4.0e-3))?;
        if z0 > 0.0 || !z0.is_finite() {
            return Err(config_err(format!(
                "guide.z0_mm/z0_um: crossing must sit at or below release, \
                 expected <= 0, got {z0} m"
            )));
        }
        let gamma_deg = g.gamma_deg.unwrap_or(10.0);
        require_finite("guide.gamma_deg", gamma_deg)?;
        if gamma_deg.abs() >= 90.0 {
            return Err(config_err(format!(
                "guide.gamma_deg: expected |gamma| < 90 degrees, got {gamma_deg}"
            )));
        }
        Ok(GuideParams {
            u0: u0_uk * UK,
            u1: u1_uk * UK,
            w0,
            w1,
            gamma: gamma_deg.to_radians(),
            z0,
        })
    }

    fn resolve_eigen(&self, sec: &EigenSec, scenario: Scenario) -> Result<EigenSettings> {
        let grid = grid_1d("eigen", sec.x_min_um, sec.x_max_um, sec.n_points)?;
        let temperature = match sec.temperature_uK {
            Some(t) => Some(require_positive("eigen.temperature_uK", t)? * 1e-6),
            None => None,
        };
        let needs_temperature = matches!(
            scenario,
            Scenario::SplitRun | Scenario::SplitSweep | Scenario::DeflectSweep
        );
        if needs_temperature && temperature.is_none() {
            return Err(config_err(format!(
                "eigen.temperature_uK: required for the {} scenario",
                scenario.as_str()
            )));
        }
        if let Some(m) = sec.max_states {
            if m == 0 {
                return Err(config_err("eigen.max_states: expected >= 1, got 0"));
            }
        }
        Ok(EigenSettings {
            grid,
            temperature,
            max_states: sec.max_states,
        })
    }

    fn resolve_sweep(&self, scenario: Scenario) -> Result<(Option<Vec<f64>>, Option<Vec<f64>>)> {
        let sec = self.sweep.as_ref();
        let ratios = match scenario {
            Scenario::SplitSweep => {
                let r = sec
                    .and_then(|s| s.ratios.clone())
                    .ok_or_else(|| config_err("sweep.ratios: required for split-sweep"))?;
                if r.is_empty() {
                    return Err(config_err("sweep.ratios: expected at least one ratio"));
                }
                for (i, v) in r.iter().enumerate() {
                    if !v.is_finite() || *v < 0.0 {
                        return Err(config_err(format!(
                            "sweep.ratios[{i}]: expected a finite value >= 0, got {v}"
                        )));
                    }
                }
                Some(r)
            }
            _ => None,
        };
        let gammas = match scenario {
            Scenario::DeflectSweep => {
                let g = sec
                    .and_then(|s| s.gammas_deg.clone())
                    .ok_or_else(|| config_err("sweep.gammas_deg: required for deflect-sweep"))?;
                if g.is_empty() {
                    return Err(config_err("sweep.gammas_deg: expected at least one angle"));
                }
                for (i, v) in g.iter().enumerate() {
                    if !v.is_finite() || v.abs() >= 90.0 || *v == 0.0 {
                        return Err(config_err(format!(
                            "sweep.gammas_deg[{i}]: expected 0 < |gamma| < 90 degrees, got {v}"
                        )));
                    }
                }
                Some(g)
            }
            _ => None,
        };
        Ok((ratios, gammas))
    }

    fn resolve_absorber(&self, grid: Option<&Grid1D>) -> Result<Option<AbsorberSpec>> {
        let Some(sec) = &self.absorber else {
            return Ok(None);
        };
        let width = require_positive("absorber.width_um", sec.width_um)? * 1e-6;
        require_finite("absorber.strength_uK", sec.strength_uK)?;
        if sec.strength_uK < 0.0 {
            return Err(config_err(format!(
                "absorber.strength_uK: expected >= 0, got {}",
                sec.strength_uK
            )));
        }
        if let Some(g) = grid {
            if width >= g.length() / 4.0 {
                return Err(config_err(format!(
                    "absorber.width_um: {} um is not below a quarter of the grid \
                     length ({} um)",
                    sec.width_um,
                    g.length() * 1e6 / 4.0
                )));
            }
        }
        Ok(Some(AbsorberSpec {
            width,
            strength: sec.strength_uK * UK,
        }))
    }

    fn resolve_run1d(
        &self,
        scenario: Scenario,
        guide: &GuideParams,
        ratios: Option<&[f64]>,
    ) -> Result<Run1DSettings> {
        let sec = self.propagation.as_ref().ok_or_else(|| {
            config_err(format!(
                "propagation: section required for the {} scenario",
                scenario.as_str()
            ))
        })?;

        let t_final_explicit = match (sec.t_final_ms, sec.t_final_us) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "propagation.t_final_ms and propagation.t_final_us are mutually \
                     exclusive; set exactly one",
                ))
            }
            (Some(ms), None) => Some(require_positive("propagation.t_final_ms", ms)? * 1e-3),
            (None, Some(us)) => Some(require_positive("propagation.t_final_us", us)? * 1e-6),
            (None, None) => None,
        };

        let min_separation = match sec.min_separation_um {
            Some(um) => require_positive("propagation.min_separation_um", um)? * 1e-6,
            None => 1.5 * (guide.w0 + guide.w1),
        };

        // Largest oblique depth this run will see, for the step-size rule.
        let u1_max = match (scenario, ratios) {
            (Scenario::SplitSweep, Some(rs)) => {
                rs.iter().cloned().fold(0.0, f64::max) * guide.u0
            }
            _ => guide.u1,
        };

        let dt = match sec.dt_us {
            Some(us) => require_positive("propagation.dt_us", us)? * 1e-6,
            None => {
                // dt <= 0.1 hbar / max|V|, snapped to divide an explicit
                // t_final exactly.
                let raw = 0.1 * HBAR / (guide.u0 + u1_max);
                match t_final_explicit {
                    Some(tf) => tf / (tf / raw).ceil(),
                    None => raw,
                }
            }
        };
        if let (Some(tf), Some(_)) = (t_final_explicit, sec.dt_us) {
            let steps = tf / dt;
            if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
                return Err(config_err(format!(
                    "propagation.t_final and propagation.dt_us must be commensurate: \
                     {tf} s / {dt} s = {steps} is not a whole number of steps"
                )));
            }
        }

        // Derived measurement time for the split scenarios; the deflect
        // sweep times each tilt separately.
        let t_final = match (t_final_explicit, scenario) {
            (Some(tf), _) => Some(tf),
            (None, Scenario::DeflectSweep) => None,
            (None, _) => {
                let t_raw = guide
                    .separation_time(min_separation)
                    .map_err(|e| config_err(format!("propagation: {e}")))?;
                Some((t_raw / dt).ceil() * dt)
            }
        };

        let switch_off_default = scenario == Scenario::DeflectSweep;
        Ok(Run1DSettings {
            dt,
            t_final,
            switch_off_at_crossing: sec
                .switch_off_vertical_at_crossing
                .unwrap_or(switch_off_default),
            snapshot_every: sec.snapshot_every.unwrap_or(0),
            norm_check_every: match sec.norm_check_every {
                Some(0) => {
                    return Err(config_err(
                        "propagation.norm_check_every: expected >= 1, got 0",
                    ))
                }
                Some(k) => k,
                None => 100,
            },
            min_separation,
        })
    }

    fn resolve_gpe(
        &self,
        scenario: Scenario,
        guide: &GuideParams,
        mass: f64,
        scattering_length: f64,
    ) -> Result<Option<GpeSettings>> {
        let needs_gpe = matches!(scenario, Scenario::GpeMuCurve | Scenario::GpeFall);
        let Some(sec) = &self.gpe else {
            if needs_gpe {
                return Err(config_err(format!(
                    "gpe: section required for the {} scenario",
                    scenario.as_str()
                )));
            }
            return Ok(None);
        };
        if !needs_gpe {
            return Ok(None);
        }

        let gsec = sec.grid.as_ref().ok_or_else(|| {
            config_err(format!(
                "gpe.grid: section required for the {} scenario",
                scenario.as_str()
            ))
        })?;
        let gx = grid_1d("gpe.grid(x)", gsec.x_min_um, gsec.x_max_um, gsec.nx)?;
        let gz = grid_1d("gpe.grid(z)", gsec.z_min_um, gsec.z_max_um, gsec.nz)?;
        let grid = Grid2D::new(gx, gz);

        let omega_ref = gaussian_trap_frequency(guide.u0, guide.w0, mass);
        let omega_y = match (sec.omega_y_rad_s, sec.omega_y_over_omega) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "gpe.omega_y_rad_s and gpe.omega_y_over_omega are mutually \
                     exclusive; set exactly one",
                ))
            }
            (Some(w), None) => require_positive("gpe.omega_y_rad_s", w)?,
            (None, Some(r)) => require_positive("gpe.omega_y_over_omega", r)? * omega_ref,
            (None, None) => 10.0 * omega_ref,
        };
        let g2d = g2d_coupling(mass, scattering_length, omega_y)?;

        let atom_number = match sec.atom_number {
            Some(n) => {
                require_finite("gpe.atom_number", n)?;
                if n < 1.0 {
                    return Err(config_err(format!(
                        "gpe.atom_number: expected >= 1, got {n}"
                    )));
                }
                Some(n)
            }
            None => None,
        };
        if scenario == Scenario::GpeFall && atom_number.is_none() {
            return Err(config_err(
                "gpe.atom_number: required for gpe-fall (use zero_coupling = true \
                 for the interaction-free comparison mode)",
            ));
        }

        let curve_points = sec.curve_points.unwrap_or(16);
        if scenario == Scenario::GpeMuCurve && curve_points < 2 {
            return Err(config_err(format!(
                "gpe.curve_points: expected >= 2, got {curve_points}"
            )));
        }

        let (stages, tol) = match &sec.relax {
            Some(r) => {
                let stages = match &r.stages {
                    Some(s) => {
                        if s.is_empty() {
                            return Err(config_err(
                                "gpe.relax.stages: expected at least one [dtau_us, steps] pair",
                            ));
                        }
                        let mut out = Vec::with_capacity(s.len());
                        for (i, (dtau_us, steps)) in s.iter().enumerate() {
                            require_positive(&format!("gpe.relax.stages[{i}]"), *dtau_us)?;
                            if *steps == 0 {
                                return Err(config_err(format!(
                                    "gpe.relax.stages[{i}]: step budget must be >= 1"
                                )));
                            }
                            out.push((dtau_us * 1e-6, *steps));
                        }
                        out
                    }
                    None => default_stages(),
                };
                let tol = match r.tol {
                    Some(t) => require_positive("gpe.relax.tol", t)?,
                    None => 1e-9,
                };
                (stages, tol)
            }
            None => (default_stages(), 1e-9),
        };

        let (dt, t_final) = if scenario == Scenario::GpeFall {
            let dt = require_positive(
                "gpe.dt_us",
                sec.dt_us
                    .ok_or_else(|| config_err("gpe.dt_us: required for gpe-fall"))?,
            )? * 1e-6;
            let tf = require_positive(
                "gpe.t_final_us",
                sec.t_final_us
                    .ok_or_else(|| config_err("gpe.t_final_us: required for gpe-fall"))?,
            )? * 1e-6;
            let steps = tf / dt;
            if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
                return Err(config_err(format!(
                    "gpe.t_final_us and gpe.dt_us must be commensurate: \
                     {steps} is not a whole number of steps"
                )));
            }
            (Some(dt), Some(tf))
        } else {
            (None, None)
        };

        let diag_every = match sec.diag_every {
            Some(0) => return Err(config_err("gpe.diag_every: expected >= 1, got 0")),
            Some(k) => k,
            None => 1,
        };
        let snapshot_every = sec.snapshot_every.unwrap_or(50);
        if snapshot_every > 0 && snapshot_every % diag_every != 0 {
            return Err(config_err(format!(
                "gpe.snapshot_every ({snapshot_every}) must be a multiple of \
                 gpe.diag_every ({diag_every})"
            )));
        }

        Ok(Some(GpeSettings {
            atom_number,
            omega_y,
            g2d,
            curve_points,
            grid,
            stages,
            tol,
            dt,
            t_final,
            snapshot_every,
            diag_every,
            zero_coupling: sec.zero_coupling.unwrap_or(false),
        }))
    }
}

fn default_stages() -> Vec<(f64, usize)> {
    vec![(1e-5, 4000), (1e-6, 8000), (2e-7, 12000)]
}

impl Resolved {
    /// Full SI echo for the manifest and for auditing.
    pub fn resolved_si_json(&self) -> serde_json::Value {
        let mut root = serde_json::Map::new();
        root.insert("scenario".into(), self.scenario.as_str().into());
        root.insert("mass_kg".into(), self.mass.into());
        root.insert("scattering_length_m".into(), self.scattering_length.into());
        root.insert(
            "guide".into(),
            serde_json::json!({
                "u0_J": self.guide.u0,
                "u1_J": self.guide.u1,
                "w0_m": self.guide.w0,
                "w1_m": self.guide.w1,
                "gamma_rad": self.guide.gamma,
                "z0_m": self.guide.z0,
            }),
        );
        if let Some(g) = &self.prop_grid {
            root.insert("grid".into(), grid_json(g));
        }
        if let Some(e) = &self.eigen {
            root.insert(
                "eigen".into(),
                serde_json::json!({
                    "grid": grid_json(&e.grid),
                    "temperature_K": e.temperature,
                    "max_states": e.max_states,
                }),
            );
        }
        if let Some(r) = &self.run1d {
            root.insert(
                "propagation".into(),
                serde_json::json!({
                    "dt_s": r.dt,
                    "t_final_s": r.t_final,
                    "switch_off_vertical_at_crossing": r.switch_off_at_crossing,
                    "snapshot_every": r.snapshot_every,
                    "norm_check_every": r.norm_check_every,
                    "min_separation_m": r.min_separation,
                }),
            );
        }
        if let Some(a) = &self.absorber {
            root.insert(
                "absorber".into(),
                serde_json::json!({"width_m": a.width, "strength_J": a.strength}),
            );
        }
        if let Some(r) = &self.ratios {
            root.insert("ratios".into(), serde_json::json!(r));
        }
        if let Some(g) = &self.gammas_deg {
            root.insert("gammas_deg".into(), serde_json::json!(g));
        }
        if let Some(g) = &self.gpe {
            root.insert(
                "gpe".into(),
                serde_json::json!({
                    "atom_number": g.atom_number,
                    "omega_y_rad_s": g.omega_y,
                    "g2d_J_m2": g.g2d,
                    "curve_points": g.curve_points,
                    "grid_x": grid_json(&g.grid.x),
                    "grid_z": grid_json(&g.grid.z),
                    "relax_stages_s": g.stages,
                    "relax_tol": g.tol,
                    "dt_s": g.dt,
                    "t_final_s": g.t_final,
                    "snapshot_every": g.snapshot_every,
                    "diag_every": g.diag_every,
                    "zero_coupling": g.zero_coupling,
                }),
            );
        }
        serde_json::Value::Object(root)
    }
}

pub fn grid_json(g: &Grid1D) -> serde_json::Value {
    serde_json::json!({"x_min_m": g.x_min(), "x_max_m": g.x_max(), "n": g.n()})
}
