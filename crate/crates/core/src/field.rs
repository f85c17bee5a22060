//! Complex wavefunctions sampled on the grids of [`crate::grid`].

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::grid::{Grid1D, Grid2D};

/// A 1D wavefunction `psi(x)` with its grid.
#[derive(Debug, Clone)]
pub struct WaveField1D {
    grid: Grid1D,
    pub psi: Array1<Complex64>,
}

impl WaveField1D {
    /// Wrap existing samples; length must match the grid.
    pub fn new(grid: Grid1D, psi: Array1<Complex64>) -> Result<Self> {
        if psi.len() != grid.n() {
            return Err(CoreError::GridMismatch(format!(
                "field has {} samples for a grid of {} points",
                psi.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, psi })
    }

    /// Sample a function on the grid.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let psi = Array1::from_iter((0..grid.n()).map(|i| f(grid.x(i))));
        Self { grid, psi }
    }

    /// Normalized Gaussian packet centered at `x0` with carrier
    /// wavenumber `k0`; `sigma` is the standard deviation of the
    /// position density (amplitude `exp(-(x-x0)^2 / (4 sigma^2))`).
    pub fn gaussian(grid: Grid1D, x0: f64, sigma: f64, k0: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(CoreError::contract("gaussian needs sigma > 0"));
        }
        let mut f = Self::from_fn(grid, |x| {
            let arg = -((x - x0) / (2.0 * sigma)).powi(2);
            Complex64::new(0.0, k0 * x).exp() * arg.exp()
        });
        f.normalize()?;
        Ok(f)
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            psi: Array1::zeros(grid.n()),
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Squared norm `∫ |psi|^2 dx`.
    pub fn norm_sq(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Scale so the squared norm is 1; errors on a (near-)zero field.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq();
        if !(n.is_finite() && n > 1e-300) {
            return Err(CoreError::contract(format!(
                "cannot normalize field with squared norm {n}"
            )));
        }
        let s = Complex64::new(1.0 / n.sqrt(), 0.0);
        self.psi.mapv_inplace(|c| c * s);
        Ok(())
    }

    /// Inner product `⟨self|other⟩ = ∫ conj(self) * other dx`.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid, "overlap")?;
        let mut acc = Complex64::new(0.0, 0.0);
        Zip::from(&self.psi).and(&other.psi).for_each(|a, b| {
            acc += a.conj() * b;
        });
        Ok(acc * self.grid.dx())
    }

    /// Probability density `|psi|^2` on the grid.
    pub fn density(&self) -> Array1<f64> {
        self.psi.mapv(|c| c.norm_sqr())
    }

    /// `∫ x |psi|^2 dx` (not normalized by the norm).
    pub fn weighted_mean_x(&self) -> f64 {
        self.psi
            .iter()
            .enumerate()
            .map(|(i, c)| self.grid.x(i) * c.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    /// Probability in `[a, b]` (sum of density over points inside).
    pub fn probability_in(&self, a: f64, b: f64) -> f64 {
        self.psi
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let x = self.grid.x(*i);
                x >= a && x <= b
            })
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    /// Copy these samples into the matching window of a larger grid,
    /// zero elsewhere. The window must align point-for-point.
    pub fn embed_into(&self, target: Grid1D) -> Result<Self> {
        let start = embed_offset(self.grid, target, "x")?;
        let mut out = Self::zeros(target);
        out.psi
            .slice_mut(ndarray::s![start..start + self.grid.n()])
            .assign(&self.psi);
        Ok(out)
    }
}

/// Index in `target` of the first point of `source`, provided the two
/// grids share spacing and lattice alignment and `target` covers
/// `source`.
fn embed_offset(source: Grid1D, target: Grid1D, axis: &str) -> Result<usize> {
    let dx = source.dx();
    if (dx - target.dx()).abs() > 1e-12 * dx {
        return Err(CoreError::GridMismatch(format!(
            "embed requires equal grid spacing along {axis}"
        )));
    }
    let offset = (source.x_min() - target.x_min()) / dx;
    let start = offset.round();
    if (offset - start).abs() > 1e-6 {
        return Err(CoreError::GridMismatch(format!(
            "embed requires point-aligned grids along {axis}"
        )));
    }
    if start < 0.0 || start as usize + source.n() > target.n() {
        return Err(CoreError::GridMismatch(format!(
            "embed target does not cover the source window along {axis}"
        )));
    }
    Ok(start as usize)
}

/// A 2D wavefunction `psi(x, z)`; axis 0 is x, axis 1 is z.
#[derive(Debug, Clone)]
pub struct WaveField2D {
    grid: Grid2D,
    pub psi: Array2<Complex64>,
}

impl WaveField2D {
    pub fn new(grid: Grid2D, psi: Array2<Complex64>) -> Result<Self> {
        if psi.dim() != grid.shape() {
            return Err(CoreError::GridMismatch(format!(
                "field shape {:?} does not match grid {:?}",
                psi.dim(),
                grid.shape()
            )));
        }
        Ok(Self { grid, psi })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let psi = Array2::from_shape_fn(grid.shape(), |(ix, iz)| f(grid.x.x(ix), grid.z.x(iz)));
        Self { grid, psi }
    }

    /// Normalized isotropic Gaussian centered at `(x0, z0)`; `sigma` is
    /// the per-axis standard deviation of the density.
    pub fn gaussian(grid: Grid2D, x0: f64, z0: f64, sigma: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(CoreError::contract("gaussian needs sigma > 0"));
        }
        let mut f = Self::from_fn(grid, |x, z| {
            let r2 = (x - x0).powi(2) + (z - z0).powi(2);
            Complex64::new((-r2 / (4.0 * sigma * sigma)).exp(), 0.0)
        });
        f.normalize()?;
        Ok(f)
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn norm_sq(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.da()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq();
        if !(n.is_finite() && n > 1e-300) {
            return Err(CoreError::contract(format!(
                "cannot normalize field with squared norm {n}"
            )));
        }
        let s = Complex64::new(1.0 / n.sqrt(), 0.0);
        self.psi.mapv_inplace(|c| c * s);
        Ok(())
    }

    pub fn density(&self) -> Array2<f64> {
        self.psi.mapv(|c| c.norm_sqr())
    }

    /// Mean position `(⟨x⟩, ⟨z⟩)` of the density (not norm-divided).
    pub fn weighted_mean(&self) -> (f64, f64) {
        let mut mx = 0.0;
        let mut mz = 0.0;
        for ((ix, iz), c) in self.psi.indexed_iter() {
            let d = c.norm_sqr();
            mx += self.grid.x.x(ix) * d;
            mz += self.grid.z.x(iz) * d;
        }
        (mx * self.grid.da(), mz * self.grid.da())
    }

    /// Largest density value on the grid.
    pub fn peak_density(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            psi: Array2::zeros(grid.shape()),
        }
    }

    /// Copy these samples into the matching window of a larger grid,
    /// zero elsewhere. Both axes must align point-for-point.
    pub fn embed_into(&self, target: Grid2D) -> Result<Self> {
        let sx = embed_offset(self.grid.x, target.x, "x")?;
        let sz = embed_offset(self.grid.z, target.z, "z")?;
        let (nx, nz) = self.grid.shape();
        let mut out = Self::zeros(target);
        out.psi
            .slice_mut(ndarray::s![sx..sx + nx, sz..sz + nz])
            .assign(&self.psi);
        Ok(out)
    }
}
