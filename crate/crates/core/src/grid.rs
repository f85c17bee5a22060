//! Uniform periodic spatial grids and their conjugate spectral grids.

use crate::error::{CoreError, Result};

/// A uniform 1D grid of `n` points starting at `x_min` with spacing `dx`.
///
/// The grid is periodic in the FFT sense: point `i` sits at
/// `x_min + i*dx` for `i in 0..n`, and `x_min + n*dx` identifies with
/// `x_min`. Conjugate wavenumbers follow FFT ordering (non-negative
/// frequencies first, then negative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    dx: f64,
    n: usize,
}

impl Grid1D {
    /// Build a grid covering `[x_min, x_max)` with `n` points.
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(CoreError::contract("grid bounds must be finite"));
        }
        if x_max <= x_min {
            return Err(CoreError::contract(format!(
                "grid needs x_max > x_min, got [{x_min}, {x_max})"
            )));
        }
        if !n.is_power_of_two() || n < 16 {
            return Err(CoreError::contract(format!(
                "grid size must be a power of two and at least 16, got {n}"
            )));
        }
        Ok(Self {
            x_min,
            dx: (x_max - x_min) / n as f64,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Upper edge of the covered interval (not itself a grid point).
    pub fn x_max(&self) -> f64 {
        self.x_min + self.dx * self.n as f64
    }

    /// Total covered length `n*dx`.
    pub fn length(&self) -> f64 {
        self.dx * self.n as f64
    }

    /// Position of point `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx * i as f64
    }

    /// Wavenumber of spectral bin `i`, FFT-ordered.
    pub fn k(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        let signed = if i <= (self.n - 1) / 2 {
            i as isize
        } else {
            i as isize - self.n as isize
        };
        2.0 * std::f64::consts::PI * signed as f64 / self.length()
    }

    /// Largest representable wavenumber magnitude (Nyquist).
    pub fn k_nyquist(&self) -> f64 {
        std::f64::consts::PI / self.dx
    }

    /// All positions as a vector.
    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// All wavenumbers as a vector, FFT-ordered.
    pub fn ks(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.k(i)).collect()
    }

    /// Index of the grid point nearest to `x` (clamped to the grid).
    pub fn index_near(&self, x: f64) -> usize {
        let raw = ((x - self.x_min) / self.dx).round();
        raw.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Sub-grid of `count` points starting at index `start`; same spacing.
    pub fn window(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.n {
            return Err(CoreError::contract(format!(
                "window [{start}, {}) exceeds grid of {} points",
                start + count,
                self.n
            )));
        }
        if !count.is_power_of_two() || count < 16 {
            return Err(CoreError::contract(format!(
                "window size must be a power of two and at least 16, got {count}"
            )));
        }
        Ok(Self {
            x_min: self.x(start),
            dx: self.dx,
            n: count,
        })
    }

    /// Check that another grid is point-for-point identical.
    pub fn ensure_same(&self, other: &Self, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CoreError::GridMismatch(format!(
                "{what}: [{}, {}) x {} vs [{}, {}) x {}",
                self.x_min,
                self.x_max(),
                self.n,
                other.x_min,
                other.x_max(),
                other.n
            )))
        }
    }
}

/// Product grid for 2D fields; `x` is axis 0, `z` is axis 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x: Grid1D,
    pub z: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, z: Grid1D) -> Self {
        Self { x, z }
    }

    /// Area element `dx*dz`.
    pub fn da(&self) -> f64 {
        self.x.dx() * self.z.dx()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x.n(), self.z.n())
    }

    pub fn ensure_same(&self, other: &Self, what: &str) -> Result<()> {
        self.x.ensure_same(&other.x, what)?;
        self.z.ensure_same(&other.z, what)
    }
}
