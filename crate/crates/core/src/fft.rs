//! Thin wrappers around `rustfft` plans plus spectral utilities
//! (band-limited refinement, kinetic-energy expectation values).

use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::constants::HBAR;
use crate::error::Result;
use crate::field::{WaveField1D, WaveField2D};
use crate::grid::Grid1D;

/// Forward/inverse plan pair for one transform length, with shared scratch.
/// The inverse includes the `1/n` scaling so a round trip is the identity.
pub struct FftPair1D {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl FftPair1D {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch = vec![
            Complex64::default();
            fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())
        ];
        Self {
            n,
            fwd,
            inv,
            scratch,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        self.fwd.process_with_scratch(data, &mut self.scratch);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        self.inv.process_with_scratch(data, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        for c in data.iter_mut() {
            *c *= s;
        }
    }
}

/// 2D transform built from row transforms and explicit transposes.
///
/// Real-space arrays are `[nx, nz]` with z contiguous; spectra live in
/// the transposed layout `[nz, nx]` with x contiguous, so both passes
/// run over contiguous rows.
pub struct FftPair2D {
    x: FftPair1D,
    z: FftPair1D,
}

impl FftPair2D {
    pub fn new(nx: usize, nz: usize) -> Self {
        Self {
            x: FftPair1D::new(nx),
            z: FftPair1D::new(nz),
        }
    }

    fn fft_rows(pair: &mut FftPair1D, a: &mut Array2<Complex64>, forward: bool) {
        for mut row in a.rows_mut() {
            let slice = row.as_slice_mut().expect("rows must be contiguous");
            if forward {
                pair.forward(slice);
            } else {
                pair.inverse(slice);
            }
        }
    }

    /// Real space `[nx, nz]` -> spectrum in transposed layout `[nz, nx]`.
    pub fn forward_to_transposed(
        &mut self,
        real: &mut Array2<Complex64>,
        spec: &mut Array2<Complex64>,
    ) {
        Self::fft_rows(&mut self.z, real, true);
        spec.assign(&real.t());
        Self::fft_rows(&mut self.x, spec, true);
    }

    /// Spectrum in transposed layout `[nz, nx]` -> real space `[nx, nz]`.
    pub fn inverse_from_transposed(
        &mut self,
        spec: &mut Array2<Complex64>,
        real: &mut Array2<Complex64>,
    ) {
        Self::fft_rows(&mut self.x, spec, false);
        real.assign(&spec.t());
        Self::fft_rows(&mut self.z, real, false);
    }
}

/// Band-limited interpolation of a field onto a grid with twice the
/// points over the same interval. Sample values at even indices of the
/// result coincide with the input.
pub fn refine_double(field: &WaveField1D) -> Result<WaveField1D> {
    let g = field.grid();
    let n = g.n();
    let fine = Grid1D::new(g.x_min(), g.x_max(), 2 * n)?;

    let mut spec: Vec<Complex64> = field.psi.to_vec();
    let mut pair = FftPair1D::new(n);
    pair.forward(&mut spec);

    let mut big = vec![Complex64::default(); 2 * n];
    let pos = (n + 1) / 2; // non-negative-frequency bins, Nyquist excluded
    let neg_start = n - (n - 1) / 2; // first negative-frequency bin
    big[..pos].copy_from_slice(&spec[..pos]);
    big[2 * n - (n - neg_start)..].copy_from_slice(&spec[neg_start..]);
    if n % 2 == 0 {
        // Split the Nyquist bin symmetrically between +/- frequencies.
        let half_amp = spec[n / 2] * 0.5;
        big[n / 2] = half_amp;
        big[2 * n - n / 2] = half_amp;
    }

    let mut pair2 = FftPair1D::new(2 * n);
    pair2.inverse(&mut big);
    for c in big.iter_mut() {
        *c *= 2.0;
    }
    WaveField1D::new(fine, ndarray::Array1::from_vec(big))
}

/// `⟨T⟩ = ⟨psi| p^2/2m |psi⟩` for a unit-norm 1D field.
pub fn kinetic_expectation_1d(field: &WaveField1D, mass: f64, pair: &mut FftPair1D) -> f64 {
    let g = field.grid();
    debug_assert_eq!(pair.len(), g.n());
    let mut spec: Vec<Complex64> = field.psi.to_vec();
    pair.forward(&mut spec);
    let scale = g.dx() / g.n() as f64;
    spec.iter()
        .enumerate()
        .map(|(j, c)| {
            let k = g.k(j);
            HBAR * HBAR * k * k / (2.0 * mass) * c.norm_sqr()
        })
        .sum::<f64>()
        * scale
}

/// `⟨T⟩` for a unit-norm 2D field.
pub fn kinetic_expectation_2d(field: &WaveField2D, mass: f64, pair: &mut FftPair2D) -> f64 {
    let g = field.grid();
    let (nx, nz) = g.shape();
    let mut real = field.psi.clone();
    let mut spec = Array2::default((nz, nx));
    pair.forward_to_transposed(&mut real, &mut spec);
    let scale = g.da() / (nx * nz) as f64;
    let mut acc = 0.0;
    Zip::indexed(&spec).for_each(|(iz, ix), c| {
        let kx = g.x.k(ix);
        let kz = g.z.k(iz);
        acc += (kx * kx + kz * kz) * c.norm_sqr();
    });
    HBAR * HBAR / (2.0 * mass) * acc * scale
}
