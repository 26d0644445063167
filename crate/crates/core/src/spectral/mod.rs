//! Periodic fields on `[0, 2π]³`: the collocation grid, physical and spectral
//! representations, transforms, symbols and quadrature.

mod fft;
pub mod norms;
pub mod ops;
pub mod random;
pub mod snapshot;

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub(crate) use fft::{forward_1d, inverse_1d};
use fft::Fft3;

/// Integer wavenumber triple `(k1, k2, k3)`.
pub type Wavenumber = [i64; 3];

/// Volume of the periodic box, `8π³`.
pub const VOLUME: f64 = 8.0 * PI * PI * PI;

/// Collocation grid with `nx × ny × nz` points on `[0, 2π]³`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 3]", into = "[usize; 3]")]
pub struct Grid {
    nx: usize,
    ny: usize,
    nz: usize,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        for n in [nx, ny, nz] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis length {n} must be even and at least 4"
                )));
            }
        }
        Ok(Grid { nx, ny, nz })
    }

    pub fn cubic(n: usize) -> Result<Self> {
        Grid::new(n, n, n)
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing per axis.
    pub fn spacing(&self) -> [f64; 3] {
        self.dims().map(|n| 2.0 * PI / n as f64)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.ny + j) * self.nz + l
    }

    /// Wavenumbers along one axis in storage order: `0, 1, …, n/2, −n/2+1, …, −1`.
    pub fn wavenumbers(&self, axis: usize) -> Vec<i64> {
        let n = self.dims()[axis];
        (0..n).map(|i| wavenumber(n, i)).collect()
    }

    /// Storage index of wavenumber `k`, if it lies on the lattice.
    pub fn mode_index(&self, k: Wavenumber) -> Option<usize> {
        let mut idx = [0usize; 3];
        for (axis, n) in self.dims().into_iter().enumerate() {
            let half = (n / 2) as i64;
            let kk = k[axis];
            if kk <= -half || kk > half {
                return None;
            }
            idx[axis] = kk.rem_euclid(n as i64) as usize;
        }
        Some(self.index(idx[0], idx[1], idx[2]))
    }

    /// Calls `f(index, k)` for every lattice mode in storage order.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, Wavenumber)) {
        let (kx, ky, kz) = (self.wavenumbers(0), self.wavenumbers(1), self.wavenumbers(2));
        let mut idx = 0;
        for &k1 in &kx {
            for &k2 in &ky {
                for &k3 in &kz {
                    f(idx, [k1, k2, k3]);
                    idx += 1;
                }
            }
        }
    }

    /// True when `k` touches the Nyquist wavenumber `n/2` on any axis.
    pub fn is_nyquist(&self, k: Wavenumber) -> bool {
        self.dims()
            .into_iter()
            .zip(k)
            .any(|(n, kk)| 2 * kk.unsigned_abs() as usize == n)
    }

    /// True when `k` survives the 2/3-rule: `|k_i| ≤ n_i/3` on every axis.
    ///
    /// When `n_i` is a multiple of 3 the kept shell `|k_i| = n_i/3` still
    /// aliases in quadratic products.
    pub fn is_dealiased(&self, k: Wavenumber) -> bool {
        self.dims()
            .into_iter()
            .zip(k)
            .all(|(n, kk)| 3 * kk.unsigned_abs() as usize <= n)
    }

    /// Index of the mode `−k` given the storage index triple of `k`.
    #[inline]
    fn conj_index(&self, i: usize, j: usize, l: usize) -> usize {
        let ci = (self.nx - i) % self.nx;
        let cj = (self.ny - j) % self.ny;
        let cl = (self.nz - l) % self.nz;
        self.index(ci, cj, cl)
    }

    /// Largest `k1² + k2²` that survives dealiasing.
    pub fn max_dealiased_kh2(&self) -> f64 {
        let k1 = (self.nx / 3) as f64;
        let k2 = (self.ny / 3) as f64;
        k1 * k1 + k2 * k2
    }
}

impl TryFrom<[usize; 3]> for Grid {
    type Error = Error;
    fn try_from(d: [usize; 3]) -> Result<Self> {
        Grid::new(d[0], d[1], d[2])
    }
}

impl From<Grid> for [usize; 3] {
    fn from(g: Grid) -> Self {
        g.dims()
    }
}

#[inline]
pub(crate) fn wavenumber(n: usize, i: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Real samples of a field at the collocation points `x_i = 2πi/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(PhysicalField { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        PhysicalField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        PhysicalField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x, y, z)` on the grid.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let [dx, dy, dz] = grid.spacing();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                for l in 0..grid.nz {
                    values.push(f(i as f64 * dx, j as f64 * dy, l as f64 * dz));
                }
            }
        }
        PhysicalField { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Transform to Fourier coefficients; rejects non-finite samples.
    pub fn forward(&self) -> Result<SpectralField> {
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(self.forward_unchecked())
    }

    pub(crate) fn forward_unchecked(&self) -> SpectralField {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Fft3::for_grid(self.grid).forward(&mut buf);
        SpectralField {
            grid: self.grid,
            coeffs: buf,
        }
    }
}

/// Fourier coefficients `f̂(k)` of a real field, normalized so that the zero
/// mode is the domain average.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// Wraps raw coefficients; symmetry is not checked until inversion.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of `k`; zero off the lattice.
    pub fn coeff(&self, k: Wavenumber) -> Complex64 {
        self.grid
            .mode_index(k)
            .map_or(Complex64::default(), |i| self.coeffs[i])
    }

    /// Sets `f̂(k) = c` and `f̂(−k) = conj(c)`.
    pub fn set_mode_pair(&mut self, k: Wavenumber, c: Complex64) -> Result<()> {
        let neg = [-k[0], -k[1], -k[2]];
        let (Some(ip), Some(im)) = (self.grid.mode_index(k), self.grid.mode_index(neg)) else {
            return Err(Error::InvalidArgument(format!("mode {k:?} is not on the lattice")));
        };
        self.coeffs[ip] = c;
        self.coeffs[im] = c.conj();
        Ok(())
    }

    /// Largest `|f̂(k) − conj(f̂(−k))|` over the lattice.
    pub fn symmetry_defect(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for i in 0..g.nx {
            for j in 0..g.ny {
                for l in 0..g.nz {
                    let a = self.coeffs[g.index(i, j, l)];
                    let b = self.coeffs[g.conj_index(i, j, l)].conj();
                    worst = worst.max((a - b).norm());
                }
            }
        }
        worst
    }

    /// Synthesizes the real field; rejects coefficient sets whose symmetry
    /// defect exceeds `1e-12` relative to the largest coefficient.
    pub fn inverse(&self) -> Result<PhysicalField> {
        let scale = self.max_abs().max(1.0);
        let defect = self.symmetry_defect();
        if defect > 1e-12 * scale {
            return Err(Error::SymmetryViolation(defect));
        }
        Ok(self.inverse_unchecked())
    }

    /// Synthesizes and returns the largest imaginary residue alongside the field.
    pub fn inverse_with_residue(&self) -> (PhysicalField, f64) {
        let mut buf = self.coeffs.clone();
        Fft3::for_grid(self.grid).inverse(&mut buf);
        let residue = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        let values = buf.into_iter().map(|c| c.re).collect();
        (PhysicalField::from_raw(self.grid, values), residue)
    }

    pub(crate) fn inverse_unchecked(&self) -> PhysicalField {
        self.inverse_with_residue().0
    }

    /// Inverse transform of two real-field spectra with one complex FFT.
    pub(crate) fn inverse_pair(a: &SpectralField, b: &SpectralField) -> (PhysicalField, PhysicalField) {
        debug_assert_eq!(a.grid, b.grid);
        let mut buf: Vec<Complex64> = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x + Complex64::new(-y.im, y.re))
            .collect();
        Fft3::for_grid(a.grid).inverse(&mut buf);
        let (re, im) = buf.into_iter().map(|c| (c.re, c.im)).unzip();
        (
            PhysicalField::from_raw(a.grid, re),
            PhysicalField::from_raw(a.grid, im),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `Σ |f̂(k)|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `‖f‖₂` via Parseval.
    pub fn l2_norm(&self) -> f64 {
        (VOLUME * self.energy()).sqrt()
    }

    /// Largest coefficient in the `k1 = k2 = 0` sector.
    pub fn horizontal_mean_magnitude(&self) -> f64 {
        (0..self.grid.nz).fold(0.0, |m, l| m.max(self.coeffs[l].norm()))
    }

    /// Errors unless the `k1 = k2 = 0` sector vanishes to `1e-12` relative.
    pub fn require_zero_horizontal_mean(&self) -> Result<()> {
        let mean = self.horizontal_mean_magnitude();
        if mean > 1e-12 * self.max_abs().max(1e-300) && mean > 0.0 {
            return Err(Error::NonzeroHorizontalMean(mean));
        }
        Ok(())
    }

    /// Zeros the `k1 = k2 = 0` sector (the first `nz` storage slots).
    pub fn project_zero_horizontal_mean(&mut self) {
        let nz = self.grid.nz;
        self.coeffs[..nz].fill(Complex64::default());
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
        Ok(())
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub(crate) fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.dims(), other.grid.dims()));
        }
        Ok(())
    }

    /// Multiplies each coefficient by a per-mode value without any checks.
    pub(crate) fn map_modes(&self, mut f: impl FnMut(Wavenumber, Complex64) -> Complex64) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid);
        self.grid.for_each_mode(|idx, k| {
            out.coeffs[idx] = f(k, self.coeffs[idx]);
        });
        out
    }

    /// Copy of the field on another grid: shared modes are copied, the rest are zero.
    /// Nyquist modes are dropped so the result stays real.
    pub fn resample(&self, target: Grid) -> SpectralField {
        let mut out = SpectralField::zeros(target);
        self.grid.for_each_mode(|idx, k| {
            if self.grid.is_nyquist(k) {
                return;
            }
            if let Some(t) = target.mode_index(k) {
                if !target.is_nyquist(k) {
                    out.coeffs[t] = self.coeffs[idx];
                }
            }
        });
        out
    }
}
