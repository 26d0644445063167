//! Horizontal-mean temperature closure.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::diagnostic::velocity_factors;
use crate::error::{Error, Result};
use crate::spectral::{forward_1d, inverse_1d, wavenumber, Grid, PhysicalField, SpectralField};

/// Mean-temperature data on the `nz` vertical collocation points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanProfile {
    pub z: Vec<f64>,
    pub flux: Vec<f64>,
    pub dtheta_dz: Vec<f64>,
    pub theta_bar: Vec<f64>,
}

impl MeanProfile {
    /// Flux, closure gradient and reconstructed mean for a temperature/vertical-velocity pair.
    pub fn from_fields(theta: &PhysicalField, w: &PhysicalField) -> Result<Self> {
        let flux = heat_flux(theta, w)?;
        let dtheta_dz = mean_gradient(&flux);
        let theta_bar = reconstruct_mean(&dtheta_dz)?;
        let nz = flux.len();
        let z = (0..nz).map(|l| 2.0 * PI * l as f64 / nz as f64).collect();
        Ok(MeanProfile { z, flux, dtheta_dz, theta_bar })
    }

    /// Closure profile of a spectral temperature fluctuation.
    pub fn from_spectral(theta: &SpectralField) -> Result<Self> {
        let grid = theta.grid();
        let w = theta.map_modes(|k, c| c * velocity_factors(grid, k).2);
        let (w, th) = SpectralField::inverse_pair(&w, theta);
        Self::from_fields(&th, &w)
    }

    /// Writes the profile as CSV with columns `z, flux, dtheta_dz, theta_bar`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z,flux,dtheta_dz,theta_bar")?;
        for l in 0..self.z.len() {
            writeln!(out, "{:?},{:?},{:?},{:?}", self.z[l], self.flux[l], self.dtheta_dz[l], self.theta_bar[l])?;
        }
        Ok(())
    }
}

/// Horizontal average of `theta * w` at each vertical level.
pub fn heat_flux(theta: &PhysicalField, w: &PhysicalField) -> Result<Vec<f64>> {
    let grid = theta.grid();
    if grid != w.grid() {
        return Err(Error::GridMismatch(grid.dims(), w.grid().dims()));
    }
    Ok(horizontal_average_of_product(grid, theta.values(), w.values()))
}

pub(crate) fn horizontal_average_of_product(grid: Grid, a: &[f64], b: &[f64]) -> Vec<f64> {
    let nz = grid.nz();
    let mut flux = vec![0.0; nz];
    for (ca, cb) in a.chunks_exact(nz).zip(b.chunks_exact(nz)) {
        for l in 0..nz {
            flux[l] += ca[l] * cb[l];
        }
    }
    let n = (grid.nx() * grid.ny()) as f64;
    flux.iter_mut().for_each(|f| *f /= n);
    flux
}

/// Subtracts the vertical average: `flux - (1/2π) ∫ flux dz`.
pub fn mean_gradient(flux: &[f64]) -> Vec<f64> {
    if flux.is_empty() {
        return Vec::new();
    }
    let mean = flux.iter().sum::<f64>() / flux.len() as f64;
    flux.iter().map(|f| f - mean).collect()
}

/// Zero-mean spectral antiderivative of a zero-average profile.
pub fn reconstruct_mean(dtheta_dz: &[f64]) -> Result<Vec<f64>> {
    let nz = dtheta_dz.len();
    if nz == 0 {
        return Ok(Vec::new());
    }
    let integral = 2.0 * PI * dtheta_dz.iter().sum::<f64>() / nz as f64;
    if integral.abs() > 1e-10 {
        return Err(Error::NonzeroAverage(integral));
    }
    let mut c = forward_1d(dtheta_dz);
    for (i, ci) in c.iter_mut().enumerate() {
        let k = wavenumber(nz, i);
        *ci = if k == 0 || 2 * k.unsigned_abs() as usize == nz {
            Complex64::new(0.0, 0.0)
        } else {
            *ci / Complex64::new(0.0, k as f64)
        };
    }
    Ok(inverse_1d(&c))
}

/// Spectral `d/dz` of a periodic profile, Nyquist mode dropped.
pub fn profile_derivative(f: &[f64]) -> Vec<f64> {
    let nz = f.len();
    let mut c = forward_1d(f);
    for (i, ci) in c.iter_mut().enumerate() {
        let k = wavenumber(nz, i);
        *ci = if 2 * k.unsigned_abs() as usize == nz {
            Complex64::new(0.0, 0.0)
        } else {
            *ci * Complex64::new(0.0, k as f64)
        };
    }
    inverse_1d(&c)
}

/// `∫₀^{2π} f g dz` by the collocation rule.
pub fn profile_inner(f: &[f64], g: &[f64]) -> f64 {
    let nz = f.len();
    2.0 * PI / nz as f64 * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels(nz: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..nz).map(|l| f(2.0 * PI * l as f64 / nz as f64)).collect()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn single_mode_closure() {
        let grid = Grid::cubic(32).unwrap();
        let theta = PhysicalField::from_fn(grid, |x, _, z| x.sin() * z.cos());
        let w = PhysicalField::from_fn(grid, |x, _, z| 0.5 * x.sin() * z.cos());
        let p = MeanProfile::from_fields(&theta, &w).unwrap();
        assert!(max_diff(&p.flux, &levels(32, |z| z.cos().powi(2) / 4.0)) < 1e-12);
        assert!(max_diff(&p.dtheta_dz, &levels(32, |z| (2.0 * z).cos() / 8.0)) < 1e-12);
        assert!(max_diff(&p.theta_bar, &levels(32, |z| (2.0 * z).sin() / 16.0)) < 1e-12);
        assert!(profile_inner(&p.dtheta_dz, &vec![1.0; 32]).abs() < 1e-12);
        assert!(profile_inner(&p.theta_bar, &vec![1.0; 32]).abs() < 1e-12);
        assert!(max_diff(&profile_derivative(&p.theta_bar), &p.dtheta_dz) < 1e-12);
        let q = MeanProfile::from_spectral(&theta.forward().unwrap()).unwrap();
        assert!(max_diff(&q.flux, &p.flux) < 1e-14);
    }

    #[test]
    fn orthogonal_modes_carry_no_flux() {
        let grid = Grid::cubic(16).unwrap();
        let theta = PhysicalField::from_fn(grid, |x, _, _| x.sin());
        let w = PhysicalField::from_fn(grid, |_, y, _| y.sin());
        assert!(heat_flux(&theta, &w).unwrap().iter().all(|f| f.abs() < 1e-15));
        let other = PhysicalField::zeros(Grid::cubic(8).unwrap());
        assert!(heat_flux(&theta, &other).is_err());
    }

    #[test]
    fn mean_gradient_removes_constants() {
        let flux = levels(16, |z| z.sin() + 0.3 * (3.0 * z).cos());
        let shifted: Vec<f64> = flux.iter().map(|f| f + 7.25).collect();
        assert!(max_diff(&mean_gradient(&flux), &mean_gradient(&shifted)) < 1e-14);
        assert!(mean_gradient(&[2.0; 8]).iter().all(|v| *v == 0.0));
        assert!(max_diff(&mean_gradient(&levels(16, f64::sin)), &levels(16, f64::sin)) < 1e-15);
    }

    #[test]
    fn reconstruction() {
        let tb = reconstruct_mean(&levels(16, f64::cos)).unwrap();
        assert!(max_diff(&tb, &levels(16, f64::sin)) < 1e-14);
        assert!(reconstruct_mean(&[0.0; 8]).unwrap().iter().all(|v| *v == 0.0));
        assert!(matches!(reconstruct_mean(&[1.0; 8]), Err(Error::NonzeroAverage(_))));
    }

    #[test]
    fn closure_consistency_and_sign() {
        let flux = levels(32, |z| (z.sin() + 0.5).powi(2) * z.cos().exp());
        let dz = mean_gradient(&flux);
        let tb = reconstruct_mean(&dz).unwrap();
        let lhs = profile_derivative(&dz);
        let rhs = profile_derivative(&profile_derivative(&tb));
        assert!(max_diff(&lhs, &rhs) < 1e-12);
        let e = profile_inner(&dz, &flux);
        assert!(e >= -1e-14);
        assert!((e - profile_inner(&dz, &dz)).abs() < 1e-12);
    }
}
