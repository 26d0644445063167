//! Fourier symbols, the 2/3-rule and anisotropic norms.

use rustfft::num_complex::Complex64;

use super::{norms, Grid, SpectralField, Wavenumber};
use crate::error::{Error, Result};

/// Applies the diagonal multiplier `σ(k)` to every coefficient.
///
/// `σ` must satisfy `σ(−k) = conj(σ(k))` on the lattice so that the result is
/// still the transform of a real field.
pub fn apply_symbol(f: &SpectralField, sigma: impl Fn(Wavenumber) -> Complex64) -> Result<SpectralField> {
    let grid = f.grid();
    let mut values = vec![Complex64::default(); grid.len()];
    let mut modes = vec![[0i64; 3]; grid.len()];
    grid.for_each_mode(|idx, k| {
        values[idx] = sigma(k);
        modes[idx] = k;
    });
    let [nx, ny, nz] = grid.dims();
    for i in 0..nx {
        for j in 0..ny {
            for l in 0..nz {
                let idx = grid.index(i, j, l);
                let cidx = grid.index((nx - i) % nx, (ny - j) % ny, (nz - l) % nz);
                let s = values[idx];
                let tol = 1e-12 * s.norm().max(1.0);
                if !s.is_finite() || (s - values[cidx].conj()).norm() > tol {
                    return Err(Error::RealityBreakingSymbol(modes[idx]));
                }
            }
        }
    }
    let coeffs = f.coeffs().iter().zip(&values).map(|(c, s)| c * s).collect();
    SpectralField::from_coeffs(grid, coeffs)
}

/// 2/3-rule: zero every mode with `|k_i| > n_i/3` on some axis.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let grid = f.grid();
    f.map_modes(|k, c| if grid.is_dealiased(k) { c } else { Complex64::default() })
}

/// Galerkin cap: zero every mode with `|k_i| > m` on some axis.
pub fn truncate(f: &SpectralField, m: i64) -> SpectralField {
    f.map_modes(|k, c| {
        if k.iter().all(|kk| kk.abs() <= m) {
            c
        } else {
            Complex64::default()
        }
    })
}

/// `‖(I − ∂zz)^a A^b f‖_p` with `A = −Δₕ` restricted to the zero-horizontal-mean sector.
pub fn aniso_norm(f: &SpectralField, a: f64, b: f64, p: f64) -> Result<f64> {
    if b != 0.0 {
        f.require_zero_horizontal_mean()?;
    }
    let g = apply_symbol(f, |k| Complex64::new(symbols::aniso_weight(k, a, b), 0.0))?;
    norms::lp_norm(&g.inverse_unchecked(), p)
}

/// Standard symbols. Odd derivatives vanish on the Nyquist wavenumber of the
/// differentiated axis.
pub mod symbols {
    use super::*;

    pub fn derivative(grid: Grid, axis: usize) -> impl Fn(Wavenumber) -> Complex64 {
        let n = grid.dims()[axis] as i64;
        move |k| {
            let kk = k[axis];
            if 2 * kk.abs() == n {
                Complex64::default()
            } else {
                Complex64::new(0.0, kk as f64)
            }
        }
    }

    /// Horizontal Laplacian `−(k1² + k2²)`.
    pub fn laplacian_h(grid: Grid) -> impl Fn(Wavenumber) -> Complex64 {
        let [nx, ny, _] = grid.dims().map(|n| n as i64);
        move |k| {
            if 2 * k[0].abs() == nx || 2 * k[1].abs() == ny {
                Complex64::default()
            } else {
                Complex64::new(-((k[0] * k[0] + k[1] * k[1]) as f64), 0.0)
            }
        }
    }

    /// `A^s`: `(k1² + k2²)^s` off the horizontal-mean sector, zero on it.
    pub fn a_power(s: f64) -> impl Fn(Wavenumber) -> Complex64 {
        move |k| Complex64::new(a_weight(k, s), 0.0)
    }

    /// `(I − ∂zz)^s`: `(1 + k3²)^s`.
    pub fn vertical_bessel(s: f64) -> impl Fn(Wavenumber) -> Complex64 {
        move |k| Complex64::new((1.0 + (k[2] * k[2]) as f64).powf(s), 0.0)
    }

    pub(crate) fn a_weight(k: Wavenumber, s: f64) -> f64 {
        let kh2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        if kh2 == 0.0 {
            0.0
        } else {
            kh2.powf(s)
        }
    }

    pub(crate) fn aniso_weight(k: Wavenumber, a: f64, b: f64) -> f64 {
        let vert = if a == 0.0 {
            1.0
        } else {
            (1.0 + (k[2] * k[2]) as f64).powf(a)
        };
        let horiz = if b == 0.0 { 1.0 } else { a_weight(k, b) };
        vert * horiz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{PhysicalField, VOLUME};

    fn grid(n: usize) -> Grid {
        Grid::cubic(n).unwrap()
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = grid(16);
        let f = PhysicalField::from_fn(g, |x, _, _| x.sin()).forward().unwrap();
        let df = apply_symbol(&f, symbols::derivative(g, 0)).unwrap().inverse().unwrap();
        let want = PhysicalField::from_fn(g, |x, _, _| x.cos());
        for (a, b) in df.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn horizontal_laplacian_of_separable_mode() {
        let g = grid(16);
        let f = PhysicalField::from_fn(g, |x, _, z| x.sin() * z.cos()).forward().unwrap();
        let lf = apply_symbol(&f, symbols::laplacian_h(g)).unwrap().inverse().unwrap();
        for (a, b) in lf.values().iter().zip(f.inverse().unwrap().values()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn a_power_removes_vertical_modes() {
        let g = grid(8);
        let f = PhysicalField::from_fn(g, |x, _, z| (2.0 * z).cos() + x.sin()).forward().unwrap();
        let out = apply_symbol(&f, symbols::a_power(-0.5)).unwrap();
        assert_eq!(out.coeff([0, 0, 2]), Complex64::default());
        assert!((out.coeff([1, 0, 0]) - f.coeff([1, 0, 0])).norm() < 1e-15);
    }

    #[test]
    fn reality_breaking_symbol_is_rejected() {
        let g = grid(8);
        let f = SpectralField::zeros(g);
        let err = apply_symbol(&f, |k| Complex64::new(k[0] as f64, 0.0)).unwrap_err();
        assert!(matches!(err, Error::RealityBreakingSymbol(_)));
    }

    #[test]
    fn dealias_cutoffs() {
        let g = grid(32);
        let mut f = SpectralField::zeros(g);
        f.set_mode_pair([15, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        f.set_mode_pair([1, 1, 1], Complex64::new(0.5, 0.25)).unwrap();
        let d = dealias(&f);
        assert_eq!(d.coeff([15, 0, 0]), Complex64::default());
        assert_eq!(d.coeff([1, 1, 1]), f.coeff([1, 1, 1]));
        assert!(d.energy() <= f.energy());
        assert_eq!(dealias(&d), d);
    }

    #[test]
    fn aniso_norm_single_modes() {
        let g = grid(16);
        let sxcz = PhysicalField::from_fn(g, |x, _, z| x.sin() * z.cos());
        let plain = norms::lp_norm(&sxcz, 2.0).unwrap();
        let f = sxcz.forward().unwrap();
        let v = aniso_norm(&f, 0.5, 0.0, 2.0).unwrap();
        assert!((v - 2f64.sqrt() * plain).abs() < 1e-12 * plain);
        assert!((aniso_norm(&f, 0.0, 0.0, 2.0).unwrap() - plain).abs() < 1e-12);

        let sx = PhysicalField::from_fn(g, |x, _, _| x.sin()).forward().unwrap();
        let v = aniso_norm(&sx, 0.0, 0.5, 2.0).unwrap();
        assert!((v - (VOLUME / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aniso_norm_requires_zero_mean_for_horizontal_power() {
        let g = grid(8);
        let f = PhysicalField::from_fn(g, |_, _, z| z.cos()).forward().unwrap();
        assert!(aniso_norm(&f, 0.0, 0.5, 2.0).is_err());
        assert!(aniso_norm(&f, 0.5, 0.0, 2.0).is_ok());
    }
}
