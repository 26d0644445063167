//! Velocity, stream function and vertical vorticity from the temperature
//! fluctuation, solved mode by mode from the two linear diagnostic relations
//! `ψ_z = θ′ + Δₕw` and `−w_z = Δₕω`.

pub mod multiplier;

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::spectral::{Grid, SpectralField, Wavenumber, VOLUME};

/// The five diagnostic fields derived from `θ′`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityDiagnostics {
    pub u: SpectralField,
    pub v: SpectralField,
    pub w: SpectralField,
    pub psi: SpectralField,
    pub omega: SpectralField,
}

/// Per-mode transfer factors `(m_u, m_v, m_w)` with `û = m_u θ̂′` etc.
///
/// Zero on the horizontal-mean sector and on Nyquist modes.
#[inline]
pub fn velocity_factors(grid: Grid, k: Wavenumber) -> (f64, f64, f64) {
    let kh2 = (k[0] * k[0] + k[1] * k[1]) as f64;
    if kh2 == 0.0 || grid.is_nyquist(k) {
        return (0.0, 0.0, 0.0);
    }
    let k3 = k[2] as f64;
    let denom = k3 * k3 + kh2 * kh2 * kh2;
    (
        -(k[1] as f64) * k3 / denom,
        (k[0] as f64) * k3 / denom,
        kh2 * kh2 / denom,
    )
}

/// Solves the diagnostic relations exactly in Fourier space.
pub fn solve_velocity(theta: &SpectralField) -> Result<VelocityDiagnostics> {
    theta.require_zero_horizontal_mean()?;
    Ok(solve_velocity_unchecked(theta))
}

pub(crate) fn solve_velocity_unchecked(theta: &SpectralField) -> VelocityDiagnostics {
    let grid = theta.grid();
    let src = theta.coeffs();
    let mut out: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![Complex64::default(); grid.len()]);
    grid.for_each_mode(|idx, k| {
        let (mu, mv, mw) = velocity_factors(grid, k);
        if mw == 0.0 {
            return;
        }
        let t = src[idx];
        let kh2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        let w = t * mw;
        let omega = Complex64::new(0.0, k[2] as f64) * w / kh2;
        out[0][idx] = t * mu;
        out[1][idx] = t * mv;
        out[2][idx] = w;
        out[3][idx] = -omega / kh2;
        out[4][idx] = omega;
    });
    let [u, v, w, psi, omega] = out.map(|c| SpectralField::from_coeffs(grid, c).expect("grid length"));
    VelocityDiagnostics { u, v, w, psi, omega }
}

/// Relative residuals `(r1, r2)` of `ψ_z − θ′ − Δₕw = 0` and `−w_z − Δₕω = 0`,
/// evaluated spectrally over the modes the solve acts on (nonzero horizontal
/// wavenumber, no Nyquist component).
pub fn residual_check(theta: &SpectralField, d: &VelocityDiagnostics) -> Result<(f64, f64)> {
    for f in [&d.u, &d.v, &d.w, &d.psi, &d.omega] {
        theta.check_grid(f)?;
    }
    let grid = theta.grid();
    let (mut s1, mut s2) = (0.0, 0.0);
    grid.for_each_mode(|idx, k| {
        let kh2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        if kh2 == 0.0 || grid.is_nyquist(k) {
            return;
        }
        let ik3 = Complex64::new(0.0, k[2] as f64);
        let w = d.w.coeffs()[idx];
        let r1 = ik3 * d.psi.coeffs()[idx] - theta.coeffs()[idx] + w * kh2;
        let r2 = -ik3 * w + d.omega.coeffs()[idx] * kh2;
        s1 += r1.norm_sqr();
        s2 += r2.norm_sqr();
    });
    let scale = theta.l2_norm().max(f64::MIN_POSITIVE);
    Ok(((VOLUME * s1).sqrt() / scale, (VOLUME * s2).sqrt() / scale))
}

/// `‖∂x u + ∂y v‖₂` computed spectrally.
pub fn horizontal_divergence_norm(d: &VelocityDiagnostics) -> f64 {
    let grid = d.u.grid();
    let mut s = 0.0;
    grid.for_each_mode(|idx, k| {
        let div = d.u.coeffs()[idx] * k[0] as f64 + d.v.coeffs()[idx] * k[1] as f64;
        s += div.norm_sqr();
    });
    (VOLUME * s).sqrt()
}
