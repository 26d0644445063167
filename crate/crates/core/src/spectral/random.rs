//! Seeded random band-limited fields with zero horizontal mean.
//!
//! Coefficients are drawn in a fixed lattice order that does not depend on the
//! grid, so the same seed produces the same function at every resolution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use super::{Grid, SpectralField};
use crate::error::{Error, Result};

/// Random field whose modes satisfy `kmin ≤ max_i |k_i| ≤ kmax` and `k1² + k2² ≠ 0`,
/// with Gaussian coefficients damped by `1/(1 + |k|²)`. Unnormalized.
pub fn band_limited(grid: Grid, kmin: i64, kmax: i64, seed: u64) -> Result<SpectralField> {
    if kmax < 1 || kmin > kmax || kmin < 0 {
        return Err(Error::InvalidArgument(format!("bad band [{kmin}, {kmax}]")));
    }
    let nmin = grid.dims().into_iter().min().unwrap_or(0) as i64;
    if 2 * kmax >= nmin {
        return Err(Error::InvalidArgument(format!(
            "band limit {kmax} reaches the Nyquist wavenumber of {:?}",
            grid.dims()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid);
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            for k3 in -kmax..=kmax {
                let k = [k1, k2, k3];
                let canonical = k1 > 0 || (k1 == 0 && k2 > 0);
                let linf = k1.abs().max(k2.abs()).max(k3.abs());
                if !canonical || linf < kmin {
                    continue;
                }
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let weight = 1.0 / (1.0 + (k1 * k1 + k2 * k2 + k3 * k3) as f64);
                f.set_mode_pair(k, Complex64::new(re, im) * weight)?;
            }
        }
    }
    Ok(f)
}
