//! Collocation quadrature of `Lᵖ` norms. The `p = ∞` norm is the grid maximum,
//! a lower bound on the true supremum.

use super::{PhysicalField, VOLUME};
use crate::error::{Error, Result};

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

fn power_mean(values: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = if p == 2.0 {
        values.map(|v| v * v).sum()
    } else {
        values.map(|v| v.abs().powf(p)).sum()
    };
    (sum * cell).powf(1.0 / p)
}

/// `(∫_Ω |f|ᵖ)^{1/p}` by uniform Riemann sum.
pub fn lp_norm(f: &PhysicalField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let cell = VOLUME / f.grid().len() as f64;
    Ok(power_mean(f.values().iter().copied(), p, cell))
}

/// `Lᵖ` norm of the pointwise Euclidean magnitude of a vector field.
pub fn vector_lp_norm(components: &[&PhysicalField], p: f64) -> Result<f64> {
    check_exponent(p)?;
    let Some(first) = components.first() else {
        return Ok(0.0);
    };
    let grid = first.grid();
    if let Some(bad) = components.iter().find(|c| c.grid() != grid) {
        return Err(Error::GridMismatch(grid.dims(), bad.grid().dims()));
    }
    let cell = VOLUME / grid.len() as f64;
    let mags = (0..grid.len()).map(|i| {
        components
            .iter()
            .map(|c| c.values()[i] * c.values()[i])
            .sum::<f64>()
            .sqrt()
    });
    Ok(power_mean(mags, p, cell))
}

/// `‖f(·, ·, z)‖_{Lᵖ([0,2π]²)}` at every collocation level `z`.
pub fn horizontal_slice_norms(f: &PhysicalField, p: f64) -> Result<Vec<f64>> {
    check_exponent(p)?;
    let g = f.grid();
    let [dx, dy, _] = g.spacing();
    let cell = dx * dy;
    let vals = f.values();
    Ok((0..g.nz())
        .map(|l| {
            let slice = (0..g.nx())
                .flat_map(move |i| (0..g.ny()).map(move |j| g.index(i, j, l)))
                .map(|idx| vals[idx]);
            power_mean(slice, p, cell)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn constant_field() {
        let g = Grid::cubic(8).unwrap();
        let f = PhysicalField::from_fn(g, |_, _, _| 1.0);
        for p in [1.0, 2.0, 3.0, 6.0] {
            let want = VOLUME.powf(1.0 / p);
            assert!((lp_norm(&f, p).unwrap() - want).abs() < 1e-12 * want);
        }
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn sine_l2_and_sup() {
        let g = Grid::cubic(64).unwrap();
        let f = PhysicalField::from_fn(g, |x, _, _| x.sin());
        let want = (4.0 * PI.powi(3)).sqrt();
        assert!((lp_norm(&f, 2.0).unwrap() - want).abs() < 1e-12 * want);
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_small_exponent() {
        let g = Grid::cubic(4).unwrap();
        let f = PhysicalField::zeros(g);
        assert!(matches!(lp_norm(&f, 0.5), Err(Error::InvalidExponent(_))));
        assert!(lp_norm(&f, f64::NAN).is_err());
    }

    #[test]
    fn slice_norms_of_z_modulated_field() {
        let g = Grid::cubic(16).unwrap();
        let f = PhysicalField::from_fn(g, |x, _, z| x.sin() * z.cos());
        let s = horizontal_slice_norms(&f, 2.0).unwrap();
        for (l, v) in s.iter().enumerate() {
            let z = 2.0 * PI * l as f64 / 16.0;
            // ∫∫ sin²x dx dy = 2π²
            let want = (2.0 * PI * PI).sqrt() * z.cos().abs();
            assert!((v - want).abs() < 1e-12);
        }
    }
}
