//! The anisotropic multiplier family
//!
//! ```text
//! m(k) = (1 + k3²)^a (k1² + k2²)^b / ((k3²)^c + (k1² + k2²)^d),   m = 0 when k1 = k2 = 0,
//! ```
//!
//! which is an `Lᵖ` multiplier for `1 < p < ∞` whenever `a/c + b/d ≤ 1`. Every
//! velocity-from-temperature bound used by the diagnostics is a member of this
//! family; the [`catalog`] lists them as data.

use std::fmt;

use num_rational::Ratio;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spectral::{norms, random, Grid, SpectralField, Wavenumber};

/// Exact rational exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent(pub Ratio<i64>);

impl Exponent {
    pub const fn new(num: i64, den: i64) -> Self {
        Exponent(Ratio::new_raw(num, den))
    }

    pub fn as_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    fn reduced(self) -> Ratio<i64> {
        Ratio::new(*self.0.numer(), *self.0.denom())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        if *r.denom() == 1 {
            write!(f, "{}", r.numer())
        } else {
            write!(f, "{}/{}", r.numer(), r.denom())
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMultiplier(format!("cannot parse exponent {s:?}"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: i64 = n.parse().map_err(|_| bad())?;
        let d: i64 = d.parse().map_err(|_| bad())?;
        if d <= 0 {
            return Err(bad());
        }
        Ok(Exponent(Ratio::new(n, d)))
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Exponents `(a, b, c, d)` of one family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub a: Exponent,
    pub b: Exponent,
    pub c: Exponent,
    pub d: Exponent,
}

impl MultiplierSpec {
    pub fn new(a: Exponent, b: Exponent, c: Exponent, d: Exponent) -> Result<Self> {
        for e in [a, b, c, d] {
            if e.0 < Ratio::from_integer(0) {
                return Err(Error::InvalidMultiplier(format!("negative exponent {e}")));
            }
        }
        Ok(MultiplierSpec { a, b, c, d })
    }

    /// `a/c + b/d` in exact arithmetic.
    pub fn hypothesis_sum(&self) -> Result<Ratio<i64>> {
        if self.c.0 == Ratio::from_integer(0) || self.d.0 == Ratio::from_integer(0) {
            return Err(Error::InvalidMultiplier(format!(
                "c = {} and d = {} must be positive",
                self.c, self.d
            )));
        }
        Ok(self.a.reduced() / self.c.reduced() + self.b.reduced() / self.d.reduced())
    }

    pub fn value(&self, k: Wavenumber) -> f64 {
        multiplier_value(self, k)
    }

    fn eval(&self, kh2: f64, k32: f64) -> f64 {
        let num = pow_or_one(1.0 + k32, self.a) * pow_or_one(kh2, self.b);
        let den = pow_or_zero(k32, self.c) + pow_or_zero(kh2, self.d);
        num / den
    }
}

fn pow_or_one(x: f64, e: Exponent) -> f64 {
    if *e.0.numer() == 0 {
        1.0
    } else {
        x.powf(e.as_f64())
    }
}

// 0^0 = 1 for the denominator terms; c, d > 0 whenever the hypothesis check succeeds.
fn pow_or_zero(x: f64, e: Exponent) -> f64 {
    if *e.0.numer() == 0 {
        1.0
    } else if x == 0.0 {
        0.0
    } else {
        x.powf(e.as_f64())
    }
}

/// Closed-form value of the multiplier at `k`; zero on `k1 = k2 = 0`.
pub fn multiplier_value(spec: &MultiplierSpec, k: Wavenumber) -> f64 {
    let kh2 = (k[0] * k[0] + k[1] * k[1]) as f64;
    if kh2 == 0.0 {
        return 0.0;
    }
    spec.eval(kh2, (k[2] * k[2]) as f64)
}

/// True iff `a/c + b/d ≤ 1`, decided exactly.
pub fn hypothesis_check(spec: &MultiplierSpec) -> Result<bool> {
    Ok(spec.hypothesis_sum()? <= Ratio::from_integer(1))
}

/// `max m(k)` over the cube `|k_i| ≤ K`.
pub fn lattice_sup(spec: &MultiplierSpec, kmax: i64) -> Result<f64> {
    if kmax < 8 {
        return Err(Error::InvalidArgument(format!("lattice bound K = {kmax} must be at least 8")));
    }
    // m depends on k1² + k2² and k3² only, so one octant with k1 ≥ k2 suffices.
    let mut best: f64 = 0.0;
    for k1 in 1..=kmax {
        for k2 in 0..=k1 {
            let kh2 = (k1 * k1 + k2 * k2) as f64;
            for k3 in 0..=kmax {
                best = best.max(spec.eval(kh2, (k3 * k3) as f64));
            }
        }
    }
    Ok(best)
}

/// `max over (k1, k2) of Σ_{|k3| ≤ K} m(k)²` over the cube `|k_i| ≤ K`.
///
/// Bounds the supremum in `z` of horizontal `L²` slices:
/// `sup_z ‖(m θ)(·,·,z)‖²_{L²} ≤ S · ‖θ‖₂² / 2π`.
pub fn column_square_sum_sup(spec: &MultiplierSpec, kmax: i64) -> Result<f64> {
    if kmax < 1 {
        return Err(Error::InvalidArgument(format!("lattice bound K = {kmax} must be positive")));
    }
    let mut best: f64 = 0.0;
    for k1 in 1..=kmax {
        for k2 in 0..=k1 {
            let kh2 = (k1 * k1 + k2 * k2) as f64;
            let mut sum = spec.eval(kh2, 0.0).powi(2);
            for k3 in 1..=kmax {
                sum += 2.0 * spec.eval(kh2, (k3 * k3) as f64).powi(2);
            }
            best = best.max(sum);
        }
    }
    Ok(best)
}

/// Grid and band used for the empirical `Lᵖ` ratio.
pub const EMPIRICAL_GRID: usize = 32;
pub const EMPIRICAL_BAND: (i64, i64) = (1, 10);

/// Largest `‖T_m f‖_p / ‖f‖_p` over seeded random band-limited `f`: an
/// empirical lower bound on the multiplier norm.
pub fn empirical_lp_ratio(spec: &MultiplierSpec, p: f64, trials: usize, seed: u64) -> Result<f64> {
    empirical_lp_ratio_with(|k| multiplier_value(spec, k), p, trials, seed)
}

/// [`empirical_lp_ratio`] for an arbitrary real even symbol.
pub fn empirical_lp_ratio_with(symbol: impl Fn(Wavenumber) -> f64, p: f64, trials: usize, seed: u64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let grid = Grid::cubic(EMPIRICAL_GRID)?;
    let mut weights = vec![0.0; grid.len()];
    grid.for_each_mode(|idx, k| weights[idx] = symbol(k));
    let mut best: f64 = 0.0;
    for trial in 0..trials {
        let f = random::band_limited(grid, EMPIRICAL_BAND.0, EMPIRICAL_BAND.1, seed.wrapping_add(trial as u64))?;
        let coeffs: Vec<Complex64> = f.coeffs().iter().zip(&weights).map(|(c, w)| c * w).collect();
        let mf = SpectralField::from_coeffs(grid, coeffs)?;
        let denom = norms::lp_norm(&f.inverse_unchecked(), p)?;
        if denom > 0.0 {
            best = best.max(norms::lp_norm(&mf.inverse_unchecked(), p)? / denom);
        }
    }
    Ok(best)
}

/// Named family member with a description of the estimate it controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    #[serde(flatten)]
    pub spec: MultiplierSpec,
    pub source_anchor: String,
}

fn entry(name: &str, e: [(i64, i64); 4], anchor: &str) -> CatalogEntry {
    let [a, b, c, d] = e.map(|(n, q)| Exponent::new(n, q));
    CatalogEntry {
        name: name.to_string(),
        spec: MultiplierSpec { a, b, c, d },
        source_anchor: anchor.to_string(),
    }
}

/// The multipliers behind the velocity estimates.
///
/// E3 and E4 majorize to the same family member: `|k2| |k3| (k1² + k2²)^{1/2}`
/// and `|k1| |k2| |k3|` are both bounded by `(1 + k3²)^{1/2} (k1² + k2²)`.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        entry(
            "E1",
            [(5, 9), (13, 3), (2, 1), (6, 1)],
            "square of (1-dzz)^{5/18} A^{1/6} w; sup_z |w|_{L3(xy)} <= C |theta|_2",
        ),
        entry(
            "E2",
            [(1, 4), (13, 6), (1, 1), (3, 1)],
            "(1-dzz)^{1/4} A^{1/6} w; sup_z |w|_{L6(xy)} <= C |theta|_3",
        ),
        entry(
            "E3",
            [(3, 5), (6, 5), (1, 1), (3, 1)],
            "(1-dzz)^{1/10} A^{1/5} u against A^{-1/2} theta; |u|_{10/3} <= C |A^{-1/2} theta|_2",
        ),
        entry(
            "E4",
            [(3, 5), (6, 5), (1, 1), (3, 1)],
            "(1-dzz)^{1/10} A^{1/5} dx u; |dx u|_inf <= C |theta|_6",
        ),
        entry(
            "E5",
            [(1, 3), (2, 1), (1, 1), (3, 1)],
            "(1-dzz)^{1/3} A^{-1/2} w against A^{-1/2} theta",
        ),
        entry(
            "W",
            [(0, 1), (2, 1), (1, 1), (3, 1)],
            "w = m theta; exact vertical-velocity transfer factor",
        ),
        entry(
            "E6",
            [(1, 2), (3, 2), (1, 1), (3, 1)],
            "A u against theta; |Delta_h u|_2 <= C |theta|_2",
        ),
        entry(
            "E7",
            [(0, 1), (3, 1), (1, 1), (3, 1)],
            "A w against theta; |Delta_h w|_2 <= C |theta|_2",
        ),
    ]
}

/// Catalog entry by name.
pub fn catalog_entry(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.name == name)
}

/// The catalog as a pretty-printed JSON array.
pub fn catalog_json() -> Result<String> {
    Ok(serde_json::to_string_pretty(&catalog())?)
}
