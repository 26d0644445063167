//! Runtime norms, energy budget, embedding ratios and Grönwall envelopes.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostic::velocity_factors;
use crate::error::{Error, Result};
use crate::mean;
use crate::spectral::{norms, Grid, PhysicalField, SpectralField, VOLUME};

/// Ratios of the velocity-from-temperature estimates, left side over right side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRatios {
    /// `max_z ‖w(z)‖_{L³(xy)} / ‖θ′‖₂`
    pub ratio_417: f64,
    /// `max_z ‖w(z)‖_{L⁶(xy)} / ‖θ′‖₃`
    pub ratio_426: f64,
    /// `‖(u, v)‖₆ / ‖θ′‖₆`
    pub ratio_429u: f64,
    /// `‖w‖₆ / ‖θ′‖₆`
    pub ratio_429w: f64,
    /// `‖(∂x u, ∂x v)‖_∞ / ‖θ′‖₆`
    pub ratio_56: f64,
    /// `(‖∂x w‖_∞ + ‖w‖_∞) / ‖θ′‖₆`
    pub ratio_58: f64,
}

impl EmbeddingRatios {
    pub const NAMES: [&'static str; 6] = ["ratio_417", "ratio_426", "ratio_429u", "ratio_429w", "ratio_56", "ratio_58"];

    pub fn values(&self) -> [f64; 6] {
        [self.ratio_417, self.ratio_426, self.ratio_429u, self.ratio_429w, self.ratio_56, self.ratio_58]
    }
}

/// Envelope values and pass flags at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    /// Bound on `‖θ′‖₃³`.
    pub env3: f64,
    /// Bound on `‖θ′‖₆⁶`.
    pub env6: f64,
    /// Bound on `‖∇ₕθ′‖₃³`.
    pub envg3: f64,
    pub env3_pass: bool,
    pub env6_pass: bool,
    pub envg3_pass: bool,
}

/// Diagnostics of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub t: f64,
    pub l2: f64,
    pub l3: f64,
    pub l6: f64,
    pub grad_l3: f64,
    pub dual: f64,
    /// `(∫ θ̄_z² dz)^{1/2}`
    pub mean_grad_l2: f64,
    /// `ε² ‖∇ₕθ′‖₂²`
    pub diss_h: f64,
    /// `4π² ∫ θ̄_z² dz`
    pub diss_z: f64,
    /// `|d/dt ½‖θ′‖₂² + diss_h + diss_z|`, filled in once the series is known.
    pub budget_residual: Option<f64>,
    pub ratios: EmbeddingRatios,
    pub envelopes: Option<EnvelopeSample>,
}

/// `‖A^{-1/2} θ′‖₂`.
pub fn dual_norm(theta: &SpectralField) -> Result<f64> {
    theta.require_zero_horizontal_mean()?;
    let mut s = 0.0;
    theta.grid().for_each_mode(|idx, k| {
        let kh2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        if kh2 > 0.0 {
            s += theta.coeffs()[idx].norm_sqr() / kh2;
        }
    });
    Ok((VOLUME * s).sqrt())
}

/// `‖∇ₕθ′‖₂²` with the Nyquist convention of the horizontal Laplacian.
pub fn grad_h_energy(theta: &SpectralField) -> f64 {
    let grid = theta.grid();
    let mut s = 0.0;
    grid.for_each_mode(|idx, k| {
        if !horizontal_nyquist(grid, k) {
            s += (k[0] * k[0] + k[1] * k[1]) as f64 * theta.coeffs()[idx].norm_sqr();
        }
    });
    VOLUME * s
}

fn horizontal_nyquist(grid: Grid, k: [i64; 3]) -> bool {
    2 * k[0].unsigned_abs() as usize == grid.nx() || 2 * k[1].unsigned_abs() as usize == grid.ny()
}

struct PhysicalSet {
    theta: PhysicalField,
    tx: PhysicalField,
    ty: PhysicalField,
    u: PhysicalField,
    v: PhysicalField,
    w: PhysicalField,
    ux: PhysicalField,
    vx: PhysicalField,
    wx: PhysicalField,
}

fn physical_set(theta: &SpectralField) -> PhysicalSet {
    let grid = theta.grid();
    let n = grid.len();
    let zero = Complex64::default();
    let mut c: [Vec<Complex64>; 8] = std::array::from_fn(|_| vec![zero; n]);
    grid.for_each_mode(|idx, k| {
        let t = theta.coeffs()[idx];
        let (mu, mv, mw) = velocity_factors(grid, k);
        let ikx = if 2 * k[0].unsigned_abs() as usize == grid.nx() { zero } else { Complex64::new(0.0, k[0] as f64) };
        let iky = if 2 * k[1].unsigned_abs() as usize == grid.ny() { zero } else { Complex64::new(0.0, k[1] as f64) };
        c[0][idx] = ikx * t;
        c[1][idx] = iky * t;
        c[2][idx] = t * mu;
        c[3][idx] = t * mv;
        c[4][idx] = t * mw;
        c[5][idx] = ikx * t * mu;
        c[6][idx] = ikx * t * mv;
        c[7][idx] = ikx * t * mw;
    });
    let [tx, ty, u, v, w, ux, vx, wx] = c.map(|v| SpectralField::from_coeffs(grid, v).expect("grid length"));
    let (tx, ty) = SpectralField::inverse_pair(&tx, &ty);
    let (u, v) = SpectralField::inverse_pair(&u, &v);
    let (w, th) = SpectralField::inverse_pair(&w, theta);
    let (ux, vx) = SpectralField::inverse_pair(&ux, &vx);
    let wx = wx.inverse_unchecked();
    PhysicalSet { theta: th, tx, ty, u, v, w, ux, vx, wx }
}

fn ratios_from(p: &PhysicalSet, l2: f64, l3: f64, l6: f64) -> Result<EmbeddingRatios> {
    let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    let w3 = max(norms::horizontal_slice_norms(&p.w, 3.0)?);
    let w6 = max(norms::horizontal_slice_norms(&p.w, 6.0)?);
    Ok(EmbeddingRatios {
        ratio_417: w3 / l2,
        ratio_426: w6 / l3,
        ratio_429u: norms::vector_lp_norm(&[&p.u, &p.v], 6.0)? / l6,
        ratio_429w: norms::lp_norm(&p.w, 6.0)? / l6,
        ratio_56: norms::vector_lp_norm(&[&p.ux, &p.vx], f64::INFINITY)? / l6,
        ratio_58: (p.wx.max_abs() + p.w.max_abs()) / l6,
    })
}

/// The named embedding ratios of a nonzero zero-horizontal-mean field.
pub fn embedding_ratios(theta: &SpectralField) -> Result<EmbeddingRatios> {
    theta.require_zero_horizontal_mean()?;
    let p = physical_set(theta);
    let (l2, l3, l6) = (
        norms::lp_norm(&p.theta, 2.0)?,
        norms::lp_norm(&p.theta, 3.0)?,
        norms::lp_norm(&p.theta, 6.0)?,
    );
    if l2 == 0.0 || l3 == 0.0 || l6 == 0.0 {
        return Err(Error::ZeroField);
    }
    ratios_from(&p, l2, l3, l6)
}

/// Norms, budget terms and ratios of a state at time `t`. Ratios of the zero
/// field are reported as zero.
pub fn measure(theta: &SpectralField, t: f64, epsilon: f64) -> Result<InvariantReport> {
    theta.require_zero_horizontal_mean()?;
    let p = physical_set(theta);
    let l2 = norms::lp_norm(&p.theta, 2.0)?;
    let l3 = norms::lp_norm(&p.theta, 3.0)?;
    let l6 = norms::lp_norm(&p.theta, 6.0)?;
    let grad_l3 = norms::vector_lp_norm(&[&p.tx, &p.ty], 3.0)?;
    let flux = mean::heat_flux(&p.theta, &p.w)?;
    let dz = mean::mean_gradient(&flux);
    let mean_grad_sq = mean::profile_inner(&dz, &dz);
    let ratios = if l2 > 0.0 && l3 > 0.0 && l6 > 0.0 {
        ratios_from(&p, l2, l3, l6)?
    } else {
        EmbeddingRatios::default()
    };
    Ok(InvariantReport {
        t,
        l2,
        l3,
        l6,
        grad_l3,
        dual: dual_norm(theta)?,
        mean_grad_l2: mean_grad_sq.sqrt(),
        diss_h: epsilon * epsilon * grad_h_energy(theta),
        diss_z: 4.0 * PI * PI * mean_grad_sq,
        budget_residual: None,
        ratios,
        envelopes: None,
    })
}

/// Hölder on the fixed-volume box: `l2 ≤ V^{1/6} l3` and `l3 ≤ V^{1/6} l6`.
pub fn holder_consistent(r: &InvariantReport) -> bool {
    let c = VOLUME.powf(1.0 / 6.0) * (1.0 + 1e-12);
    r.l2 <= c * r.l3 + 1e-300 && r.l3 <= c * r.l6 + 1e-300
}

/// Weights of the derivative at `x0` interpolating the nodes `x`.
pub fn derivative_weights(x0: f64, x: &[f64]) -> Vec<f64> {
    // Fornberg's recursion, first derivative only.
    let n = x.len();
    let mut c = vec![[0.0f64; 2]; n];
    if n == 0 {
        return Vec::new();
    }
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// `d/dt ½‖θ′‖₂²` at every sample by five-point finite differences
/// (centered inside, one-sided at the ends).
pub fn energy_rate(reports: &[InvariantReport]) -> Result<Vec<f64>> {
    let n = reports.len();
    if n < 2 {
        return Err(Error::EmptySeries);
    }
    let t: Vec<f64> = reports.iter().map(|r| r.t).collect();
    let e: Vec<f64> = reports.iter().map(|r| 0.5 * r.l2 * r.l2).collect();
    let width = n.min(5);
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let w = derivative_weights(t[i], &t[start..start + width]);
            w.iter().zip(&e[start..start + width]).map(|(a, b)| a * b).sum()
        })
        .collect())
}

/// Fills `budget_residual` on every report; a single-sample series is left untouched.
pub fn fill_budget_residuals(reports: &mut [InvariantReport]) {
    if let Ok(rate) = energy_rate(reports) {
        for (r, d) in reports.iter_mut().zip(rate) {
            r.budget_residual = Some((d + r.diss_h + r.diss_z).abs());
        }
    }
}

/// Envelope constants measured on the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub slack: f64,
    pub c3: f64,
    pub c6: f64,
    pub cg: f64,
}

pub const DEFAULT_SLACK: f64 = 10.0;

impl Calibration {
    /// Constants from the ratios of the first report.
    ///
    /// `c3` and `c6` follow the Hölder/Young chain of the `L³` and `L⁶` energy
    /// estimates with the embedding constant replaced by the measured ratio;
    /// `cg` combines the two gradient ratios.
    pub fn from_report(r0: &InvariantReport, slack: f64) -> Self {
        let area = 4.0 * PI * PI;
        Calibration {
            slack,
            c3: 6.0 * area.powf(-2.0 / 3.0) * r0.ratios.ratio_417.powi(2),
            c6: 12.0 * area.powf(-1.0 / 3.0) * r0.ratios.ratio_426.powi(2),
            cg: 3.0 * (r0.ratios.ratio_56 + r0.ratios.ratio_58.powi(2)),
        }
    }
}

/// Envelope values and pass flags at every sample of a series.
pub fn gronwall_envelopes(reports: &[InvariantReport], cal: &Calibration) -> Result<Vec<EnvelopeSample>> {
    let r0 = reports.first().ok_or(Error::EmptySeries)?;
    let t0 = r0.t;
    let k3 = cal.slack * cal.c3 * r0.l2 * r0.l2;
    let e3 = |t: f64| r0.l3.powi(3) * (k3 * (t - t0)).exp();
    let e6 = |t: f64| {
        let s = t - t0;
        let integral = if k3 == 0.0 { s } else { ((2.0 * k3 * s / 3.0).exp() - 1.0) / (2.0 * k3 / 3.0) };
        r0.l6.powi(6) * (cal.slack * cal.c6 * r0.l3 * r0.l3 * integral).exp()
    };
    let rate = |t: f64| e6(t).powf(1.0 / 3.0) + 1.0;
    let tol = 1.0 + 1e-9;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(reports.len());
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            let tp = reports[i - 1].t;
            acc += 0.5 * (r.t - tp) * (rate(tp) + rate(r.t));
        }
        let (env3, env6) = (e3(r.t), e6(r.t));
        let envg3 = r0.grad_l3.powi(3) * (cal.slack * cal.cg * acc).exp();
        out.push(EnvelopeSample {
            env3,
            env6,
            envg3,
            env3_pass: r.l3.powi(3) <= env3 * tol,
            env6_pass: r.l6.powi(6) <= env6 * tol,
            envg3_pass: r.grad_l3.powi(3) <= envg3 * tol,
        });
    }
    Ok(out)
}

/// Fills budget residuals and envelopes in place.
pub fn finalize_series(reports: &mut [InvariantReport], slack: f64) -> Result<Calibration> {
    let r0 = reports.first().ok_or(Error::EmptySeries)?;
    let cal = Calibration::from_report(r0, slack);
    fill_budget_residuals(reports);
    let env = gronwall_envelopes(reports, &cal)?;
    for (r, e) in reports.iter_mut().zip(env) {
        r.envelopes = Some(e);
    }
    Ok(cal)
}

pub const SERIES_COLUMNS: [&str; 19] = [
    "t",
    "l2",
    "l3",
    "l6",
    "grad_l3",
    "dual",
    "mean_grad_l2",
    "diss_h",
    "diss_z",
    "budget_residual",
    "ratio_417",
    "ratio_426",
    "ratio_429u",
    "ratio_429w",
    "ratio_56",
    "ratio_58",
    "env3_pass",
    "env6_pass",
    "envg3_pass",
];

/// Writes `series.csv`. Missing values are left empty.
pub fn write_series_csv<W: Write>(reports: &[InvariantReport], mut out: W) -> Result<()> {
    writeln!(out, "{}", SERIES_COLUMNS.join(","))?;
    for r in reports {
        let mut row: Vec<String> = [r.t, r.l2, r.l3, r.l6, r.grad_l3, r.dual, r.mean_grad_l2, r.diss_h, r.diss_z]
            .iter()
            .map(|v| format!("{v:?}"))
            .collect();
        row.push(r.budget_residual.map(|v| format!("{v:?}")).unwrap_or_default());
        row.extend(r.ratios.values().iter().map(|v| format!("{v:?}")));
        match r.envelopes {
            Some(e) => row.extend([e.env3_pass, e.env6_pass, e.envg3_pass].iter().map(|b| b.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
