//! Sweeps over the diffusivity and the Galerkin cap, and twin runs for
//! continuous dependence on the initial data.

use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::diagnostic::multiplier::{self, catalog_entry};
use crate::diagnostic::velocity_factors;
use crate::error::{Error, Result};
use crate::evolution::{SimConfig, Simulation};
use crate::invariants;
use crate::mean;
use crate::spectral::{random, SpectralField, VOLUME};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Lattice bound used for the catalog constants of the error checks.
pub const CATALOG_K: i64 = 64;

/// How the regularized runs are started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Same data as the reference.
    Matched,
    /// Reference data plus a fixed direction of `L²` size `ε`.
    Scaled,
}

impl std::str::FromStr for InitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matched" => Ok(InitMode::Matched),
            "scaled" => Ok(InitMode::Scaled),
            _ => Err(Error::InvalidArgument(format!("unknown init mode {s:?}"))),
        }
    }
}

/// Error metrics between a member and the reference at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSample {
    pub t: f64,
    /// `‖θ′_m − θ′_ref‖₂`
    pub l2: f64,
    /// `‖∂z(θ̄_m − θ̄_ref)‖_{L²(0,2π)}`
    pub mean_h1: f64,
    /// `‖Δₕ(U_m − U_ref)‖₂ + ‖Δₕ(w_m − w_ref)‖₂`
    pub velocity_h2: f64,
    /// Catalog bound on `mean_h1`.
    pub mean_h1_bound: f64,
    /// Catalog bound on `velocity_h2`.
    pub velocity_h2_bound: f64,
}

/// Errors of one sweep member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberResult {
    pub parameter: f64,
    pub l2_error: f64,
    pub mean_h1_error: f64,
    pub velocity_h2_error: f64,
    /// Every sample satisfies both catalog bounds.
    pub bounds_hold: bool,
    #[serde(skip)]
    pub samples: Vec<ErrorSample>,
}

/// Least-squares fit of `ln error` against `ln parameter` with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Fitted `y(t) ≈ (C₂/C₁)(e^{C₁t} − 1)` with the envelope check at the given slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallFit {
    pub c1: f64,
    pub c2: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Catalog constants used by the per-sample bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorConstants {
    /// `sup m_{E6} + sup m_{E7}`
    pub velocity: f64,
    /// `sqrt(S_w / 8π³) / 2π` with `S_w` the column sum of the `w` multiplier
    pub mean: f64,
}

impl ErrorConstants {
    pub fn from_catalog() -> Result<Self> {
        let spec = |name: &str| {
            catalog_entry(name)
                .map(|e| e.spec)
                .ok_or_else(|| Error::InvalidMultiplier(format!("missing catalog entry {name}")))
        };
        let velocity = multiplier::lattice_sup(&spec("E6")?, CATALOG_K)? + multiplier::lattice_sup(&spec("E7")?, CATALOG_K)?;
        let sw = multiplier::column_square_sum_sup(&spec("W")?, CATALOG_K)?;
        let mean = (sw / VOLUME).sqrt() / (2.0 * std::f64::consts::PI);
        Ok(ErrorConstants { velocity, mean })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// `"epsilon"` or `"mode_cap"`.
    pub parameter_name: String,
    pub members: Vec<MemberResult>,
    pub slope: Option<SlopeFit>,
    /// Errors strictly decrease along the parameter list.
    pub monotone: bool,
    pub gronwall: Option<GronwallFit>,
    pub constants: ErrorConstants,
    pub config: SimConfig,
    pub tool_version: String,
}

/// Bound tolerance of the per-sample catalog checks.
pub const BOUND_SLACK: f64 = 1e-10;

/// Closure gradient of a state on its z levels, with `‖θ′‖₂`.
fn closure(theta: &SpectralField) -> (Vec<f64>, f64) {
    let grid = theta.grid();
    let w = theta.map_modes(|k, c| c * velocity_factors(grid, k).2);
    let (w, th) = SpectralField::inverse_pair(&w, theta);
    let flux = mean::horizontal_average_of_product(grid, th.values(), w.values());
    (mean::mean_gradient(&flux), theta.l2_norm())
}

fn compare(t: f64, member: &SpectralField, reference: &SpectralField, c: &ErrorConstants) -> Result<ErrorSample> {
    let diff = member.sub(reference)?;
    let grid = diff.grid();
    let (mut su, mut sw) = (0.0, 0.0);
    grid.for_each_mode(|idx, k| {
        let (mu, mv, mw) = velocity_factors(grid, k);
        let kh4 = ((k[0] * k[0] + k[1] * k[1]) as f64).powi(2);
        let e = diff.coeffs()[idx].norm_sqr();
        su += kh4 * (mu * mu + mv * mv) * e;
        sw += kh4 * mw * mw * e;
    });
    let (dz_m, n_m) = closure(member);
    let (dz_r, n_r) = closure(reference);
    let d: Vec<f64> = dz_m.iter().zip(&dz_r).map(|(a, b)| a - b).collect();
    let l2 = diff.l2_norm();
    Ok(ErrorSample {
        t,
        l2,
        mean_h1: mean::profile_inner(&d, &d).sqrt(),
        velocity_h2: (VOLUME * su).sqrt() + (VOLUME * sw).sqrt(),
        mean_h1_bound: c.mean * l2 * (n_m + n_r),
        velocity_h2_bound: c.velocity * l2,
    })
}

fn summarize(parameter: f64, samples: Vec<ErrorSample>) -> MemberResult {
    let sup = |f: fn(&ErrorSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    MemberResult {
        parameter,
        l2_error: sup(|s| s.l2),
        mean_h1_error: sup(|s| s.mean_h1),
        velocity_h2_error: sup(|s| s.velocity_h2),
        bounds_hold: samples.iter().all(|s| {
            s.mean_h1 <= s.mean_h1_bound + BOUND_SLACK && s.velocity_h2 <= s.velocity_h2_bound + BOUND_SLACK
        }),
        samples,
    }
}

/// Advances the reference and all members with the reference's steps,
/// comparing at the reference's diagnostics cadence.
fn lockstep(reference: Simulation, members: Vec<Simulation>, c: &ErrorConstants) -> Result<Vec<Vec<ErrorSample>>> {
    let mut reference = reference;
    let mut members = members;
    let mut samples: Vec<Vec<ErrorSample>> = vec![Vec::new(); members.len()];
    let record = |reference: &Simulation, members: &[Simulation], samples: &mut [Vec<ErrorSample>]| -> Result<()> {
        let r = &reference.state().theta;
        let t = reference.state().t;
        let rows: Vec<ErrorSample> = members
            .par_iter()
            .map(|m| compare(t, &m.state().theta, r, c))
            .collect::<Result<_>>()?;
        for (s, row) in samples.iter_mut().zip(rows) {
            s.push(row);
        }
        Ok(())
    };
    record(&reference, &members, &mut samples)?;
    while !reference.is_finished() {
        let dt = reference.next_dt()?;
        reference.advance(dt)?;
        members.par_iter_mut().map(|m| m.advance(dt)).collect::<Result<Vec<()>>>()?;
        if reference.on_cadence() {
            record(&reference, &members, &mut samples)?;
        }
    }
    Ok(samples)
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points. The interval needs at least three.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (mut ci_low, mut ci_high) = (None, None);
    if n > 2 {
        let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        let se = (rss / (nf - 2.0) / sxx).sqrt();
        if let Ok(t) = StudentsT::new(0.0, 1.0, nf - 2.0) {
            let q = t.inverse_cdf(0.975);
            ci_low = Some(slope - q * se);
            ci_high = Some(slope + q * se);
        }
    }
    Some(SlopeFit { slope, intercept, ci_low, ci_high })
}

fn gronwall_basis(c1: f64, t: f64) -> f64 {
    if c1.abs() < 1e-12 {
        t
    } else {
        (c1 * t).exp_m1() / c1
    }
}

/// Fits `y(t) ≈ (C₂/C₁)(e^{C₁t} − 1)` by a scan over `C₁` with the optimal
/// `C₂` in closed form, then checks `y ≤ slack · model` at every sample.
pub fn fit_gronwall(t: &[f64], y: &[f64], slack: f64) -> Option<GronwallFit> {
    if t.len() != y.len() || t.len() < 2 {
        return None;
    }
    let mut best: Option<(f64, f64, f64)> = None;
    let candidates = std::iter::once(0.0).chain((-60..=60).map(|i| 10f64.powf(i as f64 / 20.0)));
    for c1 in candidates {
        let g: Vec<f64> = t.iter().map(|&s| gronwall_basis(c1, s)).collect();
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg == 0.0 || !gg.is_finite() {
            continue;
        }
        let c2 = g.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / gg;
        let rss: f64 = g.iter().zip(y).map(|(a, b)| (b - c2 * a).powi(2)).sum();
        if best.is_none_or(|b| rss < b.2) {
            best = Some((c1, c2, rss));
        }
    }
    let (c1, c2, _) = best?;
    let pass = t
        .iter()
        .zip(y)
        .all(|(&s, &v)| v <= slack * c2 * gronwall_basis(c1, s) * (1.0 + 1e-12) + 1e-300);
    Some(GronwallFit { c1, c2, slack, pass })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Fixed unit-`L²` direction for scaled perturbations.
fn perturbation_direction(config: &SimConfig) -> Result<SpectralField> {
    let mut d = random::band_limited(config.grid, 1, 2, config.seed.wrapping_add(0x5eed))?;
    d.project_zero_horizontal_mean();
    let mut d = config.project_field(&d);
    let n = d.l2_norm();
    if n == 0.0 {
        return Err(Error::ZeroField);
    }
    d.scale(1.0 / n);
    Ok(d)
}

/// Runs the `ε = 0` reference and one member per `ε`, all with the reference's
/// time steps.
pub fn sweep_epsilon(base: &SimConfig, eps_list: &[f64], mode: InitMode) -> Result<SweepResult> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon list".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::InvalidArgument("every epsilon must lie in (0, 1]".into()));
    }
    if !strictly_decreasing(eps_list) {
        return Err(Error::InvalidArgument("epsilon list must be strictly decreasing".into()));
    }
    let constants = ErrorConstants::from_catalog()?;
    let reference_cfg = SimConfig { epsilon: 0.0, ..base.clone() };
    let reference = Simulation::new(reference_cfg.clone())?;
    let theta0 = reference.state().theta.clone();
    let direction = match mode {
        InitMode::Matched => None,
        InitMode::Scaled => Some(perturbation_direction(base)?),
    };
    let members = eps_list
        .iter()
        .map(|&eps| {
            let mut init = theta0.clone();
            if let Some(d) = &direction {
                init.axpy(eps, d)?;
            }
            Simulation::from_field(SimConfig { epsilon: eps, ..base.clone() }, &init)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = lockstep(reference, members, &constants)?;
    let members: Vec<MemberResult> = eps_list.iter().zip(samples).map(|(&e, s)| summarize(e, s)).collect();

    let errs: Vec<f64> = members.iter().map(|m| m.l2_error).collect();
    let slope = fit_loglog(eps_list, &errs);
    let gronwall = if mode == InitMode::Matched {
        let times: Vec<f64> = members[0].samples.iter().map(|s| s.t).collect();
        let y: Vec<f64> = (0..times.len())
            .map(|i| {
                members
                    .iter()
                    .map(|m| (m.samples[i].l2 / m.parameter).powi(2))
                    .fold(0.0, f64::max)
            })
            .collect();
        fit_gronwall(&times, &y, invariants::DEFAULT_SLACK)
    } else {
        None
    };
    Ok(SweepResult {
        parameter_name: "epsilon".into(),
        monotone: strictly_decreasing(&errs),
        members,
        slope,
        gronwall,
        constants,
        config: base.clone(),
        tool_version: TOOL_VERSION.into(),
    })
}

/// Runs the base configuration under each Galerkin cap; the largest cap is
/// the reference.
pub fn sweep_resolution(base: &SimConfig, mode_counts: &[i64]) -> Result<SweepResult> {
    if mode_counts.is_empty() {
        return Err(Error::InvalidArgument("empty mode list".into()));
    }
    if mode_counts.iter().any(|m| *m < 1) || mode_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("mode counts must be positive and increasing".into()));
    }
    let constants = ErrorConstants::from_catalog()?;
    let finest = *mode_counts.last().expect("nonempty");
    let with_cap = |m: i64| SimConfig { mode_cap: Some(m), ..base.clone() };
    let reference = Simulation::new(with_cap(finest))?;
    let members = mode_counts
        .iter()
        .map(|&m| Simulation::new(with_cap(m)))
        .collect::<Result<Vec<_>>>()?;
    let samples = lockstep(reference, members, &constants)?;
    let members: Vec<MemberResult> = mode_counts
        .iter()
        .zip(samples)
        .map(|(&m, s)| summarize(m as f64, s))
        .collect();
    let errs: Vec<f64> = members.iter().map(|m| m.l2_error).collect();
    let params: Vec<f64> = mode_counts.iter().map(|m| *m as f64).collect();
    Ok(SweepResult {
        parameter_name: "mode_cap".into(),
        slope: fit_loglog(&params[..params.len() - 1], &errs[..errs.len() - 1]),
        monotone: errs.windows(2).all(|w| w[1] <= w[0]),
        members,
        gronwall: None,
        constants,
        config: base.clone(),
        tool_version: TOOL_VERSION.into(),
    })
}

/// Writes `sweep.csv` with the parameter and the three sup-in-time errors.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(out, "{},l2_error,mean_h1_error,velocity_h2_error", result.parameter_name)?;
    for m in &result.members {
        writeln!(out, "{:?},{:?},{:?},{:?}", m.parameter, m.l2_error, m.mean_h1_error, m.velocity_h2_error)?;
    }
    Ok(())
}

/// Perturbation `amplitude · cos(k·x)` normalized in `L²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub mode: [i64; 3],
}

impl Perturbation {
    pub fn field(&self, config: &SimConfig) -> Result<SpectralField> {
        let k = self.mode;
        if k[0] == 0 && k[1] == 0 {
            return Err(Error::NonzeroHorizontalMean(self.amplitude.abs()));
        }
        let grid = config.grid;
        if grid.mode_index(k).is_none() || grid.is_nyquist(k) {
            return Err(Error::InvalidArgument(format!("perturbation mode {k:?} is not resolved")));
        }
        let mut f = SpectralField::zeros(grid);
        if self.amplitude != 0.0 {
            // cos(k·x) has L² norm sqrt(VOLUME / 2)
            let c = self.amplitude / (2.0 * (VOLUME / 2.0).sqrt());
            f.set_mode_pair(k, Complex64::new(c, 0.0))?;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwinSample {
    pub t: f64,
    pub delta_l2: f64,
    pub delta_dual: f64,
    pub half_l2: f64,
    /// `slack · exp(C t) · ‖δ₀‖₂²`
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwinReport {
    pub perturbation: Perturbation,
    /// Least-squares rate of `ln(‖δ‖₂² / ‖δ₀‖₂²)` against `t`.
    pub rate: f64,
    /// The same for the dual norm.
    pub rate_dual: f64,
    /// `sup_t ‖δ_{1/2}‖₂ / sup_t ‖δ‖₂`
    pub response_ratio: f64,
    /// Response ratio within `0.5 ± 0.05`.
    pub linear_response: bool,
    /// Response ratio outside `[0.3, 0.7]`.
    pub out_of_regime: bool,
    pub slack: f64,
    pub envelope_pass: bool,
    pub samples: Vec<TwinSample>,
    pub config: SimConfig,
    pub tool_version: String,
}

fn rate_through_origin(t: &[f64], y: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        if b.is_finite() {
            num += a * b;
            den += a * a;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Runs the base data, the base plus `δ₀`, and the base plus `δ₀/2`.
pub fn twin_run(base: &SimConfig, delta: Perturbation, slack: f64) -> Result<TwinReport> {
    let reference = Simulation::new(base.clone())?;
    let theta0 = reference.state().theta.clone();
    let d0 = delta.field(base)?;
    let start = |s: f64| -> Result<Simulation> {
        let mut f = theta0.clone();
        f.axpy(s, &d0)?;
        Simulation::from_field(base.clone(), &f)
    };
    let members = vec![start(1.0)?, start(0.5)?];
    let samples = lockstep_twin(reference, members)?;

    let d0_l2 = samples.first().map(|s| s.0).unwrap_or(0.0);
    let d0_dual = samples.first().map(|s| s.1).unwrap_or(0.0);
    let t: Vec<f64> = samples.iter().map(|s| s.3).collect();
    let log_ratio = |v: f64, v0: f64| if v0 > 0.0 { (v * v / (v0 * v0)).ln() } else { f64::NAN };
    let rate = rate_through_origin(&t, &samples.iter().map(|s| log_ratio(s.0, d0_l2)).collect::<Vec<_>>());
    let rate_dual = rate_through_origin(&t, &samples.iter().map(|s| log_ratio(s.1, d0_dual)).collect::<Vec<_>>());
    let sup_full = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let sup_half = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    let response_ratio = if sup_full > 0.0 { sup_half / sup_full } else { f64::NAN };
    let rows: Vec<TwinSample> = samples
        .iter()
        .map(|&(l2, dual, half, t)| TwinSample {
            t,
            delta_l2: l2,
            delta_dual: dual,
            half_l2: half,
            envelope: slack * (rate * t).exp() * d0_l2 * d0_l2,
        })
        .collect();
    let envelope_pass = rows.iter().all(|r| r.delta_l2 * r.delta_l2 <= r.envelope * (1.0 + 1e-12));
    Ok(TwinReport {
        perturbation: delta,
        rate,
        rate_dual,
        response_ratio,
        linear_response: (response_ratio - 0.5).abs() <= 0.05,
        out_of_regime: !(0.3..=0.7).contains(&response_ratio),
        slack,
        envelope_pass,
        samples: rows,
        config: base.clone(),
        tool_version: TOOL_VERSION.into(),
    })
}

/// `(‖δ‖₂, ‖A^{-1/2}δ‖₂, ‖δ_{1/2}‖₂, t)` at the reference cadence.
fn lockstep_twin(reference: Simulation, members: Vec<Simulation>) -> Result<Vec<(f64, f64, f64, f64)>> {
    let mut reference = reference;
    let mut members = members;
    let mut out = Vec::new();
    let record = |r: &Simulation, m: &[Simulation]| -> Result<(f64, f64, f64, f64)> {
        let d = m[0].state().theta.sub(&r.state().theta)?;
        let h = m[1].state().theta.sub(&r.state().theta)?;
        Ok((d.l2_norm(), invariants::dual_norm(&d)?, h.l2_norm(), r.state().t))
    };
    out.push(record(&reference, &members)?);
    while !reference.is_finished() {
        let dt = reference.next_dt()?;
        reference.advance(dt)?;
        members.par_iter_mut().map(|m| m.advance(dt)).collect::<Result<Vec<()>>>()?;
        if reference.on_cadence() {
            out.push(record(&reference, &members)?);
        }
    }
    Ok(out)
}

/// Writes `twin.csv`.
pub fn write_twin_csv<W: Write>(report: &TwinReport, mut out: W) -> Result<()> {
    writeln!(out, "t,delta_l2,delta_dual,half_l2,envelope")?;
    for s in &report.samples {
        writeln!(out, "{:?},{:?},{:?},{:?},{:?}", s.t, s.delta_l2, s.delta_dual, s.half_l2, s.envelope)?;
    }
    Ok(())
}
