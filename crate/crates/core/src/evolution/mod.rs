//! Pseudo-spectral tendency and time stepping for `θ′`.

mod config;

pub use config::{AmplitudeNorm, AutoTag, InitialSpec, Integrator, SimConfig, TimeStep, Trig};

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::diagnostic::velocity_factors;
use crate::error::{Error, Result};
use crate::invariants::{self, InvariantReport};
use crate::mean;
use crate::spectral::{PhysicalField, SpectralField};

/// Largest `λ dt` on the negative real axis inside the RK4 stability region.
pub const RK4_REAL_STABILITY: f64 = 2.785;

/// Time and spectral temperature fluctuation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub theta: SpectralField,
}

/// Nonlinear part `−u·∇ₕθ′ − w θ̄_z`, formed on the grid, then filtered.
///
/// Returns the filtered spectrum and the closure gradient `θ̄_z` on the z levels.
pub(crate) fn advective_tendency(theta: &SpectralField, config: &SimConfig) -> (SpectralField, Vec<f64>) {
    let grid = theta.grid();
    let n = grid.len();
    let zero = Complex64::default();
    let mut c: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![zero; n]);
    let (nx, ny) = (grid.nx() as u64, grid.ny() as u64);
    grid.for_each_mode(|idx, k| {
        let t = theta.coeffs()[idx];
        let (mu, mv, mw) = velocity_factors(grid, k);
        c[0][idx] = t * mu;
        c[1][idx] = t * mv;
        c[2][idx] = t * mw;
        if 2 * k[0].unsigned_abs() != nx {
            c[3][idx] = Complex64::new(0.0, k[0] as f64) * t;
        }
        if 2 * k[1].unsigned_abs() != ny {
            c[4][idx] = Complex64::new(0.0, k[1] as f64) * t;
        }
    });
    let [u, v, w, tx, ty] = c.map(|v| SpectralField::from_coeffs(grid, v).expect("grid length"));
    let (u, v) = SpectralField::inverse_pair(&u, &v);
    let (tx, ty) = SpectralField::inverse_pair(&tx, &ty);
    let (w, th) = SpectralField::inverse_pair(&w, theta);

    let flux = mean::horizontal_average_of_product(grid, th.values(), w.values());
    let dz = mean::mean_gradient(&flux);
    let nz = grid.nz();
    let mut out = vec![0.0; n];
    let (u, v, w, tx, ty) = (u.values(), v.values(), w.values(), tx.values(), ty.values());
    for (col, chunk) in out.chunks_exact_mut(nz).enumerate() {
        let base = col * nz;
        for (l, o) in chunk.iter_mut().enumerate() {
            let i = base + l;
            *o = -(u[i] * tx[i] + v[i] * ty[i]) - w[i] * dz[l];
        }
    }
    let mut spec = config.project_field(&PhysicalField::from_raw(grid, out).forward_unchecked());
    spec.project_zero_horizontal_mean();
    (spec, dz)
}

/// `ε²Δₕ` eigenvalue at `k`, zero on horizontal Nyquist modes.
fn diffusion_rate(grid: crate::spectral::Grid, k: [i64; 3], eps2: f64) -> f64 {
    if 2 * k[0].unsigned_abs() as usize == grid.nx() || 2 * k[1].unsigned_abs() as usize == grid.ny() {
        0.0
    } else {
        -eps2 * (k[0] * k[0] + k[1] * k[1]) as f64
    }
}

/// Full right-hand side `−u·∇ₕθ′ − w θ̄_z + ε²Δₕθ′` with dealiased products.
pub fn tendency(theta: &SpectralField, epsilon: f64) -> Result<SpectralField> {
    theta.require_zero_horizontal_mean()?;
    let config = SimConfig::new(
        theta.grid(),
        epsilon,
        TimeStep::AUTO,
        0.0,
        InitialSpec::AnalyticSingleMode { mode: [1, 0, 0], amplitude: 0.0, parity: [Trig::Sin, Trig::Cos, Trig::Cos] },
    );
    Ok(full_tendency(theta, &config))
}

fn full_tendency(theta: &SpectralField, config: &SimConfig) -> SpectralField {
    let (mut nl, _) = advective_tendency(theta, config);
    let eps2 = config.epsilon * config.epsilon;
    if eps2 > 0.0 {
        let grid = theta.grid();
        let src = theta.coeffs();
        let dst = nl.coeffs_mut();
        grid.for_each_mode(|idx, k| dst[idx] += src[idx] * diffusion_rate(grid, k, eps2));
    }
    nl
}

fn lin(a: &SpectralField, terms: &[(f64, &SpectralField)]) -> SpectralField {
    let mut out = a.clone();
    for (s, f) in terms {
        out.axpy(*s, f).expect("same grid");
    }
    out
}

fn factors(theta: &SpectralField, eps2: f64, h: f64) -> Vec<f64> {
    let grid = theta.grid();
    let mut e = vec![1.0; grid.len()];
    grid.for_each_mode(|idx, k| e[idx] = (diffusion_rate(grid, k, eps2) * h).exp());
    e
}

fn scaled(f: &SpectralField, e: &[f64]) -> SpectralField {
    let mut out = f.clone();
    out.coeffs_mut().iter_mut().zip(e).for_each(|(c, s)| *c *= s);
    out
}

fn is_finite(f: &SpectralField) -> bool {
    f.coeffs().iter().all(|c| c.is_finite())
}

fn advance(state: &SimState, dt: f64, config: &SimConfig) -> Option<SimState> {
    let u = &state.theta;
    let h = dt;
    let eps2 = config.epsilon * config.epsilon;
    let next = match config.integrator {
        Integrator::IfRk4 if eps2 > 0.0 => {
            let e_half = factors(u, eps2, h / 2.0);
            let e_full = factors(u, eps2, h);
            let nonlin = |f: &SpectralField| advective_tendency(f, config).0;
            let k1 = nonlin(u);
            let k2 = nonlin(&scaled(&lin(u, &[(h / 2.0, &k1)]), &e_half));
            let k3 = nonlin(&lin(&scaled(u, &e_half), &[(h / 2.0, &k2)]));
            let k4 = nonlin(&lin(&scaled(u, &e_full), &[(h, &scaled(&k3, &e_half))]));
            let k23 = lin(&k2, &[(1.0, &k3)]);
            lin(
                &scaled(u, &e_full),
                &[(h / 6.0, &scaled(&k1, &e_full)), (h / 3.0, &scaled(&k23, &e_half)), (h / 6.0, &k4)],
            )
        }
        _ => {
            let rhs = |f: &SpectralField| full_tendency(f, config);
            let k1 = rhs(u);
            let k2 = rhs(&lin(u, &[(h / 2.0, &k1)]));
            let k3 = rhs(&lin(u, &[(h / 2.0, &k2)]));
            let k4 = rhs(&lin(u, &[(h, &k3)]));
            lin(u, &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)])
        }
    };
    let mut next = next;
    next.project_zero_horizontal_mean();
    is_finite(&next).then_some(SimState { t: state.t + dt, theta: next })
}

/// One step of the configured integrator.
pub fn step(state: &SimState, dt: f64, config: &SimConfig) -> Result<SimState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    advance(state, dt, config).ok_or_else(|| Error::BlowUp {
        t: state.t + dt,
        step: 0,
        last_valid: Box::new(state.clone()),
    })
}

/// Advective CFL step, further limited by RK4 stability of explicit diffusion
/// and by `config.max_dt`.
pub fn cfl_dt(state: &SimState, safety: f64, config: &SimConfig) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidArgument(format!("safety = {safety} must lie in (0, 1]")));
    }
    let grid = state.theta.grid();
    let [dx, dy, _] = grid.spacing();
    let (mut cu, mut cv) = (vec![Complex64::default(); grid.len()], vec![Complex64::default(); grid.len()]);
    grid.for_each_mode(|idx, k| {
        let (mu, mv, _) = velocity_factors(grid, k);
        cu[idx] = state.theta.coeffs()[idx] * mu;
        cv[idx] = state.theta.coeffs()[idx] * mv;
    });
    let (u, v) = SpectralField::inverse_pair(
        &SpectralField::from_coeffs(grid, cu)?,
        &SpectralField::from_coeffs(grid, cv)?,
    );
    let mut limit = f64::INFINITY;
    for (h, speed) in [(dx, u.max_abs()), (dy, v.max_abs())] {
        if speed > 0.0 {
            limit = limit.min(h / speed);
        }
    }
    let eps2 = config.epsilon * config.epsilon;
    if config.integrator == Integrator::Rk4 && eps2 > 0.0 {
        let kh2 = if config.dealias {
            grid.max_dealiased_kh2()
        } else {
            let (a, b) = ((grid.nx() / 2) as f64, (grid.ny() / 2) as f64);
            a * a + b * b
        };
        limit = limit.min(RK4_REAL_STABILITY / (eps2 * kh2));
    }
    Ok((safety * limit).min(config.max_dt))
}

/// Incremental driver; several simulations can be advanced in lockstep.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    state: SimState,
    steps: usize,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let theta = config.initial_state()?;
        Ok(Simulation { config, state: SimState { t: 0.0, theta }, steps: 0 })
    }

    /// Starts from a given field; the run's dealiasing and cap are applied.
    pub fn from_field(config: SimConfig, theta: &SpectralField) -> Result<Self> {
        config.validate()?;
        if theta.grid() != config.grid {
            return Err(Error::GridMismatch(theta.grid().dims(), config.grid.dims()));
        }
        theta.require_zero_horizontal_mean()?;
        let mut theta = config.project_field(theta);
        theta.project_zero_horizontal_mean();
        Ok(Simulation { config, state: SimState { t: 0.0, theta }, steps: 0 })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn fixed_steps(&self, dt: f64) -> usize {
        let n = (self.config.t_end / dt - 1e-9).ceil();
        n.max(0.0) as usize
    }

    pub fn is_finished(&self) -> bool {
        match self.config.dt {
            TimeStep::Fixed(dt) => self.steps >= self.fixed_steps(dt),
            TimeStep::Auto(_) => self.state.t >= self.config.t_end * (1.0 - 1e-12),
        }
    }

    /// Step size for the next step, never overshooting `t_end`.
    pub fn next_dt(&self) -> Result<f64> {
        let dt = match self.config.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto(_) => cfl_dt(&self.state, self.config.cfl_safety, &self.config)?,
        };
        Ok(dt.min(self.config.t_end - self.state.t))
    }

    /// Advances by `dt`; on blow-up the simulation keeps its last finite state.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
        }
        match advance(&self.state, dt, &self.config) {
            Some(mut next) => {
                self.steps += 1;
                if let TimeStep::Fixed(h) = self.config.dt {
                    if self.steps < self.fixed_steps(h) {
                        next.t = self.steps as f64 * h;
                    } else {
                        next.t = self.config.t_end;
                    }
                }
                self.state = next;
                Ok(())
            }
            None => Err(Error::BlowUp {
                t: self.state.t + dt,
                step: self.steps + 1,
                last_valid: Box::new(self.state.clone()),
            }),
        }
    }

    /// Takes one step of [`next_dt`](Self::next_dt).
    pub fn step(&mut self) -> Result<()> {
        let dt = self.next_dt()?;
        self.advance(dt)
    }

    pub fn measure(&self) -> Result<InvariantReport> {
        invariants::measure(&self.state.theta, self.state.t, self.config.epsilon)
    }

    /// Whether the current step index falls on the diagnostics cadence.
    pub fn on_cadence(&self) -> bool {
        self.steps.is_multiple_of(self.config.diagnostics_every) || self.is_finished()
    }
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    pub reports: Vec<InvariantReport>,
    pub calibration: invariants::Calibration,
}

/// One sampled point handed to a [`run_with`] observer.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
}

/// Runs to `t_end`, calling `observe` at the diagnostics cadence. Reports are
/// completed with budget residuals and envelopes at the end.
pub fn run_with(
    config: SimConfig,
    slack: f64,
    mut observe: impl FnMut(Sample, &SimState, &InvariantReport) -> Result<()>,
) -> Result<(Vec<InvariantReport>, invariants::Calibration)> {
    let mut sim = Simulation::new(config)?;
    let mut reports = Vec::new();
    let r0 = sim.measure()?;
    observe(Sample { step: 0, t: 0.0 }, sim.state(), &r0)?;
    reports.push(r0);
    while !sim.is_finished() {
        sim.step()?;
        if sim.on_cadence() {
            let r = sim.measure()?;
            observe(Sample { step: sim.steps(), t: sim.state().t }, sim.state(), &r)?;
            reports.push(r);
        }
    }
    let cal = invariants::finalize_series(&mut reports, slack)?;
    Ok((reports, cal))
}

/// Runs to `t_end`, keeping states and reports at the diagnostics cadence.
pub fn run(config: SimConfig) -> Result<Trajectory> {
    let mut states = Vec::new();
    let (reports, calibration) = run_with(config, invariants::DEFAULT_SLACK, |_, s, _| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory { states, reports, calibration })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, PhysicalField};

    fn field(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> SpectralField {
        PhysicalField::from_fn(grid, f).forward().unwrap()
    }

    fn single(mode: [i64; 3], amplitude: f64) -> InitialSpec {
        InitialSpec::AnalyticSingleMode { mode, amplitude, parity: [Trig::Sin, Trig::Cos, Trig::Cos] }
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn tendency_closed_forms() {
        let g = Grid::cubic(32).unwrap();
        let s = field(g, |x, _, _| 0.7 * x.sin());
        let t0 = tendency(&s, 0.0).unwrap();
        assert!(t0.max_abs() < 1e-14);
        let t1 = tendency(&s, 0.3).unwrap();
        let mut expect = s.clone();
        expect.scale(-0.09);
        assert!(max_diff(&t1, &expect) < 1e-14);

        let sc = field(g, |x, _, z| x.sin() * z.cos());
        let got = tendency(&sc, 0.0).unwrap();
        let expect = field(g, |x, _, z| -x.sin() * z.cos() * (2.0 * z).cos() / 16.0);
        assert!(max_diff(&got, &expect) < 1e-12);
        assert_eq!(tendency(&SpectralField::zeros(g), 0.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn steady_mode_is_unchanged() {
        let g = Grid::cubic(16).unwrap();
        let cfg = SimConfig::new(g, 0.0, TimeStep::Fixed(1e-3), 0.1, single([1, 0, 0], 1.0));
        let mut sim = Simulation::new(cfg).unwrap();
        let s0 = sim.state().theta.clone();
        for _ in 0..100 {
            sim.step().unwrap();
        }
        assert!(sim.is_finished());
        assert!(max_diff(&sim.state().theta, &s0) < 1e-12);
    }

    #[test]
    fn integrating_factor_is_exact_on_a_mode() {
        let g = Grid::cubic(16).unwrap();
        let (eps, dt) = (0.3, 0.05);
        let cfg = SimConfig::new(g, eps, TimeStep::Fixed(dt), 1.0, single([1, 0, 0], 1.0));
        let mut sim = Simulation::new(cfg).unwrap();
        let before = sim.state().theta.coeff([1, 0, 0]);
        sim.step().unwrap();
        let ratio = sim.state().theta.coeff([1, 0, 0]) / before;
        assert!((ratio.re - (-eps * eps * dt).exp()).abs() < 1e-15);
        assert!(ratio.im.abs() < 1e-15);
    }

    fn one_step_error(integrator: Integrator, dt: f64) -> f64 {
        let g = Grid::cubic(16).unwrap();
        let eps = 0.5;
        let mut cfg = SimConfig::new(g, eps, TimeStep::Fixed(dt), dt, single([2, 1, 0], 1.0));
        cfg.integrator = integrator;
        let mut sim = Simulation::new(cfg).unwrap();
        let before = sim.state().theta.clone();
        sim.step().unwrap();
        let mut exact = before;
        exact.scale((-eps * eps * 5.0 * dt).exp());
        max_diff(&sim.state().theta, &exact)
    }

    #[test]
    fn rk4_is_fourth_order() {
        let (e1, e2) = (one_step_error(Integrator::Rk4, 0.2), one_step_error(Integrator::Rk4, 0.1));
        // one-step error of a fourth-order method scales like dt⁵
        let ratio = e1 / e2;
        assert!(ratio >= 16.0 * 0.8, "ratio {ratio}");
    }

    #[test]
    fn horizontal_mean_stays_zero() {
        let g = Grid::cubic(16).unwrap();
        let init = InitialSpec::RandomBandLimited { kmin: 1, kmax: 4, amplitude: 0.5, norm: AmplitudeNorm::L2, seed: Some(2) };
        for integrator in [Integrator::Rk4, Integrator::IfRk4] {
            let mut cfg = SimConfig::new(g, 0.2, TimeStep::Fixed(0.02), 0.1, init.clone());
            cfg.integrator = integrator;
            let traj = run(cfg).unwrap();
            for s in &traj.states {
                assert_eq!(s.theta.horizontal_mean_magnitude(), 0.0);
                assert!(s.theta.symmetry_defect() < 1e-14);
            }
            assert_eq!(traj.states.len(), 6);
            assert!((traj.states.last().unwrap().t - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn z_independent_data_has_no_mean_gradient() {
        let g = Grid::cubic(16).unwrap();
        let f = field(g, |x, y, _| x.sin() + 0.5 * (2.0 * y).cos() + 0.3 * (x + y).sin());
        let cfg = SimConfig::new(g, 0.0, TimeStep::Fixed(0.01), 0.01, single([1, 0, 0], 1.0));
        let (_, dz) = advective_tendency(&f, &cfg);
        assert!(dz.iter().all(|v| v.abs() <= 1e-13));
    }

    #[test]
    fn zero_end_time_gives_initial_state() {
        let g = Grid::cubic(8).unwrap();
        let traj = run(SimConfig::new(g, 0.0, TimeStep::Fixed(0.1), 0.0, single([1, 0, 0], 1.0))).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.reports.len(), 1);
    }

    #[test]
    fn cfl_step() {
        let g = Grid::cubic(16).unwrap();
        let cfg = SimConfig::new(g, 0.0, TimeStep::AUTO, 1.0, single([1, 0, 0], 1.0));
        let zero = SimState { t: 0.0, theta: SpectralField::zeros(g) };
        assert_eq!(cfl_dt(&zero, 0.5, &cfg).unwrap(), cfg.max_dt);

        // θ′ = sin x cos z: u = 0, v = (1/2) cos x sin z, so max|v| = 1/2 on the grid.
        let sc = SimState { t: 0.0, theta: field(g, |x, _, z| x.sin() * z.cos()) };
        let cfg = SimConfig { max_dt: 10.0, ..cfg };
        let dy = 2.0 * std::f64::consts::PI / 16.0;
        assert!((cfl_dt(&sc, 1.0, &cfg).unwrap() - dy / 0.5).abs() < 1e-12);
        let mut doubled = sc.clone();
        doubled.theta.scale(2.0);
        assert!((cfl_dt(&doubled, 1.0, &cfg).unwrap() - dy / 1.0).abs() < 1e-12);
        assert!(cfl_dt(&sc, 0.0, &cfg).is_err());
    }
}
