//! Run configuration and initial data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{norms, ops, random, Grid, PhysicalField, SpectralField};

/// Time integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4,
    /// Exponential integrating factor for `ε²Δₕ`, classical RK4 on the rest.
    #[default]
    IfRk4,
}

/// A fixed step or `"auto"` for a CFL-limited step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl TimeStep {
    pub const AUTO: TimeStep = TimeStep::Auto(AutoTag::Auto);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Sin,
    Cos,
}

impl Trig {
    fn eval(self, s: f64) -> f64 {
        match self {
            Trig::Sin => s.sin(),
            Trig::Cos => s.cos(),
        }
    }
}

fn default_parity() -> [Trig; 3] {
    [Trig::Sin, Trig::Cos, Trig::Cos]
}

/// Norm used to scale random initial data to the requested amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeNorm {
    #[default]
    L2,
    L6,
    Max,
}

/// Initial temperature fluctuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSpec {
    /// `amplitude · f₁(k1 x) f₂(k2 y) f₃(k3 z)` with each `fᵢ` sin or cos.
    AnalyticSingleMode {
        mode: [i64; 3],
        amplitude: f64,
        #[serde(default = "default_parity")]
        parity: [Trig; 3],
    },
    /// Seeded random data on `kmin ≤ max|kᵢ| ≤ kmax`, scaled so that the chosen
    /// norm equals `amplitude`. Without a seed the run seed is used.
    RandomBandLimited {
        kmin: i64,
        kmax: i64,
        amplitude: f64,
        #[serde(default)]
        norm: AmplitudeNorm,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl InitialSpec {
    /// The field on `grid`, projected to zero horizontal mean.
    pub fn generate(&self, grid: Grid, run_seed: u64) -> Result<SpectralField> {
        let mut f = match *self {
            InitialSpec::AnalyticSingleMode { mode, amplitude, parity } => {
                if mode[0] == 0 && mode[1] == 0 {
                    return Err(Error::InvalidConfig("single mode must have a horizontal wavenumber".into()));
                }
                if mode.iter().zip(parity).any(|(k, p)| *k == 0 && p == Trig::Sin) {
                    return Err(Error::InvalidConfig("sin factor with zero wavenumber vanishes".into()));
                }
                if mode.iter().zip(grid.dims()).any(|(k, n)| 2 * k.unsigned_abs() as usize >= n) {
                    return Err(Error::InvalidConfig(format!("mode {mode:?} is not resolved")));
                }
                let [k1, k2, k3] = mode.map(|k| k as f64);
                let [p1, p2, p3] = parity;
                PhysicalField::from_fn(grid, |x, y, z| {
                    amplitude * p1.eval(k1 * x) * p2.eval(k2 * y) * p3.eval(k3 * z)
                })
                .forward()?
            }
            InitialSpec::RandomBandLimited { kmin, kmax, amplitude, norm, seed } => {
                let mut f = random::band_limited(grid, kmin, kmax, seed.unwrap_or(run_seed))?;
                f.project_zero_horizontal_mean();
                let phys = f.inverse()?;
                let size = match norm {
                    AmplitudeNorm::L2 => norms::lp_norm(&phys, 2.0)?,
                    AmplitudeNorm::L6 => norms::lp_norm(&phys, 6.0)?,
                    AmplitudeNorm::Max => phys.max_abs(),
                };
                if size == 0.0 {
                    return Err(Error::ZeroField);
                }
                f.scale(amplitude / size);
                f
            }
        };
        f.project_zero_horizontal_mean();
        Ok(f)
    }
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

fn default_safety() -> f64 {
    0.5
}

fn default_max_dt() -> f64 {
    0.1
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: Grid,
    pub epsilon: f64,
    pub dt: TimeStep,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_true")]
    pub dealias: bool,
    pub initial: InitialSpec,
    #[serde(default = "default_one")]
    pub diagnostics_every: usize,
    #[serde(default)]
    pub seed: u64,
    /// Galerkin cap `|kᵢ| ≤ m` applied to the data and every tendency.
    #[serde(default)]
    pub mode_cap: Option<i64>,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    /// Upper bound on automatic steps.
    #[serde(default = "default_max_dt")]
    pub max_dt: f64,
    /// Write a binary checkpoint every this many steps.
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
}

impl SimConfig {
    /// A configuration with defaults for everything but the essentials.
    pub fn new(grid: Grid, epsilon: f64, dt: TimeStep, t_end: f64, initial: InitialSpec) -> Self {
        SimConfig {
            grid,
            epsilon,
            dt,
            t_end,
            integrator: Integrator::default(),
            dealias: true,
            initial,
            diagnostics_every: 1,
            seed: 0,
            mode_cap: None,
            cfl_safety: default_safety(),
            max_dt: default_max_dt(),
            checkpoint_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be finite and nonnegative", self.epsilon));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be finite and nonnegative", self.t_end));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt = {dt} must be positive"));
            }
        }
        if self.diagnostics_every == 0 {
            return bad("diagnostics_every must be positive".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety = {} must lie in (0, 1]", self.cfl_safety));
        }
        if !(self.max_dt > 0.0 && self.max_dt.is_finite()) {
            return bad(format!("max_dt = {} must be positive", self.max_dt));
        }
        if matches!(self.mode_cap, Some(m) if m < 1) {
            return bad("mode_cap must be at least 1".into());
        }
        if self.checkpoint_every == Some(0) {
            return bad("checkpoint_every must be positive".into());
        }
        Ok(())
    }

    /// Initial data with the dealiasing and mode cap of this run applied.
    pub fn initial_state(&self) -> Result<SpectralField> {
        let f = self.initial.generate(self.grid, self.seed)?;
        Ok(self.project_field(&f))
    }

    /// Applies the run's dealiasing and mode cap.
    pub fn project_field(&self, f: &SpectralField) -> SpectralField {
        let mut f = if self.dealias { ops::dealias(f) } else { f.clone() };
        if let Some(m) = self.mode_cap {
            f = ops::truncate(&f, m);
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let text = r#"{
            "grid": [16, 16, 16], "epsilon": 0.1, "dt": "auto", "t_end": 1.0,
            "initial": {"kind": "random-band-limited", "kmin": 1, "kmax": 3, "amplitude": 0.1, "norm": "l6"}
        }"#;
        let cfg: SimConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.dt, TimeStep::AUTO);
        assert_eq!(cfg.integrator, Integrator::IfRk4);
        assert!(cfg.dealias);
        let back: SimConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);

        let fixed: SimConfig = serde_json::from_str(&text.replace("\"auto\"", "0.01")).unwrap();
        assert_eq!(fixed.dt, TimeStep::Fixed(0.01));
        assert!(serde_json::from_str::<SimConfig>(&text.replace("\"auto\"", "\"soon\"")).is_err());
    }

    #[test]
    fn validation() {
        let g = Grid::cubic(8).unwrap();
        let init = InitialSpec::AnalyticSingleMode { mode: [1, 0, 0], amplitude: 1.0, parity: default_parity() };
        let ok = SimConfig::new(g, 0.0, TimeStep::Fixed(0.01), 1.0, init);
        assert!(ok.validate().is_ok());
        assert!(SimConfig { epsilon: -1.0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { dt: TimeStep::Fixed(0.0), ..ok.clone() }.validate().is_err());
        assert!(SimConfig { diagnostics_every: 0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { cfl_safety: 1.5, ..ok }.validate().is_err());
    }

    #[test]
    fn initial_data() {
        let g = Grid::cubic(16).unwrap();
        let single = InitialSpec::AnalyticSingleMode { mode: [1, 0, 1], amplitude: 2.0, parity: default_parity() };
        let f = single.generate(g, 0).unwrap();
        assert!((f.coeff([1, 0, 1]).im + 0.5).abs() < 1e-14);
        let flat = InitialSpec::AnalyticSingleMode { mode: [0, 0, 1], amplitude: 1.0, parity: default_parity() };
        assert!(flat.generate(g, 0).is_err());

        let rnd = InitialSpec::RandomBandLimited { kmin: 1, kmax: 4, amplitude: 0.1, norm: AmplitudeNorm::L6, seed: None };
        let f = rnd.generate(g, 5).unwrap();
        assert_eq!(f.horizontal_mean_magnitude(), 0.0);
        assert!((norms::lp_norm(&f.inverse().unwrap(), 6.0).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(f, rnd.generate(g, 5).unwrap());
        assert_ne!(f, rnd.generate(g, 6).unwrap());
    }
}
