//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rotcon_core::diagnostic::multiplier::{self, catalog, catalog_entry};
use rotcon_core::diagnostic::{horizontal_divergence_norm, residual_check, solve_velocity};
use rotcon_core::evolution::{self, AmplitudeNorm, InitialSpec, Integrator, SimConfig, Simulation, TimeStep, Trig};
use rotcon_core::experiments::{self, InitMode, Perturbation};
use rotcon_core::invariants::{self, EmbeddingRatios};
use rotcon_core::mean;
use rotcon_core::spectral::{random, Grid, PhysicalField, SpectralField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn levels(nz: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..nz).map(|l| f(2.0 * std::f64::consts::PI * l as f64 / nz as f64)).collect()
}

fn random_field(grid: Grid, kmax: i64, seed: u64) -> SpectralField {
    let mut f = random::band_limited(grid, 1, kmax, seed).unwrap();
    f.project_zero_horizontal_mean();
    f
}

fn smooth_random(amplitude: f64, norm: AmplitudeNorm, seed: u64) -> InitialSpec {
    InitialSpec::RandomBandLimited { kmin: 1, kmax: 4, amplitude, norm, seed: Some(seed) }
}

fn diagnostic_exactness() -> Outcome {
    let start = Instant::now();
    let grid = Grid::cubic(32).unwrap();
    let (mut r1max, mut r2max, mut divmax) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..100 {
        let theta = random_field(grid, 10, seed);
        let d = solve_velocity(&theta).unwrap();
        let (r1, r2) = residual_check(&theta, &d).unwrap();
        r1max = r1max.max(r1);
        r2max = r2max.max(r2);
        divmax = divmax.max(horizontal_divergence_norm(&d) / theta.l2_norm());
    }
    let elapsed = start.elapsed();
    outcome(
        r1max <= 1e-13 && r2max <= 1e-13 && divmax <= 1e-14 && elapsed < Duration::from_secs(10),
        format!("max residuals {r1max:.2e}, {r2max:.2e}; divergence/|theta| {divmax:.2e}; {elapsed:.2?}"),
    )
}

fn closed_form_regression() -> Outcome {
    let start = Instant::now();
    let grid = Grid::cubic(32).unwrap();
    let theta_phys = PhysicalField::from_fn(grid, |x, _, z| x.sin() * z.cos());
    let theta = theta_phys.forward().unwrap();
    let d = solve_velocity(&theta).unwrap();
    let w = d.w.inverse().unwrap();
    let w_err = max_diff(w.values(), PhysicalField::from_fn(grid, |x, _, z| 0.5 * x.sin() * z.cos()).values());
    let profile = mean::MeanProfile::from_fields(&theta_phys, &w).unwrap();
    let flux_err = max_diff(&profile.flux, &levels(32, |z| z.cos().powi(2) / 4.0));
    let grad_err = max_diff(&profile.dtheta_dz, &levels(32, |z| (2.0 * z).cos() / 8.0));
    let bar_err = max_diff(&profile.theta_bar, &levels(32, |z| (2.0 * z).sin() / 16.0));
    let tend = evolution::tendency(&theta, 0.0).unwrap().inverse().unwrap();
    let expect = PhysicalField::from_fn(grid, |x, _, z| -x.sin() * z.cos() * (2.0 * z).cos() / 16.0);
    let tend_err = max_diff(tend.values(), expect.values());
    let elapsed = start.elapsed();
    let worst = w_err.max(flux_err).max(grad_err).max(bar_err).max(tend_err);
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!(
            "w {w_err:.1e}, flux {flux_err:.1e}, dtheta_dz {grad_err:.1e}, theta_bar {bar_err:.1e}, tendency {tend_err:.1e}; {elapsed:.2?}"
        ),
    )
}

fn steady_state() -> Outcome {
    let grid = Grid::cubic(32).unwrap();
    let init = InitialSpec::AnalyticSingleMode { mode: [1, 0, 0], amplitude: 1.0, parity: [Trig::Sin, Trig::Cos, Trig::Cos] };
    let mut sim = Simulation::new(SimConfig::new(grid, 0.0, TimeStep::Fixed(1e-3), 1.0, init)).unwrap();
    let s0 = sim.state().theta.clone();
    for _ in 0..1000 {
        sim.step().unwrap();
    }
    let dev = sim.state().theta.sub(&s0).unwrap().l2_norm();
    outcome(
        dev <= 1e-10 && sim.is_finished(),
        format!("L2 deviation after 1000 steps {dev:.2e}"),
    )
}

fn energy_run(epsilon: f64, dt: f64) -> Vec<invariants::InvariantReport> {
    let grid = Grid::cubic(32).unwrap();
    let mut cfg = SimConfig::new(grid, epsilon, TimeStep::Fixed(dt), 1.0, smooth_random(8.0, AmplitudeNorm::Max, 7));
    cfg.integrator = Integrator::IfRk4;
    evolution::run(cfg).unwrap().reports
}

fn energy_law() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [0.0, 0.1] {
        let coarse = energy_run(eps, 0.02);
        let fine = energy_run(eps, 0.01);
        let tol = 1e-8 * coarse[0].l2;
        let monotone = [&coarse, &fine]
            .iter()
            .all(|r| r.windows(2).all(|p| p[1].l2 <= p[0].l2 + tol));
        let worst = |r: &[invariants::InvariantReport]| r.iter().filter_map(|x| x.budget_residual).fold(0.0, f64::max);
        let (rc, rf) = (worst(&coarse), worst(&fine));
        let factor = rc / rf;
        let ok = monotone && (8.0..=32.0).contains(&factor);
        pass &= ok;
        parts.push(format!(
            "eps={eps}: monotone={monotone}, residual {rc:.2e} -> {rf:.2e} (factor {factor:.1})"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn multiplier_catalog() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();
    for e in catalog() {
        let hyp = multiplier::hypothesis_check(&e.spec).unwrap();
        let sup = multiplier::lattice_sup(&e.spec, 128).unwrap();
        let ratio = multiplier::empirical_lp_ratio(&e.spec, 2.0, 100, 0).unwrap();
        let ok = hyp && ratio <= sup + 1e-12;
        pass &= ok;
        if !ok {
            notes.push(format!("{}: hypothesis={hyp} ratio={ratio} sup={sup}", e.name));
        }
    }
    let w = catalog_entry("W").unwrap().spec;
    let w_sup = multiplier::lattice_sup(&w, 64).unwrap();
    let e2 = catalog_entry("E2").unwrap().spec.hypothesis_sum().unwrap();
    pass &= w_sup == 1.0;
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    outcome(
        pass,
        format!("E2 sum {e2}; w sup at K=64 {w_sup:?}; {elapsed:.2?} {}", notes.join(" ")),
    )
}

fn sample_max_ratios(n: usize) -> [f64; 6] {
    let grid = Grid::cubic(n).unwrap();
    let mut best = [0.0f64; 6];
    for seed in 0..100 {
        let r = invariants::embedding_ratios(&random_field(grid, 4, 1000 + seed)).unwrap();
        for (b, v) in best.iter_mut().zip(r.values()) {
            *b = b.max(v);
        }
    }
    best
}

fn ratio_stability() -> Outcome {
    let (coarse, fine) = (sample_max_ratios(32), sample_max_ratios(64));
    let mut pass = true;
    let mut parts = Vec::new();
    for ((name, c), f) in EmbeddingRatios::NAMES.iter().zip(coarse).zip(fine) {
        let growth = f / c - 1.0;
        pass &= growth < 0.05;
        parts.push(format!("{name} {c:.4}->{f:.4} ({:+.2}%)", 100.0 * growth));
    }
    outcome(pass, parts.join(", "))
}

fn vanishing_diffusivity() -> Outcome {
    let start = Instant::now();
    let grid = Grid::cubic(64).unwrap();
    let base = SimConfig::new(grid, 0.0, TimeStep::Fixed(0.02), 1.0, smooth_random(0.1, AmplitudeNorm::L6, 11));
    let eps = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
    let r = experiments::sweep_epsilon(&base, &eps, InitMode::Matched).unwrap();
    let slope = r.slope.map(|s| s.slope).unwrap_or(f64::NAN);
    let bounds = r.members.iter().all(|m| m.bounds_hold);
    let elapsed = start.elapsed();
    let errs: Vec<String> = r.members.iter().map(|m| format!("{:.2e}", m.l2_error)).collect();
    let gronwall = r.gronwall.map(|g| g.pass).unwrap_or(false);
    outcome(
        slope >= 0.9 && bounds && elapsed < Duration::from_secs(300),
        format!(
            "slope {slope:.3}; errors [{}]; catalog bounds hold {bounds}; Gronwall fit envelope {gronwall}; {elapsed:.1?}",
            errs.join(", ")
        ),
    )
}

fn continuous_dependence() -> Outcome {
    let grid = Grid::cubic(32).unwrap();
    let base = SimConfig::new(grid, 0.0, TimeStep::Fixed(0.02), 1.0, smooth_random(1.0, AmplitudeNorm::Max, 5));
    let r = experiments::twin_run(&base, Perturbation { amplitude: 1e-6, mode: [1, 1, 1] }, 10.0).unwrap();
    outcome(
        r.linear_response && r.envelope_pass,
        format!(
            "response ratio {:.4}; fitted rate {:.3}; envelope never violated {}",
            r.response_ratio, r.rate, r.envelope_pass
        ),
    )
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_rotcon"))
        .args(args)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"grid": [16, 16, 16], "epsilon": 0.05, "dt": "auto", "t_end": 0.3,
            "initial": {"kind": "random-band-limited", "kmin": 1, "kmax": 3, "amplitude": 1.0, "norm": "max"},
            "seed": 42, "checkpoint_every": 2}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["run", "--config", cfg],
        vec!["sweep-epsilon", "--config", cfg, "--eps", "0.5,0.25", "--mode", "scaled"],
        vec!["sweep-resolution", "--config", cfg, "--modes", "2,3,5"],
        vec!["twin", "--config", cfg, "--delta-amp", "1e-6", "--delta-mode", "1,1,1"],
        vec!["check-multipliers", "--K", "16", "--trials", "3", "--seed", "9"],
    ];
    let mut identical = 0;
    for (i, cmd) in commands.iter().enumerate() {
        let outs: Vec<_> = (0..2)
            .map(|rep| {
                let out = tmp.path().join(format!("out_{i}_{rep}"));
                let mut args = cmd.clone();
                let o = out.to_str().unwrap().to_string();
                args.push("--out");
                let ok = cli(&[args.as_slice(), &[o.as_str()]].concat());
                (ok, out)
            })
            .collect();
        if outs.iter().all(|(ok, _)| *ok) && dir_contents(&outs[0].1) == dir_contents(&outs[1].1) && !dir_contents(&outs[0].1).is_empty() {
            identical += 1;
        }
    }
    outcome(
        identical == commands.len(),
        format!("{identical}/{} commands byte-identical across repeats", commands.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 diagnostic exactness", diagnostic_exactness),
        ("2 closed-form regression", closed_form_regression),
        ("3 steady state", steady_state),
        ("4 energy law", energy_law),
        ("5 multiplier catalog", multiplier_catalog),
        ("6 embedding-ratio stability", ratio_stability),
        ("7 vanishing diffusivity", vanishing_diffusivity),
        ("8 continuous dependence", continuous_dependence),
        ("9 determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
