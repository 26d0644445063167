use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rotcon_core::diagnostic::multiplier::{self, catalog};
use rotcon_core::evolution::{run_with, SimConfig};
use rotcon_core::experiments::{self, InitMode, Perturbation};
use rotcon_core::invariants::{self, DEFAULT_SLACK};
use rotcon_core::spectral::snapshot;
use rotcon_core::{Error, MeanProfile, SimState};

#[derive(Parser)]
#[command(name = "rotcon", version, about = "Rotating convection simulator and verification suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write series, profiles and checkpoints.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Envelope slack factor.
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
    },
    /// Hypothesis check, lattice sup and empirical ratio for every catalog entry.
    CheckMultipliers {
        #[arg(long = "K", default_value_t = 128)]
        k: i64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Write `multipliers.csv` here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the multiplier catalog as JSON.
    Catalog,
    /// Vanishing-diffusivity sweep against the `ε = 0` run.
    SweepEpsilon {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value = "matched")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Galerkin-cap sweep against the largest cap.
    SweepResolution {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<i64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Continuous-dependence twin runs.
    Twin {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        delta_amp: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
        delta_mode: Vec<i64>,
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: SimConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    config.validate()?;
    Ok(config)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut f = create(dir, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn checkpoint(dir: &Path, step: usize, state: &SimState) -> rotcon_core::Result<()> {
    let mut f = BufWriter::new(File::create(dir.join(format!("checkpoint_{step:06}.bin")))?);
    snapshot::write_snapshot(&mut f, &format!("theta t={:?}", state.t), &state.theta.inverse()?)?;
    f.flush()?;
    Ok(())
}

fn run(config: SimConfig, out: &Path, slack: f64) -> Result<()> {
    fs::create_dir_all(out)?;
    let every = config.checkpoint_every;
    let result = run_with(config.clone(), slack, |sample, state, _| {
        let mut f = BufWriter::new(File::create(out.join(format!("profile_{:06}.csv", sample.step)))?);
        MeanProfile::from_spectral(&state.theta)?.write_csv(&mut f)?;
        f.flush()?;
        if let Some(n) = every {
            if sample.step % n == 0 {
                checkpoint(out, sample.step, state)?;
            }
        }
        Ok(())
    });
    let (reports, calibration) = match result {
        Ok(r) => r,
        Err(Error::BlowUp { t, step, last_valid }) => {
            checkpoint(out, step - 1, &last_valid)?;
            bail!("blow-up at t = {t} (step {step}); last finite state written to {}", out.display());
        }
        Err(e) => return Err(e.into()),
    };
    let mut f = create(out, "series.csv")?;
    invariants::write_series_csv(&reports, &mut f)?;
    f.flush()?;
    let summary = serde_json::json!({
        "config": config,
        "calibration": calibration,
        "samples": reports.len(),
        "t_final": reports.last().map(|r| r.t),
        "all_envelopes_pass": reports.iter().all(|r| r.envelopes.is_some_and(|e| e.env3_pass && e.env6_pass && e.envg3_pass)),
        "tool_version": experiments::TOOL_VERSION,
    });
    write_json(out, "run.json", &summary)
}

fn check_multipliers(k: i64, p: f64, seed: u64, trials: usize, out: Option<PathBuf>) -> Result<()> {
    let mut w: Box<dyn Write> = match &out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Box::new(create(dir, "multipliers.csv")?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(w, "entry,hypothesis,lattice_sup,empirical_ratio")?;
    for e in catalog() {
        let hyp = multiplier::hypothesis_check(&e.spec)?;
        let sup = multiplier::lattice_sup(&e.spec, k)?;
        let ratio = multiplier::empirical_lp_ratio(&e.spec, p, trials, seed)?;
        writeln!(w, "{},{},{:?},{:?}", e.name, hyp, sup, ratio)?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, slack } => run(read_config(&config)?, &out, slack),
        Command::CheckMultipliers { k, p, seed, trials, out } => check_multipliers(k, p, seed, trials, out),
        Command::Catalog => {
            println!("{}", multiplier::catalog_json()?);
            Ok(())
        }
        Command::SweepEpsilon { config, eps, mode, out } => {
            let mode: InitMode = mode.parse()?;
            let result = experiments::sweep_epsilon(&read_config(&config)?, &eps, mode)?;
            fs::create_dir_all(&out)?;
            let mut f = create(&out, "sweep.csv")?;
            experiments::write_sweep_csv(&result, &mut f)?;
            f.flush()?;
            write_json(&out, "sweep.json", &serde_json::to_value(&result)?)
        }
        Command::SweepResolution { config, modes, out } => {
            let result = experiments::sweep_resolution(&read_config(&config)?, &modes)?;
            fs::create_dir_all(&out)?;
            let mut f = create(&out, "sweep.csv")?;
            experiments::write_sweep_csv(&result, &mut f)?;
            f.flush()?;
            write_json(&out, "sweep.json", &serde_json::to_value(&result)?)
        }
        Command::Twin { config, delta_amp, delta_mode, slack, out } => {
            let mode: [i64; 3] = delta_mode
                .try_into()
                .map_err(|_| anyhow::anyhow!("--delta-mode takes three integers"))?;
            let report = experiments::twin_run(&read_config(&config)?, Perturbation { amplitude: delta_amp, mode }, slack)?;
            fs::create_dir_all(&out)?;
            let mut f = create(&out, "twin.csv")?;
            experiments::write_twin_csv(&report, &mut f)?;
            f.flush()?;
            write_json(&out, "twin.json", &serde_json::to_value(&report)?)
        }
    }
}
