//! Command-line interface.
//!
//! Exit codes: 0 success, 2 configuration / usage / I/O error, 3 numerical or
//! structural failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::ExperimentConfig;
use super::experiment::{
    localized_map_trial, run_localization_experiment, run_map_experiment, run_trial, Draw, Scenario,
    SweepKind,
};
use super::output::{write_file, write_localization_metrics, write_map_metrics, write_trial_result};
use super::stats::spearman;
use crate::environment::save_environment;
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "rss-align", version, about = "RSS localization and radio map construction by manifold alignment")]
pub struct Cli {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configured number of trials.
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write the configured environment as environment.toml.
    GenEnv,
    /// Write the ground-truth and simulated radio maps.
    SimulateMap,
    /// Localize one batch of synthetic observations (trial 0).
    Localize,
    /// Mean error against the calibration percentage.
    SweepCalibration,
    /// Mean error against the source neighborhood size.
    SweepNeighbors,
    /// Mean error against the number of observations localized together.
    SweepObservations,
    /// Build radio maps from localized observations over the calibration sweep.
    BuildMap,
}

impl Cli {
    /// The configuration after applying command-line overrides.
    pub fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Executes a parsed command line and returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = cli.effective_config()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let out = |name: &str| cli.out.join(name);
    let mut written = Vec::new();

    match cli.command {
        Command::GenEnv => {
            let (env, _) = cfg.environment()?;
            let path = out("environment.toml");
            save_environment(&env, &path)?;
            written.push(path);
        }
        Command::SimulateMap => {
            let scn = Scenario::new(&cfg)?;
            for (name, map) in [("truth_map.csv", &scn.truth), ("simulated_map.csv", &scn.simulated)] {
                let path = out(name);
                map.save(&path)?;
                written.push(path);
            }
        }
        Command::Localize => {
            let scn = Scenario::new(&cfg)?;
            let loc = &cfg.localization;
            let localizer = scn.localizer(loc)?;
            let trial = run_trial(&scn, &localizer, loc, Draw::for_mode(loc.mode), 0)?;
            let path = out("localization.csv");
            write_file(&path, |w| write_trial_result(w, &scn.grid, &trial))?;
            println!(
                "localized {} observations, mean error {:.3} m",
                trial.errors.len(),
                trial.mean_error()
            );
            written.push(path);
        }
        Command::SweepCalibration | Command::SweepNeighbors | Command::SweepObservations => {
            let (kind, name) = match cli.command {
                Command::SweepCalibration => (SweepKind::Calibration, "sweep_calibration.csv"),
                Command::SweepNeighbors => (SweepKind::Neighbors, "sweep_neighbors.csv"),
                _ => (SweepKind::Observations, "sweep_observations.csv"),
            };
            let scn = Scenario::new(&cfg)?;
            let result = run_localization_experiment(&scn, kind)?;
            let rows = result.rows();
            let path = out(name);
            write_file(&path, |w| write_localization_metrics(w, result.param, &rows))?;
            for r in &rows {
                println!("{} = {}: mean {:.3} m, std {:.3} m", result.param, r.value, r.mean_err_m, r.std_err_m);
            }
            let (xs, ys) = result.pairs();
            let c = spearman(&xs, &ys);
            println!("spearman rho {:.4}, p {:.3e} over {} trials", c.rho, c.p_value, c.n);
            written.push(path);
        }
        Command::BuildMap => {
            let scn = Scenario::new(&cfg)?;
            let sweep = run_map_experiment(&scn)?;
            let rows = sweep.rows();
            let path = out("map_metrics.csv");
            write_file(&path, |w| write_map_metrics(w, "calibration_pct", &rows))?;
            written.push(path);

            let localizer = scn.localizer(&cfg.localization)?;
            let trial = localized_map_trial(&scn, &localizer, cfg.localization.calibration_pct, 0)?;
            let path = out("estimated_map.csv");
            trial.map.save(&path)?;
            written.push(path);
            for r in &rows {
                println!(
                    "calibration {}%: rms overall {:.3} dB, improvement {:.2}%",
                    r.value, r.rms_overall_db, r.improvement_pct
                );
            }
        }
    }
    Ok(written)
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", display(p));
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            report(&paths);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
