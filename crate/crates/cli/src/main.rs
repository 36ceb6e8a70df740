use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use levy_mlmc::diagnostics::DN_REFERENCE_MULTIPLIER;
use levy_mlmc::report::{dn_report_csv, level_table_csv, rate_report_csv, summary_json, sweep_csv};
use levy_mlmc::{
    complexity_sweep, measure_dn, measure_rates_multi, run_mlmc, ExperimentConfig, OptionKind, OptionSpec,
    RateSettings,
};

#[derive(Debug, Parser)]
#[command(name = "levy-mlmc", version, about = "Multilevel Monte Carlo for exponential Lévy models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML with [model], [option], [driver] tables).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the driver seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Adaptive MLMC price: JSON summary and per-level CSV table.
    Price {
        #[command(flatten)]
        common: Common,
        /// Target RMS error; defaults to `eps` from the config.
        #[arg(long)]
        eps: Option<f64>,
        /// Write the JSON summary here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fixed-N level statistics and fitted weak/variance exponents.
    Rates {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        levels: u32,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Exponent tolerance for the pass flags.
        #[arg(long, default_value_t = levy_mlmc::diagnostics::RATE_TOLERANCE)]
        tolerance: f64,
    },
    /// Moments of the discrete-versus-continuous supremum gap D_n.
    Dn {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "4,16,64,256")]
        nlist: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        paths: u64,
        #[arg(long, default_value_t = DN_REFERENCE_MULTIPLIER)]
        ref_mult: usize,
    },
    /// MLMC versus plain Monte Carlo cost over a list of accuracies.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.02,0.01,0.005")]
        eps_list: Vec<f64>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.driver.seed = seed;
    }
    Ok(cfg)
}

/// Writes to stdout; a closed pipe (`| head`) ends output quietly.
fn print_stdout(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.context("writing to stdout"),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => print_stdout(text),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Price { common, eps, json } => {
            let cfg = load(&common)?;
            let spec = cfg.require_option()?;
            let Some(eps) = eps.or(cfg.eps) else {
                bail!("no target accuracy: pass --eps or set driver.eps");
            };
            let res = run_mlmc(&cfg.model, &spec, eps, &cfg.driver)?;
            let summary = summary_json(&res) + "\n";
            emit(&json, &summary)?;
            emit(&common.out, &level_table_csv(&res))?;
            if !res.converged {
                eprintln!("warning: L_max = {} reached before the bias test passed", cfg.driver.l_max);
            }
        }
        Command::Rates {
            common,
            levels,
            samples,
            tolerance,
        } => {
            let cfg = load(&common)?;
            // Without an [option] table all three presets share the same paths.
            let specs: Vec<OptionSpec> = match cfg.option {
                Some(spec) => vec![spec],
                None => OptionKind::ALL
                    .iter()
                    .map(|&k| OptionSpec::preset(k, cfg.model.rate()))
                    .collect(),
            };
            let settings = RateSettings {
                max_level: levels,
                samples_per_level: samples,
                refine: cfg.driver.refine,
                fit_floor_level: cfg.driver.fit_floor_level,
                seed: cfg.driver.seed,
                tolerance,
            };
            let reports = measure_rates_multi(&cfg.model, &specs, &settings)?;
            emit(&common.out, &rate_report_csv(&reports))?;
        }
        Command::Dn {
            common,
            nlist,
            paths,
            ref_mult,
        } => {
            let cfg = load(&common)?;
            let report = measure_dn(&cfg.model, &nlist, paths, ref_mult, cfg.driver.seed)?;
            emit(&common.out, &dn_report_csv(&report))?;
        }
        Command::Sweep { common, eps_list } => {
            let cfg = load(&common)?;
            let spec = cfg.require_option()?;
            let points = complexity_sweep(&cfg.model, &spec, &eps_list, &cfg.driver)?;
            emit(&common.out, &sweep_csv(&points))?;
        }
    }
    Ok(())
}
