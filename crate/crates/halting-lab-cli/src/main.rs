//! `halting-lab <experiment> --config <path.json> [--seed N] [--out dir] [--workers N] [--override key=value]`
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical or divergence
//! error, 4 experiment or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use halting_lab::harness::{run_experiment, write_outputs, ExperimentConfig, ExperimentKind, ExperimentOutput};
use halting_lab::Error;

#[derive(Debug, Parser)]
#[command(name = "halting-lab", version, about = "Halting-time experiments for first-order methods on random least squares")]
struct Cli {
    /// concentration, r_sweep, rate_fit, predict_vs_empirical or tables.
    experiment: String,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
    /// `key=value` override applied to the config; repeatable, dotted keys reach nested fields.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let experiment: ExperimentKind = cli.experiment.parse()?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(workers) = cli.workers {
        overrides.push(format!("workers={workers}"));
    }
    let mut config = ExperimentConfig::for_experiment(&text, experiment, &overrides)?;
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn report(output: &ExperimentOutput) {
    for s in &output.summary {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.4}"));
        println!(
            "d={} n={} r={} dist={} method={} noise={} trials={} censored={} mean={} std={} tau={} slope={}",
            s.d,
            s.n,
            s.r,
            s.distribution,
            s.method,
            s.r_tilde_sq,
            s.trials,
            s.censored,
            fmt(s.mean_t_eps),
            fmt(s.std_t_eps),
            fmt(s.tau_prediction),
            fmt(s.mean_slope),
        );
    }
    for t in &output.tables {
        println!(
            "table {} {} {} r={}: exponent {:.4} (ref {:.4}) average {:.4e} adversarial {:.4e} worst {:.4e} at k={}",
            t.table, t.method, t.regime, t.r, t.fitted_exponent, t.reference_exponent, t.average, t.adversarial, t.worst_case, t.k_ref
        );
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let config = load(cli)?;
    let start = Instant::now();
    let output = run_experiment(&config)?;
    let manifest = write_outputs(&config, &output, &config.out, start.elapsed().as_secs_f64())?;
    report(&output);
    for file in &manifest.files {
        println!("wrote {}", config.out.join(file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("halting-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
