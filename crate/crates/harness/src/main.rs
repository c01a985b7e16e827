use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ordsum_harness::config::preset_names;
use ordsum_harness::verify::{read_references, summarize};
use ordsum_harness::{
    emit_results, run_convergence_sweep, run_experiment, verify, ConfigLayer, ExperimentConfig, Format, HarnessError,
    Result, ResultRow,
};

/// Rare-event estimation of P(sum of the L largest of N branches <= gamma_th).
#[derive(Parser)]
#[command(name = "ordsum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single (threshold, estimator) cell.
    Estimate {
        /// Optional base config (preset name or file).
        #[arg(long)]
        config: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run every cell of a preset or config file.
    Table {
        /// Preset name (table1..table8, fig1) or config file path.
        config: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// RQMC convergence sweep over the config's `grid`.
    Sweep {
        config: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a config and compare against a reference CSV.
    Verify {
        config: String,
        reference: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// List the built-in presets.
    Presets,
}

/// Overrides; any flag given wins over the config file.
#[derive(Args, Default)]
struct Flags {
    /// Branch law, e.g. `weibull(alpha=0.5,eta=1)`.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    /// One or more thresholds, comma separated.
    #[arg(long = "gamma-th", value_delimiter = ',')]
    gamma_th: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, env = "ORDSUM_SEED")]
    seed: Option<u64>,
    /// One or more estimator names, comma separated.
    #[arg(long, value_delimiter = ',')]
    estimator: Option<Vec<String>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// weibull-is order-statistic weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long = "bisect-tol")]
    bisect_tol: Option<f64>,
    /// Points-per-replicate grid for `sweep`, comma separated.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<u32>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "jsonl"])]
    format: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Include wall-clock times in the output.
    #[arg(long)]
    timing: bool,
}

impl Flags {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            dist: self.dist.clone(),
            n: self.n,
            l: self.l,
            thresholds: self.gamma_th.clone(),
            estimators: self.estimator.clone(),
            samples: self.samples,
            replicates: self.replicates,
            seed: self.seed,
            weights: self.weights.clone(),
            bisect_tol: self.bisect_tol,
            grid: self.grid.clone(),
            out: self.out.clone(),
            format: self.format.clone(),
            timing: self.timing.then_some(true),
        }
    }

    fn config(&self, base: Option<&str>) -> Result<ExperimentConfig> {
        if let Some(w) = self.workers {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build_global()
                .map_err(|e| HarnessError::config("workers", e.to_string()))?;
        }
        let base = match base {
            Some(name) => ConfigLayer::load(name)?,
            None => ConfigLayer::default(),
        };
        ExperimentConfig::from_layer(base.overlay(self.layer()))
    }
}

fn sink(config: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &config.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| HarnessError::io(path, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_rows(config: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    let mut out = sink(config)?;
    emit_results(rows, config.format, &mut out)?;
    out.flush()
        .map_err(|e| HarnessError::io(config.out.clone().unwrap_or_default(), e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
        }
        Command::Estimate { config, flags } => {
            let config = flags.config(config.as_deref())?;
            if config.thresholds.len() != 1 || config.estimators.len() != 1 {
                return Err(HarnessError::Config {
                    field: "estimators",
                    message: "estimate runs exactly one threshold and one estimator".into(),
                });
            }
            write_rows(&config, &run_experiment(&config)?)?;
        }
        Command::Table { config, flags } => {
            let config = flags.config(Some(&config))?;
            write_rows(&config, &run_experiment(&config)?)?;
        }
        Command::Sweep { config, flags } => {
            let config = flags.config(Some(&config))?;
            let table = run_convergence_sweep(&config)?;
            let mut out = sink(&config)?;
            let fail = |e: std::io::Error| HarnessError::io(config.out.clone().unwrap_or_default(), e);
            match config.format {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(&mut out);
                    for r in &table.rows {
                        w.serialize(r).map_err(|e| HarnessError::Format(e.to_string()))?;
                    }
                    w.flush().map_err(fail)?;
                }
                Format::Jsonl => {
                    for r in &table.rows {
                        writeln!(out, "{}", serde_json::to_string(r).expect("plain struct")).map_err(fail)?;
                    }
                }
            }
            out.flush().map_err(fail)?;
            eprintln!("rqmc_slope={:.4} mc_slope={:.4}", table.rqmc_slope, table.mc_slope);
        }
        Command::Verify {
            config,
            reference,
            flags,
        } => {
            let config = flags.config(Some(&config))?;
            let references = read_references(&reference)?;
            let rows = run_experiment(&config)?;
            if config.out.is_some() {
                write_rows(&config, &rows)?;
            }
            let checks = verify(&rows, &references);
            for c in &checks {
                println!(
                    "{} gamma_th={} estimator={} estimate={:.4e} reference={:.4e} deviation={:.2}x",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.gamma_th,
                    c.estimator,
                    c.estimate,
                    c.reference,
                    c.score()
                );
            }
            summarize(&checks)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
