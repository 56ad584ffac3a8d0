use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mixval::harness::config::{DataSource, DescriptorMode, ExperimentConfig, Strategy};
use mixval::harness::io::{write_descriptor_csv, write_mixture_csv, write_split_csv};
use mixval::harness::{build_splits, load_data, read_report, run_experiment, write_report};
use mixval::simulate::{simulate, Informative, Noise, SimConfig};
use mixval::Error;

#[derive(Parser)]
#[command(name = "mixval", version, about = "Mixture-aware validation of classification models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated mixture dataset and its descriptors to a directory
    Simulate(SimulateArgs),
    /// Write fold membership (key, fold, role, stratum) as CSV
    Split {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Strategy to split with; defaults to the first configured one
        #[arg(long = "split-strategy", value_name = "STRATEGY")]
        split_strategy: Option<Strategy>,
        /// Output file; stdout when omitted
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Print the JSON report to stdout instead of the summary table
        #[arg(long)]
        json: bool,
    },
    /// Pretty-print an existing JSON report
    Report {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 32)]
    drugs: usize,
    #[arg(long, default_value_t = 3)]
    arity: usize,
    /// Variance of the additive response noise
    #[arg(long, default_value_t = 0.5)]
    noise_variance: f64,
    #[arg(long, default_value_t = 128)]
    fingerprint_length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write `real_descriptors.csv` with this many noisy copies of alpha
    #[arg(long, default_value_t = 0)]
    signal_features: usize,
    #[arg(long, default_value_t = 0.5)]
    signal_noise_sd: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short = 'k')]
    folds: Option<usize>,
    /// Repeatable; replaces the configured list
    #[arg(long)]
    strategy: Vec<String>,
    /// Repeatable; replaces the configured list
    #[arg(long)]
    mode: Vec<String>,
    /// Repeatable; replaces the configured list
    #[arg(long)]
    metric: Vec<String>,
    /// Report path; a CSV of the cells is written alongside
    #[arg(long)]
    output: Option<PathBuf>,
    /// Any config key, as `key=value`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut cfg = ExperimentConfig::from_kv_str(&text)?;
                relative_to(&mut cfg, path.parent().unwrap_or(Path::new("")));
                cfg
            }
            None => ExperimentConfig::default(),
        };
        let lists = [
            ("strategy", &self.strategy),
            ("mode", &self.mode),
            ("metric", &self.metric),
        ];
        for (key, values) in lists {
            if !values.is_empty() {
                cfg.set(key, &values.join(","))?;
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(k) = self.folds {
            cfg.folds = k;
        }
        if let Some(out) = &self.output {
            cfg.output = Some(out.clone());
        }
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

/// Paths in a config file are relative to the file itself.
fn relative_to(cfg: &mut ExperimentConfig, base: &Path) {
    if let DataSource::Files {
        mixtures,
        descriptors,
        ..
    } = &mut cfg.source
    {
        for p in std::iter::once(mixtures).chain(descriptors.as_mut()) {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let config = SimConfig {
        n_drugs: args.drugs,
        arity: args.arity,
        noise: Noise::Variance(args.noise_variance),
        fingerprint_length: args.fingerprint_length,
        seed: args.seed,
        informative: (args.signal_features > 0).then_some(Informative {
            signal_features: args.signal_features,
            noise_sd: args.signal_noise_sd,
        }),
    };
    let out = simulate(&config)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_mixture_csv(&out.dataset, &args.out.join("mixtures.csv"))?;
    write_descriptor_csv(&out.fingerprints, &args.out.join("descriptors.csv"))?;
    if let Some(real) = &out.informative {
        write_descriptor_csv(real, &args.out.join("real_descriptors.csv"))?;
    }
    let drugs_path = args.out.join("drugs.csv");
    let mut w = csv::Writer::from_path(&drugs_path).map_err(|e| Error::Report(e.to_string()))?;
    let csv_err = |e: csv::Error| Error::Report(format!("{}: {e}", drugs_path.display()));
    w.write_record(["id", "alpha"]).map_err(csv_err)?;
    for d in &out.drugs {
        w.write_record([d.local_id.clone(), d.alpha.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&drugs_path, e))?;
    let active = out.mixtures.iter().filter(|m| m.active).count();
    println!(
        "wrote {} mixtures ({} active) over {} drugs to {}",
        out.mixtures.len(),
        active,
        out.drugs.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_split(exp: &ExperimentArgs, strategy: Option<Strategy>, out: Option<&Path>) -> Result<(), Error> {
    let mut cfg = exp.resolve()?;
    // fold membership does not depend on descriptors
    cfg.modes = vec![DescriptorMode::Pseudo];
    cfg.validate()?;
    let strategy = strategy.unwrap_or(cfg.strategies[0]);
    let data = load_data(&cfg)?;
    let folds = build_splits(&data.dataset, strategy, cfg.folds, cfg.seed)?;
    let csv_err = |e: csv::Error| Error::Report(e.to_string());
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_split_csv(&folds, std::io::BufWriter::new(file)).map_err(csv_err)
        }
        None => write_split_csv(&folds, std::io::stdout().lock()).map_err(csv_err),
    }
}

fn cmd_run(exp: &ExperimentArgs, json: bool) -> Result<(), Error> {
    let cfg = exp.resolve()?;
    let report = run_experiment(&cfg)?;
    if let Some(path) = &cfg.output {
        write_report(&report, path)?;
    }
    let text = if json { report.to_json() } else { report.render_table() };
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_report(path: &Path, json: bool) -> Result<(), Error> {
    let report = read_report(path)?;
    if json {
        print!("{}", report.to_json());
    } else {
        let d = &report.dataset;
        println!(
            "{} mixtures, arity {}, {} folds, {:.1}% active",
            d.mixtures,
            d.arity,
            report.config.folds,
            100.0 * d.active_fraction
        );
        print!("{}", report.render_table());
    }
    Ok(())
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("config", e.render().to_string().trim().to_owned(), 1),
    };
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Split {
            exp,
            split_strategy,
            out,
        } => cmd_split(exp, *split_strategy, out.as_deref()),
        Command::Run { exp, json } => cmd_run(exp, *json),
        Command::Report { path, json } => cmd_report(path, *json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string(), e.exit_code() as u8),
    }
}
