//! Command-line front end: posterior inference, rectifier fitting, coverage
//! benchmarks, theory diagnostics and scenario generation.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rectiprior::diagnostics::{labeled_erm, predict_centering_bias, sandwich};
use rectiprior::harness::{
    load_data, run_bench, write_scenario_files, ConfigBuilder, RunConfig, CONFIG_KEYS,
};
use rectiprior::posterior::{run_posterior, write_posterior_records};
use rectiprior::rectifiers::{apply_rectifier, fit_rectifier, write_rectifier};
use rectiprior::Error;

#[derive(Parser)]
#[command(
    name = "rectiprior",
    version,
    about = "Posterior bootstrap inference under rectified AI priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the posterior and write one JSON record per draw.
    Infer(Flags),
    /// Fit a rectifier on the labeled data and write it.
    Rectify(Flags),
    /// Run the coverage benchmark and write the records table.
    Bench(Flags),
    /// Report the sandwich covariance and the predicted centering bias.
    Diagnose(Flags),
    /// Write the CSV files of a synthetic scenario into `--out`.
    Generate(Flags),
}

#[derive(Args)]
struct Flags {
    /// Configuration file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    labeled: Option<String>,
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    classes: Option<String>,
    #[arg(long)]
    rectifier: Option<String>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    draws: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    replications: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads, or `auto`.
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Any other configuration key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut b = ConfigBuilder::default();
        if let Some(path) = &self.config {
            b.apply_text(&std::fs::read_to_string(path)?)?;
        }
        let named = [
            ("labeled", &self.labeled),
            ("base", &self.base),
            ("scenario", &self.scenario),
            ("loss", &self.loss),
            ("tau", &self.tau),
            ("classes", &self.classes),
            ("rectifier", &self.rectifier),
            ("strategy", &self.strategy),
            ("gamma", &self.gamma),
            ("draws", &self.draws),
            ("level", &self.level),
            ("replications", &self.replications),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("out", &self.out),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                b.set(key, v)?;
            }
        }
        for kv in &self.extra {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            b.set(k.trim(), v)?;
        }
        b.build()
    }
}

/// Primary output goes to `--out` when given, else stdout. The human-readable
/// report goes to stdout in the first case and stderr in the second.
struct Sinks {
    primary: Box<dyn Write>,
    report: Box<dyn Write>,
}

impl Sinks {
    fn open(out: Option<&Path>) -> Result<Self, Error> {
        Ok(match out {
            Some(p) => Sinks {
                primary: Box::new(BufWriter::new(File::create(p)?)),
                report: Box::new(io::stdout()),
            },
            None => Sinks {
                primary: Box::new(io::stdout().lock()),
                report: Box::new(io::stderr()),
            },
        })
    }
}

fn infer(config: &RunConfig) -> Result<(), Error> {
    let data = load_data(config)?;
    let run = run_posterior(
        &data.labeled,
        &data.base,
        &config.loss,
        &config.prior_config(),
    )?;
    let mut sinks = Sinks::open(config.out.as_deref())?;
    write_posterior_records(&run, &mut sinks.primary)?;
    sinks.primary.flush()?;
    writeln!(
        sinks.report,
        "{} draws ({} failed), γ = {}, rectifier {}, strategy {}",
        run.samples.len(),
        run.failed(),
        config.gamma,
        config.rectifier_spec().name(),
        config.strategy.name()
    )?;
    for j in 0..run.dim() {
        let (l, u) = run.intervals[j];
        writeln!(
            sinks.report,
            "θ[{j}]: mean {:.6}, sd {:.6}, {}% interval [{l:.6}, {u:.6}]",
            run.point[j],
            run.sd(j),
            100.0 * config.level
        )?;
    }
    Ok(())
}

fn rectify(config: &RunConfig) -> Result<(), Error> {
    let data = load_data(config)?;
    let fitted = fit_rectifier(&config.rectifier_spec(), &data.labeled, &data.base)?;
    let mut sinks = Sinks::open(config.out.as_deref())?;
    sinks
        .primary
        .write_all(write_rectifier(&fitted).as_bytes())?;
    sinks.primary.flush()?;
    writeln!(
        sinks.report,
        "fitted {} rectifier on {} labeled rows",
        fitted.kind(),
        data.labeled.len()
    )?;
    Ok(())
}

fn bench(config: &RunConfig) -> Result<(), Error> {
    let output = run_bench(config)?;
    let mut sinks = Sinks::open(config.out.as_deref())?;
    output.write_table(&mut sinks.primary)?;
    sinks.primary.flush()?;
    output.write_summary(&mut sinks.report)?;
    Ok(())
}

fn diagnose(config: &RunConfig) -> Result<(), Error> {
    let data = load_data(config)?;
    let loss = &config.loss;
    let theta_tilde = labeled_erm(&data.labeled, loss)?;
    let spec = config.rectifier_spec();
    let fitted = fit_rectifier(&spec, &data.labeled, &data.base)?;
    let rectified = apply_rectifier(&fitted, &data.base)?;
    let sw = sandwich(&data.labeled, &rectified, loss, &theta_tilde, config.gamma)?;
    let raw_bias =
        predict_centering_bias(&data.labeled, &data.base, loss, &theta_tilde, config.gamma)?;
    let rect_bias =
        predict_centering_bias(&data.labeled, &rectified, loss, &theta_tilde, config.gamma)?;

    let mut sinks = Sinks::open(config.out.as_deref())?;
    let w = &mut sinks.primary;
    writeln!(
        w,
        "labeled rows: {}, base atoms: {}, γ = {}",
        data.labeled.len(),
        data.base.len(),
        config.gamma
    )?;
    writeln!(
        w,
        "rectifier: {} (fitted on all labeled rows)",
        fitted.kind()
    )?;
    for j in 0..theta_tilde.len() {
        writeln!(
            w,
            "θ[{j}]: labeled ERM {:.6}, sandwich sd {:.6}, predicted bias raw {:.6}, rectified {:.6}",
            theta_tilde[j],
            sw.sd()[j],
            raw_bias[j],
            rect_bias[j]
        )?;
    }
    w.flush()?;
    Ok(())
}

fn generate(config: &RunConfig) -> Result<(), Error> {
    let dir = config
        .out
        .as_deref()
        .ok_or_else(|| Error::Parameter("generate needs --out DIR".into()))?;
    for p in write_scenario_files(config, dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_data() {
        2
    } else if e.is_numerical() {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (flags, action): (&Flags, fn(&RunConfig) -> Result<(), Error>) = match &cli.command {
        Command::Infer(f) => (f, infer),
        Command::Rectify(f) => (f, rectify),
        Command::Bench(f) => (f, bench),
        Command::Diagnose(f) => (f, diagnose),
        Command::Generate(f) => (f, generate),
    };
    match flags.resolve().and_then(|c| {
        c.validate()?;
        action(&c)
    }) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Parameter(_)) {
                eprintln!("configuration keys: {}", CONFIG_KEYS.join(", "));
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
