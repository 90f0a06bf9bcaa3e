use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stablab::bounds::early_stopping_t;
use stablab::harness::config::parse_override;
use stablab::harness::{emit_plot_data, run_experiment, Experiment, ExperimentConfig, Format, Report};
use stablab::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(name = "stablab", version, about = "Stability experiments for first-order optimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Perturbed-pair stability curves with slope fits and bound overlays
    Stability(Common),
    /// Train/test risk, generalization gap and optimization error
    Risk(Common),
    /// Two-point lower-bound audit
    Lecam(Common),
    /// Numerical sweeps of the matrix inequalities
    Lemmas(Common),
    /// Closed-form bound curves and their exponents
    Bounds(Common),
    /// Early-stopping horizon round(sqrt(n / (eta L R)^2))
    Earlystop {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        lipschitz: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Key-value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config's `out`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, plot-script, json or all
    #[arg(long, default_value = "all")]
    format: String,
    /// Override a config key, e.g. `--set reps=10`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn exit_for(err: &Error) -> u8 {
    if err.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

fn load_config(experiment: Experiment, common: &Common) -> Result<ExperimentConfig, Error> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut overrides = common.overrides.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    overrides.push(("experiment".into(), experiment.name().into()));
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(out) = &common.out {
        overrides.push(("out".into(), out.display().to_string()));
    }
    ExperimentConfig::parse(&text, &overrides)
}

fn print_summary(report: &Report) {
    println!("experiment {} (config {})", report.experiment, report.config_hash());
    for f in &report.fits {
        println!("  fit {:<28} slope {:.4} over [{}, {}]", f.series, f.fit.exponent, f.fit.t_lo, f.fit.t_hi);
    }
    for e in &report.exponents {
        let tab = e.tabulated.map_or("-".to_string(), |v| format!("{v}"));
        println!("  exponent {:<6} tabulated {tab:<6} fitted {:.4}", e.method, e.fitted);
    }
    for c in &report.checks {
        println!("  {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
}

fn run(experiment: Experiment, common: &Common) -> Result<u8, Error> {
    let format: Format = common.format.parse()?;
    let cfg = load_config(experiment, common)?;
    let report = run_experiment(&cfg)?;
    let files = emit_plot_data(&report, &cfg.out, format)?;
    print_summary(&report);
    println!("wrote {} files to {}", files.len(), cfg.out.display());
    let audit = matches!(experiment, Experiment::LecamAudit | Experiment::LemmaAudit);
    Ok(if audit && !report.all_checks_pass() { EXIT_AUDIT } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Stability(c) => run(Experiment::StabilityScaling, c),
        Command::Risk(c) => run(Experiment::RiskDecomposition, c),
        Command::Lecam(c) => run(Experiment::LecamAudit, c),
        Command::Lemmas(c) => run(Experiment::LemmaAudit, c),
        Command::Bounds(c) => run(Experiment::BoundsTable, c),
        Command::Earlystop { n, eta, lipschitz, radius } => early_stopping_t(*n, *eta, *lipschitz, *radius).map(|t| {
            println!("{t}");
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
