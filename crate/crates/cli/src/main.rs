use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use combsense::scenario::Setup;
use combsense_cli::artifacts::write_run;
use combsense_cli::config::{self, Loaded};
use combsense_cli::scenarios::{self, Scenario};

#[derive(Parser)]
#[command(name = "combsense", version, about = "Multi-pixel frequency comb sensing scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and write its artifacts
    Run {
        #[arg(value_enum)]
        scenario: Scenario,
        /// Experiment file (TOML); the shipped defaults when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output root; files go to <out>/<scenario>/
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides run.seed
        #[arg(long)]
        seed: Option<u64>,
        /// Exit nonzero unless every acceptance threshold holds
        #[arg(long)]
        check: bool,
    },
    /// Check an experiment file and list every problem found
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn report(origin: &str, loaded: &Loaded) {
    for p in &loaded.problems {
        eprintln!("{origin}:{p}");
    }
}

fn load(path: Option<&Path>) -> anyhow::Result<Result<Setup, ()>> {
    let (origin, loaded) = match path {
        Some(p) => (p.display().to_string(), config::load(p)?.1),
        None => ("<default>".to_string(), config::parse(config::DEFAULT_CONFIG)),
    };
    report(&origin, &loaded);
    Ok(match loaded.setup {
        Some(s) if loaded.problems.is_empty() => Ok(s),
        _ => Err(()),
    })
}

fn run(
    scenario: Scenario,
    config: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    check: bool,
) -> anyhow::Result<ExitCode> {
    let Ok(mut setup) = load(config)? else {
        return Ok(ExitCode::from(2));
    };
    if let Some(s) = seed {
        setup.run.seed = s;
    }
    combsense_cli::init_threads()?;
    let outcome = scenarios::run(scenario, &setup)?;
    let dir = out.join(scenario.name());
    let manifest = write_run(&dir, scenario.name(), &setup, &outcome.artifacts, outcome.checks)?;
    println!("{}: {} files in {}", scenario.name(), manifest.files.len() + 1, dir.display());
    let mut failed = 0;
    for c in &manifest.checks {
        if !c.passed {
            failed += 1;
        }
        if check {
            let bound = |b: Option<f64>| b.map_or("-".to_string(), |v| format!("{v:.6}"));
            println!(
                "{} {} = {:.6} [{}, {}]",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                bound(c.lower),
                bound(c.upper)
            );
        }
    }
    if check {
        if manifest.checks.is_empty() {
            println!("{} has no acceptance thresholds", scenario.name());
        }
        if failed > 0 {
            println!("{failed} of {} checks failed", manifest.checks.len());
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            config,
            out,
            seed,
            check,
        } => run(scenario, config.as_deref(), &out, seed, check),
        Command::Validate { config } => config::load(&config).map(|(_, loaded)| {
            report(&config.display().to_string(), &loaded);
            if loaded.is_valid() {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
