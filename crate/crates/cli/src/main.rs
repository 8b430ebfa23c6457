use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nondiv::harness::{self, catalog, CheckStatus, ExperimentConfig, HarnessError, Task};

/// Non-divergence elliptic operators on planar domains: solves, resolvent
/// sweeps, semigroup evolution and the verification battery.
#[derive(Parser)]
#[command(name = "nondiv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve `(μ − A)u = f` with Dirichlet data `g`.
    SolveElliptic(RunArgs),
    /// Solve the Dirichlet problem, by default through the enclosing ball.
    SolveDirichlet(RunArgs),
    /// Sample the resolvent norm over a sector of the complex plane.
    ResolventSweep(RunArgs),
    /// Evolve an initial datum under the semigroup.
    Evolve(RunArgs),
    /// Run every check and write a JSON report.
    Verify(RunArgs),
    /// List built-in domains and coefficient presets.
    Catalog {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output path: the CSV for data tasks, the report for `verify`.
    /// Without it (and without `outputs` in the config) the CSV or report
    /// goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for `verify`.
    #[arg(long)]
    jobs: Option<usize>,
    /// Snapshot times for `evolve`, comma separated.
    #[arg(long = "t", value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Evolution method: `yosida:N`, `be:N` or `eigen`.
    #[arg(long)]
    method: Option<String>,
}

fn load(args: &RunArgs, task: Task) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| HarnessError::Io {
        path: args.config.clone(),
        message: e.to_string(),
    })?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    cfg.task = task;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = &args.times {
        cfg.params.times = t.clone();
    }
    if let Some(m) = &args.method {
        cfg.params.method = m.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(args: &RunArgs, task: Task) -> Result<bool, HarnessError> {
    let cfg = load(args, task)?;
    let outcome = harness::run(&cfg, args.jobs)?;
    if let Some(v) = &outcome.verify {
        for c in &v.checks {
            let tag = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "skip",
            };
            eprintln!("{tag:<5} {}", c.name);
        }
        eprintln!(
            "{} passed, {} failed, {} skipped",
            v.summary.pass, v.summary.fail, v.summary.skipped
        );
    } else {
        eprintln!(
            "{}",
            serde_json::Value::Object(outcome.summary.clone().into_iter().collect())
        );
    }
    let written = harness::write_outputs(&cfg, &outcome, args.out.as_deref())?;
    if written.is_empty() {
        match &outcome.csv {
            Some(csv) => print!("{csv}"),
            None => print!("{}", outcome.report_json()),
        }
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, task) = match &cli.command {
        Command::Catalog { json } => {
            let c = catalog();
            if *json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&c).expect("catalog serializes")
                );
            } else {
                print!("{c}");
            }
            return ExitCode::SUCCESS;
        }
        Command::SolveElliptic(a) => (a, Task::SolveElliptic),
        Command::SolveDirichlet(a) => (a, Task::SolveDirichlet),
        Command::ResolventSweep(a) => (a, Task::ResolventSweep),
        Command::Evolve(a) => (a, Task::Evolve),
        Command::Verify(a) => (a, Task::Verify),
    };
    match execute(args, task) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
