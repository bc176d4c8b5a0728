use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use symdyn_cli::config::SchottkyAction;
use symdyn_cli::exit::Failure;
use symdyn_cli::report::write_outputs;
use symdyn_cli::run::{execute, execute_path, suite_config, Outcome, RunOptions};

#[derive(Parser)]
#[command(name = "symdyn", version, about = "Entropy, pressure and critical exponents of group extensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory for report.json, CSV tables and timings.json.
    #[arg(long, env = "SYMDYN_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (default: config value, else 1).
    #[arg(long)]
    threads: Option<usize>,
    /// Memory budget in MiB; exceeding it exits with code 3.
    #[arg(long)]
    budget_mb: Option<u64>,
    /// Overrides `n_max` of every selected request.
    #[arg(long)]
    n_max: Option<usize>,
    /// Tolerance for `expect` checks.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Clone)]
struct WithConfig {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Action {
    Validate,
    Delta,
    DeltaSub,
    Roof,
}

impl From<Action> for SchottkyAction {
    fn from(a: Action) -> Self {
        match a {
            Action::Validate => SchottkyAction::Validate,
            Action::Delta => SchottkyAction::Delta,
            Action::DeltaSub => SchottkyAction::DeltaSub,
            Action::Roof => SchottkyAction::Roof,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every request in the config.
    Run(WithConfig),
    Entropy(WithConfig),
    Pressure(WithConfig),
    Gurevich(WithConfig),
    Delta(WithConfig),
    DeltaSub(WithConfig),
    Kesten(WithConfig),
    Cogrowth(WithConfig),
    Folner(WithConfig),
    Zeta(WithConfig),
    Count(WithConfig),
    Schottky {
        action: Action,
        #[command(flatten)]
        args: WithConfig,
    },
    VerifyAmenability(WithConfig),
    /// Run a built-in battery: `symbolic` or `schottky`.
    Suite {
        #[arg(default_value = "symbolic")]
        preset: String,
        #[command(flatten)]
        common: Common,
    },
}

fn options(c: &Common, op: Option<&str>, action: Option<SchottkyAction>) -> RunOptions {
    RunOptions {
        threads: c.threads,
        budget_mb: c.budget_mb,
        n_max: c.n_max,
        tolerance: c.tolerance,
        only_op: op.map(str::to_string),
        schottky_action: action,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, out_dir) = match &cli.command {
        Command::Suite { preset, common } => {
            let opts = options(common, None, None);
            (execute(&suite_config(preset), &opts), common.out_dir.clone())
        }
        Command::Schottky { action, args } => {
            let opts = options(&args.common, Some("schottky"), Some((*action).into()));
            (execute_path(&args.config, &opts), args.common.out_dir.clone())
        }
        other => {
            let (op, args) = match other {
                Command::Run(a) => (None, a),
                Command::Entropy(a) => (Some("entropy"), a),
                Command::Pressure(a) => (Some("pressure"), a),
                Command::Gurevich(a) => (Some("gurevich"), a),
                Command::Delta(a) => (Some("delta"), a),
                Command::DeltaSub(a) => (Some("delta-sub"), a),
                Command::Kesten(a) => (Some("kesten"), a),
                Command::Cogrowth(a) => (Some("cogrowth"), a),
                Command::Folner(a) => (Some("folner"), a),
                Command::Zeta(a) => (Some("zeta"), a),
                Command::Count(a) => (Some("count"), a),
                Command::VerifyAmenability(a) => (Some("verify-amenability"), a),
                Command::Suite { .. } | Command::Schottky { .. } => unreachable!(),
            };
            let opts = options(&args.common, op, None);
            (execute_path(&args.config, &opts), args.common.out_dir.clone())
        }
    };
    finish(outcome, &out_dir)
}

fn finish(outcome: Outcome, out_dir: &std::path::Path) -> ExitCode {
    if !outcome.report.results.is_empty() {
        if let Err(e) = write_outputs(out_dir, &outcome.report, &outcome.timings) {
            eprintln!("{}", Failure::Resource(format!("writing {}: {e}", out_dir.display())));
            return ExitCode::from(3);
        }
        for r in &outcome.report.results {
            let status = if r.error.is_some() { "failed" } else { "ok" };
            println!("[{:02}] {:<20} {status}", r.index, r.op);
        }
        println!("wrote {}", out_dir.join("report.json").display());
    }
    match outcome.failure {
        Some(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
        None => ExitCode::SUCCESS,
    }
}
