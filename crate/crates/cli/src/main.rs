use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tmfe::complexity::DForm;
use tmfe::solvers::Algorithm;
use tmfe_cli::{commands, BoundArgs, Config, Session};

#[derive(Parser)]
#[command(name = "tmfe", version, about = "Trembling-hand mean field equilibrium experiments")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set game.c_f=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed; overrides `solver.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact trembling best-response iteration.
    Tbr,
    /// TMFQ-learning with a simulator.
    Tmfq,
    /// Generative-model-based learning.
    Gmbl,
    /// Online TMFQ-learning with a population of agents.
    Online,
    /// Independent Q-learning baseline.
    Iql,
    /// Mean-field Q-learning baseline.
    Mfq,
    /// Check the strategic-complementarity clauses; exits nonzero on failure.
    VerifySc {
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Sample-complexity bounds, up to absolute constants.
    Bounds {
        /// Random pairs for estimating the Lipschitz constants.
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        /// Use these C1, C2, C3 instead of estimating them.
        #[arg(long, num_args = 3, value_names = ["C1", "C2", "C3"])]
        constants: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.1)]
        eps_bar: f64,
        #[arg(long, default_value_t = 0.1)]
        delta_bar: f64,
        #[arg(long, default_value_t = 3)]
        k0: u32,
        /// Upper bound L on the covering time.
        #[arg(long, default_value_t = 125.0)]
        covering: f64,
        /// Closed form for the Lipschitz constant of the equilibrium Q-table in the field.
        #[arg(long, value_enum, default_value_t = Form::Split)]
        d_form: Form,
    },
    /// Multi-seed, multi-parameter runs with aggregate statistics.
    Sweep,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Split,
    Squared,
    Linear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let mut overrides = cli.overrides;
    if let Some(dir) = &cli.out {
        overrides.push(format!("output.dir={:?}", dir.display().to_string()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("solver.seed={seed}"));
    }
    let session = Session { config: Config::load(cli.config.as_deref(), &overrides)?, quiet: cli.quiet };
    let algorithm = match cli.command {
        Command::Tbr => Algorithm::Tbr,
        Command::Tmfq => Algorithm::Tmfq,
        Command::Gmbl => Algorithm::Gmbl,
        Command::Online => Algorithm::Online,
        Command::Iql => Algorithm::Iql,
        Command::Mfq => Algorithm::Mfq,
        Command::VerifySc { pairs, tol } => return commands::verify(&session, pairs, tol),
        Command::Bounds { pairs, constants, eps_bar, delta_bar, k0, covering, d_form } => {
            let d_form = match d_form {
                Form::Split => DForm::Split,
                Form::Squared => DForm::Squared,
                Form::Linear => DForm::Linear,
            };
            let constants = constants.map(|c| (c[0], c[1], c[2]));
            commands::bounds(&session, &BoundArgs { pairs, constants, eps_bar, delta_bar, k0, covering, d_form })?;
            return Ok(true);
        }
        Command::Sweep => {
            commands::sweep(&session)?;
            return Ok(true);
        }
    };
    commands::single(&session, algorithm)?;
    Ok(true)
}
