use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flexlink::sim::ControllerMode;
use flexlink_cli::commands::{self, Invocation, DEFAULT_FACTORS};

#[derive(Parser)]
#[command(name = "flexlink", version, about = "Composite sliding-mode and LQR control of a flexible-link arm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (defaults when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Controller {
    Composite,
    SlowOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "composite")]
        controller: Controller,
    },
    /// Run the composite and slow-only controllers side by side.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the fast-subsystem Riccati equation and print the gains.
    DesignLqr {
        #[command(flatten)]
        common: Common,
    },
    /// Print the beam modes of the configured link.
    Modes {
        #[command(flatten)]
        common: Common,
    },
    /// Gap between full and slow responses as the link is stiffened.
    SweepEpsilon {
        #[command(flatten)]
        common: Common,
        /// Stiffness multipliers, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FACTORS)]
        factors: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Simulate { common, .. }
        | Command::Compare { common }
        | Command::DesignLqr { common }
        | Command::Modes { common }
        | Command::SweepEpsilon { common, .. } => common,
    };
    let mut stdout = std::io::stdout().lock();
    let result = Invocation::load(common.config.as_deref(), &common.out, common.seed).and_then(|inv| match &cli.command {
        Command::Simulate { controller, .. } => {
            let mode = match controller {
                Controller::Composite => ControllerMode::Composite,
                Controller::SlowOnly => ControllerMode::SlowOnly,
            };
            commands::simulate(&inv, mode, &mut stdout)
        }
        Command::Compare { .. } => commands::compare(&inv, &mut stdout),
        Command::DesignLqr { .. } => commands::design_lqr(&inv, &mut stdout),
        Command::Modes { .. } => commands::modes(&inv, &mut stdout),
        Command::SweepEpsilon { factors, .. } => commands::sweep_epsilon(&inv, factors, &mut stdout),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
