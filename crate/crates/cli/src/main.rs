//! `hydroblow` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hydroblow::profile::GridKind;
use hydroblow::reduced1d::Discretization;

use commands::{CliError, Status};
use config::{ConfigError, InitialData, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "hydroblow", version, about = "Self-similar blowup profiles and simulations")]
struct Cli {
    /// Config document (TOML); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and certify a profile.
    Profile(ProfileArgs),
    /// Integrate the reduced equation and estimate the blowup time.
    Simulate1d(Simulate1dArgs),
    /// Integrate the channel system from the blowup initial data.
    Simulate2d(Simulate2dArgs),
    /// Profile parameters and blowup times over a list of m.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long = "height", allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    grid: Option<GridKind>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Debug, Args)]
struct Simulate1dArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long = "height", allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    scheme: Option<Discretization>,
    #[arg(long)]
    initial: Option<InitialData>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    blowup_threshold: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
    #[arg(long)]
    expect_blowup: Option<bool>,
}

#[derive(Debug, Args)]
struct Simulate2dArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long = "height", allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long = "length", allow_hyphen_values = true)]
    l: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    filter_strength: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
    #[arg(long)]
    trace_tolerance: Option<f64>,
    #[arg(long)]
    exhaustion_limit: Option<f64>,
    #[arg(long)]
    zero_field: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated values of m.
    #[arg(long, value_delimiter = ',', num_args = 0..=1)]
    m_list: Option<Vec<f64>>,
    #[arg(long = "height", allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    t_tolerance: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply(config: &mut RunConfig, command: Command) -> Command {
    match &command {
        Command::Profile(a) => {
            let c = &mut config.profile;
            set(&mut c.m, a.m);
            set(&mut c.h, a.h);
            set(&mut c.n, a.n);
            set(&mut c.grid, a.grid);
            set(&mut c.segments, a.segments);
            set(&mut c.tolerance, a.tolerance);
        }
        Command::Simulate1d(a) => {
            let c = &mut config.simulate1d;
            set(&mut c.m, a.m);
            set(&mut c.h, a.h);
            set(&mut c.n, a.n);
            set(&mut c.scheme, a.scheme);
            set(&mut c.initial, a.initial);
            set(&mut c.lambda, a.lambda);
            set(&mut c.t_end, a.t_end);
            set(&mut c.rel_tol, a.rel_tol);
            set(&mut c.abs_tol, a.abs_tol);
            set(&mut c.blowup_threshold, a.blowup_threshold);
            set(&mut c.max_steps, a.max_steps);
            set(&mut c.snapshot_times, a.snapshot_times.clone());
            if a.expect_blowup.is_some() {
                c.expect_blowup = a.expect_blowup;
            }
        }
        Command::Simulate2d(a) => {
            let c = &mut config.simulate2d;
            set(&mut c.m, a.m);
            set(&mut c.h, a.h);
            set(&mut c.l, a.l);
            set(&mut c.k, a.k);
            set(&mut c.k_max, a.k_max);
            set(&mut c.nz, a.nz);
            set(&mut c.nu, a.nu);
            set(&mut c.filter_strength, a.filter_strength);
            set(&mut c.t_end, a.t_end);
            set(&mut c.rel_tol, a.rel_tol);
            set(&mut c.abs_tol, a.abs_tol);
            set(&mut c.snapshot_times, a.snapshot_times.clone());
            set(&mut c.trace_tolerance, a.trace_tolerance);
            set(&mut c.exhaustion_limit, a.exhaustion_limit);
            if a.zero_field {
                c.zero_field = true;
            }
        }
        Command::Sweep(a) => {
            let c = &mut config.sweep;
            set(&mut c.m_list, a.m_list.clone());
            set(&mut c.h, a.h);
            set(&mut c.n, a.n);
            set(&mut c.t_end, a.t_end);
            set(&mut c.samples, a.samples);
            set(&mut c.t_tolerance, a.t_tolerance);
        }
    }
    command
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.out.is_some() {
        config.output_dir = cli.out.clone();
    }
    match apply(&mut config, cli.command) {
        Command::Profile(_) => commands::cmd_profile(&config),
        Command::Simulate1d(_) => commands::cmd_simulate1d(&config),
        Command::Simulate2d(_) => commands::cmd_simulate2d(&config),
        Command::Sweep(_) => commands::cmd_sweep(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Status::Usage.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            let status = e.status();
            match &e {
                CliError::Config(ConfigError::Usage(_)) => eprintln!("hydroblow: {e}"),
                _ => eprintln!("hydroblow: error: {e}"),
            }
            ExitCode::from(status.code() as u8)
        }
    }
}
