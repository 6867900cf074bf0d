mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nmflow::channels::ChannelSpec;
use nmflow::witness::Grid;

use config::{ExperimentConfig, Params};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "nmflow", version, about = "Backflow and divisibility experiments for qubit dynamics")]
struct Cli {
    /// JSON experiment config; replaces the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output prefix; `<prefix>.csv` and `<prefix>.json` are written.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 2 when the acceptance check fails.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Default)]
struct ChannelArgs {
    /// Quasi-eternal decay strength.
    #[arg(long)]
    alpha: Option<f64>,
    /// Quasi-eternal switching time.
    #[arg(long)]
    t0: Option<f64>,
    /// Channel as JSON, e.g. '{"family":"gadc"}'.
    #[arg(long, conflicts_with_all = ["alpha", "t0"])]
    channel: Option<String>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smallest t0 for which the quasi-eternal family stays physical.
    Physicality {
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
    },
    /// RHP rate g(t) and CP / not-P intervals along a grid.
    DivisibilityScan {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Entanglement-breaking time of the evolved Bell state.
    EbTime {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Mutual-information backflow of the Bell state or of random pure states.
    MiScan {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Number of random pure initial states.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// MI backflow of sqrt(1-eps^2)|00> + eps|11> under the GADC.
    GadcScan {
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// C2 along the probe trajectory.
    ProbeBackflow {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Closed-form Hessian eigenvalues against the numeric Hessian.
    HessianCheck {
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sufficient number of ME-POVM outcomes.
    PovmBound {
        #[arg(long)]
        da: Option<usize>,
        #[arg(long)]
        db: Option<usize>,
    },
    /// Guessing probabilities of the commuting counterexample.
    PgCounterexample {
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        p2: Option<f64>,
        #[arg(long)]
        p3: Option<f64>,
    },
}

fn apply_channel(cfg: &mut ExperimentConfig, args: ChannelArgs) -> Result<(), CliError> {
    if let Some(json) = args.channel {
        let spec: ChannelSpec =
            serde_json::from_str(&json).map_err(|e| CliError::ConfigParse(format!("--channel: {e}")))?;
        cfg.channel = Some(spec);
    }
    cfg.params.alpha = args.alpha;
    cfg.params.t0 = args.t0;
    Ok(())
}

fn apply_grid(cfg: &mut ExperimentConfig, args: GridArgs, t_max: f64, step: f64) {
    if args.t_max.is_some() || args.step.is_some() {
        cfg.grid = Some(Grid { t_min: 0.0, t_max: args.t_max.unwrap_or(t_max), step: args.step.unwrap_or(step) });
    }
}

fn config_from_command(cmd: Command) -> Result<ExperimentConfig, CliError> {
    Ok(match cmd {
        Command::Physicality { alpha } => {
            let mut c = ExperimentConfig::new("physicality");
            c.params.alpha = Some(alpha);
            c
        }
        Command::DivisibilityScan { channel, grid } => {
            let mut c = ExperimentConfig::new("divisibility-scan");
            apply_channel(&mut c, channel)?;
            // flags for the quasi-eternal family go into the channel itself
            if c.channel.is_none() && (c.params.alpha.is_some() || c.params.t0.is_some()) {
                c.channel = Some(ChannelSpec::QuasiEternal {
                    alpha: c.params.alpha.unwrap_or(0.4),
                    t0: c.params.t0.unwrap_or(1.0),
                });
            }
            apply_grid(&mut c, grid, 5.0, 0.01);
            c
        }
        Command::EbTime { channel, grid, tol } => {
            let mut c = ExperimentConfig::new("eb-time");
            apply_channel(&mut c, channel)?;
            apply_grid(&mut c, grid, 3.0, 0.01);
            c.params.tol = tol;
            c
        }
        Command::MiScan { channel, grid, random, seed } => {
            let mut c = ExperimentConfig::new("mi-scan");
            apply_channel(&mut c, channel)?;
            apply_grid(&mut c, grid, if random.is_some() { 4.0 } else { 6.0 }, 0.01);
            c.params.random = random;
            c.seed = seed;
            c
        }
        Command::GadcScan { eps, grid } => {
            let mut c = ExperimentConfig::new("gadc-scan");
            c.params.eps = eps;
            apply_grid(&mut c, grid, 0.33, 1e-3);
            c
        }
        Command::ProbeBackflow { alpha, t0, tau, p, grid } => {
            let mut c = ExperimentConfig::new("probe-backflow");
            c.params = Params { alpha, t0, tau, p, ..Params::default() };
            apply_grid(&mut c, grid, tau.unwrap_or(3.0) + 1.0, 0.01);
            c
        }
        Command::HessianCheck { draws, seed } => {
            let mut c = ExperimentConfig::new("hessian-check");
            c.params.draws = draws;
            c.seed = seed;
            c
        }
        Command::PovmBound { da, db } => {
            let mut c = ExperimentConfig::new("povm-bound");
            c.params.da = da;
            c.params.db = db;
            c
        }
        Command::PgCounterexample { p1, p2, p3 } => {
            let mut c = ExperimentConfig::new("pg-counterexample");
            c.params.p1 = p1;
            c.params.p2 = p2;
            c.params.p3 = p3;
            c
        }
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NMFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::ConfigParse(format!("NMFLOW_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::ConfigParse(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let mut cfg = match (cli.config, cli.command) {
        (Some(path), None) => ExperimentConfig::load(&path)?,
        (Some(_), Some(_)) => {
            return Err(CliError::ConfigParse("give either --config or a subcommand, not both".into()))
        }
        (None, Some(cmd)) => config_from_command(cmd)?,
        (None, None) => return Err(CliError::ConfigParse("no experiment given; see --help".into())),
    };
    if let Some(out) = cli.out {
        cfg.output = Some(out);
    }
    let report = experiments::run(&cfg)?;
    let written = output::write_report(&cfg.output_prefix(), &report)?;
    let s = &report.summary;
    match s.value {
        Some(v) => println!("{} = {v}", s.landmark),
        None => println!("{}: none", s.landmark),
    }
    if let (Some(target), Some(pass)) = (&s.target, s.pass) {
        println!("target {target}: {}", if pass { "PASS" } else { "FAIL" });
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(!(cli.check && s.pass == Some(false)))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("nmflow: {e}");
            ExitCode::from(1)
        }
    }
}
