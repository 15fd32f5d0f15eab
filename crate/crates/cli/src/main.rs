use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use herdnav::commands::{self, GlobalOptions, Outcome};
use herdnav::manifest::RuleName;
use herdnav::{Error, ErrorLine};
use herdnav_core::Policy;

#[derive(Parser, Debug)]
#[command(
    name = "herdnav",
    version,
    about = "Wildlife-tracking UAV policy toolkit"
)]
struct Cli {
    /// Camera settings file (`camera.*` keys).
    #[arg(long, global = true)]
    camera: Option<PathBuf>,
    /// Policy settings file (`policy.*` keys).
    #[arg(long = "policy-config", global = true)]
    policy_config: Option<PathBuf>,
    /// Override a single setting, e.g. `--set policy.alt_min_m=12`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Record the wall-clock time in every report.
    #[arg(long, global = true)]
    stamp: bool,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum PolicyArg {
    Baseline,
    Improved,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Baseline => Policy::Baseline,
            PolicyArg::Improved => Policy::Improved,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Usability, usable-footage statistics and behavior/altitude data per mission.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Count usability per frame (any usable box) or per annotation row.
        #[arg(long = "usability-rule", value_enum)]
        usability_rule: Option<RuleName>,
    },
    /// Replay recorded detections through a policy and score against the pilot.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop simulation over a range of seeds.
    Simulate {
        /// Simulation settings file (`sim.*`, and optionally `policy.*`/`camera.*` keys).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        policy: PolicyArg,
        /// `1..20`, `3,5,8` or a single seed.
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn report(outcome: Result<Outcome, Error>) -> ExitCode {
    match outcome {
        Ok(o) => {
            for p in &o.written {
                log::info!("wrote {}", p.display());
            }
            let mut code = 0;
            for (mission, e) in &o.failures {
                eprintln!(
                    "{}",
                    ErrorLine {
                        error: e,
                        mission: Some(mission)
                    }
                );
                code = code.max(e.kind().exit_code());
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!(
                "{}",
                ErrorLine {
                    error: &e,
                    mission: None
                }
            );
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!(
                "{}",
                ErrorLine {
                    error: &Error::Usage(first.trim_start_matches("error: ").into()),
                    mission: None
                }
            );
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();

    let global = GlobalOptions {
        camera: cli.camera,
        policy_config: cli.policy_config,
        set: cli.set,
        stamp: cli.stamp,
    };
    let outcome = match cli.command {
        Command::Analyze {
            manifest,
            out,
            usability_rule,
        } => commands::analyze(&manifest, out, usability_rule, &global),
        Command::Evaluate {
            manifest,
            policy,
            out,
        } => commands::evaluate(&manifest, out, policy.into(), &global),
        Command::Simulate {
            config,
            policy,
            seeds,
            out,
        } => commands::parse_seeds(&seeds)
            .and_then(|s| commands::simulate(config.as_deref(), policy.into(), &s, out, &global)),
    };
    report(outcome)
}
