//! `swarmlink design|simulate|verify|serve`. Log verbosity comes from `SWARM_LOG`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarmlink::cli::{self, Command, Overrides, EXIT_OK};
use swarmlink_teleop::{ServiceConfig, TeleopService};

#[derive(Parser)]
#[command(name = "swarmlink", version, about = "Connectivity-preserving swarm teleoperation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct OverrideArgs {
    /// Seed for the bounded_random force profile.
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long)]
    duration: Option<f64>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Self { seed: a.seed, dt: a.dt, duration: a.duration }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Designs the gains and prints every design condition.
    Design {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// Also write design.json here.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Integrates the scenario and writes trace.csv and trace.meta.json.
    Simulate {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Certifies a trace directory and writes certificate.txt and certificate.json into it.
    Verify {
        /// Trace directory written by `simulate`.
        #[arg(long = "out", value_name = "DIR")]
        dir: PathBuf,
    },
    /// Runs the scenario live and serves it over WebSocket until interrupted.
    Serve {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        #[arg(long, value_name = "ADDR:PORT", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Integration step in seconds.
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn serve(scenario: PathBuf, bind: SocketAddr, dt: Option<f64>) -> i32 {
    let overrides = Overrides { dt, ..Overrides::default() };
    let result = cli::load_scenario(&scenario, &overrides).and_then(|s| {
        let mut service = TeleopService::start(s, ServiceConfig::default())?;
        let runtime = tokio::runtime::Runtime::new()?;
        runtime.block_on(async {
            let listener = tokio::net::TcpListener::bind(bind).await?;
            println!("serving {} on ws://{}/ws", scenario.display(), listener.local_addr()?);
            service
                .serve_on(listener, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
        })?;
        service.shutdown();
        Ok(())
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            cli::exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWARM_LOG", "warn")).init();
    let code = match Cli::parse().command {
        Cmd::Design { scenario, out, overrides } => {
            cli::execute(&Command::Design { scenario, out, overrides: overrides.into() })
        }
        Cmd::Simulate { scenario, out, overrides } => {
            cli::execute(&Command::Simulate { scenario, out, overrides: overrides.into() })
        }
        Cmd::Verify { dir } => cli::execute(&Command::Verify { dir }),
        Cmd::Serve { scenario, bind, dt } => serve(scenario, bind, dt),
    };
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
