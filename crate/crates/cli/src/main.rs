use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xrsim_cli::commands::{self, CmdOutput, RunArgs, EXIT_ENV, EXIT_OK, EXIT_SCENARIO};
use xrsim_cli::serve::{self, ServeConfig, ServeError};
use xrsim_core::dsl::load_program;
use xrsim_core::input::DeviceKind;

#[derive(Parser)]
#[command(name = "xrsim", version, about = "Headless cross-reality training-scenario engine")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parses and validates a scenario, printing diagnostics.
    Validate { path: PathBuf },
    /// Runs a scripted event log headlessly and prints a report.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_profile)]
        profile: DeviceKind,
        /// latency_ms,jitter_ms,loss
        #[arg(long)]
        net: Option<String>,
    },
    /// Re-executes a recorded log and checks its final hash.
    Replay {
        log: PathBuf,
        /// Scenario to replay against instead of the one named in the log.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Serves one live session over WebSocket until interrupted.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_clients: usize,
    },
}

fn parse_profile(s: &str) -> Result<DeviceKind, String> {
    DeviceKind::parse(s).ok_or_else(|| format!("unknown profile '{s}' (expected AR or VR)"))
}

fn emit(out: CmdOutput) -> ExitCode {
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    ExitCode::from(out.code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ENV as u8 } else { EXIT_OK as u8 });
        }
    };
    match cli.cmd {
        Cmd::Validate { path } => emit(commands::cmd_validate(&path)),
        Cmd::Run {
            scenario,
            script,
            seed,
            profile,
            net,
        } => emit(commands::cmd_run(
            &RunArgs {
                scenario,
                script,
                seed,
                profile,
                net,
            },
            &commands::log_dir(),
        )),
        Cmd::Replay { log, scenario } => emit(commands::cmd_replay(&log, scenario.as_deref())),
        Cmd::Serve {
            scenario,
            port,
            seed,
            max_clients,
        } => serve_main(scenario, port, seed, max_clients),
    }
}

fn serve_main(scenario: PathBuf, port: u16, seed: u64, max_clients: usize) -> ExitCode {
    let src = match std::fs::read_to_string(&scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", scenario.display());
            return ExitCode::from(EXIT_ENV as u8);
        }
    };
    let program = match load_program(&src) {
        Ok((p, _)) => p,
        Err(diags) => {
            for d in diags {
                eprintln!("{}:{d}", scenario.display());
            }
            return ExitCode::from(EXIT_SCENARIO as u8);
        }
    };
    let name = std::fs::canonicalize(&scenario)
        .unwrap_or(scenario)
        .display()
        .to_string();
    let mut cfg = ServeConfig::new(
        name,
        program,
        SocketAddr::from((Ipv4Addr::UNSPECIFIED, port)),
        commands::log_dir(),
    );
    cfg.seed = seed;
    cfg.max_clients = max_clients;

    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("cannot start runtime: {e}");
            return ExitCode::from(EXIT_ENV as u8);
        }
    };
    rt.block_on(async move {
        let handle = match serve::start(cfg).await {
            Ok(h) => h,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(match e {
                    ServeError::Session(_) => EXIT_SCENARIO,
                    _ => EXIT_ENV,
                } as u8);
            }
        };
        eprintln!("serving on ws://{}/", handle.addr);
        let _ = tokio::signal::ctrl_c().await;
        match handle.shutdown().await {
            Ok((path, _)) => {
                eprintln!("log written to {}", path.display());
                ExitCode::from(EXIT_OK as u8)
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_ENV as u8)
            }
        }
    })
}
