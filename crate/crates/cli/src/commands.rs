//! `validate`, `run` and `replay`. Each returns what it would print and the
//! process exit code so the binary stays a thin wrapper.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use xrsim_core::dsl::{has_errors, load_program, parse_scenario, validate, RuntimeProgram};
use xrsim_core::eventlog::{drive, EventLog, LogEntry, LogHeader, LogTrailer};
use xrsim_core::input::{DeviceKind, RawEvent};
use xrsim_core::netsync::{hash_hex, Cluster, NetSimConfig, Session, SessionConfig};
use xrsim_core::ClientId;

use crate::playthrough::POST_ROLL_TICKS;
use crate::report::{ClientMessages, Rejection, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCENARIO: i32 = 1;
pub const EXIT_ENV: i32 = 2;

/// Overrides the directory logs are written to.
pub const LOG_DIR_ENV: &str = "SCN_LOG_DIR";
pub const DEFAULT_LOG_DIR: &str = "xrsim-logs";

/// Upper bound on simulated-network runs waiting for the uplinks to drain.
const MAX_NET_TICKS: u64 = 1_000_000;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CmdOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CmdOutput {
    fn fail(code: i32, msg: impl Into<String>) -> Self {
        let mut stderr = msg.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Self {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

pub fn log_dir() -> PathBuf {
    std::env::var_os(LOG_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_LOG_DIR))
}

fn read(path: &Path) -> Result<String, CmdOutput> {
    fs::read_to_string(path)
        .map_err(|e| CmdOutput::fail(EXIT_ENV, format!("{}: {e}", path.display())))
}

fn render_diags(path: &Path, diags: &[xrsim_core::dsl::Diagnostic]) -> String {
    diags.iter().map(|d| format!("{}:{d}\n", path.display())).collect()
}

fn load(path: &Path) -> Result<RuntimeProgram, CmdOutput> {
    let src = read(path)?;
    load_program(&src)
        .map(|(p, _)| p)
        .map_err(|d| CmdOutput::fail(EXIT_SCENARIO, render_diags(path, &d)))
}

/// Name recorded in log headers: the absolute path when it can be resolved.
fn scenario_name(path: &Path) -> String {
    fs::canonicalize(path)
        .unwrap_or_else(|_| path.to_path_buf())
        .display()
        .to_string()
}

fn write_log(dir: &Path, prefix: &str, log: &EventLog) -> Result<PathBuf, CmdOutput> {
    let name = format!(
        "{prefix}-{}-{}.jsonl",
        &log.header.digest[..8.min(log.header.digest.len())],
        log.header.seed
    );
    let path = dir.join(name);
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(&path, log.to_jsonl()))
        .map_err(|e| CmdOutput::fail(EXIT_ENV, format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub fn cmd_validate(path: &Path) -> CmdOutput {
    let src = match read(path) {
        Ok(s) => s,
        Err(e) => return e,
    };
    let diags = match parse_scenario(&src) {
        Ok(doc) => validate(&doc),
        Err(d) => d,
    };
    CmdOutput {
        code: if has_errors(&diags) { EXIT_SCENARIO } else { EXIT_OK },
        stdout: render_diags(path, &diags),
        stderr: String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArgs {
    pub scenario: PathBuf,
    pub script: PathBuf,
    pub seed: u64,
    pub profile: DeviceKind,
    /// `latency_ms,jitter_ms,loss`.
    pub net: Option<String>,
}

/// Parses a script: one raw event per line, blank lines ignored. Events are
/// stably ordered by tick.
pub fn parse_script(text: &str) -> Result<Vec<RawEvent>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ev: RawEvent =
            serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
        out.push(ev);
    }
    out.sort_by_key(|e| e.tick);
    Ok(out)
}

fn rejections(entries: &[LogEntry], rejected: &[(usize, xrsim_core::runtime::EngineError)]) -> Vec<Rejection> {
    rejected
        .iter()
        .map(|(i, e)| {
            let (tick, client) = match &entries[*i] {
                LogEntry::Event(ev) => (ev.tick, ev.client),
                LogEntry::Join { tick, client, .. } | LogEntry::Leave { tick, client } => (*tick, *client),
            };
            Rejection {
                tick,
                client,
                error: e.to_string(),
            }
        })
        .collect()
}

fn input_counts(entries: &[LogEntry]) -> BTreeMap<ClientId, ClientMessages> {
    let mut m: BTreeMap<ClientId, ClientMessages> = BTreeMap::new();
    for e in entries {
        match e {
            LogEntry::Join { client, .. } => {
                m.entry(*client).or_default();
            }
            LogEntry::Event(ev) => m.entry(ev.client).or_default().inputs += 1,
            LogEntry::Leave { .. } => {}
        }
    }
    m
}

/// Re-executes a log and builds the report. The log must carry a trailer.
fn report_for_log(
    mode: &'static str,
    program: RuntimeProgram,
    log: &EventLog,
    messages: Option<BTreeMap<ClientId, ClientMessages>>,
) -> Result<RunReport, CmdOutput> {
    let end = log.trailer.as_ref().map_or(0, |t| t.total_ticks);
    let result = drive(program, log.header.seed, &log.entries, end)
        .map_err(|e| CmdOutput::fail(EXIT_SCENARIO, e.to_string()))?;
    let rejected = rejections(&log.entries, &result.rejected);
    Ok(RunReport::from_drive(
        mode,
        log.header.scenario.clone(),
        log.header.seed,
        &result,
        rejected,
        messages.unwrap_or_else(|| input_counts(&log.entries)),
    ))
}

fn run_exit(report: &RunReport) -> i32 {
    if report.completed && report.rejected.is_empty() {
        EXIT_OK
    } else {
        EXIT_SCENARIO
    }
}

pub fn cmd_run(args: &RunArgs, log_dir: &Path) -> CmdOutput {
    match run_inner(args, log_dir) {
        Ok(o) | Err(o) => o,
    }
}

fn run_inner(args: &RunArgs, log_dir: &Path) -> Result<CmdOutput, CmdOutput> {
    let program = load(&args.scenario)?;
    let script = parse_script(&read(&args.script)?)
        .map_err(|e| CmdOutput::fail(EXIT_SCENARIO, format!("{}: {e}", args.script.display())))?;
    let net = args
        .net
        .as_deref()
        .map(|s| NetSimConfig::parse(s, args.seed))
        .transpose()
        .map_err(|e| CmdOutput::fail(EXIT_ENV, format!("--net: {e}")))?;
    let mut clients: Vec<ClientId> = script.iter().map(|e| e.client).collect();
    clients.sort_unstable();
    clients.dedup();
    let name = scenario_name(&args.scenario);

    let (log, messages) = match net {
        None => {
            let mut log = EventLog::new(LogHeader {
                digest: program.digest.clone(),
                seed: args.seed,
                scenario: name,
            });
            log.entries.extend(clients.iter().map(|c| LogEntry::Join {
                tick: 0,
                client: *c,
                profile: args.profile.profile(),
            }));
            log.entries.extend(script.iter().cloned().map(LogEntry::Event));
            let end = crate::playthrough::last_tick(&script) + POST_ROLL_TICKS;
            let result = drive(program.clone(), args.seed, &log.entries, end)
                .map_err(|e| CmdOutput::fail(EXIT_SCENARIO, e.to_string()))?;
            log.trailer = Some(LogTrailer {
                final_hash: hash_hex(result.engine.state_hash()),
                total_ticks: result.engine.now(),
            });
            (log, None)
        }
        Some(net) => {
            let session = Session::new(name, program.clone(), args.seed, SessionConfig::default())
                .map_err(|e| CmdOutput::fail(EXIT_SCENARIO, e.to_string()))?;
            let mut cluster = Cluster::new(session);
            for c in &clients {
                let idx = cluster.connect(args.profile.profile(), net);
                cluster.schedule(idx, script.iter().filter(|e| e.client == *c).cloned());
            }
            while !cluster.idle() && cluster.tick() < MAX_NET_TICKS {
                cluster.step();
            }
            cluster.run(POST_ROLL_TICKS);
            let log = cluster.session.finish_log();
            // Server-assigned ids follow connection order.
            let messages = cluster
                .clients
                .iter()
                .filter_map(|c| {
                    let id = c.id.or(c.replica.client)?;
                    let inputs = cluster.session.inbound_counts().get(&id).copied().unwrap_or(0);
                    Some((
                        id,
                        ClientMessages {
                            inputs,
                            sent: Some(c.sent),
                            received: Some(c.received_total()),
                        },
                    ))
                })
                .collect();
            (log, Some(messages))
        }
    };

    let path = write_log(log_dir, "run", &log)?;
    let mut report = report_for_log("run", program, &log, messages)?;
    report.log = Some(path.display().to_string());
    Ok(CmdOutput {
        code: run_exit(&report),
        stdout: report.to_line(),
        stderr: String::new(),
    })
}

/// Replays `log_path` against the scenario named in its header, or against
/// `scenario` when given.
pub fn cmd_replay(log_path: &Path, scenario: Option<&Path>) -> CmdOutput {
    match replay_inner(log_path, scenario) {
        Ok(o) | Err(o) => o,
    }
}

fn replay_inner(log_path: &Path, scenario: Option<&Path>) -> Result<CmdOutput, CmdOutput> {
    let log = EventLog::parse(&read(log_path)?)
        .map_err(|e| CmdOutput::fail(EXIT_SCENARIO, format!("{}: {e}", log_path.display())))?;
    let scenario_path = scenario
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&log.header.scenario));
    let program = load(&scenario_path)?;
    if program.digest != log.header.digest {
        return Err(CmdOutput::fail(
            EXIT_SCENARIO,
            format!(
                "refusing to replay: log was recorded against digest {} but {} has digest {}",
                log.header.digest,
                scenario_path.display(),
                program.digest
            ),
        ));
    }
    let Some(trailer) = log.trailer.clone() else {
        return Err(CmdOutput::fail(
            EXIT_SCENARIO,
            format!("{}: log has no trailer with a recorded hash", log_path.display()),
        ));
    };
    let mut report = report_for_log("replay", program, &log, None)?;
    let matched = report.final_hash == trailer.final_hash;
    report.recorded_hash = Some(trailer.final_hash.clone());
    report.hash_match = Some(matched);
    let mut stderr = String::new();
    if !matched {
        let _ = writeln!(
            stderr,
            "hash mismatch: recorded {} replayed {}",
            trailer.final_hash, report.final_hash
        );
    }
    Ok(CmdOutput {
        code: if matched { EXIT_OK } else { EXIT_SCENARIO },
        stdout: report.to_line(),
        stderr,
    })
}
