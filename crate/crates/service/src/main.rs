use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gridboard::golden::task_trace;
use gridboard::matrix::DiodeMode;
use gridboard::session::{replay, SessionConfig, SessionTrace, TraceError};

/// Simulated 12x16 layout baseboard with spoken feedback.
#[derive(Parser)]
#[command(name = "gridboard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the engine and accept JSON-lines clients over TCP.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulate a matrix without isolation diodes (ghosting enabled).
        #[arg(long)]
        no_diodes: bool,
        /// Where to record the session trace.
        #[arg(long, default_value = "session-trace.jsonl")]
        trace: PathBuf,
    },
    /// Re-run a recorded trace and write its outputs.
    Replay {
        trace: PathBuf,
        #[arg(long)]
        html: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Also write every notification as JSON lines.
        #[arg(long)]
        notifications: Option<PathBuf>,
    },
    /// Print a bundled task trace.
    Demo {
        #[arg(long)]
        task: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let schema = e.downcast_ref::<TraceError>().is_some();
            ExitCode::from(if schema { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve {
            port,
            host,
            seed,
            no_diodes,
            trace,
        } => {
            let mode = if no_diodes {
                DiodeMode::WithoutDiodes
            } else {
                DiodeMode::WithDiodes
            };
            let server = gridboard_service::start(
                (host.as_str(), port),
                SessionConfig::new(seed, mode),
                Some(&trace),
            )
            .with_context(|| format!("cannot serve on {host}:{port}"))?;
            println!("listening on {}", server.local_addr());
            io::stdout().flush()?;
            server.wait()?;
        }
        Command::Replay {
            trace,
            html,
            json,
            transcript,
            notifications,
        } => {
            let text = fs::read_to_string(&trace)
                .with_context(|| format!("reading {}", trace.display()))?;
            let parsed = SessionTrace::parse(&text)?;
            let out = replay(&parsed);
            let nothing_requested =
                html.is_none() && json.is_none() && transcript.is_none() && notifications.is_none();
            let mut json_text = out.layout_json.clone();
            json_text.push('\n');
            for (path, body) in [
                (html, &out.html),
                (json, &json_text),
                (transcript, &out.transcript),
                (notifications, &out.notification_lines()),
            ] {
                if let Some(path) = path {
                    fs::write(&path, body)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
            }
            if nothing_requested {
                print!("{}", out.transcript);
            }
        }
        Command::Demo { task, out } => {
            let Some(text) = task_trace(task) else {
                bail!("no bundled trace for task {task}; choose 1 or 2");
            };
            match out {
                Some(path) => {
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
