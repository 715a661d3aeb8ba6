use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use elastica_cli::commands::{
    classify_command, generate_command, run_command, ClassifyArgs, Failure, GenerateKind, RunArgs,
    EXIT_FAILURE, EXIT_UNCONVERGED,
};
use elastica_cli::server::{Server, ServerConfig};
use elastica_core::session::SessionConfig;
use elastica_core::ClassTag;

/// Drive closed plane curves to their elastic normal form.
#[derive(Debug, Parser)]
#[command(name = "elastica", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Descend from a curve file until it stops moving.
    ///
    /// Exit codes: 2 unreadable input or parameters, 3 cusp or index change,
    /// 4 unconverged.
    Run(RunArgs),
    /// Write a sampled critical curve as a curve file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
        /// Output file instead of stdout.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Print the Whitney index and the predicted normal form.
    Classify(ClassifyArgs),
    /// Serve the session protocol on /session and the UI bundle on /.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory with the UI bundle.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Seconds a paused or empty session may sit without messages.
        #[arg(long, default_value_t = 600)]
        idle_timeout: u64,
    },
}

fn env_vars() -> Vec<(String, String)> {
    std::env::vars().collect()
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let report = run_command(&args, env_vars())?;
            println!("{}", report.summary_line);
            println!("wrote {}", args.out.display());
            if report.class == ClassTag::Unconverged {
                return Err(Failure::new(
                    EXIT_UNCONVERGED,
                    anyhow::anyhow!("descent did not reach a normal form"),
                ));
            }
            Ok(())
        }
        Command::Generate { kind, out } => {
            let text = generate_command(&kind)?;
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| {
                    Failure::new(EXIT_FAILURE, anyhow::anyhow!(e).context(format!("writing {}", path.display())))
                }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Classify(args) => {
            println!("{}", classify_command(&args, env_vars())?);
            Ok(())
        }
        Command::Serve {
            addr,
            static_dir,
            idle_timeout,
        } => {
            let config = ServerConfig {
                static_dir,
                session: SessionConfig {
                    idle_timeout: Duration::from_secs(idle_timeout),
                    ..SessionConfig::default()
                },
            };
            let server = Server::bind(&addr, config).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
            let local = server.local_addr().map_err(|e| Failure::new(EXIT_FAILURE, e))?;
            println!("listening on http://{local}");
            server.serve().map_err(|e| Failure::new(EXIT_FAILURE, e))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
