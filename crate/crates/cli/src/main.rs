use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use textlayers_cli::commands::{self, CommandError, ExportFormat, EXIT_USAGE};
use textlayers_cli::{build_app, AppState};
use textlayers_core::backend::{build_backend, BackendConfig};
use textlayers_core::document::DocumentStore;
use textlayers_core::engine::Engine;

#[derive(Parser)]
#[command(name = "textlayers", version, about = "Layered text documents with language-backed editing tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Create a document file.
    Init {
        file: PathBuf,
        #[arg(long, default_value = "")]
        text: String,
    },
    /// Print the composed text of a document file.
    Compose { file: PathBuf },
    /// Apply one tool or boolean operation to a document file in place.
    Apply {
        file: PathBuf,
        #[arg(long)]
        op: String,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        end: usize,
        /// Tool parameters as a JSON object.
        #[arg(long)]
        params: Option<String>,
    },
    /// Print a document file as plain text or as its JSON state.
    Export {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Txt)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Txt,
    Json,
}

fn config() -> Result<BackendConfig, CommandError> {
    BackendConfig::from_env().map_err(|e| CommandError::usage(e.to_string()))
}

fn engine(config: &BackendConfig) -> Result<Engine, CommandError> {
    let backend = build_backend(config).map_err(|e| CommandError::usage(e.to_string()))?;
    Ok(Engine::new(backend, config.resize_variants))
}

fn serve(host: String, port: u16, data_dir: PathBuf) -> Result<String, CommandError> {
    let config = config()?;
    let backend = build_backend(&config).map_err(|e| CommandError::usage(e.to_string()))?;
    let store = DocumentStore::open(&data_dir)?;
    let state = Arc::new(AppState::new(store, backend, config.resize_variants));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CommandError::usage(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host.as_str(), port))
            .await
            .map_err(|e| CommandError::usage(format!("cannot listen on {host}:{port}: {e}")))?;
        tracing::info!(addr = %listener.local_addr().unwrap(), data_dir = %data_dir.display(), "listening");
        axum::serve(listener, build_app(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CommandError::usage(e.to_string()))
    })?;
    Ok(String::new())
}

fn run(cli: Cli) -> Result<String, CommandError> {
    match cli.command {
        Command::Serve { port, data_dir, host } => serve(host, port, data_dir),
        Command::Init { file, text } => commands::init(&file, &text),
        Command::Compose { file } => commands::compose(&file),
        Command::Apply { file, op, start, end, params } => {
            commands::apply(&file, &engine(&config()?)?, &op, start, end, params.as_deref())
        }
        Command::Export { file, format } => {
            let format = match format {
                Format::Txt => ExportFormat::Txt,
                Format::Json => ExportFormat::Json,
            };
            commands::export(&file, format)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(u8::try_from(e.code).unwrap_or(EXIT_USAGE as u8))
        }
    }
}
