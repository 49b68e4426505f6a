use std::path::PathBuf;
use std::process::ExitCode;

use fairhaven_server::{Config, Server};
use tracing_subscriber::EnvFilter;

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
    tracing::info!("shutting down");
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    let config_path = std::env::args()
        .nth(1)
        .or_else(|| std::env::var("FH_CONFIG").ok())
        .map(PathBuf::from);
    let mut config = match &config_path {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
        },
        None => Config::default(),
    };
    if let Err(e) = config.apply_env(|k| std::env::var(k).ok()) {
        eprintln!("{e}");
        return ExitCode::from(1);
    }
    if config.data_dir.is_none() {
        config.data_dir = Some(PathBuf::from("fairhaven-data"));
    }

    let bind = config.bind.clone();
    let server = match Server::open(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot start: {e}");
            return ExitCode::from(1);
        }
    };
    let listener = match tokio::net::TcpListener::bind(&bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("cannot bind {bind}: {e}");
            return ExitCode::from(1);
        }
    };
    tracing::info!(addr = %bind, "listening");
    match server.serve(listener, shutdown_signal()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
