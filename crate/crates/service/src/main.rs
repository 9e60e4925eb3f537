use std::net::SocketAddr;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use rtb_service::api;
use rtb_service::cli::{self, Cli, Command};
use rtb_service::session::SessionStore;
use tracing::info;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Serve {
            port,
            host,
            models,
            snapshots,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            match serve(host, *port, models.as_deref(), snapshots.as_deref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("rtb serve: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
        command => {
            let code = cli::run(command, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
            ExitCode::from(code as u8)
        }
    }
}

#[tokio::main]
async fn serve(host: &str, port: u16, models: Option<&Path>, snapshots: Option<&Path>) -> anyhow::Result<()> {
    let nets = match models {
        Some(dir) => {
            rtb_service::load_model_dir(dir).with_context(|| format!("loading models from {}", dir.display()))?
        }
        None => rtb_core::scenarios::all_bundled_models(),
    };
    let mut store = SessionStore::new(nets).context("registering models")?;
    if let Some(dir) = snapshots {
        store = store.with_snapshots(dir);
        let restored = store.restore_dir(dir).context("restoring session snapshots")?;
        info!(restored, dir = %dir.display(), "snapshots enabled");
    }
    let names: Vec<&str> = store.models().map(|m| m.name()).collect();
    info!(models = ?names, "models loaded");

    let addr: SocketAddr = format!("{host}:{port}").parse().context("parsing listen address")?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    info!(%addr, "listening");
    axum::serve(listener, api::router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .context("serving")
}
