use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use tessera_core::pipeline::Config;
use tessera_service::{router, spawn_evictor, AppState, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "tessera-service", version, about = "HTTP service for interactive texture imprinting")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// TOML file overriding engine tunables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Minutes of inactivity before a session is dropped.
    #[arg(long, default_value_t = 30)]
    idle_minutes: u64,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let engine = match &args.config {
        Some(p) => Config::from_toml(&std::fs::read_to_string(p)?)?,
        None => Config::default(),
    };
    let state = AppState::new(ServiceConfig { engine, idle_timeout: Duration::from_secs(args.idle_minutes * 60) });
    spawn_evictor(state.clone());
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
