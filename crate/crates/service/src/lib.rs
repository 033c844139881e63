//! Session service: critique sessions over HTTP, persisted to disk.
//!
//! Environment:
//! - `CRITIQ_PROVIDER` — `stub` (default, rule-backed) or `remote`
//! - `CRITIQ_BASE_URL`, `CRITIQ_MODEL`, `CRITIQ_API_KEY`, `CRITIQ_TIMEOUT_MS` — remote provider
//! - `CRITIQ_DATA_DIR` — session directory (default `./critiq-data`)
//! - `CRITIQ_PORT` — listen port (default 8787); `CRITIQ_HOST` (default 127.0.0.1)

pub mod api;
pub mod remote;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use critiq_core::analyzers::RuleConfig;
use critiq_core::perspectives::{CritiqueProvider, ProviderError, RuleProvider};

pub use api::{router, AppState};
pub use remote::{RemoteConfig, RemoteProvider};
pub use session::{ChatTurn, Session, SessionError};
pub use store::{Store, StoreError};

pub const DEFAULT_PORT: u16 = 8787;
pub const DEFAULT_DATA_DIR: &str = "critiq-data";

/// Picks the provider named by `CRITIQ_PROVIDER`.
pub fn provider_from_env(rules: &RuleConfig) -> Result<Arc<dyn CritiqueProvider>, ProviderError> {
    let kind = std::env::var("CRITIQ_PROVIDER").unwrap_or_else(|_| "stub".into());
    match kind.trim() {
        "" | "stub" => Ok(Arc::new(RuleProvider::new(rules.clone()))),
        "remote" => Ok(Arc::new(RemoteProvider::new(RemoteConfig::from_env()?))),
        other => Err(ProviderError::Config(format!(
            "unknown CRITIQ_PROVIDER {other:?}, expected stub or remote"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
}

impl ServeConfig {
    pub fn from_env() -> Result<Self, String> {
        let port = match std::env::var("CRITIQ_PORT") {
            Ok(p) => p
                .parse::<u16>()
                .map_err(|_| format!("CRITIQ_PORT must be a port number, got {p:?}"))?,
            Err(_) => DEFAULT_PORT,
        };
        let host = std::env::var("CRITIQ_HOST").unwrap_or_else(|_| "127.0.0.1".into());
        let addr = format!("{host}:{port}")
            .parse()
            .map_err(|e| format!("invalid listen address {host}:{port}: {e}"))?;
        let data_dir = std::env::var_os("CRITIQ_DATA_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| DEFAULT_DATA_DIR.into());
        Ok(ServeConfig { addr, data_dir })
    }
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServeConfig, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    log::info!(
        "critiq service on http://{} (provider {}, data {})",
        listener.local_addr()?,
        state.provider.name(),
        config.data_dir.display()
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
