//! Multi-round annotation campaigns over HTTP.
//!
//! Annotators pull use pairs and submit relatedness judgments; an operator
//! closes rounds, which re-clusters each word's usage graph and samples the
//! next batch of pairs. All state derives from a per-campaign append-only
//! event log.

pub mod api;
pub mod campaign;
pub mod error;
pub mod http;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

pub use error::{Result, ServiceError};

pub const ENV_LISTEN: &str = "SEMCHANGE_LISTEN";
pub const ENV_DATA_DIR: &str = "SEMCHANGE_DATA_DIR";
pub const ENV_OPERATOR_TOKEN: &str = "SEMCHANGE_OPERATOR_TOKEN";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub operator_token: String,
}

impl ServiceConfig {
    /// Reads `SEMCHANGE_LISTEN` (default `127.0.0.1:8080`),
    /// `SEMCHANGE_DATA_DIR` (default `./data`) and the required
    /// `SEMCHANGE_OPERATOR_TOKEN`.
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let listen = get(ENV_LISTEN).unwrap_or_else(|| "127.0.0.1:8080".into());
        let listen = listen.parse().map_err(|_| ServiceError::Invalid(format!("{ENV_LISTEN}: bad address `{listen}`")))?;
        let data_dir = get(ENV_DATA_DIR).map_or_else(|| PathBuf::from("data"), PathBuf::from);
        let operator_token = get(ENV_OPERATOR_TOKEN)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| ServiceError::Invalid(format!("{ENV_OPERATOR_TOKEN} must be set")))?;
        Ok(ServiceConfig { listen, data_dir, operator_token })
    }
}

/// Opens the data directory and serves the API until the task is cancelled.
pub async fn serve(cfg: ServiceConfig) -> Result<()> {
    let store = store::Store::open(&cfg.data_dir)?;
    let app = http::router(http::AppState::new(store, cfg.operator_token));
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, data = %cfg.data_dir.display(), "listening");
    axum::serve(listener, app).await?;
    Ok(())
}
