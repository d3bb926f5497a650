//! JSON-over-HTTP service over a snapshot-backed dataset.
//!
//! Reads run against the current in-memory dataset. Every mutation is
//! serialized through a single writer: it works on a copy, persists the new
//! snapshot, and only then becomes visible, so a failed mutation changes
//! nothing. Endpoint shapes are documented in `docs/api.md`.

mod error;
mod routes;

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::http::{header, HeaderValue, Method};
use fluentkb::rdf_io::{load_snapshot, snapshot};
use fluentkb::Dataset;
use thiserror::Error;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

pub use error::ApiError;
pub use routes::router;

pub const DEFAULT_PORT: u16 = 7341;

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub bind: IpAddr,
    pub port: u16,
    /// Snapshot file read at startup and rewritten after every mutation.
    /// `None` keeps the dataset in memory only.
    pub snapshot: Option<PathBuf>,
    pub read_only: bool,
    /// When set, every endpoint except `/health` requires
    /// `Authorization: Bearer <token>`.
    pub token: Option<String>,
    /// Allowed browser origin; any origin when `None`.
    pub cors_origin: Option<String>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            snapshot: None,
            read_only: false,
            token: None,
            cors_origin: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("port must be in 1..=65535")]
    InvalidPort,
    #[error("cannot read snapshot {path}: {source}")]
    ReadSnapshot { path: PathBuf, source: std::io::Error },
    #[error("corrupt snapshot {path}: {diagnostic}")]
    CorruptSnapshot {
        path: PathBuf,
        diagnostic: fluentkb::rdf_io::Diagnostic,
    },
    #[error("invalid CORS origin {0:?}")]
    InvalidOrigin(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    dataset: RwLock<Arc<Dataset>>,
    writer: tokio::sync::Mutex<()>,
    config: ApiConfig,
}

impl AppState {
    pub fn new(dataset: Dataset, config: ApiConfig) -> Arc<Self> {
        Arc::new(AppState {
            dataset: RwLock::new(Arc::new(dataset)),
            writer: tokio::sync::Mutex::new(()),
            config,
        })
    }

    /// Loads the configured snapshot (an absent file is an empty dataset).
    pub fn load(config: ApiConfig) -> Result<Arc<Self>, ServeError> {
        let ds = match &config.snapshot {
            Some(path) if path.exists() => {
                let text = std::fs::read_to_string(path).map_err(|source| ServeError::ReadSnapshot {
                    path: path.clone(),
                    source,
                })?;
                load_snapshot(&text).map_err(|diagnostic| ServeError::CorruptSnapshot {
                    path: path.clone(),
                    diagnostic,
                })?
            }
            _ => Dataset::new(),
        };
        Ok(Self::new(ds, config))
    }

    pub fn config(&self) -> &ApiConfig {
        &self.config
    }

    /// The current dataset. Cheap: readers share the same `Arc`.
    pub fn current(&self) -> Arc<Dataset> {
        self.dataset.read().expect("dataset lock").clone()
    }

    /// Runs `f` on a copy of the dataset under the writer lock. On success the
    /// copy is persisted and published; on error nothing changes.
    pub async fn mutate<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Dataset) -> Result<T, ApiError> + Send + 'static,
    {
        if self.config.read_only {
            return Err(ApiError::new(
                axum::http::StatusCode::FORBIDDEN,
                "read_only",
                "the service is read-only",
            ));
        }
        let _guard = self.writer.lock().await;
        let base = self.current();
        let path = self.config.snapshot.clone();
        let (ds, out) = tokio::task::spawn_blocking(move || {
            let mut ds = (*base).clone();
            let out = f(&mut ds)?;
            if let Some(path) = path {
                persist(&path, &ds).map_err(|e| ApiError::internal(format!("cannot write snapshot: {e}")))?;
            }
            Ok::<_, ApiError>((ds, out))
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
        *self.dataset.write().expect("dataset lock") = Arc::new(ds);
        Ok(out)
    }
}

/// Writes the snapshot through a temporary file and a rename.
pub fn persist(path: &std::path::Path, ds: &Dataset) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, snapshot(ds))?;
    std::fs::rename(&tmp, path)
}

pub fn cors_layer(origin: Option<&str>) -> Result<CorsLayer, ServeError> {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION]);
    Ok(match origin {
        None => layer.allow_origin(Any),
        Some(o) => {
            let value = HeaderValue::from_str(o).map_err(|_| ServeError::InvalidOrigin(o.to_string()))?;
            layer.allow_origin(AllowOrigin::exact(value))
        }
    })
}

/// Serves until ctrl-c.
pub async fn serve(config: ApiConfig) -> Result<(), ServeError> {
    if config.port == 0 {
        return Err(ServeError::InvalidPort);
    }
    let addr = SocketAddr::new(config.bind, config.port);
    let cors = cors_layer(config.cors_origin.as_deref())?;
    let state = AppState::load(config)?;
    let app = router(state).layer(cors);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    tracing::info!("listening on http://{addr}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
