//! HTTP front end: every request is forwarded to [`TttService::handle`].

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, Method as HttpMethod, StatusCode, Uri};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use hyperttt_core::hypermedia::Method;

use crate::{ServiceConfig, ServiceError, TttService};

pub fn router(service: Arc<TttService>) -> Router {
    Router::new().fallback(dispatch).with_state(service)
}

async fn dispatch(
    State(service): State<Arc<TttService>>,
    method: HttpMethod,
    uri: Uri,
    _headers: HeaderMap,
    body: Bytes,
) -> HttpResponse {
    let method = match method {
        HttpMethod::GET => Method::Get,
        HttpMethod::POST => Method::Post,
        HttpMethod::PUT => Method::Put,
        HttpMethod::DELETE => Method::Delete,
        _ => return StatusCode::METHOD_NOT_ALLOWED.into_response(),
    };
    let target = uri
        .path_and_query()
        .map_or_else(|| uri.path().to_string(), |pq| pq.as_str().to_string());
    let body = match String::from_utf8(body.to_vec()) {
        Ok(b) if b.is_empty() => None,
        Ok(b) => Some(b),
        Err(_) => return (StatusCode::BAD_REQUEST, "body is not UTF-8").into_response(),
    };
    let answer = tokio::task::spawn_blocking(move || service.handle(method, &target, body.as_deref())).await;
    match answer {
        Ok(r) => {
            let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, [(header::CONTENT_TYPE, r.content_type)], r.body).into_response()
        }
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A service listening on a background runtime. Dropping it stops the server.
pub struct RunningServer {
    service: Arc<TttService>,
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    runtime: Option<tokio::runtime::Runtime>,
}

impl RunningServer {
    pub fn service(&self) -> &Arc<TttService> {
        &self.service
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn entry_url(&self) -> String {
        self.service.entry_url()
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

fn origin_for(config: &ServiceConfig, addr: SocketAddr) -> String {
    config.public_origin.clone().unwrap_or_else(|| format!("http://{addr}"))
}

/// Binds `config.bind_address` (port 0 picks a free port) and serves in the background.
pub fn spawn(config: ServiceConfig) -> Result<RunningServer, ServeError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(TcpListener::bind(config.bind_address))?;
    let addr = listener.local_addr()?;
    let service = Arc::new(TttService::new(config.clone(), &origin_for(&config, addr))?);
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(service.clone());
    runtime.spawn(async move {
        let server = axum::serve(listener, app).with_graceful_shutdown(async {
            let _ = rx.await;
        });
        if let Err(e) = server.await {
            tracing::error!(error = %e, "server stopped");
        }
    });
    Ok(RunningServer {
        service,
        addr,
        shutdown: Some(tx),
        runtime: Some(runtime),
    })
}

/// Serves in the foreground until Ctrl-C.
pub async fn run(config: ServiceConfig) -> Result<(), ServeError> {
    let listener = TcpListener::bind(config.bind_address).await?;
    let addr = listener.local_addr()?;
    let service = Arc::new(TttService::new(config.clone(), &origin_for(&config, addr))?);
    tracing::info!(entry = %service.entry_url(), "game service listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
