//! An agent's own HTTP endpoints: `POST /message` takes advice requests
//! (answered later by a POST to their reply-to URL) and `POST /response`
//! takes replies to requests this agent sent.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use hyperttt_core::hypermedia::{Method, JSON_LD};
use hyperttt_core::transport::Transport;

use crate::acl::{MessageCodec, Performative};
use crate::transfer::{Advisor, Mailbox};

pub struct Endpoints {
    /// Present when this agent gives advice.
    pub advisor: Option<Arc<Advisor>>,
    pub mailbox: Arc<Mailbox>,
    pub codec: MessageCodec,
    /// Used to deliver replies.
    pub outbound: Arc<dyn Transport>,
}

pub fn router(endpoints: Arc<Endpoints>) -> Router {
    Router::new()
        .route("/message", post(message))
        .route("/response", post(response))
        .with_state(endpoints)
}

async fn message(State(ep): State<Arc<Endpoints>>, body: String) -> StatusCode {
    let Some(advisor) = ep.advisor.clone() else {
        return StatusCode::NOT_FOUND;
    };
    let msg = match ep.codec.parse(&body) {
        Ok(m) if m.performative == Performative::Request => m,
        _ => return StatusCode::BAD_REQUEST,
    };
    let Some(reply_to) = msg.reply_to.clone() else {
        return StatusCode::BAD_REQUEST;
    };
    tokio::task::spawn_blocking(move || {
        let reply = advisor.answer(&msg);
        let body = ep.codec.serialize(&reply);
        match ep.outbound.send(Method::Post, &reply_to, Some(JSON_LD), Some(&body)) {
            Ok(r) if r.is_success() => {}
            Ok(r) => tracing::warn!(status = r.status, to = %reply_to, "reply rejected"),
            Err(e) => tracing::warn!(error = %e, "reply undeliverable"),
        }
    });
    StatusCode::ACCEPTED
}

async fn response(State(ep): State<Arc<Endpoints>>, body: String) -> StatusCode {
    match ep.codec.parse(&body) {
        Ok(msg) if msg.performative != Performative::Request => {
            ep.mailbox.deliver(msg);
            StatusCode::OK
        }
        _ => StatusCode::BAD_REQUEST,
    }
}

/// Endpoints served on a background runtime. Dropping this stops them.
pub struct RunningEndpoints {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    runtime: Option<tokio::runtime::Runtime>,
}

impl RunningEndpoints {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    /// Stops serving immediately; in-flight replies are abandoned.
    pub fn kill(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

impl Drop for RunningEndpoints {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn spawn(bind: SocketAddr, endpoints: Arc<Endpoints>) -> io::Result<RunningEndpoints> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(TcpListener::bind(bind))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    runtime.spawn(async move {
        let server = axum::serve(listener, router(endpoints)).with_graceful_shutdown(async {
            let _ = rx.await;
        });
        if let Err(e) = server.await {
            tracing::error!(error = %e, "agent endpoints stopped");
        }
    });
    Ok(RunningEndpoints {
        addr,
        shutdown: Some(tx),
        runtime: Some(runtime),
    })
}
