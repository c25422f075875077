//! A running game service plus the transport agents use to reach it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use hyperttt_agent::http::HttpTransport;
use hyperttt_core::transport::Transport;
use hyperttt_service::server::{self, RunningServer};
use hyperttt_service::{ServiceConfig, TttService};

use crate::HarnessError;

/// Origin of in-process services. Nothing listens there.
pub const IN_PROCESS_ORIGIN: &str = "http://ttt.local";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportMode {
    /// Handlers are called directly; fast and deterministic.
    #[default]
    InProcess,
    /// Real HTTP over 127.0.0.1.
    LoopbackHttp,
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportMode::InProcess => "in-process",
            TransportMode::LoopbackHttp => "loopback-http",
        })
    }
}

impl FromStr for TransportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in-process" | "inprocess" => Ok(TransportMode::InProcess),
            "loopback-http" | "loopback" | "http" => Ok(TransportMode::LoopbackHttp),
            other => Err(format!("unknown transport {other:?}")),
        }
    }
}

pub struct World {
    mode: TransportMode,
    api: Arc<dyn Transport>,
    service: Arc<TttService>,
    _server: Option<RunningServer>,
}

impl World {
    /// Starts a service. In loopback mode the bind address is replaced by an
    /// ephemeral port on 127.0.0.1.
    pub fn start(mode: TransportMode, mut config: ServiceConfig) -> Result<World, HarnessError> {
        match mode {
            TransportMode::InProcess => {
                let service = Arc::new(TttService::new(config, IN_PROCESS_ORIGIN)?);
                Ok(World {
                    mode,
                    api: service.clone(),
                    service,
                    _server: None,
                })
            }
            TransportMode::LoopbackHttp => {
                config.bind_address = ([127, 0, 0, 1], 0).into();
                let running = server::spawn(config).map_err(|e| HarnessError::Launch(e.to_string()))?;
                Ok(World {
                    mode,
                    api: Arc::new(HttpTransport::new(Duration::from_secs(10))),
                    service: running.service().clone(),
                    _server: Some(running),
                })
            }
        }
    }

    pub fn mode(&self) -> TransportMode {
        self.mode
    }

    pub fn api(&self) -> Arc<dyn Transport> {
        self.api.clone()
    }

    pub fn entry_url(&self) -> String {
        self.service.entry_url()
    }

    pub fn service(&self) -> &Arc<TttService> {
        &self.service
    }
}
