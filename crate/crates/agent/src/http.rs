//! [`Transport`] over real HTTP.

use std::time::Duration;

use hyperttt_core::hypermedia::Method;
use hyperttt_core::transport::{Response, Transport, TransportError};

/// A blocking HTTP client with a per-request timeout. Non-2xx statuses are
/// returned as responses, not errors.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpTransport { agent }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport::new(Duration::from_secs(10))
    }
}

impl Transport for HttpTransport {
    fn send(
        &self,
        method: Method,
        url: &str,
        content_type: Option<&str>,
        body: Option<&str>,
    ) -> Result<Response, TransportError> {
        let mut builder = ureq::http::Request::builder().method(method.as_str()).uri(url);
        if let Some(ct) = content_type {
            builder = builder.header("Content-Type", ct);
        }
        let request = builder
            .body(body.unwrap_or("").to_string())
            .map_err(|_| TransportError::InvalidUrl(url.to_string()))?;
        let mut response = self.agent.run(request).map_err(|e| map_error(url, e))?;
        let status = response.status().as_u16();
        let content_type = response
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_string();
        let body = response.body_mut().read_to_string().map_err(|e| map_error(url, e))?;
        Ok(Response::new(status, content_type, body))
    }
}

fn map_error(url: &str, e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout { url: url.to_string() },
        ureq::Error::BadUri(_) | ureq::Error::Http(_) => TransportError::InvalidUrl(url.to_string()),
        other => TransportError::Unreachable {
            url: url.to_string(),
            reason: other.to_string(),
        },
    }
}
