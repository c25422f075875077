//! The request/response seam between clients and the game service.
//!
//! Agents talk to the world through [`Transport`]. The same agent code runs
//! against a real HTTP server or directly against in-process handlers.

use crate::hypermedia::Method;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub content_type: String,
    pub body: String,
}

impl Response {
    pub fn new(status: u16, content_type: impl Into<String>, body: impl Into<String>) -> Self {
        Response {
            status,
            content_type: content_type.into(),
            body: body.into(),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("cannot reach {url}: {reason}")]
    Unreachable { url: String, reason: String },
    #[error("timed out waiting for {url}")]
    Timeout { url: String },
    #[error("invalid url {0:?}")]
    InvalidUrl(String),
}

pub trait Transport: Send + Sync {
    /// Sends one request. Any HTTP status is a successful exchange; only a
    /// failure to get an answer at all is an error.
    fn send(
        &self,
        method: Method,
        url: &str,
        content_type: Option<&str>,
        body: Option<&str>,
    ) -> Result<Response, TransportError>;

    fn get(&self, url: &str) -> Result<Response, TransportError> {
        self.send(Method::Get, url, None, None)
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn send(
        &self,
        method: Method,
        url: &str,
        content_type: Option<&str>,
        body: Option<&str>,
    ) -> Result<Response, TransportError> {
        (**self).send(method, url, content_type, body)
    }
}
