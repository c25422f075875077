//! The Tic-Tac-Toe API: a hypermedia game service with a built-in bot.
//!
//! [`TttService`] holds all game logic and answers requests synchronously; it
//! implements [`Transport`](hyperttt_core::transport::Transport) so agents can
//! use it in-process. [`server`] mounts the same handlers on an HTTP listener.

mod api;
mod config;
pub mod server;
mod session;

pub use api::{ServiceError, TttService};
pub use config::ServiceConfig;
pub use session::{GameIris, GameSession};
