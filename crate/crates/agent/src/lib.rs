//! Game-playing agents.
//!
//! An [`Agent`] knows one URL, the game service entry point, and finds every
//! other interaction in the links and forms of the documents it receives. It
//! learns with a tabular Q-learning policy and can ask another agent for
//! advice over the [`transfer`] protocol.

pub mod acl;
mod agent;
pub mod beliefs;
pub mod endpoints;
pub mod http;
pub mod records;
pub mod transfer;

pub use agent::{advice_trigger, infer_reward, Agent, AgentConfig, AgentError, TrainingAborted};
pub use records::{EpisodeRecord, Outcome};
