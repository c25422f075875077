//! Core building blocks for hypermedia Tic-Tac-Toe agents.
//!
//! * [`game`]: the rules engine and built-in opponent strategies.
//! * [`vocab`]: ontology namespaces, JSON-LD contexts and the served ontology documents.
//! * [`hypermedia`]: JSON-LD representations carrying links and forms.
//! * [`rdf`]: a minimal triple set with deterministic Turtle output and a Turtle reader.
//! * [`policy`]: tabular Q-learning with state canonicalization and advice scoring.
//! * [`transport`]: the request/response seam shared by in-process and HTTP clients.

pub mod game;
pub mod hypermedia;
pub mod policy;
pub mod rdf;
pub mod seed;
pub mod transport;
pub mod vocab;

pub use game::{BotKind, BotStrategy, GameError, GameState, GameStatus, Mark, Square};
pub use hypermedia::{Form, GameView, Link, Method, PropertyValue, Representation};
pub use policy::{HyperParams, QTable, RunState, SharedPolicy, StateKey};
pub use vocab::{ContextDefinition, Vocabulary};
