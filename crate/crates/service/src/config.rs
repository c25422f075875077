use std::net::SocketAddr;
use std::path::PathBuf;

use hyperttt_core::game::BotKind;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_address: SocketAddr,
    /// URL path prefix for every route, `""` or `/something`.
    pub base_path: String,
    /// Origin used in emitted hrefs; defaults to `http://<bound address>`.
    pub public_origin: Option<String>,
    pub bot: BotKind,
    /// When false the bot plays X and opens every game.
    pub agent_moves_first: bool,
    /// Where finished game graphs are written. `None` disables export.
    pub export_dir: Option<PathBuf>,
    pub rng_seed: u64,
    /// Cap on sessions held in memory.
    pub max_sessions: usize,
    /// Where the ontologies live; defaults to the service's own `/ontology` routes.
    pub ontology_base: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind_address: SocketAddr::from(([127, 0, 0, 1], 8080)),
            base_path: String::new(),
            public_origin: None,
            bot: BotKind::Heuristic,
            agent_moves_first: true,
            export_dir: None,
            rng_seed: 0,
            max_sessions: 10_000,
            ontology_base: None,
        }
    }
}

impl ServiceConfig {
    /// `base_path` with a leading slash and no trailing slash (or empty).
    pub fn normalized_base_path(&self) -> String {
        let trimmed = self.base_path.trim_matches('/');
        if trimmed.is_empty() {
            String::new()
        } else {
            format!("/{trimmed}")
        }
    }
}
