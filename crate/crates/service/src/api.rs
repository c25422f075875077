use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde_json::{json, Value};

use hyperttt_core::game::{BotStrategy, Mark, Square};
use hyperttt_core::hypermedia::{Form, Link, Method, PropertyValue, Representation, JSON_LD};
use hyperttt_core::rdf::{standard_prefixes, write_turtle};
use hyperttt_core::seed;
use hyperttt_core::transport::{Response, Transport, TransportError};
use hyperttt_core::vocab::{ttt, wot, OntologyName, Vocabulary, WOT_NS};

use crate::config::ServiceConfig;
use crate::session::GameSession;

const TURTLE: &str = "text/turtle";
const PROBLEM_JSON: &str = "application/json";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("export directory {path:?} is not writable: {source}")]
    ExportDir { path: PathBuf, source: io::Error },
    #[error("invalid origin {0:?}")]
    InvalidOrigin(String),
}

/// The game service. Every request is answered by [`TttService::handle`].
pub struct TttService {
    config: ServiceConfig,
    origin: String,
    base_path: String,
    root: String,
    vocab: Vocabulary,
    sessions: RwLock<HashMap<String, Arc<Mutex<GameSession>>>>,
    order: Mutex<VecDeque<String>>,
    next_id: AtomicU64,
}

impl TttService {
    /// `origin` is the scheme and authority used in emitted hrefs,
    /// e.g. `http://127.0.0.1:8080`.
    pub fn new(config: ServiceConfig, origin: &str) -> Result<Self, ServiceError> {
        let origin = origin.trim_end_matches('/').to_string();
        match url::Url::parse(&origin) {
            Ok(u) if u.has_host() && u.path() == "/" && u.query().is_none() => {}
            _ => return Err(ServiceError::InvalidOrigin(origin)),
        }
        if let Some(dir) = &config.export_dir {
            check_writable(dir).map_err(|source| ServiceError::ExportDir {
                path: dir.clone(),
                source,
            })?;
        }
        let base_path = config.normalized_base_path();
        let root = format!("{origin}{base_path}");
        let vocab = Vocabulary::new(
            config
                .ontology_base
                .clone()
                .unwrap_or_else(|| format!("{root}/ontology")),
        );
        Ok(TttService {
            config,
            origin,
            base_path,
            root,
            vocab,
            sessions: RwLock::new(HashMap::new()),
            order: Mutex::new(VecDeque::new()),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn entry_url(&self) -> String {
        format!("{}/", self.root)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().len()
    }

    /// A snapshot of one session.
    pub fn session(&self, game_id: &str) -> Option<GameSession> {
        let session = self.sessions.read().get(game_id).cloned()?;
        let snapshot = session.lock().clone();
        Some(snapshot)
    }

    /// Answers one request. `target` is the path plus optional query.
    pub fn handle(&self, method: Method, target: &str, body: Option<&str>) -> Response {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let route = match path.strip_prefix(self.base_path.as_str()) {
            Some("") => "/",
            Some(r) if r.starts_with('/') => r,
            _ => return problem(404, "NotFound", format!("no resource at {path}")),
        };
        let id = || query_param(query, "id");
        let allow = |expected: Method| -> Result<(), Response> {
            if method == expected {
                Ok(())
            } else {
                Err(problem(
                    405,
                    "MethodNotAllowed",
                    format!("{method} not allowed on {route}"),
                ))
            }
        };
        let result = match route {
            "/" => allow(Method::Get).map(|_| self.entry_point()),
            "/Register" => allow(Method::Post).and_then(|_| self.register(body)),
            "/Board" => allow(Method::Get).and_then(|_| self.board(id())),
            "/Result" => allow(Method::Get).and_then(|_| self.result(id())),
            r => {
                if let Some(name) = r.strip_prefix("/ontology/") {
                    allow(Method::Get).and_then(|_| self.ontology(name))
                } else if let Ok(square) = r[1..].parse::<Square>() {
                    allow(Method::Put).and_then(|_| self.play(square, id(), body))
                } else {
                    Err(problem(404, "NotFound", format!("no resource at {path}")))
                }
            }
        };
        result.unwrap_or_else(|e| e)
    }

    fn entry_point(&self) -> Response {
        let entry = self.entry_url();
        let mut rep = Representation::new(self.vocab.ttt_context()).with_id(&entry);
        rep.links.push(Link::new(&entry));
        rep.forms.push(
            Form::new(format!("{}/Register", self.root), Method::Post)
                .with_operation(self.vocab.ttt(ttt::REGISTER))
                .with_fields(["@id"]),
        );
        document(200, &rep)
    }

    fn register(&self, body: Option<&str>) -> Result<Response, Response> {
        let agent_iri =
            agent_id(body).ok_or_else(|| problem(400, "MissingAgentId", "body must be a JSON object with \"@id\""))?;
        self.make_room()?;
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let game_id = format!("id{n:06}");
        let agent_mark = if self.config.agent_moves_first {
            Mark::X
        } else {
            Mark::O
        };
        let bot = BotStrategy::new(self.config.bot, seed::derive(self.config.rng_seed, n));
        let session = GameSession::start(game_id.clone(), agent_iri, agent_mark, bot, &self.root, &self.vocab);
        let rep = self.game_representation(&session, false);
        self.sessions
            .write()
            .insert(game_id.clone(), Arc::new(Mutex::new(session)));
        self.order.lock().push_back(game_id);
        Ok(document(201, &rep))
    }

    /// Drops the oldest finished sessions whose result was already served
    /// once the cap is reached.
    fn make_room(&self) -> Result<(), Response> {
        let cap = self.config.max_sessions.max(1);
        if self.sessions.read().len() < cap {
            return Ok(());
        }
        let mut order = self.order.lock();
        let mut sessions = self.sessions.write();
        let mut i = 0;
        while sessions.len() >= cap && i < order.len() {
            let done = sessions.get(&order[i]).is_none_or(|s| s.lock().result_served);
            if done {
                let id = order.remove(i).expect("index in range");
                sessions.remove(&id);
            } else {
                i += 1;
            }
        }
        if sessions.len() >= cap {
            return Err(problem(503, "SessionLimit", format!("{cap} games in progress")));
        }
        Ok(())
    }

    fn lookup(&self, id: Option<String>) -> Result<Arc<Mutex<GameSession>>, Response> {
        let id = id.ok_or_else(|| problem(400, "MissingGameId", "query parameter id is required"))?;
        self.sessions
            .read()
            .get(&id)
            .cloned()
            .ok_or_else(|| problem(404, "UnknownGame", format!("no game {id:?}")))
    }

    fn board(&self, id: Option<String>) -> Result<Response, Response> {
        let session = self.lookup(id)?;
        let session = session.lock();
        Ok(document(200, &self.game_representation(&session, false)))
    }

    fn play(&self, square: Square, id: Option<String>, body: Option<&str>) -> Result<Response, Response> {
        let session = self.lookup(id)?;
        let agent =
            agent_id(body).ok_or_else(|| problem(400, "MissingAgentId", "body must be a JSON object with \"@id\""))?;
        let mut session = session.lock();
        if agent != session.agent_iri {
            return Err(problem(403, "WrongAgent", format!("{agent} is not playing this game")));
        }
        session
            .play_exchange(square, &self.vocab)
            .map_err(|e| problem(409, "IllegalMove", e.to_string()))?;
        Ok(document(200, &self.game_representation(&session, false)))
    }

    fn result(&self, id: Option<String>) -> Result<Response, Response> {
        let session = self.lookup(id)?;
        let mut session = session.lock();
        if !session.state.status().is_over() {
            return Err(problem(
                409,
                "GameInProgress",
                format!("{} is not finished", session.game_id),
            ));
        }
        if let Some(dir) = &self.config.export_dir {
            let prefixes = standard_prefixes(&self.vocab.namespace(OntologyName::Ttt));
            let text = write_turtle(&session.graph, &prefixes);
            let path = dir.join(format!("{}.ttl", session.game_id));
            if let Err(e) = fs::write(&path, text) {
                tracing::error!(path = %path.display(), error = %e, "export failed");
                return Err(problem(500, "ExportFailed", e.to_string()));
            }
        }
        session.result_served = true;
        Ok(document(200, &self.game_representation(&session, true)))
    }

    fn ontology(&self, name: &str) -> Result<Response, Response> {
        let name: OntologyName = name
            .parse()
            .map_err(|_| problem(404, "UnknownOntology", format!("no ontology {name:?}")))?;
        Ok(Response::new(200, TURTLE, self.vocab.ontology_document(name)))
    }

    fn game_representation(&self, s: &GameSession, as_result: bool) -> Representation {
        let board_url = format!("{}/Board?id={}", self.root, s.game_id);
        let result_url = format!("{}/Result?id={}", self.root, s.game_id);
        let id = if as_result { &result_url } else { &board_url };
        let mut rep = Representation::new(self.vocab.ttt_context()).with_id(id.as_str());
        let t = |local: &str| self.vocab.ttt(local);
        let text = |v: &str| PropertyValue::Text(v.to_string());
        rep.set(t(ttt::GAME_ID), text(&s.game_id));
        rep.set(t(ttt::AGENT_ROLE), PropertyValue::Iri(s.iris.role(s.agent_mark)));
        rep.set(t(ttt::AGENT_MARK), text(s.agent_mark.as_str()));
        rep.set(t(ttt::TO_MOVE), text(s.state.to_move().as_str()));
        rep.set(t(ttt::STATUS), text(s.state.status().as_str()));
        for square in Square::ALL {
            rep.set(t(&ttt::square_property(square)), text(s.state.get(square).as_str()));
        }
        if let Some(result) = s.result_iri(&self.vocab) {
            rep.set(t(ttt::HAS_RESULT), PropertyValue::Iri(result));
        }
        rep.links.push(Link::new(self.entry_url()));
        rep.links.push(Link::new(&board_url));
        if s.state.status().is_over() {
            rep.links.push(Link::new(&result_url).with_rel(t(ttt::RESULT_REL)));
        } else if s.is_agent_turn() {
            for square in s.state.legal_moves() {
                rep.forms.push(
                    Form::new(format!("{}/{}?id={}", self.root, square.name(), s.game_id), Method::Put)
                        .with_operation(format!("{WOT_NS}{}", wot::WRITE_PROPERTY))
                        .with_fields(["@id"]),
                );
            }
        }
        rep
    }
}

/// Serves requests in-process: URLs must be under the service origin.
impl Transport for TttService {
    fn send(
        &self,
        method: Method,
        url: &str,
        _content_type: Option<&str>,
        body: Option<&str>,
    ) -> Result<Response, TransportError> {
        let target = url
            .strip_prefix(self.origin.as_str())
            .filter(|t| t.is_empty() || t.starts_with('/'))
            .ok_or_else(|| TransportError::Unreachable {
                url: url.to_string(),
                reason: format!("not served by {}", self.origin),
            })?;
        let target = if target.is_empty() { "/" } else { target };
        Ok(self.handle(method, target, body))
    }
}

fn document(status: u16, rep: &Representation) -> Response {
    match rep.serialize() {
        Ok(body) => Response::new(status, JSON_LD, body),
        Err(e) => problem(500, "Internal", e.to_string()),
    }
}

fn problem(status: u16, kind: &str, message: impl Into<String>) -> Response {
    let body = json!({ "error": kind, "message": message.into() });
    Response::new(status, PROBLEM_JSON, body.to_string())
}

fn agent_id(body: Option<&str>) -> Option<String> {
    let value: Value = serde_json::from_str(body?).ok()?;
    match value.get("@id")? {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        _ => None,
    }
}

fn query_param(query: &str, key: &str) -> Option<String> {
    url::form_urlencoded::parse(query.as_bytes())
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.into_owned())
}

fn check_writable(dir: &PathBuf) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)
}
