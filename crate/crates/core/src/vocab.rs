//! Ontology namespaces, JSON-LD contexts, and the ontology documents served
//! by the game service.
//!
//! The custom ontologies (`ttt`, `tf`, `fipa`) live under a configurable base
//! URL so that a deployment can serve them from wherever it runs. The
//! well-known namespaces (hypermedia controls, HTTP, Thing Description) are
//! fixed.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

pub const HCTL_NS: &str = "https://www.w3.org/2019/wot/hypermedia#";
pub const HTV_NS: &str = "http://www.w3.org/2011/http#";
pub const WOT_NS: &str = "https://www.w3.org/2019/wot/td#";
pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";
pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";

pub const DEFAULT_ONTOLOGY_BASE: &str = "http://localhost:8080/ontology";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("unknown prefix {0:?}")]
    UnknownPrefix(String),
    #[error("unknown ontology {0:?}")]
    UnknownOntology(String),
    #[error("invalid @context: {0}")]
    InvalidContext(String),
}

/// Local names of the Tic-Tac-Toe ontology.
pub mod ttt {
    pub const GAME: &str = "Game";
    pub const MOVE: &str = "Move";
    pub const SQUARE: &str = "Square";
    pub const PLAYER_ROLE: &str = "PlayerRole";
    pub const RESULT: &str = "Result";
    pub const DRAW: &str = "Draw";
    pub const IN_SQUARE: &str = "inSquare";
    pub const MOVE_TAKEN_BY: &str = "moveTakenBy";
    pub const MOVE_INDEX: &str = "moveIndex";
    pub const HAS_SQUARE: &str = "hasSquare";
    pub const HAS_PLAYER_ROLE: &str = "hasPlayerRole";
    pub const HAS_MARK: &str = "hasMark";
    pub const PLAYED_BY: &str = "playedBy";
    pub const HAS_RESULT: &str = "hasResult";
    pub const ROW: &str = "row";
    pub const COLUMN: &str = "column";
    pub const GAME_ID: &str = "gameId";
    pub const AGENT_ROLE: &str = "agentRole";
    pub const AGENT_MARK: &str = "agentMark";
    pub const TO_MOVE: &str = "toMove";
    pub const STATUS: &str = "status";
    /// Operation type of the registration form.
    pub const REGISTER: &str = "register";
    /// Relation type of the link to a finished game's result.
    pub const RESULT_REL: &str = "result";

    /// Board property carrying the mark on `square`, e.g. `square11`.
    pub fn square_property(square: crate::game::Square) -> String {
        format!("square{}{}", square.row(), square.col())
    }
}

/// Local names of the transfer-learning ontology.
pub mod tf {
    pub const QUERY: &str = "Query";
    pub const ACTION: &str = "Action";
    pub const HAS_STATE: &str = "hasState";
    pub const RECOMMENDED_ACTION: &str = "RecommendedAction";
    pub const HAS_SCORE: &str = "hasScore";
    pub const REASON: &str = "Reason";
    pub const UNKNOWN_STATE: &str = "UnknownState";
    pub const BUDGET_EXHAUSTED: &str = "BudgetExhausted";
    pub const MALFORMED: &str = "Malformed";
}

/// Local names of the FIPA-ACL style messaging ontology.
pub mod fipa {
    pub const REQUEST: &str = "request";
    pub const INFORM: &str = "inform";
    pub const FAILURE: &str = "failure";
    pub const SENDER: &str = "sender";
    pub const RECEIVER: &str = "receiver";
    pub const REPLY_TO: &str = "reply-to";
    pub const CONVERSATION_ID: &str = "conversation-id";
    pub const ONTOLOGY: &str = "ontology";
    pub const CONTENT: &str = "content";
}

/// Bare keys of the hypermedia controls vocabulary used in documents.
pub mod hctl {
    pub const HREF: &str = "href";
    pub const CONTENT_TYPE: &str = "contentType";
    pub const LINKS: &str = "links";
    pub const FORMS: &str = "forms";
    pub const FIELDS: &str = "fields";
    pub const REL: &str = "rel";
}

pub mod wot {
    pub const OP: &str = "op";
    pub const WRITE_PROPERTY: &str = "writeproperty";
    pub const READ_PROPERTY: &str = "readproperty";
}

pub mod htv {
    pub const METHOD_NAME: &str = "methodName";
}

/// A registered term: `iri == namespace(prefix) + local_name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabTerm {
    pub prefix: String,
    pub local_name: String,
    pub iri: String,
}

impl VocabTerm {
    pub fn compact(&self) -> String {
        format!("{}:{}", self.prefix, self.local_name)
    }
}

/// An inline JSON-LD `@context`: a default vocabulary plus prefix mappings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextDefinition {
    default_vocab: String,
    prefixes: Vec<(String, String)>,
}

impl ContextDefinition {
    pub fn new(default_vocab: impl Into<String>) -> Self {
        ContextDefinition {
            default_vocab: default_vocab.into(),
            prefixes: Vec::new(),
        }
    }

    pub fn with_prefix(mut self, prefix: impl Into<String>, namespace: impl Into<String>) -> Self {
        let prefix = prefix.into();
        let namespace = namespace.into();
        match self.prefixes.iter_mut().find(|(p, _)| *p == prefix) {
            Some(entry) => entry.1 = namespace,
            None => self.prefixes.push((prefix, namespace)),
        }
        self
    }

    pub fn default_vocab(&self) -> &str {
        &self.default_vocab
    }

    pub fn prefixes(&self) -> impl Iterator<Item = (&str, &str)> {
        self.prefixes.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn namespace(&self, prefix: &str) -> Option<&str> {
        self.prefixes.iter().find(|(p, _)| p == prefix).map(|(_, n)| n.as_str())
    }

    /// Expands a compact term. Bare terms resolve against the default vocabulary,
    /// `prefix:local` against the prefix mapping; absolute IRIs pass through.
    pub fn expand(&self, term: &str) -> Result<String, VocabError> {
        if is_absolute_iri(term) {
            return Ok(term.to_string());
        }
        match term.split_once(':') {
            Some((prefix, local)) => self
                .namespace(prefix)
                .map(|ns| format!("{ns}{local}"))
                .ok_or_else(|| VocabError::UnknownPrefix(prefix.to_string())),
            None => Ok(format!("{}{}", self.default_vocab, term)),
        }
    }

    /// Like [`expand`](Self::expand), but keeps unknown `scheme:rest` keys
    /// verbatim, which is how JSON-LD treats them.
    pub fn expand_lenient(&self, term: &str) -> String {
        self.expand(term).unwrap_or_else(|_| term.to_string())
    }

    /// Compacts an IRI to `prefix:local` (longest matching namespace wins),
    /// or to a bare term under the default vocabulary.
    pub fn compact(&self, iri: &str) -> Option<String> {
        let prefixed = self
            .prefixes
            .iter()
            .filter(|(_, ns)| iri.len() > ns.len() && iri.starts_with(ns.as_str()))
            .max_by_key(|(_, ns)| ns.len())
            .map(|(p, ns)| format!("{p}:{}", &iri[ns.len()..]));
        if prefixed.is_some() {
            return prefixed;
        }
        iri.strip_prefix(self.default_vocab.as_str())
            .filter(|local| !local.is_empty() && !local.contains(':'))
            .map(str::to_string)
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("@vocab".into(), Value::String(self.default_vocab.clone()));
        for (p, ns) in &self.prefixes {
            map.insert(p.clone(), Value::String(ns.clone()));
        }
        Value::Object(map)
    }

    pub fn from_json(value: &Value) -> Result<Self, VocabError> {
        let obj = value
            .as_object()
            .ok_or_else(|| VocabError::InvalidContext("expected an object".into()))?;
        let vocab = obj
            .get("@vocab")
            .and_then(Value::as_str)
            .ok_or_else(|| VocabError::InvalidContext("missing @vocab".into()))?;
        let mut ctx = ContextDefinition::new(vocab);
        for (k, v) in obj {
            if k == "@vocab" {
                continue;
            }
            let ns = v
                .as_str()
                .ok_or_else(|| VocabError::InvalidContext(format!("prefix {k} is not a string")))?;
            ctx = ctx.with_prefix(k.clone(), ns);
        }
        Ok(ctx)
    }
}

/// True for `scheme://...` style IRIs and `urn:`s.
pub fn is_absolute_iri(s: &str) -> bool {
    s.contains("://") || s.starts_with("urn:")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OntologyName {
    Fipa,
    Transfer,
    Ttt,
}

impl OntologyName {
    pub const ALL: [OntologyName; 3] = [OntologyName::Fipa, OntologyName::Transfer, OntologyName::Ttt];

    pub fn as_str(self) -> &'static str {
        match self {
            OntologyName::Fipa => "fipa",
            OntologyName::Transfer => "transfer",
            OntologyName::Ttt => "ttt",
        }
    }
}

impl fmt::Display for OntologyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OntologyName {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fipa" => Ok(OntologyName::Fipa),
            "transfer" => Ok(OntologyName::Transfer),
            "ttt" => Ok(OntologyName::Ttt),
            other => Err(VocabError::UnknownOntology(other.to_string())),
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Class,
    Object,
    Datatype,
    Individual(&'static str),
}

type TermDecl = (&'static str, Kind, &'static str);

const TTT_TERMS: &[TermDecl] = &[
    (ttt::GAME, Kind::Class, "A game of Tic-Tac-Toe"),
    (ttt::MOVE, Kind::Class, "A mark placed in a square"),
    (ttt::SQUARE, Kind::Class, "One of the nine squares of the board"),
    (ttt::PLAYER_ROLE, Kind::Class, "The X or O side of a game"),
    (ttt::RESULT, Kind::Class, "The outcome of a finished game"),
    (
        ttt::DRAW,
        Kind::Individual("Result"),
        "A game that ended without a winner",
    ),
    (ttt::IN_SQUARE, Kind::Object, "The square a move was played in"),
    (ttt::MOVE_TAKEN_BY, Kind::Object, "The player role that made a move"),
    (
        ttt::MOVE_INDEX,
        Kind::Datatype,
        "One-based position of a move in the game",
    ),
    (ttt::HAS_SQUARE, Kind::Object, "A square of the game board"),
    (ttt::HAS_PLAYER_ROLE, Kind::Object, "A player role of the game"),
    (ttt::HAS_MARK, Kind::Datatype, "The mark of a player role"),
    (ttt::PLAYED_BY, Kind::Object, "The agent occupying a player role"),
    (ttt::HAS_RESULT, Kind::Object, "The winning player role, or Draw"),
    (ttt::ROW, Kind::Datatype, "Row of a square, 1 to 3"),
    (ttt::COLUMN, Kind::Datatype, "Column of a square, 1 to 3"),
    (ttt::GAME_ID, Kind::Datatype, "Identifier assigned at registration"),
    (ttt::AGENT_ROLE, Kind::Object, "The player role of the registered agent"),
    (ttt::AGENT_MARK, Kind::Datatype, "The mark of the registered agent"),
    (ttt::TO_MOVE, Kind::Datatype, "The mark whose turn it is"),
    (ttt::STATUS, Kind::Datatype, "InProgress, WonByX, WonByO or Draw"),
    (
        ttt::REGISTER,
        Kind::Individual("https://www.w3.org/2019/wot/td#OperationType"),
        "Register to play a game",
    ),
    (
        ttt::RESULT_REL,
        Kind::Individual("https://www.w3.org/2019/wot/hypermedia#LinkRelation"),
        "Link to the result of a finished game",
    ),
    ("square11", Kind::Datatype, "Mark in row 1, column 1"),
    ("square12", Kind::Datatype, "Mark in row 1, column 2"),
    ("square13", Kind::Datatype, "Mark in row 1, column 3"),
    ("square21", Kind::Datatype, "Mark in row 2, column 1"),
    ("square22", Kind::Datatype, "Mark in row 2, column 2"),
    ("square23", Kind::Datatype, "Mark in row 2, column 3"),
    ("square31", Kind::Datatype, "Mark in row 3, column 1"),
    ("square32", Kind::Datatype, "Mark in row 3, column 2"),
    ("square33", Kind::Datatype, "Mark in row 3, column 3"),
];

const TF_TERMS: &[TermDecl] = &[
    (tf::QUERY, Kind::Object, "What the requester asks for"),
    (tf::ACTION, Kind::Class, "An action in the requester's environment"),
    (
        tf::HAS_STATE,
        Kind::Object,
        "Resource describing the state the query is about",
    ),
    (
        tf::RECOMMENDED_ACTION,
        Kind::Datatype,
        "The square the advisor recommends",
    ),
    (
        tf::HAS_SCORE,
        Kind::Datatype,
        "Normalised confidence in the recommendation, 0 to 1",
    ),
    (tf::REASON, Kind::Object, "Why no recommendation was given"),
    (
        tf::UNKNOWN_STATE,
        Kind::Individual("Reason"),
        "The advisor has no values for the state",
    ),
    (
        tf::BUDGET_EXHAUSTED,
        Kind::Individual("Reason"),
        "The advisor will not give more advice",
    ),
    (
        tf::MALFORMED,
        Kind::Individual("Reason"),
        "The request or its state could not be read",
    ),
];

const FIPA_TERMS: &[TermDecl] = &[
    (fipa::REQUEST, Kind::Class, "Request performative"),
    (fipa::INFORM, Kind::Class, "Inform performative"),
    (fipa::FAILURE, Kind::Class, "Failure performative"),
    (fipa::SENDER, Kind::Object, "Sending agent"),
    (fipa::RECEIVER, Kind::Object, "Receiving agent"),
    (fipa::REPLY_TO, Kind::Object, "Where replies are delivered"),
    (fipa::CONVERSATION_ID, Kind::Datatype, "Conversation identifier"),
    (fipa::ONTOLOGY, Kind::Object, "Ontology of the content"),
    (fipa::CONTENT, Kind::Object, "Message content"),
];

/// The term registry for one deployment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    base: String,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new(DEFAULT_ONTOLOGY_BASE)
    }
}

impl Vocabulary {
    /// `base` is the URL under which `ttt`, `transfer` and `fipa` live.
    pub fn new(base: impl Into<String>) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        Vocabulary { base }
    }

    /// Recovers the base from a context declaring the `ttt` or `tf` prefix.
    pub fn from_context(ctx: &ContextDefinition) -> Option<Vocabulary> {
        let base = ctx
            .namespace("ttt")
            .and_then(|ns| ns.strip_suffix("/ttt#"))
            .or_else(|| ctx.namespace("tf").and_then(|ns| ns.strip_suffix("/transfer#")))?;
        Some(Vocabulary::new(base))
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn ontology_iri(&self, name: OntologyName) -> String {
        format!("{}/{}", self.base, name.as_str())
    }

    pub fn namespace(&self, name: OntologyName) -> String {
        format!("{}#", self.ontology_iri(name))
    }

    pub fn ttt(&self, local: &str) -> String {
        format!("{}/ttt#{local}", self.base)
    }

    pub fn tf(&self, local: &str) -> String {
        format!("{}/transfer#{local}", self.base)
    }

    pub fn fipa(&self, local: &str) -> String {
        format!("{}/fipa#{local}", self.base)
    }

    /// Context of game-service representations: hypermedia controls as the
    /// default vocabulary, plus `htv`, `wot` and `ttt`.
    pub fn ttt_context(&self) -> ContextDefinition {
        ContextDefinition::new(HCTL_NS)
            .with_prefix("htv", HTV_NS)
            .with_prefix("wot", WOT_NS)
            .with_prefix("ttt", self.namespace(OntologyName::Ttt))
    }

    /// Context of agent-to-agent messages.
    pub fn messaging_context(&self) -> ContextDefinition {
        ContextDefinition::new(HCTL_NS)
            .with_prefix("fipa", self.namespace(OntologyName::Fipa))
            .with_prefix("tf", self.namespace(OntologyName::Transfer))
    }

    /// Every term declared by the three custom ontologies.
    pub fn registered_terms(&self) -> Vec<VocabTerm> {
        let mut out = Vec::new();
        for name in OntologyName::ALL {
            let prefix = prefix_of(name);
            let ns = self.namespace(name);
            for (local, _, _) in declarations(name) {
                out.push(VocabTerm {
                    prefix: prefix.to_string(),
                    local_name: local.to_string(),
                    iri: format!("{ns}{local}"),
                });
            }
        }
        out
    }

    /// Turtle source of one of the served ontologies.
    pub fn ontology_document(&self, name: OntologyName) -> String {
        use std::fmt::Write;

        let prefix = prefix_of(name);
        let mut doc = String::new();
        for (p, ns) in [("rdf", RDF_NS), ("rdfs", RDFS_NS), ("owl", OWL_NS), ("xsd", XSD_NS)] {
            let _ = writeln!(doc, "@prefix {p}: <{ns}> .");
        }
        let _ = writeln!(doc, "@prefix {prefix}: <{}> .", self.namespace(name));
        let _ = writeln!(doc);
        let _ = writeln!(doc, "<{}> a owl:Ontology ;", self.ontology_iri(name));
        let _ = writeln!(doc, "    rdfs:label \"{}\" .", title_of(name));
        for (local, kind, comment) in declarations(name) {
            let _ = writeln!(doc);
            let kind = match kind {
                Kind::Class => "owl:Class".to_string(),
                Kind::Object => "owl:ObjectProperty".to_string(),
                Kind::Datatype => "owl:DatatypeProperty".to_string(),
                Kind::Individual(class) if is_absolute_iri(class) => format!("<{class}>"),
                Kind::Individual(class) => format!("{prefix}:{class}"),
            };
            let _ = writeln!(doc, "{prefix}:{local} a {kind} ;");
            let _ = writeln!(doc, "    rdfs:label \"{local}\" ;");
            let _ = writeln!(doc, "    rdfs:comment \"{comment}\" .");
        }
        doc
    }
}

fn prefix_of(name: OntologyName) -> &'static str {
    match name {
        OntologyName::Fipa => "fipa",
        OntologyName::Transfer => "tf",
        OntologyName::Ttt => "ttt",
    }
}

fn title_of(name: OntologyName) -> &'static str {
    match name {
        OntologyName::Fipa => "FIPA-ACL style agent messaging",
        OntologyName::Transfer => "Transfer learning",
        OntologyName::Ttt => "Tic-Tac-Toe",
    }
}

fn declarations(name: OntologyName) -> &'static [TermDecl] {
    match name {
        OntologyName::Fipa => FIPA_TERMS,
        OntologyName::Transfer => TF_TERMS,
        OntologyName::Ttt => TTT_TERMS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_from_context() {
        let v = Vocabulary::new("http://ontology.server/x");
        assert_eq!(Vocabulary::from_context(&v.ttt_context()), Some(v.clone()));
        assert_eq!(Vocabulary::from_context(&v.messaging_context()), Some(v));
        assert_eq!(Vocabulary::from_context(&ContextDefinition::new(HCTL_NS)), None);
    }

    #[test]
    fn ttt_context_expansion() {
        let v = Vocabulary::default();
        let ctx = v.ttt_context();
        assert_eq!(
            ctx.expand("htv:methodName").unwrap(),
            "http://www.w3.org/2011/http#methodName"
        );
        assert_eq!(ctx.expand("href").unwrap(), format!("{HCTL_NS}href"));
        assert_eq!(ctx.expand("nope:thing"), Err(VocabError::UnknownPrefix("nope".into())));
        assert_eq!(ctx.expand_lenient("nope:thing"), "nope:thing");
    }

    #[test]
    fn messaging_context_expansion() {
        let v = Vocabulary::new("http://ontology.server");
        let ctx = v.messaging_context();
        assert_eq!(
            ctx.expand("tf:hasState").unwrap(),
            "http://ontology.server/transfer#hasState"
        );
        assert_eq!(
            ctx.expand("fipa:conversation-id").unwrap(),
            "http://ontology.server/fipa#conversation-id"
        );
        assert_eq!(
            v.ontology_iri(OntologyName::Transfer),
            "http://ontology.server/transfer"
        );
    }

    #[test]
    fn registered_terms_round_trip() {
        let v = Vocabulary::default();
        let contexts = [v.ttt_context(), v.messaging_context()];
        let terms = v.registered_terms();
        assert!(terms.len() > 40);
        for term in terms {
            let ctx = contexts
                .iter()
                .find(|c| c.namespace(&term.prefix).is_some())
                .expect("every registered prefix is in a context");
            let compact = term.compact();
            let iri = ctx.expand(&compact).unwrap();
            assert_eq!(iri, term.iri);
            assert_eq!(ctx.compact(&iri).unwrap(), compact);
        }
    }

    #[test]
    fn compacts_default_vocab_to_bare_terms() {
        let ctx = Vocabulary::default().ttt_context();
        assert_eq!(ctx.compact(&format!("{HCTL_NS}href")).unwrap(), "href");
        assert_eq!(ctx.compact("http://elsewhere.example/x"), None);
    }

    #[test]
    fn context_json_round_trip() {
        let ctx = Vocabulary::default().ttt_context();
        assert_eq!(ContextDefinition::from_json(&ctx.to_json()).unwrap(), ctx);
        assert!(ContextDefinition::from_json(&serde_json::json!({"ttt": "x"})).is_err());
    }

    #[test]
    fn ontology_documents() {
        let v = Vocabulary::default();
        let transfer = v.ontology_document(OntologyName::Transfer);
        assert!(transfer.contains("tf:Action a owl:Class"));
        assert!(transfer.contains("tf:hasState a owl:ObjectProperty"));
        let game = v.ontology_document(OntologyName::Ttt);
        assert!(game.contains("ttt:inSquare"));
        assert!(game.contains("ttt:moveTakenBy"));
        assert_eq!(
            "nope".parse::<OntologyName>(),
            Err(VocabError::UnknownOntology("nope".into()))
        );
    }
}
