//! FIPA-ACL style messages as JSON-LD.
//!
//! ```json
//! {
//!   "fipa:request": {
//!     "fipa:sender": "http://agent.one",
//!     "fipa:receiver": "http://agent.zero",
//!     "fipa:reply-to": "http://agent.one/response",
//!     "fipa:conversation-id": "msgid123",
//!     "fipa:ontology": "http://ontology.server/transfer#",
//!     "fipa:content": {
//!       "http://agent.zero": {
//!         "tf:Query": "tf:Action",
//!         "tf:hasState": "http://ttt.api/Board?id=id1234"
//!       }
//!     }
//!   }
//! }
//! ```
//!
//! Content is keyed by the advisor's IRI in both directions.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use hyperttt_core::game::Square;
use hyperttt_core::vocab::{fipa, tf, ContextDefinition, OntologyName, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed message: {0}")]
pub struct MessageError(pub String);

fn bad(msg: impl Into<String>) -> MessageError {
    MessageError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Performative {
    Request,
    Inform,
    Failure,
}

impl Performative {
    pub fn local_name(self) -> &'static str {
        match self {
            Performative::Request => fipa::REQUEST,
            Performative::Inform => fipa::INFORM,
            Performative::Failure => fipa::FAILURE,
        }
    }

    fn from_local(name: &str) -> Option<Self> {
        match name {
            fipa::REQUEST => Some(Performative::Request),
            fipa::INFORM => Some(Performative::Inform),
            fipa::FAILURE => Some(Performative::Failure),
            _ => None,
        }
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.local_name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AclMessage {
    pub performative: Performative,
    pub sender: String,
    pub receiver: String,
    pub reply_to: Option<String>,
    pub conversation_id: String,
    pub ontology: String,
    /// Subject IRI to an object of compact `tf:` terms.
    pub content: Map<String, Value>,
}

/// Why an advisor declined to recommend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    UnknownState,
    BudgetExhausted,
    Malformed,
}

impl FailureReason {
    pub fn local_name(self) -> &'static str {
        match self {
            FailureReason::UnknownState => tf::UNKNOWN_STATE,
            FailureReason::BudgetExhausted => tf::BUDGET_EXHAUSTED,
            FailureReason::Malformed => tf::MALFORMED,
        }
    }
}

impl FromStr for FailureReason {
    type Err = MessageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            tf::UNKNOWN_STATE => Ok(FailureReason::UnknownState),
            tf::BUDGET_EXHAUSTED => Ok(FailureReason::BudgetExhausted),
            tf::MALFORMED => Ok(FailureReason::Malformed),
            other => Err(bad(format!("unknown failure reason {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdviceReply {
    Recommended { square: Square, score: f64 },
    Failure(FailureReason),
}

fn tf_key(local: &str) -> String {
    format!("tf:{local}")
}

/// Messages for one advice conversation, with the ontology and context of a
/// given [`Vocabulary`].
#[derive(Debug, Clone)]
pub struct MessageCodec {
    context: ContextDefinition,
    ontology: String,
}

impl MessageCodec {
    pub fn new(vocab: &Vocabulary) -> Self {
        MessageCodec {
            context: vocab.messaging_context(),
            ontology: vocab.namespace(OntologyName::Transfer),
        }
    }

    pub fn ontology(&self) -> &str {
        &self.ontology
    }

    pub fn advice_request(
        &self,
        sender: &str,
        receiver: &str,
        reply_to: &str,
        state_url: &str,
        conversation_id: &str,
    ) -> AclMessage {
        let mut query = Map::new();
        query.insert(tf_key(tf::QUERY), Value::String(tf_key(tf::ACTION)));
        query.insert(tf_key(tf::HAS_STATE), Value::String(state_url.to_string()));
        let mut content = Map::new();
        content.insert(receiver.to_string(), Value::Object(query));
        AclMessage {
            performative: Performative::Request,
            sender: sender.to_string(),
            receiver: receiver.to_string(),
            reply_to: Some(reply_to.to_string()),
            conversation_id: conversation_id.to_string(),
            ontology: self.ontology.clone(),
            content,
        }
    }

    /// The advisor's answer to `request`.
    pub fn advice_reply(&self, request: &AclMessage, advisor: &str, reply: AdviceReply) -> AclMessage {
        let mut body = Map::new();
        let performative = match reply {
            AdviceReply::Recommended { square, score } => {
                body.insert(tf_key(tf::RECOMMENDED_ACTION), Value::String(square.name()));
                body.insert(tf_key(tf::HAS_SCORE), Value::from(score));
                Performative::Inform
            }
            AdviceReply::Failure(reason) => {
                body.insert(tf_key(tf::REASON), Value::String(tf_key(reason.local_name())));
                Performative::Failure
            }
        };
        let mut content = Map::new();
        content.insert(advisor.to_string(), Value::Object(body));
        AclMessage {
            performative,
            sender: advisor.to_string(),
            receiver: request.sender.clone(),
            reply_to: None,
            conversation_id: request.conversation_id.clone(),
            ontology: self.ontology.clone(),
            content,
        }
    }

    /// The board URL asked about in a request.
    pub fn requested_state(&self, msg: &AclMessage) -> Result<String, MessageError> {
        if msg.performative != Performative::Request {
            return Err(bad("not a request"));
        }
        let query = self.subject(msg, &msg.receiver)?;
        let asks = self.term(query, tf::QUERY).and_then(Value::as_str);
        if asks.map(|t| self.context.expand_lenient(t)) != Some(self.tf_iri(tf::ACTION)) {
            return Err(bad("request does not query tf:Action"));
        }
        self.term(query, tf::HAS_STATE)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| bad("missing tf:hasState"))
    }

    pub fn reply_content(&self, msg: &AclMessage) -> Result<AdviceReply, MessageError> {
        let body = self.subject(msg, &msg.sender)?;
        match msg.performative {
            Performative::Inform => {
                let square = self
                    .term(body, tf::RECOMMENDED_ACTION)
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("missing tf:RecommendedAction"))?;
                let square: Square = self
                    .local(square)
                    .parse()
                    .map_err(|_| bad(format!("bad square {square:?}")))?;
                let score = self
                    .term(body, tf::HAS_SCORE)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| bad("missing tf:hasScore"))?;
                Ok(AdviceReply::Recommended { square, score })
            }
            Performative::Failure => {
                let reason = self
                    .term(body, tf::REASON)
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("missing tf:Reason"))?;
                Ok(AdviceReply::Failure(self.local(reason).parse()?))
            }
            Performative::Request => Err(bad("a request is not a reply")),
        }
    }

    pub fn to_json(&self, msg: &AclMessage) -> Value {
        let key = |local: &str| format!("fipa:{local}");
        let mut inner = Map::new();
        inner.insert(key(fipa::SENDER), Value::String(msg.sender.clone()));
        inner.insert(key(fipa::RECEIVER), Value::String(msg.receiver.clone()));
        if let Some(r) = &msg.reply_to {
            inner.insert(key(fipa::REPLY_TO), Value::String(r.clone()));
        }
        inner.insert(key(fipa::CONVERSATION_ID), Value::String(msg.conversation_id.clone()));
        inner.insert(key(fipa::ONTOLOGY), Value::String(msg.ontology.clone()));
        inner.insert(key(fipa::CONTENT), Value::Object(msg.content.clone()));
        let mut doc = Map::new();
        doc.insert(key(msg.performative.local_name()), Value::Object(inner));
        Value::Object(doc)
    }

    pub fn serialize(&self, msg: &AclMessage) -> String {
        serde_json::to_string_pretty(&self.to_json(msg)).expect("JSON values serialize")
    }

    pub fn parse(&self, text: &str) -> Result<AclMessage, MessageError> {
        let value: Value = serde_json::from_str(text).map_err(|e| bad(format!("not JSON: {e}")))?;
        self.from_json(&value)
    }

    pub fn from_json(&self, value: &Value) -> Result<AclMessage, MessageError> {
        let obj = value.as_object().ok_or_else(|| bad("not an object"))?;
        let mut found = None;
        for (key, val) in obj {
            if key == "@context" {
                continue;
            }
            let performative = self
                .fipa_local(key)
                .and_then(Performative::from_local)
                .ok_or_else(|| bad(format!("unexpected key {key:?}")))?;
            if found.is_some() {
                return Err(bad("more than one performative"));
            }
            found = Some((performative, val));
        }
        let (performative, inner) = found.ok_or_else(|| bad("no performative"))?;
        let inner = inner
            .as_object()
            .ok_or_else(|| bad("performative body is not an object"))?;
        let mut fields: Map<String, Value> = Map::new();
        for (k, v) in inner {
            let local = self.fipa_local(k).ok_or_else(|| bad(format!("unexpected key {k:?}")))?;
            fields.insert(local.to_string(), v.clone());
        }
        let text = |name: &str| -> Result<String, MessageError> {
            fields
                .get(name)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| bad(format!("missing fipa:{name}")))
        };
        let reply_to = match fields.get(fipa::REPLY_TO) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(bad("fipa:reply-to is not a string")),
        };
        if performative == Performative::Request && reply_to.is_none() {
            return Err(bad("a request needs fipa:reply-to"));
        }
        let conversation_id = text(fipa::CONVERSATION_ID)?;
        if conversation_id.is_empty() {
            return Err(bad("empty conversation id"));
        }
        let content = match fields.get(fipa::CONTENT) {
            Some(Value::Object(c)) => c.clone(),
            _ => return Err(bad("missing fipa:content")),
        };
        Ok(AclMessage {
            performative,
            sender: text(fipa::SENDER)?,
            receiver: text(fipa::RECEIVER)?,
            reply_to,
            conversation_id,
            ontology: text(fipa::ONTOLOGY)?,
            content,
        })
    }

    fn fipa_local<'a>(&self, key: &'a str) -> Option<&'a str> {
        let ns = self.context.namespace("fipa")?;
        key.strip_prefix("fipa:").or_else(|| key.strip_prefix(ns))
    }

    fn tf_iri(&self, local: &str) -> String {
        format!("{}{local}", self.ontology)
    }

    /// Local name of a `tf:` term given compact or expanded.
    fn local<'a>(&self, term: &'a str) -> &'a str {
        term.strip_prefix("tf:")
            .or_else(|| term.strip_prefix(self.ontology.as_str()))
            .unwrap_or(term)
    }

    fn term<'a>(&self, obj: &'a Map<String, Value>, local: &str) -> Option<&'a Value> {
        obj.get(&tf_key(local)).or_else(|| obj.get(&self.tf_iri(local)))
    }

    fn subject<'a>(&self, msg: &'a AclMessage, iri: &str) -> Result<&'a Map<String, Value>, MessageError> {
        msg.content
            .get(iri)
            .and_then(Value::as_object)
            .ok_or_else(|| bad(format!("content has no entry for {iri}")))
    }
}
