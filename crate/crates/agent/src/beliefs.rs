//! The agent's two stores: beliefs about the current game, and an append-only
//! record of messages exchanged with other agents.

use std::time::{Instant, SystemTime};

use parking_lot::Mutex;
use serde_json::json;

use hyperttt_core::game::Mark;
use hyperttt_core::hypermedia::GameOutcome;
use hyperttt_core::hypermedia::{FormAction, Method, Representation};

use crate::acl::Performative;

#[derive(Debug, Clone, PartialEq)]
pub enum BeliefKind {
    FormAction(FormAction),
    Link { href: String, method: Method },
    BoardState([Mark; 9]),
    Result(GameOutcome),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub kind: BeliefKind,
    pub source_url: String,
    pub received_at: Instant,
}

/// What the agent currently holds true about its game.
#[derive(Debug, Default)]
pub struct BeliefBase {
    beliefs: Vec<Belief>,
}

impl BeliefBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces affordance and board beliefs with those of `rep`.
    pub fn observe(&mut self, rep: &Representation, cells: Option<[Mark; 9]>, source_url: &str) {
        let now = Instant::now();
        self.beliefs.retain(|b| matches!(b.kind, BeliefKind::Result(_)));
        let belief = |kind| Belief {
            kind,
            source_url: source_url.to_string(),
            received_at: now,
        };
        for action in rep.form_actions() {
            self.beliefs.push(belief(BeliefKind::FormAction(action)));
        }
        for link in &rep.links {
            self.beliefs.push(belief(BeliefKind::Link {
                href: link.href.clone(),
                method: link.method,
            }));
        }
        if let Some(cells) = cells {
            self.beliefs.push(belief(BeliefKind::BoardState(cells)));
        }
    }

    pub fn record_result(&mut self, outcome: GameOutcome, source_url: &str) {
        self.beliefs.push(Belief {
            kind: BeliefKind::Result(outcome),
            source_url: source_url.to_string(),
            received_at: Instant::now(),
        });
    }

    pub fn form_actions(&self) -> impl Iterator<Item = &FormAction> {
        self.beliefs.iter().filter_map(|b| match &b.kind {
            BeliefKind::FormAction(f) => Some(f),
            _ => None,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Belief> {
        self.beliefs.iter()
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn clear(&mut self) {
        self.beliefs.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommRecord {
    pub direction: Direction,
    pub performative: Performative,
    pub conversation_id: String,
    pub counterpart: String,
    pub at: SystemTime,
}

/// Append-only log of agent-to-agent messages.
#[derive(Debug, Default)]
pub struct CommsLog {
    records: Mutex<Vec<CommRecord>>,
}

impl CommsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&self, direction: Direction, performative: Performative, conversation_id: &str, counterpart: &str) {
        self.records.lock().push(CommRecord {
            direction,
            performative,
            conversation_id: conversation_id.to_string(),
            counterpart: counterpart.to_string(),
            at: SystemTime::now(),
        });
    }

    pub fn len(&self) -> usize {
        self.records.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<CommRecord> {
        self.records.lock().clone()
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in self.records.lock().iter() {
            let millis =
                r.at.duration_since(SystemTime::UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0);
            let line = json!({
                "direction": match r.direction { Direction::Sent => "sent", Direction::Received => "received" },
                "performative": r.performative.local_name(),
                "conversationId": r.conversation_id,
                "counterpart": r.counterpart,
                "atMillis": millis,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}
