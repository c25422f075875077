//! Action advising between agents.
//!
//! The advisee sends a `fipa:request` naming its board URL. The advisor
//! fetches the board itself, looks the state up in its own policy, and
//! answers with a recommended square and a confidence score, or a failure.
//! Budgets cap how often either side takes part, and every failure on the
//! advisee's side degrades to "no advice".

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

use hyperttt_core::game::Square;
use hyperttt_core::hypermedia::GameView;
use hyperttt_core::hypermedia::{Method, Representation, JSON_LD};
use hyperttt_core::policy::{canonicalize, SharedPolicy};
use hyperttt_core::transport::Transport;

use crate::acl::{AclMessage, AdviceReply, FailureReason, MessageCodec, Performative};
use crate::beliefs::{CommsLog, Direction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig {
    /// Queries the advisee may send.
    pub ask_budget: u64,
    /// Recommendations the advisor may give.
    pub give_budget: u64,
    /// Advice scoring below this is ignored.
    pub score_threshold: f64,
    pub reply_timeout: Duration,
    pub max_retries: u32,
    /// Ask when the best stored value at a state is smaller than this in magnitude.
    pub trigger_margin: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            ask_budget: 500,
            give_budget: 500,
            score_threshold: 0.5,
            reply_timeout: Duration::from_millis(500),
            max_retries: 1,
            trigger_margin: 0.05,
        }
    }
}

/// A counter that only goes down, and never below zero.
#[derive(Debug)]
pub struct Budget {
    remaining: AtomicU64,
}

impl Budget {
    pub fn new(initial: u64) -> Self {
        Budget {
            remaining: AtomicU64::new(initial),
        }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining.load(Ordering::SeqCst)
    }

    /// Takes one unit if any is left.
    pub fn try_consume(&self) -> bool {
        self.remaining
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok()
    }

    /// Decrements with a floor of zero and returns what is left.
    pub fn decrement(&self) -> u64 {
        match self
            .remaining
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
        {
            Ok(previous) => previous - 1,
            Err(_) => 0,
        }
    }
}

/// The advising side: answers requests from its own policy.
pub struct Advisor {
    iri: String,
    policy: SharedPolicy,
    use_symmetry: bool,
    budget: Budget,
    api: Arc<dyn Transport>,
    codec: MessageCodec,
    comms: CommsLog,
    informs: AtomicU64,
}

impl Advisor {
    /// `api` is used to dereference the board URLs named in requests.
    pub fn new(
        iri: impl Into<String>,
        policy: SharedPolicy,
        use_symmetry: bool,
        give_budget: u64,
        api: Arc<dyn Transport>,
        codec: MessageCodec,
    ) -> Self {
        Advisor {
            iri: iri.into(),
            policy,
            use_symmetry,
            budget: Budget::new(give_budget),
            api,
            codec,
            comms: CommsLog::new(),
            informs: AtomicU64::new(0),
        }
    }

    pub fn iri(&self) -> &str {
        &self.iri
    }

    pub fn codec(&self) -> &MessageCodec {
        &self.codec
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn informs_sent(&self) -> u64 {
        self.informs.load(Ordering::SeqCst)
    }

    pub fn comms(&self) -> &CommsLog {
        &self.comms
    }

    /// Builds the reply to one request.
    pub fn answer(&self, request: &AclMessage) -> AclMessage {
        self.comms.append(
            Direction::Received,
            request.performative,
            &request.conversation_id,
            &request.sender,
        );
        let reply = self.advise(request);
        if matches!(reply, AdviceReply::Recommended { .. }) {
            self.informs.fetch_add(1, Ordering::SeqCst);
        }
        let msg = self.codec.advice_reply(request, &self.iri, reply);
        self.comms
            .append(Direction::Sent, msg.performative, &msg.conversation_id, &msg.receiver);
        msg
    }

    fn advise(&self, request: &AclMessage) -> AdviceReply {
        if self.budget.remaining() == 0 {
            return AdviceReply::Failure(FailureReason::BudgetExhausted);
        }
        let Ok(state_url) = self.codec.requested_state(request) else {
            return AdviceReply::Failure(FailureReason::Malformed);
        };
        let Some(view) = self.fetch_board(&state_url) else {
            return AdviceReply::Failure(FailureReason::Malformed);
        };
        let legal = view.open_squares();
        if legal.is_empty() {
            return AdviceReply::Failure(FailureReason::UnknownState);
        }
        let (key, map) = canonicalize(&view.cells, view.to_move, self.use_symmetry);
        let canonical: Vec<Square> = legal.iter().map(|&s| map.to_canonical(s)).collect();
        let best = self.policy.read().best_advised_action(&key, &canonical);
        match best {
            None => AdviceReply::Failure(FailureReason::UnknownState),
            Some((action, score)) => {
                if !self.budget.try_consume() {
                    return AdviceReply::Failure(FailureReason::BudgetExhausted);
                }
                AdviceReply::Recommended {
                    square: map.to_board(action),
                    score,
                }
            }
        }
    }

    fn fetch_board(&self, url: &str) -> Option<GameView> {
        let response = self.api.get(url).ok()?;
        if response.status != 200 {
            return None;
        }
        let rep = Representation::parse(&response.body, url).ok()?;
        GameView::from_document(&rep).ok()
    }
}

/// How a request reaches an advisor and its reply comes back.
pub trait AdviceChannel: Send + Sync {
    /// Sends `request` once and waits up to `timeout` for the reply with the
    /// same conversation id. `None` when nothing usable arrived in time.
    fn exchange(&self, request: &AclMessage, timeout: Duration) -> Option<AclMessage>;
}

/// Replies waiting to be matched with outstanding requests.
#[derive(Default)]
pub struct Mailbox {
    waiting: Mutex<HashMap<String, mpsc::Sender<AclMessage>>>,
}

impl Mailbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn expect(&self, conversation_id: &str) -> mpsc::Receiver<AclMessage> {
        let (tx, rx) = mpsc::channel();
        self.waiting.lock().insert(conversation_id.to_string(), tx);
        rx
    }

    pub fn forget(&self, conversation_id: &str) {
        self.waiting.lock().remove(conversation_id);
    }

    /// Hands `msg` to whoever waits on its conversation. Returns false for
    /// unknown or stale conversations, which are dropped.
    pub fn deliver(&self, msg: AclMessage) -> bool {
        let sender = self.waiting.lock().get(&msg.conversation_id).cloned();
        match sender {
            Some(tx) => tx.send(msg).is_ok(),
            None => {
                tracing::warn!(conversation = %msg.conversation_id, "reply for unknown conversation dropped");
                false
            }
        }
    }
}

/// Requests go out as HTTP POSTs; replies arrive at the advisee's own
/// `/response` endpoint and are routed through a [`Mailbox`].
pub struct HttpAdviceChannel {
    transport: Arc<dyn Transport>,
    advisor_message_url: String,
    mailbox: Arc<Mailbox>,
    codec: MessageCodec,
}

impl HttpAdviceChannel {
    pub fn new(
        transport: Arc<dyn Transport>,
        advisor_message_url: impl Into<String>,
        mailbox: Arc<Mailbox>,
        codec: MessageCodec,
    ) -> Self {
        HttpAdviceChannel {
            transport,
            advisor_message_url: advisor_message_url.into(),
            mailbox,
            codec,
        }
    }
}

impl AdviceChannel for HttpAdviceChannel {
    fn exchange(&self, request: &AclMessage, timeout: Duration) -> Option<AclMessage> {
        let deadline = Instant::now() + timeout;
        let rx = self.mailbox.expect(&request.conversation_id);
        let body = self.codec.serialize(request);
        let sent = self
            .transport
            .send(Method::Post, &self.advisor_message_url, Some(JSON_LD), Some(&body));
        let reply = match sent {
            Ok(r) if r.is_success() => {
                let left = deadline.saturating_duration_since(Instant::now());
                rx.recv_timeout(left).ok()
            }
            Ok(r) => {
                tracing::debug!(status = r.status, "advisor refused request");
                None
            }
            Err(e) => {
                tracing::debug!(error = %e, "advisor unreachable");
                None
            }
        };
        self.mailbox.forget(&request.conversation_id);
        reply
    }
}

/// Calls an advisor in the same process. Taking it offline makes every
/// exchange wait out its timeout, as an unreachable peer would.
pub struct LocalAdviceChannel {
    advisor: Arc<Advisor>,
    online: AtomicBool,
}

impl LocalAdviceChannel {
    pub fn new(advisor: Arc<Advisor>) -> Self {
        LocalAdviceChannel {
            advisor,
            online: AtomicBool::new(true),
        }
    }

    pub fn set_online(&self, online: bool) {
        self.online.store(online, Ordering::SeqCst);
    }
}

impl AdviceChannel for LocalAdviceChannel {
    fn exchange(&self, request: &AclMessage, timeout: Duration) -> Option<AclMessage> {
        if self.online.load(Ordering::SeqCst) {
            Some(self.advisor.answer(request))
        } else {
            std::thread::sleep(timeout);
            None
        }
    }
}

impl<T: AdviceChannel + ?Sized> AdviceChannel for Arc<T> {
    fn exchange(&self, request: &AclMessage, timeout: Duration) -> Option<AclMessage> {
        (**self).exchange(request, timeout)
    }
}

/// Counters of one advisee's advice traffic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdviceStats {
    pub queries: u64,
    pub attempts: u64,
    pub accepted: u64,
    pub below_threshold: u64,
    pub failures: u64,
    pub no_reply: u64,
    /// Time spent in attempts that got no reply.
    pub timeout_wait: Duration,
}

/// The advisee's side of the protocol.
pub struct AdviceClient {
    me: String,
    advisor_iri: String,
    reply_to: String,
    channel: Box<dyn AdviceChannel>,
    config: TransferConfig,
    budget: Budget,
    codec: MessageCodec,
    next_conversation: AtomicU64,
    comms: CommsLog,
    stats: Mutex<AdviceStats>,
}

impl AdviceClient {
    pub fn new(
        me: impl Into<String>,
        advisor_iri: impl Into<String>,
        reply_to: impl Into<String>,
        channel: Box<dyn AdviceChannel>,
        config: TransferConfig,
        codec: MessageCodec,
    ) -> Self {
        AdviceClient {
            me: me.into(),
            advisor_iri: advisor_iri.into(),
            reply_to: reply_to.into(),
            channel,
            budget: Budget::new(config.ask_budget),
            config,
            codec,
            next_conversation: AtomicU64::new(1),
            comms: CommsLog::new(),
            stats: Mutex::new(AdviceStats::default()),
        }
    }

    pub fn config(&self) -> &TransferConfig {
        &self.config
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn stats(&self) -> AdviceStats {
        *self.stats.lock()
    }

    pub fn comms(&self) -> &CommsLog {
        &self.comms
    }

    /// Asks for a move at the board `state_url`. Returns a square only when
    /// the advisor recommends one that is in `legal` with enough confidence.
    pub fn request_advice(&self, state_url: &str, legal: &[Square]) -> Option<Square> {
        if !self.budget.try_consume() {
            return None;
        }
        let n = self.next_conversation.fetch_add(1, Ordering::Relaxed);
        let conversation_id = format!("msgid{n}");
        let request =
            self.codec
                .advice_request(&self.me, &self.advisor_iri, &self.reply_to, state_url, &conversation_id);
        self.stats.lock().queries += 1;
        let mut reply = None;
        for _ in 0..=self.config.max_retries {
            self.comms.append(
                Direction::Sent,
                Performative::Request,
                &conversation_id,
                &self.advisor_iri,
            );
            let started = Instant::now();
            self.stats.lock().attempts += 1;
            match self.channel.exchange(&request, self.config.reply_timeout) {
                Some(msg) if msg.conversation_id == conversation_id => {
                    reply = Some(msg);
                    break;
                }
                _ => {
                    let mut stats = self.stats.lock();
                    stats.no_reply += 1;
                    stats.timeout_wait += started.elapsed();
                }
            }
        }
        let msg = reply?;
        self.comms
            .append(Direction::Received, msg.performative, &msg.conversation_id, &msg.sender);
        let mut stats = self.stats.lock();
        match self.codec.reply_content(&msg) {
            Ok(AdviceReply::Recommended { square, score }) => {
                if !(0.0..=1.0).contains(&score) || score < self.config.score_threshold {
                    stats.below_threshold += 1;
                    None
                } else if legal.contains(&square) {
                    stats.accepted += 1;
                    Some(square)
                } else {
                    stats.failures += 1;
                    None
                }
            }
            Ok(AdviceReply::Failure(_)) | Err(_) => {
                stats.failures += 1;
                None
            }
        }
    }
}
