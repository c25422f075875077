use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use hyperttt_core::game::Square;
use hyperttt_core::hypermedia::{Form, Method, PropertyValue, Representation, JSON};
use hyperttt_core::hypermedia::{GameOutcome, GameView};
use hyperttt_core::policy::{
    canonicalize, HyperParams, PolicyError, QTable, RunState, SharedPolicy, StateKey, Transition,
};
use hyperttt_core::transport::{Transport, TransportError};
use hyperttt_core::vocab::{ttt, Vocabulary};

use crate::beliefs::BeliefBase;
use crate::records::{EpisodeRecord, Outcome};
use crate::transfer::AdviceClient;

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub agent_iri: String,
    /// The only game-service URL the agent is given.
    pub entry_url: String,
    pub hyper_params: HyperParams,
    pub use_symmetry: bool,
    pub rng_seed: u64,
    /// When false, `wall_ms` is recorded as 0 so that runs compare byte for byte.
    pub record_wall_time: bool,
    /// Attempts to repeat an episode that failed on an unreachable service.
    pub max_episode_retries: u32,
    pub retry_backoff: Duration,
}

impl AgentConfig {
    pub fn new(agent_iri: impl Into<String>, entry_url: impl Into<String>) -> Self {
        AgentConfig {
            agent_iri: agent_iri.into(),
            entry_url: entry_url.into(),
            hyper_params: HyperParams::default(),
            use_symmetry: false,
            rng_seed: 0,
            record_wall_time: true,
            max_episode_retries: 3,
            retry_backoff: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("game service unreachable: {0}")]
    ApiUnreachable(#[from] TransportError),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("malformed result: {0}")]
    MalformedResult(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

fn violation(msg: impl Into<String>) -> AgentError {
    AgentError::ProtocolViolation(msg.into())
}

#[derive(Debug, thiserror::Error)]
#[error("training aborted after {} episodes: {cause}", records.len())]
pub struct TrainingAborted {
    pub records: Vec<EpisodeRecord>,
    pub cause: AgentError,
}

/// A learner that plays the game by following hypermedia controls.
pub struct Agent {
    config: AgentConfig,
    api: Arc<dyn Transport>,
    policy: SharedPolicy,
    advice: Option<AdviceClient>,
    rng: ChaCha8Rng,
    beliefs: BeliefBase,
    decays: u64,
}

impl Agent {
    pub fn new(config: AgentConfig, api: Arc<dyn Transport>, policy: SharedPolicy) -> Result<Self, AgentError> {
        config.hyper_params.validate()?;
        Ok(Agent {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            config,
            api,
            policy,
            advice: None,
            beliefs: BeliefBase::new(),
            decays: 0,
        })
    }

    pub fn with_advice(mut self, client: AdviceClient) -> Self {
        self.advice = Some(client);
        self
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn policy(&self) -> &SharedPolicy {
        &self.policy
    }

    pub fn advice(&self) -> Option<&AdviceClient> {
        self.advice.as_ref()
    }

    pub fn beliefs(&self) -> &BeliefBase {
        &self.beliefs
    }

    /// Continues the exploration schedule as if `episodes` had already been played.
    pub fn resume_schedule(&mut self, episodes: u64) {
        self.decays = episodes;
    }

    /// Exploration rate for the next episode.
    pub fn epsilon(&self) -> f64 {
        self.config.hyper_params.epsilon_after(self.decays)
    }

    /// Runs `episodes` games in order. An episode that fails because the
    /// service is unreachable is retried after a backoff; other errors, or
    /// running out of retries, stop training with the records so far.
    pub fn run_training(
        &mut self,
        episodes: u64,
        mut observer: impl FnMut(&EpisodeRecord),
    ) -> Result<Vec<EpisodeRecord>, TrainingAborted> {
        let mut records = Vec::with_capacity(episodes as usize);
        for index in 0..episodes {
            let mut attempt = 0;
            loop {
                match self.run_episode(index) {
                    Ok(record) => {
                        observer(&record);
                        records.push(record);
                        break;
                    }
                    Err(AgentError::ApiUnreachable(e)) if attempt < self.config.max_episode_retries => {
                        attempt += 1;
                        tracing::warn!(episode = index, attempt, error = %e, "retrying episode");
                        self.beliefs.clear();
                        std::thread::sleep(self.config.retry_backoff * attempt);
                    }
                    Err(cause) => {
                        self.beliefs.clear();
                        return Err(TrainingAborted { records, cause });
                    }
                }
            }
        }
        Ok(records)
    }

    /// Plays one game from the entry point to its result.
    pub fn run_episode(&mut self, index: u64) -> Result<EpisodeRecord, AgentError> {
        let started = Instant::now();
        let hp = self.config.hyper_params;
        let epsilon = self.epsilon();
        let entry_url = self.config.entry_url.clone();
        let entry = self.request(Method::Get, &entry_url, None)?;
        let vocab = Vocabulary::from_context(&entry.context)
            .ok_or_else(|| violation("entry point does not declare the game ontology"))?;
        let register = find_register_form(&entry, &vocab)?;
        let body = self.form_body(&register.required_fields)?;
        let mut source = register.href.clone();
        let mut rep = self.request(register.method, &register.href, Some(&body))?;

        let mut steps = 0u32;
        let mut asked = 0u32;
        let mut followed = 0u32;
        let mut pending: Option<(StateKey, Square)> = None;
        let view = loop {
            let view = GameView::from_representation(&rep, &vocab).map_err(|e| violation(e.to_string()))?;
            self.beliefs.observe(&rep, Some(view.cells), &source);
            let moves: Vec<(Square, Form)> = rep
                .forms
                .iter()
                .filter_map(|f| square_of(&f.href).map(|s| (s, f.clone())))
                .collect();
            if moves.is_empty() {
                if !view.status.is_over() {
                    return Err(violation("no move forms in a game in progress"));
                }
                break view;
            }
            let legal: Vec<Square> = moves.iter().map(|(s, _)| *s).collect();
            let (key, map) = canonicalize(&view.cells, view.agent_mark, self.config.use_symmetry);
            let canonical: Vec<Square> = legal.iter().map(|&s| map.to_canonical(s)).collect();
            if let Some((s, a)) = pending.take() {
                self.policy
                    .write()
                    .update(&Transition::step(s, a, 0.0, &key, &canonical), &hp);
            }

            let mut advised = None;
            if let Some(client) = &self.advice {
                let ask = client.budget().remaining() > 0
                    && advice_trigger(&key, &canonical, &self.policy.read(), client.config().trigger_margin);
                if ask {
                    asked += 1;
                    let state_url = view.url.clone().unwrap_or_else(|| source.clone());
                    advised = client.request_advice(&state_url, &legal);
                    followed += u32::from(advised.is_some());
                }
            }
            let square = match advised {
                Some(s) => s,
                None => {
                    let a = self
                        .policy
                        .read()
                        .select_action(&key, &canonical, epsilon, &mut self.rng)?;
                    map.to_board(a)
                }
            };
            let form = &moves
                .iter()
                .find(|(s, _)| *s == square)
                .expect("chosen squares come from the forms")
                .1;
            let body = self.form_body(&form.required_fields)?;
            rep = self.request(form.method, &form.href, Some(&body))?;
            source = form.href.clone();
            steps += 1;
            pending = Some((key, map.to_canonical(square)));
        };

        let result_url = rep
            .link_with_rel(&vocab.ttt(ttt::RESULT_REL))
            .map(|l| l.href.clone())
            .ok_or_else(|| violation("finished game has no result link"))?;
        let result = self.request(Method::Get, &result_url, None)?;
        let outcome = infer_outcome(&result, &view.agent_role)?;
        let reward = reward_for(outcome, &hp);
        {
            let mut policy = self.policy.write();
            if let Some((s, a)) = pending {
                policy.update(&Transition::terminal(s, a, reward), &hp);
            }
            if policy.run_state() == RunState::Running {
                policy.record_episode();
                self.decays += 1;
            }
        }
        let game_outcome = match outcome {
            Outcome::Draw => GameOutcome::Draw,
            Outcome::Win => GameOutcome::Winner(view.agent_role.clone()),
            Outcome::Loss => GameOutcome::Winner(String::new()),
        };
        self.beliefs.record_result(game_outcome, &result_url);
        self.beliefs.clear();

        Ok(EpisodeRecord {
            index,
            outcome,
            reward,
            steps,
            advice_asked: asked,
            advice_followed: followed,
            wall_ms: if self.config.record_wall_time {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        })
    }

    fn request(&self, method: Method, url: &str, body: Option<&str>) -> Result<Representation, AgentError> {
        let content_type = body.map(|_| JSON);
        let response = self.api.send(method, url, content_type, body)?;
        if !response.is_success() {
            return Err(violation(format!("{method} {url} answered {}", response.status)));
        }
        Representation::parse(&response.body, url).map_err(|e| violation(e.to_string()))
    }

    fn form_body(&self, fields: &[String]) -> Result<String, AgentError> {
        let mut obj = Map::new();
        for field in fields {
            match field.as_str() {
                "@id" => obj.insert(field.clone(), Value::String(self.config.agent_iri.clone())),
                other => return Err(violation(format!("cannot fill form field {other:?}"))),
            };
        }
        Ok(Value::Object(obj).to_string())
    }
}

/// The registration form: the one typed with the register operation, or
/// failing that the only POST form.
fn find_register_form(entry: &Representation, vocab: &Vocabulary) -> Result<Form, AgentError> {
    let op = vocab.ttt(ttt::REGISTER);
    if let Some(f) = entry.forms.iter().find(|f| f.operation.as_deref() == Some(op.as_str())) {
        return Ok(f.clone());
    }
    let posts: Vec<&Form> = entry.forms.iter().filter(|f| f.method == Method::Post).collect();
    match posts.as_slice() {
        [only] => Ok((*only).clone()),
        _ => Err(violation("no registration form at the entry point")),
    }
}

/// The square a move form writes, named by the last path segment of its
/// target (`.../Square13?id=...`).
fn square_of(href: &str) -> Option<Square> {
    let url = url::Url::parse(href).ok()?;
    url.path_segments()?.next_back()?.parse().ok()
}

fn reward_for(outcome: Outcome, hp: &HyperParams) -> f64 {
    match outcome {
        Outcome::Win => hp.reward_win,
        Outcome::Loss => hp.reward_loss,
        Outcome::Draw => hp.reward_draw,
    }
}

/// Win, loss or draw, from the result property of a finished game.
pub fn infer_outcome(result: &Representation, my_role: &str) -> Result<Outcome, AgentError> {
    let vocab = Vocabulary::from_context(&result.context)
        .ok_or_else(|| AgentError::MalformedResult("no game ontology in @context".into()))?;
    match result.property(&vocab.ttt(ttt::HAS_RESULT)) {
        Some(PropertyValue::Iri(iri)) if *iri == vocab.ttt(ttt::DRAW) => Ok(Outcome::Draw),
        Some(PropertyValue::Iri(iri)) if iri == my_role => Ok(Outcome::Win),
        Some(PropertyValue::Iri(_)) => Ok(Outcome::Loss),
        Some(other) => Err(AgentError::MalformedResult(format!("result is not an IRI: {other:?}"))),
        None => Err(AgentError::MalformedResult("no result property".into())),
    }
}

pub fn infer_reward(result: &Representation, my_role: &str, hp: &HyperParams) -> Result<f64, AgentError> {
    infer_outcome(result, my_role).map(|o| reward_for(o, hp))
}

/// Whether to ask for advice at `state`: it has never been visited, or the
/// best stored value over `legal` is within `margin` of zero.
pub fn advice_trigger(state: &StateKey, legal: &[Square], q: &QTable, margin: f64) -> bool {
    if !q.visited(state) {
        return true;
    }
    legal
        .iter()
        .filter_map(|&a| q.stored_value(state, a))
        .reduce(f64::max)
        .is_none_or(|best| best.abs() < margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hyperttt_core::hypermedia::Form;

    fn result_doc(result: &str) -> Representation {
        let vocab = Vocabulary::default();
        let mut rep = Representation::new(vocab.ttt_context());
        rep.set(vocab.ttt(ttt::HAS_RESULT), PropertyValue::Iri(result.to_string()));
        rep
    }

    #[test]
    fn rewards_follow_the_result() {
        let vocab = Vocabulary::default();
        let hp = HyperParams::default();
        let me = "http://ttt.api/games/id1/roles/X";
        assert_eq!(infer_reward(&result_doc(me), me, &hp).unwrap(), 1.0);
        assert_eq!(
            infer_reward(&result_doc("http://ttt.api/games/id1/roles/O"), me, &hp).unwrap(),
            -1.0
        );
        assert_eq!(infer_reward(&result_doc(&vocab.ttt(ttt::DRAW)), me, &hp).unwrap(), 0.0);
        let empty = Representation::new(vocab.ttt_context());
        assert!(matches!(
            infer_reward(&empty, me, &hp),
            Err(AgentError::MalformedResult(_))
        ));
    }

    #[test]
    fn trigger_rule() {
        let mut q = QTable::new();
        let s = StateKey::EMPTY;
        let legal = Square::ALL.to_vec();
        assert!(advice_trigger(&s, &legal, &q, 0.05));
        q.set_value(s, Square::ALL[0], 0.8);
        assert!(!advice_trigger(&s, &legal, &q, 0.05));
        q.set_value(s, Square::ALL[0], 0.01);
        assert!(advice_trigger(&s, &legal, &q, 0.05));
        q.set_value(s, Square::ALL[1], -0.5);
        assert!(advice_trigger(&s, &legal, &q, 0.05));
    }

    #[test]
    fn register_form_lookup() {
        let vocab = Vocabulary::default();
        let mut entry = Representation::new(vocab.ttt_context());
        entry.forms.push(Form::new("http://x/a", Method::Post));
        assert_eq!(find_register_form(&entry, &vocab).unwrap().href, "http://x/a");
        entry
            .forms
            .push(Form::new("http://x/b", Method::Post).with_operation(vocab.ttt(ttt::REGISTER)));
        assert_eq!(find_register_form(&entry, &vocab).unwrap().href, "http://x/b");
        entry.forms.remove(1);
        entry.forms.push(Form::new("http://x/c", Method::Post));
        assert!(find_register_form(&entry, &vocab).is_err());
    }

    #[test]
    fn squares_from_hrefs() {
        assert_eq!(
            square_of("http://ttt.api/base/Square23?id=id1"),
            "Square23".parse().ok()
        );
        assert_eq!(square_of("http://ttt.api/Board?id=id1"), None);
    }
}
