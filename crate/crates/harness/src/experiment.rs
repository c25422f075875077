//! Solo, transfer and paired runs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use serde_json::json;

use hyperttt_agent::acl::MessageCodec;
use hyperttt_agent::endpoints::{self, Endpoints, RunningEndpoints};
use hyperttt_agent::http::HttpTransport;
use hyperttt_agent::records::write_csv;
use hyperttt_agent::transfer::{
    AdviceClient, AdviceStats, Advisor, HttpAdviceChannel, LocalAdviceChannel, Mailbox, TransferConfig,
};
use hyperttt_agent::{Agent, AgentConfig, EpisodeRecord};
use hyperttt_core::game::BotKind;
use hyperttt_core::policy::{read_checkpoint, shared, write_checkpoint, HyperParams, QTable, RunState};
use hyperttt_core::seed::{self, stream};
use hyperttt_service::ServiceConfig;

use crate::metrics::{compute_metrics, mean_stddev, MetricsSummary};
use crate::world::{TransportMode, World};
use crate::HarnessError;

pub const ADVISOR_IRI: &str = "http://agent.zero";
pub const ADVISEE_IRI: &str = "http://agent.one";
pub const SOLO_IRI: &str = "http://agent.solo";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solo,
    Transfer,
    Paired,
}

impl Mode {
    pub fn arms(self) -> &'static [Arm] {
        match self {
            Mode::Solo => &[Arm::Solo],
            Mode::Transfer => &[Arm::Advisee],
            Mode::Paired => &[Arm::Advisee, Arm::Solo],
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solo" => Ok(Mode::Solo),
            "transfer" => Ok(Mode::Transfer),
            "paired" => Ok(Mode::Paired),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Solo => "solo",
            Mode::Transfer => "transfer",
            Mode::Paired => "paired",
        })
    }
}

/// Whether the advisor keeps training while it gives advice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvisorMode {
    #[default]
    Frozen,
    Learning,
}

impl FromStr for AdvisorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frozen" => Ok(AdvisorMode::Frozen),
            "learning" => Ok(AdvisorMode::Learning),
            other => Err(format!("unknown advisor mode {other:?}")),
        }
    }
}

impl fmt::Display for AdvisorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdvisorMode::Frozen => "frozen",
            AdvisorMode::Learning => "learning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Solo,
    Advisee,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Solo => "solo",
            Arm::Advisee => "advisee",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub episodes: u64,
    pub seeds: Vec<u64>,
    pub advisor_pretrain_episodes: u64,
    pub reward_window: usize,
    pub reward_threshold: f64,
    pub eval_gamma: f64,
    pub transport: TransportMode,
    pub output_dir: Option<PathBuf>,
    pub bot: BotKind,
    pub hyper_params: HyperParams,
    pub use_symmetry: bool,
    pub advisor_symmetry: bool,
    pub transfer: TransferConfig,
    pub advisor_mode: AdvisorMode,
    /// Pretrain a new advisor for every seed instead of sharing one.
    pub fresh_advisor: bool,
    /// Loaded when it exists, written after pretraining otherwise.
    pub advisor_checkpoint: Option<PathBuf>,
    pub pretrain_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Paired,
            episodes: 2_000,
            seeds: (1..=10).collect(),
            advisor_pretrain_episodes: 20_000,
            reward_window: 100,
            reward_threshold: 0.6,
            eval_gamma: 0.9,
            transport: TransportMode::InProcess,
            output_dir: None,
            bot: BotKind::Heuristic,
            hyper_params: HyperParams::default(),
            use_symmetry: false,
            advisor_symmetry: false,
            transfer: TransferConfig::default(),
            advisor_mode: AdvisorMode::Frozen,
            fresh_advisor: false,
            advisor_checkpoint: None,
            pretrain_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.reward_window == 0 || self.reward_window as u64 > self.episodes {
            return bad("reward window must be between 1 and the episode count");
        }
        if !(0.0..=1.0).contains(&self.eval_gamma) {
            return bad("evaluation gamma must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.transfer.score_threshold) {
            return bad("score threshold must be in [0, 1]");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        self.hyper_params
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn summarize(&self, records: &[EpisodeRecord]) -> MetricsSummary {
        compute_metrics(records, self.reward_window, self.reward_threshold, self.eval_gamma)
    }
}

/// The service every arm of `seed` plays against.
pub fn service_config(bot: BotKind, seed: u64) -> ServiceConfig {
    ServiceConfig {
        bot,
        rng_seed: seed::derive(seed, stream::SERVICE),
        ..ServiceConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct PretrainConfig {
    pub episodes: u64,
    pub seed: u64,
    pub bot: BotKind,
    pub hyper_params: HyperParams,
    pub use_symmetry: bool,
    pub transport: TransportMode,
}

/// Trains an agent alone and returns its table.
pub fn pretrain(cfg: &PretrainConfig) -> Result<QTable, HarnessError> {
    let world = World::start(cfg.transport, service_config(cfg.bot, cfg.seed))?;
    let mut agent_cfg = AgentConfig::new(ADVISOR_IRI, world.entry_url());
    agent_cfg.hyper_params = cfg.hyper_params;
    agent_cfg.use_symmetry = cfg.use_symmetry;
    agent_cfg.rng_seed = seed::derive(cfg.seed, stream::AGENT);
    agent_cfg.record_wall_time = false;
    let policy = shared(QTable::new());
    let mut agent = Agent::new(agent_cfg, world.api(), policy.clone())?;
    agent
        .run_training(cfg.episodes, |_| {})
        .map_err(|e| HarnessError::Aborted {
            seed: cfg.seed,
            arm: "pretrain".into(),
            completed: e.records.len(),
            cause: e.cause.to_string(),
        })?;
    drop(agent);
    let table = policy.read().clone();
    Ok(table)
}

/// Greedy play with a frozen copy of `table`; returns the run's metrics.
pub fn evaluate_greedy(
    table: &QTable,
    use_symmetry: bool,
    bot: BotKind,
    games: u64,
    seed: u64,
) -> Result<MetricsSummary, HarnessError> {
    let world = World::start(TransportMode::InProcess, service_config(bot, seed))?;
    let mut agent_cfg = AgentConfig::new(SOLO_IRI, world.entry_url());
    agent_cfg.hyper_params = HyperParams {
        epsilon_start: 0.0,
        epsilon_min: 0.0,
        ..HyperParams::default()
    };
    agent_cfg.use_symmetry = use_symmetry;
    agent_cfg.rng_seed = seed::derive(seed, stream::AGENT);
    agent_cfg.record_wall_time = false;
    let mut frozen = table.clone();
    frozen.set_run_state(RunState::Stopped);
    let mut agent = Agent::new(agent_cfg, world.api(), shared(frozen))?;
    let records = agent
        .run_training(games, |_| {})
        .map_err(|e| HarnessError::Agent(e.cause))?;
    Ok(compute_metrics(&records, 1, 1.0, 1.0))
}

/// Lets a run's observer take the advisor offline.
#[derive(Default)]
pub struct AdvisorControl {
    local: Option<Arc<LocalAdviceChannel>>,
    endpoints: Mutex<Option<RunningEndpoints>>,
}

impl AdvisorControl {
    pub fn kill(&self) {
        if let Some(ch) = &self.local {
            ch.set_online(false);
        }
        if let Some(ep) = self.endpoints.lock().take() {
            ep.kill();
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArmRun {
    pub seed: u64,
    pub arm: Arm,
    pub records: Vec<EpisodeRecord>,
    pub summary: MetricsSummary,
    pub advice: Option<AdviceStats>,
    pub ask_budget_remaining: Option<u64>,
    pub advisor_informs: u64,
    pub wall: Duration,
    /// Why the run stopped early, if it did.
    pub aborted: Option<String>,
}

/// Runs one arm for one seed. `hook` sees every finished episode.
pub fn run_arm(
    cfg: &ExperimentConfig,
    seed: u64,
    arm: Arm,
    advisor_table: Option<&QTable>,
    hook: &mut dyn FnMut(&EpisodeRecord, &AdvisorControl),
) -> Result<ArmRun, HarnessError> {
    let world = World::start(cfg.transport, service_config(cfg.bot, seed))?;
    let iri = match arm {
        Arm::Solo => SOLO_IRI,
        Arm::Advisee => ADVISEE_IRI,
    };
    let mut agent_cfg = AgentConfig::new(iri, world.entry_url());
    agent_cfg.hyper_params = cfg.hyper_params;
    agent_cfg.use_symmetry = cfg.use_symmetry;
    agent_cfg.rng_seed = seed::derive(seed, stream::AGENT);
    agent_cfg.record_wall_time = cfg.transport == TransportMode::LoopbackHttp;
    let mut agent = Agent::new(agent_cfg, world.api(), shared(QTable::new()))?;

    let mut control = AdvisorControl::default();
    let mut advisor = None;
    let mut _own_endpoints = None;
    let mut learner = None;
    if arm == Arm::Advisee {
        let table = advisor_table
            .ok_or_else(|| HarnessError::Config("the advisee arm needs an advisor".into()))?
            .clone();
        let pretrained = table.episode_count();
        let advisor_policy = shared(table);
        let codec = MessageCodec::new(world.service().vocabulary());
        let client = match cfg.transport {
            TransportMode::InProcess => {
                let adv = Arc::new(Advisor::new(
                    ADVISOR_IRI,
                    advisor_policy.clone(),
                    cfg.advisor_symmetry,
                    cfg.transfer.give_budget,
                    world.api(),
                    codec.clone(),
                ));
                let channel = Arc::new(LocalAdviceChannel::new(adv.clone()));
                control.local = Some(channel.clone());
                advisor = Some(adv);
                AdviceClient::new(
                    ADVISEE_IRI,
                    ADVISOR_IRI,
                    format!("{ADVISEE_IRI}/response"),
                    Box::new(channel),
                    cfg.transfer,
                    codec,
                )
            }
            TransportMode::LoopbackHttp => {
                let http: Arc<HttpTransport> = Arc::new(HttpTransport::new(Duration::from_secs(10)));
                let adv = Arc::new(Advisor::new(
                    ADVISOR_IRI,
                    advisor_policy.clone(),
                    cfg.advisor_symmetry,
                    cfg.transfer.give_budget,
                    http.clone(),
                    codec.clone(),
                ));
                let loopback = ([127, 0, 0, 1], 0).into();
                let advisor_ep = endpoints::spawn(
                    loopback,
                    Arc::new(Endpoints {
                        advisor: Some(adv.clone()),
                        mailbox: Arc::new(Mailbox::new()),
                        codec: codec.clone(),
                        outbound: http.clone(),
                    }),
                )
                .map_err(|e| HarnessError::Launch(e.to_string()))?;
                let mailbox = Arc::new(Mailbox::new());
                let own = endpoints::spawn(
                    loopback,
                    Arc::new(Endpoints {
                        advisor: None,
                        mailbox: mailbox.clone(),
                        codec: codec.clone(),
                        outbound: http.clone(),
                    }),
                )
                .map_err(|e| HarnessError::Launch(e.to_string()))?;
                let channel = HttpAdviceChannel::new(http, advisor_ep.url("/message"), mailbox, codec.clone());
                let reply_to = own.url("/response");
                *control.endpoints.lock() = Some(advisor_ep);
                _own_endpoints = Some(own);
                advisor = Some(adv);
                AdviceClient::new(
                    ADVISEE_IRI,
                    ADVISOR_IRI,
                    reply_to,
                    Box::new(channel),
                    cfg.transfer,
                    codec,
                )
            }
        };
        agent = agent.with_advice(client);

        if cfg.advisor_mode == AdvisorMode::Learning {
            let stop = Arc::new(AtomicBool::new(false));
            let advisor_world = World::start(
                cfg.transport,
                service_config(cfg.bot, seed::derive(seed, stream::ADVISOR)),
            )?;
            let mut advisor_cfg = AgentConfig::new(ADVISOR_IRI, advisor_world.entry_url());
            advisor_cfg.hyper_params = cfg.hyper_params;
            advisor_cfg.use_symmetry = cfg.advisor_symmetry;
            advisor_cfg.rng_seed = seed::derive(seed::derive(seed, stream::ADVISOR), stream::AGENT);
            let mut trainer = Agent::new(advisor_cfg, advisor_world.api(), advisor_policy.clone())?;
            trainer.resume_schedule(pretrained);
            let flag = stop.clone();
            let handle = std::thread::spawn(move || {
                let _world = advisor_world;
                let mut n = 0;
                while !flag.load(Ordering::SeqCst) {
                    if let Err(e) = trainer.run_episode(n) {
                        tracing::warn!(error = %e, "advisor training stopped");
                        break;
                    }
                    n += 1;
                }
                n
            });
            learner = Some((stop, handle));
        }
    }

    let started = Instant::now();
    let result = agent.run_training(cfg.episodes, |r| hook(r, &control));
    let wall = started.elapsed();
    if let Some((stop, handle)) = learner {
        stop.store(true, Ordering::SeqCst);
        let trained = handle.join().unwrap_or(0);
        tracing::debug!(episodes = trained, "advisor trained alongside");
    }
    let (records, aborted) = match result {
        Ok(records) => (records, None),
        Err(e) => (e.records, Some(e.cause.to_string())),
    };
    Ok(ArmRun {
        seed,
        arm,
        summary: cfg.summarize(&records),
        records,
        advice: agent.advice().map(|c| c.stats()),
        ask_budget_remaining: agent.advice().map(|c| c.budget().remaining()),
        advisor_informs: advisor.map_or(0, |a| a.informs_sent()),
        wall,
        aborted,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<ArmRun>,
}

impl ExperimentReport {
    pub fn arm(&self, seed: u64, arm: Arm) -> Option<&ArmRun> {
        self.runs.iter().find(|r| r.seed == seed && r.arm == arm)
    }
}

/// The shared advisor: loaded from the checkpoint if it exists, otherwise
/// pretrained (and saved when a checkpoint path is set).
pub fn shared_advisor(cfg: &ExperimentConfig) -> Result<QTable, HarnessError> {
    if let Some(path) = &cfg.advisor_checkpoint {
        if path.exists() {
            return Ok(read_checkpoint(&fs::read_to_string(path)?)?.table);
        }
    }
    let table = pretrain(&PretrainConfig {
        episodes: cfg.advisor_pretrain_episodes,
        seed: cfg.pretrain_seed,
        bot: cfg.bot,
        hyper_params: cfg.hyper_params,
        use_symmetry: cfg.advisor_symmetry,
        transport: TransportMode::InProcess,
    })?;
    if let Some(path) = &cfg.advisor_checkpoint {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, write_checkpoint(&table, &cfg.hyper_params, cfg.advisor_symmetry))?;
    }
    Ok(table)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir.join("episodes"))?;
        write_manifest(cfg, &dir.join("manifest.json"))?;
    }
    let needs_advisor = cfg.mode.arms().contains(&Arm::Advisee);
    let shared = if needs_advisor && !cfg.fresh_advisor {
        Some(shared_advisor(cfg)?)
    } else {
        None
    };
    let mut report = ExperimentReport { runs: Vec::new() };
    for &seed in &cfg.seeds {
        for &arm in cfg.mode.arms() {
            let fresh;
            let table = match (arm, &shared) {
                (Arm::Solo, _) => None,
                (Arm::Advisee, Some(t)) => Some(t),
                (Arm::Advisee, None) => {
                    fresh = pretrain(&PretrainConfig {
                        episodes: cfg.advisor_pretrain_episodes,
                        seed: seed::derive(seed, stream::ADVISOR),
                        bot: cfg.bot,
                        hyper_params: cfg.hyper_params,
                        use_symmetry: cfg.advisor_symmetry,
                        transport: TransportMode::InProcess,
                    })?;
                    Some(&fresh)
                }
            };
            let run = run_arm(cfg, seed, arm, table, &mut |_, _| {})?;
            tracing::info!(
                seed,
                arm = %arm,
                undiscounted = run.summary.undiscounted_return,
                to_threshold = ?run.summary.episodes_to_threshold,
                "arm finished"
            );
            if let Some(dir) = &cfg.output_dir {
                let file = fs::File::create(dir.join("episodes").join(format!("seed{seed}_{arm}.csv")))?;
                write_csv(file, &run.records)?;
            }
            let aborted = run.aborted.clone();
            let completed = run.records.len();
            report.runs.push(run);
            if let Some(cause) = aborted {
                if let Some(dir) = &cfg.output_dir {
                    write_aggregate(&report, &dir.join("aggregate.csv"))?;
                }
                return Err(HarnessError::Aborted {
                    seed,
                    arm: arm.to_string(),
                    completed,
                    cause,
                });
            }
        }
    }
    if let Some(dir) = &cfg.output_dir {
        write_aggregate(&report, &dir.join("aggregate.csv"))?;
        write_summary(&report, &dir.join("summary.csv"))?;
    }
    Ok(report)
}

pub const AGGREGATE_HEADER: [&str; 13] = [
    "seed",
    "arm",
    "episodes",
    "wins",
    "draws",
    "losses",
    "undiscounted_return",
    "discounted_return",
    "episodes_to_threshold",
    "advice_asked",
    "advice_followed",
    "advisor_informs",
    "wall_ms",
];

pub fn write_aggregate(report: &ExperimentReport, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(AGGREGATE_HEADER)?;
    for run in &report.runs {
        let s = &run.summary;
        let asked: u64 = run.records.iter().map(|r| u64::from(r.advice_asked)).sum();
        let followed: u64 = run.records.iter().map(|r| u64::from(r.advice_followed)).sum();
        w.write_record([
            run.seed.to_string(),
            run.arm.to_string(),
            s.episodes.to_string(),
            s.wins.to_string(),
            s.draws.to_string(),
            s.losses.to_string(),
            s.undiscounted_return.to_string(),
            s.discounted_return.to_string(),
            s.episodes_to_threshold.map(|e| e.to_string()).unwrap_or_default(),
            asked.to_string(),
            followed.to_string(),
            run.advisor_informs.to_string(),
            run.wall.as_millis().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 5] = ["arm", "metric", "n", "mean", "stddev"];

pub fn write_summary(report: &ExperimentReport, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for arm in [Arm::Advisee, Arm::Solo] {
        let runs: Vec<&ArmRun> = report.runs.iter().filter(|r| r.arm == arm).collect();
        if runs.is_empty() {
            continue;
        }
        let metrics: [(&str, Vec<f64>); 4] = [
            (
                "undiscounted_return",
                runs.iter().map(|r| r.summary.undiscounted_return).collect(),
            ),
            (
                "discounted_return",
                runs.iter().map(|r| r.summary.discounted_return).collect(),
            ),
            (
                "episodes_to_threshold",
                runs.iter()
                    .filter_map(|r| r.summary.episodes_to_threshold.map(|e| e as f64))
                    .collect(),
            ),
            ("wall_ms", runs.iter().map(|r| r.wall.as_millis() as f64).collect()),
        ];
        for (name, values) in metrics {
            let (mean, sd) = mean_stddev(&values);
            w.write_record([
                arm.to_string(),
                name.to_string(),
                values.len().to_string(),
                mean.to_string(),
                sd.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_manifest(cfg: &ExperimentConfig, path: &Path) -> Result<(), HarnessError> {
    let hp = &cfg.hyper_params;
    let t = &cfg.transfer;
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "mode": cfg.mode.to_string(),
        "episodes": cfg.episodes,
        "seeds": cfg.seeds,
        "repetitions": cfg.seeds.len(),
        "advisorPretrainEpisodes": cfg.advisor_pretrain_episodes,
        "rewardWindow": cfg.reward_window,
        "rewardThreshold": cfg.reward_threshold,
        "evalGamma": cfg.eval_gamma,
        "transport": cfg.transport.to_string(),
        "bot": cfg.bot.to_string(),
        "hyperParams": {
            "alpha": hp.alpha,
            "gamma": hp.gamma,
            "epsilonStart": hp.epsilon_start,
            "epsilonDecay": hp.epsilon_decay,
            "epsilonMin": hp.epsilon_min,
            "rewardWin": hp.reward_win,
            "rewardLoss": hp.reward_loss,
            "rewardDraw": hp.reward_draw,
        },
        "useSymmetry": cfg.use_symmetry,
        "advisorSymmetry": cfg.advisor_symmetry,
        "transfer": {
            "askBudget": t.ask_budget,
            "giveBudget": t.give_budget,
            "scoreThreshold": t.score_threshold,
            "replyTimeoutMs": t.reply_timeout.as_millis() as u64,
            "maxRetries": t.max_retries,
            "triggerMargin": t.trigger_margin,
        },
        "advisorMode": cfg.advisor_mode.to_string(),
        "freshAdvisor": cfg.fresh_advisor,
        "advisorCheckpoint": cfg.advisor_checkpoint.as_ref().map(|p| p.display().to_string()),
        "pretrainSeed": cfg.pretrain_seed,
        "seedStreams": {
            "service": stream::SERVICE,
            "agent": stream::AGENT,
            "advisor": stream::ADVISOR,
        },
    });
    fs::write(
        path,
        serde_json::to_string_pretty(&manifest).expect("JSON values serialize"),
    )?;
    Ok(())
}
