use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use tracing::level_filters::LevelFilter;

use hyperttt_agent::acl::MessageCodec;
use hyperttt_agent::endpoints::{self, Endpoints};
use hyperttt_agent::http::HttpTransport;
use hyperttt_agent::records::write_csv;
use hyperttt_agent::transfer::{AdviceClient, Advisor, HttpAdviceChannel, Mailbox, TransferConfig};
use hyperttt_agent::{Agent, AgentConfig};
use hyperttt_core::game::BotKind;
use hyperttt_core::hypermedia::Representation;
use hyperttt_core::policy::{read_checkpoint, shared, write_checkpoint, HyperParams, QTable};
use hyperttt_core::transport::Transport;
use hyperttt_core::vocab::Vocabulary;
use hyperttt_harness::experiment::{
    evaluate_greedy, pretrain, run_experiment, AdvisorMode, ExperimentConfig, Mode, PretrainConfig,
};
use hyperttt_harness::metrics::compute_metrics;
use hyperttt_harness::world::TransportMode;
use hyperttt_harness::HarnessError;
use hyperttt_service::{server, ServiceConfig};

#[derive(Parser)]
#[command(
    name = "hyperttt",
    version,
    about = "Hypermedia tic-tac-toe: service, agents and experiments"
)]
struct Cli {
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info", env = "HYPERTTT_LOG")]
    log: LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the game service until Ctrl-C.
    Serve(ServeArgs),
    /// Train one agent against a running service.
    Agent(AgentArgs),
    /// Compare learning alone with learning from advice.
    Experiment(ExperimentArgs),
    /// Train an advisor and write its checkpoint.
    Pretrain(PretrainArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[arg(long, default_value = "/")]
    base_path: String,
    /// Origin used in links, when it differs from the bind address.
    #[arg(long)]
    public_origin: Option<String>,
    #[arg(long, default_value = "heuristic")]
    bot: BotKind,
    /// Let the bot open every game.
    #[arg(long)]
    agent_second: bool,
    /// Write each finished game as Turtle into this directory.
    #[arg(long, default_value = "exports")]
    export_dir: PathBuf,
    /// Do not write game files.
    #[arg(long)]
    no_export: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_sessions: usize,
    #[arg(long)]
    ontology_base: Option<String>,
}

#[derive(Args, Clone)]
struct LearningArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 0.3)]
    epsilon_start: f64,
    #[arg(long, default_value_t = 0.999)]
    epsilon_decay: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon_min: f64,
    /// Share values between boards that are rotations or reflections of each other.
    #[arg(long)]
    symmetry: bool,
}

impl LearningArgs {
    fn hyper_params(&self) -> HyperParams {
        HyperParams {
            alpha: self.alpha,
            gamma: self.gamma,
            epsilon_start: self.epsilon_start,
            epsilon_decay: self.epsilon_decay,
            epsilon_min: self.epsilon_min,
            ..HyperParams::default()
        }
    }
}

#[derive(Args, Clone)]
struct TransferArgs {
    #[arg(long, default_value_t = 500)]
    ask_budget: u64,
    #[arg(long, default_value_t = 500)]
    give_budget: u64,
    /// Advice scoring below this is ignored.
    #[arg(long, default_value_t = 0.5)]
    score_threshold: f64,
    #[arg(long, default_value_t = 500)]
    reply_timeout_ms: u64,
    #[arg(long, default_value_t = 1)]
    max_retries: u32,
    /// Ask when every known value in a state is within this distance of zero.
    #[arg(long, default_value_t = 0.05)]
    trigger_margin: f64,
}

impl TransferArgs {
    fn config(&self) -> TransferConfig {
        TransferConfig {
            ask_budget: self.ask_budget,
            give_budget: self.give_budget,
            score_threshold: self.score_threshold,
            reply_timeout: Duration::from_millis(self.reply_timeout_ms),
            max_retries: self.max_retries,
            trigger_margin: self.trigger_margin,
        }
    }
}

#[derive(Args)]
struct AgentArgs {
    /// Entry point of the game service.
    #[arg(long)]
    entry: String,
    #[arg(long, default_value_t = 1_000)]
    episodes: u64,
    #[arg(long, default_value = "http://agent.cli")]
    iri: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Loaded if it exists; the trained table is written back.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Per-episode CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Message endpoint of an advisor to ask.
    #[arg(long)]
    advisor: Option<String>,
    /// IRI of that advisor.
    #[arg(long, default_value = "http://agent.zero")]
    advisor_iri: String,
    /// Address for this agent's own message and response endpoints.
    #[arg(long)]
    listen: Option<SocketAddr>,
    /// Answer advice requests from other agents on the listen address.
    #[arg(long)]
    give_advice: bool,
    #[command(flatten)]
    learning: LearningArgs,
    #[command(flatten)]
    transfer: TransferArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "paired")]
    mode: Mode,
    #[arg(long, default_value_t = 2_000)]
    episodes: u64,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 20_000)]
    pretrain_episodes: u64,
    #[arg(long, default_value_t = 100)]
    reward_window: usize,
    #[arg(long, default_value_t = 0.6)]
    reward_threshold: f64,
    #[arg(long, default_value_t = 0.9)]
    eval_gamma: f64,
    #[arg(long, default_value = "in-process")]
    transport: TransportMode,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, default_value = "heuristic")]
    bot: BotKind,
    #[arg(long)]
    advisor_symmetry: bool,
    #[arg(long, default_value = "frozen")]
    advisor_mode: AdvisorMode,
    /// Pretrain a separate advisor for every seed.
    #[arg(long)]
    fresh_advisor: bool,
    /// Advisor checkpoint: loaded if present, written otherwise.
    #[arg(long)]
    advisor_checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pretrain_seed: u64,
    #[command(flatten)]
    learning: LearningArgs,
    #[command(flatten)]
    transfer: TransferArgs,
}

#[derive(Args)]
struct PretrainArgs {
    #[arg(long, default_value_t = 20_000)]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "heuristic")]
    bot: BotKind,
    #[arg(long, default_value = "in-process")]
    transport: TransportMode,
    #[arg(long, default_value = "advisor.ckpt")]
    out: PathBuf,
    /// Greedy games played afterwards to report strength; 0 skips.
    #[arg(long, default_value_t = 1_000)]
    eval_games: u64,
    #[command(flatten)]
    learning: LearningArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_max_level(cli.log)
        .with_writer(std::io::stderr)
        .init();
    let result = match cli.command {
        Command::Serve(args) => serve(args),
        Command::Agent(args) => agent(args),
        Command::Experiment(args) => experiment(args),
        Command::Pretrain(args) => pretrain_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn serve(args: ServeArgs) -> Result<(), HarnessError> {
    let config = ServiceConfig {
        bind_address: args.bind,
        base_path: args.base_path,
        public_origin: args.public_origin,
        bot: args.bot,
        agent_moves_first: !args.agent_second,
        export_dir: (!args.no_export).then_some(args.export_dir),
        rng_seed: args.seed,
        max_sessions: args.max_sessions,
        ontology_base: args.ontology_base,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime
        .block_on(server::run(config))
        .map_err(|e| HarnessError::Launch(e.to_string()))
}

/// Reads the service's vocabulary from the context of its entry point.
fn discover_vocabulary(api: &dyn Transport, entry: &str) -> Result<Vocabulary, HarnessError> {
    let launch = |m: String| HarnessError::Launch(m);
    let response = api.get(entry).map_err(|e| launch(e.to_string()))?;
    if !response.is_success() {
        return Err(launch(format!("{entry} answered {}", response.status)));
    }
    let rep = Representation::parse(&response.body, entry).map_err(|e| launch(e.to_string()))?;
    Vocabulary::from_context(&rep.context).ok_or_else(|| launch(format!("{entry} does not name a game vocabulary")))
}

fn agent(args: AgentArgs) -> Result<(), HarnessError> {
    let hp = args.learning.hyper_params();
    let http = Arc::new(HttpTransport::new(Duration::from_secs(10)));
    let table = match &args.checkpoint {
        Some(path) if path.exists() => read_checkpoint(&fs::read_to_string(path)?)?.table,
        _ => QTable::new(),
    };
    let pretrained = table.episode_count();
    let policy = shared(table);

    let mut config = AgentConfig::new(args.iri.clone(), args.entry.clone());
    config.hyper_params = hp;
    config.use_symmetry = args.learning.symmetry;
    config.rng_seed = args.seed;
    let mut agent = Agent::new(config, http.clone(), policy.clone())?;
    agent.resume_schedule(pretrained);

    let needs_endpoints = args.advisor.is_some() || args.give_advice || args.listen.is_some();
    let mut _endpoints = None;
    if needs_endpoints {
        let codec = MessageCodec::new(&discover_vocabulary(http.as_ref(), &args.entry)?);
        let mailbox = Arc::new(Mailbox::new());
        let advisor = args.give_advice.then(|| {
            Arc::new(Advisor::new(
                args.iri.clone(),
                policy.clone(),
                args.learning.symmetry,
                args.transfer.give_budget,
                http.clone(),
                codec.clone(),
            ))
        });
        let bind = args.listen.unwrap_or_else(|| ([127, 0, 0, 1], 0).into());
        let running = endpoints::spawn(
            bind,
            Arc::new(Endpoints {
                advisor,
                mailbox: mailbox.clone(),
                codec: codec.clone(),
                outbound: http.clone(),
            }),
        )?;
        tracing::info!(message = %running.url("/message"), response = %running.url("/response"), "agent endpoints up");
        if let Some(advisor_url) = &args.advisor {
            let channel = HttpAdviceChannel::new(http.clone(), advisor_url.clone(), mailbox, codec.clone());
            agent = agent.with_advice(AdviceClient::new(
                args.iri.clone(),
                args.advisor_iri.clone(),
                running.url("/response"),
                Box::new(channel),
                args.transfer.config(),
                codec,
            ));
        }
        _endpoints = Some(running);
    }

    let outcome = agent.run_training(args.episodes, |r| {
        if (r.index + 1) % 100 == 0 {
            tracing::info!(
                episode = r.index + 1,
                epsilon = hp.epsilon_after(pretrained + r.index + 1),
                "progress"
            );
        }
    });
    let (records, failure) = match outcome {
        Ok(records) => (records, None),
        Err(e) => (e.records, Some(e.cause)),
    };
    if let Some(path) = &args.csv {
        write_csv(fs::File::create(path)?, &records)?;
    }
    if let Some(path) = &args.checkpoint {
        fs::write(path, write_checkpoint(&policy.read(), &hp, args.learning.symmetry))?;
    }
    if !records.is_empty() {
        let m = compute_metrics(&records, records.len(), 0.6, hp.gamma);
        println!(
            "episodes {}  wins {}  draws {}  losses {}  mean reward {:.3}",
            m.episodes,
            m.wins,
            m.draws,
            m.losses,
            m.undiscounted_return / m.episodes as f64
        );
    }
    if let Some(stats) = agent.advice().map(|c| c.stats()) {
        println!(
            "advice: {} asked, {} accepted, {} below threshold, {} failures, {} unanswered",
            stats.queries, stats.accepted, stats.below_threshold, stats.failures, stats.no_reply
        );
    }
    match failure {
        Some(cause) => Err(cause.into()),
        None => Ok(()),
    }
}

fn experiment(args: ExperimentArgs) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig {
        mode: args.mode,
        episodes: args.episodes,
        seeds: args.seeds,
        advisor_pretrain_episodes: args.pretrain_episodes,
        reward_window: args.reward_window,
        reward_threshold: args.reward_threshold,
        eval_gamma: args.eval_gamma,
        transport: args.transport,
        output_dir: Some(args.out.clone()),
        bot: args.bot,
        hyper_params: args.learning.hyper_params(),
        use_symmetry: args.learning.symmetry,
        advisor_symmetry: args.advisor_symmetry,
        transfer: args.transfer.config(),
        advisor_mode: args.advisor_mode,
        fresh_advisor: args.fresh_advisor,
        advisor_checkpoint: args.advisor_checkpoint,
        pretrain_seed: args.pretrain_seed,
    };
    let report = run_experiment(&cfg)?;
    println!("seed  arm       undiscounted  discounted  to-threshold");
    for run in &report.runs {
        let s = &run.summary;
        let reached = s.episodes_to_threshold.map_or("-".to_string(), |e| e.to_string());
        println!(
            "{:<5} {:<9} {:>12.4} {:>11.4} {:>13}",
            run.seed,
            run.arm.to_string(),
            s.undiscounted_return,
            s.discounted_return,
            reached
        );
    }
    println!("results in {}", args.out.display());
    Ok(())
}

fn pretrain_cmd(args: PretrainArgs) -> Result<(), HarnessError> {
    let hp = args.learning.hyper_params();
    let table = pretrain(&PretrainConfig {
        episodes: args.episodes,
        seed: args.seed,
        bot: args.bot,
        hyper_params: hp,
        use_symmetry: args.learning.symmetry,
        transport: args.transport,
    })?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&args.out, write_checkpoint(&table, &hp, args.learning.symmetry))?;
    println!(
        "{} episodes, {} state-action values written to {}",
        table.episode_count(),
        table.entries().len(),
        args.out.display()
    );
    if args.eval_games > 0 {
        let m = evaluate_greedy(
            &table,
            args.learning.symmetry,
            args.bot,
            args.eval_games,
            args.seed.wrapping_add(1),
        )?;
        println!(
            "greedy play over {} games: {} wins, {} draws, {} losses",
            m.episodes, m.wins, m.draws, m.losses
        );
    }
    Ok(())
}
