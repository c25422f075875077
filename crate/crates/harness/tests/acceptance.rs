//! End-to-end acceptance checks. Prints one `[PASS]` or `[FAIL]` line per
//! criterion and exits non-zero if any failed.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test -p hyperttt-harness --test acceptance -- 5 7`.

use std::collections::{BTreeSet, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::distr::{Alphanumeric, SampleString};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use hyperttt_agent::acl::{AdviceReply, MessageCodec};
use hyperttt_agent::http::HttpTransport;
use hyperttt_agent::transfer::Advisor;
use hyperttt_agent::{Agent, AgentConfig, EpisodeRecord};
use hyperttt_core::game::{self, BotKind, Mark, Square};
use hyperttt_core::hypermedia::{GameView, Method, Representation};
use hyperttt_core::policy::{shared, HyperParams, QTable, StateKey, Transition};
use hyperttt_core::rdf::parse_turtle;
use hyperttt_core::transport::{Response, Transport, TransportError};
use hyperttt_core::vocab::{ttt, Vocabulary};
use hyperttt_harness::experiment::{
    pretrain, run_arm, run_experiment, service_config, AdvisorControl, Arm, ExperimentConfig, Mode, PretrainConfig,
};
use hyperttt_harness::metrics::tail_non_loss_rate;
use hyperttt_harness::world::{TransportMode, World};
use hyperttt_service::server;
use hyperttt_service::{ServiceConfig, TttService};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 9] = [
        ("rules oracle", rules_oracle),
        ("q-update oracle", q_update_oracle),
        ("solo learning sanity", solo_learning),
        ("transfer effect", transfer_effect),
        ("hypermedia purity", hypermedia_purity),
        ("wire fidelity", wire_fidelity),
        ("rdf export", rdf_export),
        ("fault tolerance", fault_tolerance),
        ("concurrency", concurrency),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let started = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("[PASS] {n}. {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {n}. {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

// 1 ---------------------------------------------------------------------------

/// Depth-first walk of the game tree on raw grids (0 empty, 1 X, 2 O).
fn oracle_walk(grid: &mut [u8; 9], to_move: u8, seen: &mut HashSet<[u8; 9]>, terminal: &mut HashSet<[u8; 9]>) {
    if !seen.insert(*grid) {
        return;
    }
    if oracle_winner(grid).is_some() || grid.iter().all(|&c| c != 0) {
        terminal.insert(*grid);
        return;
    }
    for i in 0..9 {
        if grid[i] == 0 {
            grid[i] = to_move;
            oracle_walk(grid, 3 - to_move, seen, terminal);
            grid[i] = 0;
        }
    }
}

fn oracle_winner(g: &[u8; 9]) -> Option<u8> {
    const LINES: [[usize; 3]; 8] = [
        [0, 1, 2],
        [3, 4, 5],
        [6, 7, 8],
        [0, 3, 6],
        [1, 4, 7],
        [2, 5, 8],
        [0, 4, 8],
        [2, 4, 6],
    ];
    LINES
        .iter()
        .find(|l| g[l[0]] != 0 && g[l[0]] == g[l[1]] && g[l[1]] == g[l[2]])
        .map(|l| g[l[0]])
}

fn rules_oracle() -> Verdict {
    let mut seen = HashSet::new();
    let mut terminal = HashSet::new();
    oracle_walk(&mut [0; 9], 1, &mut seen, &mut terminal);
    check(seen.len() == 5478 && terminal.len() == 958, || {
        format!("oracle found {} / {}", seen.len(), terminal.len())
    })?;

    let counts = game::enumerate_reachable_states();
    check(counts.legal_positions == seen.len(), || {
        format!("{} legal positions, oracle {}", counts.legal_positions, seen.len())
    })?;
    check(counts.terminal_positions == terminal.len(), || {
        format!(
            "{} terminal positions, oracle {}",
            counts.terminal_positions,
            terminal.len()
        )
    })?;
    let ours: HashSet<[u8; 9]> = game::reachable_positions()
        .iter()
        .map(|cells| {
            cells.map(|m| match m {
                Mark::X => 1,
                Mark::O => 2,
                Mark::Empty => 0,
            })
        })
        .collect();
    check(ours == seen, || "position sets differ".into())?;
    for g in &seen {
        let cells = g.map(|c| match c {
            1 => Mark::X,
            2 => Mark::O,
            _ => Mark::Empty,
        });
        let status = game::classify(&cells);
        let full = g.iter().all(|&c| c != 0);
        let expected_winner = oracle_winner(g).map(|w| if w == 1 { Mark::X } else { Mark::O });
        check(status.winner() == expected_winner, || {
            format!("{g:?}: winner {status:?}")
        })?;
        check(status.is_over() == (expected_winner.is_some() || full), || {
            format!("{g:?}: classified {status:?}")
        })?;
    }
    Ok(format!(
        "{} positions, {} terminal, statuses agree",
        seen.len(),
        terminal.len()
    ))
}

// 2 ---------------------------------------------------------------------------

fn q_update_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let positions = game::reachable_positions();
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let state = StateKey::from_cells(positions.choose(&mut rng).unwrap(), Mark::X);
        let next = StateKey::from_cells(positions.choose(&mut rng).unwrap(), Mark::X);
        let action = *Square::ALL.choose(&mut rng).unwrap();
        let legal_next: Vec<Square> = Square::ALL.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let alpha = rng.random_range(0.001..=1.0);
        let gamma = rng.random_range(0.0..=1.0);
        let reward = rng.random_range(-1.0..=1.0);
        let q0 = rng.random_range(-1.0..=1.0);

        let mut table = QTable::new();
        table.set_value(state, action, q0);
        let mut next_values = Vec::new();
        for &a in &legal_next {
            if next != state || a != action {
                let v = rng.random_range(-1.0..=1.0);
                table.set_value(next, a, v);
            }
        }
        for &a in &legal_next {
            next_values.push(table.value(&next, a));
        }
        let terminal = i % 4 == 0 || legal_next.is_empty();
        let hp = HyperParams {
            alpha,
            gamma,
            ..HyperParams::default()
        };
        let t = if terminal {
            Transition::terminal(state, action, reward)
        } else {
            Transition::step(state, action, reward, &next, &legal_next)
        };
        let got = table.update(&t, &hp);
        let future = if terminal {
            0.0
        } else {
            next_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let want = q0 + alpha * (reward + gamma * future - q0);
        worst = worst.max((got - want).abs());
        check((got - want).abs() <= 1e-12, || format!("call {i}: {got} vs {want}"))?;
    }
    Ok(format!("10000 updates, max error {worst:.1e}"))
}

// 3 ---------------------------------------------------------------------------

fn solo_learning() -> Verdict {
    let cfg = ExperimentConfig {
        mode: Mode::Solo,
        episodes: 20_000,
        bot: BotKind::Heuristic,
        ..ExperimentConfig::default()
    };
    let mut rates = Vec::new();
    for seed in 1..=5u64 {
        let started = Instant::now();
        let run = run_arm(&cfg, seed, Arm::Solo, None, &mut |_, _| {}).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        check(run.records.len() == 20_000 && run.aborted.is_none(), || {
            format!("seed {seed}: {} episodes, {:?}", run.records.len(), run.aborted)
        })?;
        let rate = tail_non_loss_rate(&run.records, 1_000);
        check(rate >= 0.90, || format!("seed {seed}: final non-loss rate {rate:.3}"))?;
        check(elapsed < Duration::from_secs(90), || {
            format!("seed {seed} took {elapsed:?}")
        })?;
        rates.push(format!("{rate:.3}"));
    }
    Ok(format!("final-1000 win+draw rates {}", rates.join(", ")))
}

// 4 ---------------------------------------------------------------------------

fn transfer_effect() -> Verdict {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        mode: Mode::Paired,
        output_dir: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let mut wins = 0;
    let (mut adv_steps, mut solo_steps) = (Vec::new(), Vec::new());
    let mut missed = Vec::new();
    for &seed in &cfg.seeds {
        let a = report.arm(seed, Arm::Advisee).ok_or("missing advisee arm")?;
        let s = report.arm(seed, Arm::Solo).ok_or("missing solo arm")?;
        if a.summary.undiscounted_return > s.summary.undiscounted_return {
            wins += 1;
        }
        if let Some(e) = a.summary.episodes_to_threshold {
            adv_steps.push(e as f64);
        }
        if let Some(e) = s.summary.episodes_to_threshold {
            solo_steps.push(e as f64);
            if a.summary.episodes_to_threshold.is_none() {
                missed.push(seed);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let (ma, ms) = (mean(&adv_steps), mean(&solo_steps));
    check(wins >= 8, || format!("advisee return higher in only {wins}/10 seeds"))?;
    check(missed.is_empty(), || {
        format!("advisee never reached the threshold in seeds {missed:?}")
    })?;
    check(!adv_steps.is_empty() && ma < ms, || {
        format!("mean episodes to threshold: advisee {ma:.1}, solo {ms:.1}")
    })?;
    check(elapsed < Duration::from_secs(15 * 60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "advisee return higher in {wins}/10 seeds; episodes to threshold {ma:.1} vs {ms:.1} ({}/{} seeds reached)",
        adv_steps.len(),
        solo_steps.len()
    ))
}

// 5 ---------------------------------------------------------------------------

struct StatusCounter {
    inner: HttpTransport,
    bad: AtomicUsize,
    requests: AtomicUsize,
}

impl Transport for StatusCounter {
    fn send(
        &self,
        method: Method,
        url: &str,
        content_type: Option<&str>,
        body: Option<&str>,
    ) -> Result<Response, TransportError> {
        let r = self.inner.send(method, url, content_type, body)?;
        self.requests.fetch_add(1, Ordering::SeqCst);
        if r.status == 404 || r.status == 409 {
            self.bad.fetch_add(1, Ordering::SeqCst);
        }
        Ok(r)
    }
}

fn hypermedia_purity() -> Verdict {
    let prefix = Alphanumeric.sample_string(&mut rand::rng(), 16);
    let running = server::spawn(ServiceConfig {
        bind_address: ([127, 0, 0, 1], 0).into(),
        base_path: format!("/{prefix}"),
        ..ServiceConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let entry = running.entry_url();
    check(entry.contains(&prefix), || format!("entry url {entry}"))?;
    let api = Arc::new(StatusCounter {
        inner: HttpTransport::new(Duration::from_secs(10)),
        bad: AtomicUsize::new(0),
        requests: AtomicUsize::new(0),
    });
    let mut agent = Agent::new(
        AgentConfig::new("http://agent.zero", entry.clone()),
        api.clone(),
        shared(QTable::new()),
    )
    .map_err(|e| e.to_string())?;
    let records = agent.run_training(100, |_| {}).map_err(|e| e.to_string())?;
    let bad = api.bad.load(Ordering::SeqCst);
    check(records.len() == 100, || format!("{} episodes", records.len()))?;
    check(bad == 0, || format!("{bad} responses were 404 or 409"))?;
    Ok(format!(
        "100 episodes under /{prefix}, {} requests, no 404/409",
        api.requests.load(Ordering::SeqCst)
    ))
}

// 6 ---------------------------------------------------------------------------

const GOLDEN_REGISTER: &str = r#"{
"links": [
{
  "href": "http://ttt.api/",
  "htv:methodName": "GET"
},
{
  "href": "http://ttt.api/Board?id=id1234",
  "htv:methodName": "GET"
}],
"forms": [
{
  "href": "http://ttt.api/Square11?id=id1234",
  "contentType": "application/json",
  "htv:methodName": "PUT",
  "wot:op": "writeproperty"
}]
}"#;

const GOLDEN_REQUEST: &str = r#"{
"fipa:request": {
    "fipa:sender": "http://agent.one",
    "fipa:receiver": "http://agent.zero",
    "fipa:reply-to": "http://agent.one/response",
    "fipa:conversation-id": "msgid123",
    "fipa:ontology": "http://ontology.server/transfer#",
    "fipa:content": {
        "http://agent.zero": {
            "tf:Query": "tf:Action",
            "tf:hasState": "http://ttt.api/Board?id=id1234"
        }
    }
}
}"#;

/// Every key path in `golden` exists in `ours` with an equal scalar
/// value, in the same relative order; arrays are compared element-wise up to
/// the golden length.
fn matches_golden(golden: &Value, ours: &Value, path: &str) -> Result<(), String> {
    match (golden, ours) {
        (Value::Object(p), Value::Object(o)) => {
            let mut last = 0;
            for (k, pv) in p {
                let pos = o
                    .keys()
                    .position(|ok| ok == k)
                    .ok_or_else(|| format!("{path}: missing key {k:?}"))?;
                check(pos >= last, || format!("{path}: key {k:?} out of order"))?;
                last = pos;
                matches_golden(pv, &o[k], &format!("{path}/{k}"))?;
            }
            Ok(())
        }
        (Value::Array(p), Value::Array(o)) => {
            check(o.len() >= p.len(), || {
                format!("{path}: {} elements, golden {}", o.len(), p.len())
            })?;
            for (i, (pv, ov)) in p.iter().zip(o).enumerate() {
                matches_golden(pv, ov, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        (p, o) => check(p == o, || format!("{path}: {o} vs golden {p}")),
    }
}

fn wire_fidelity() -> Verdict {
    let running = server::spawn(ServiceConfig {
        bind_address: ([127, 0, 0, 1], 0).into(),
        public_origin: Some("http://ttt.api".into()),
        ..ServiceConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let base = format!("http://{}", running.local_addr());
    let http = HttpTransport::new(Duration::from_secs(10));
    let r = http
        .send(
            Method::Post,
            &format!("{base}/Register"),
            Some("application/json"),
            Some(r#"{"@id":"http://agent.one"}"#),
        )
        .map_err(|e| e.to_string())?;
    check(r.status == 201, || format!("register answered {}", r.status))?;
    let ours: Value = serde_json::from_str(&r.body).map_err(|e| e.to_string())?;
    let id = ours["ttt:gameId"]
        .as_str()
        .or_else(|| {
            ours.as_object()
                .and_then(|o| o.iter().find(|(k, _)| k.ends_with("gameId")))
                .and_then(|(_, v)| v.as_str())
        })
        .ok_or("register response has no game id")?
        .to_string();
    let golden: Value = serde_json::from_str(&GOLDEN_REGISTER.replace("id1234", &id)).map_err(|e| e.to_string())?;
    matches_golden(&golden, &ours, "register")?;
    check(ours["forms"].as_array().map_or(0, Vec::len) == 9, || {
        "expected 9 move forms".into()
    })?;

    let rep = Representation::parse(&r.body, &format!("{base}/Register")).map_err(|e| e.to_string())?;
    let again = rep.serialize().map_err(|e| e.to_string())?;
    check(again == r.body, || {
        "register response does not round-trip byte for byte".into()
    })?;

    let codec = MessageCodec::new(&Vocabulary::new("http://ontology.server"));
    let msg = codec.advice_request(
        "http://agent.one",
        "http://agent.zero",
        "http://agent.one/response",
        "http://ttt.api/Board?id=id1234",
        "msgid123",
    );
    let text = codec.serialize(&msg);
    let ours: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let golden: Value = serde_json::from_str(GOLDEN_REQUEST).map_err(|e| e.to_string())?;
    check(ours == golden, || format!("advice request differs:\n{text}"))?;
    matches_golden(&golden, &ours, "request")?;
    let reparsed = codec.parse(&text).map_err(|e| e.to_string())?;
    check(codec.serialize(&reparsed) == text, || {
        "advice request does not round-trip".into()
    })?;
    check(codec.parse(GOLDEN_REQUEST).map_err(|e| e.to_string())? == msg, || {
        "golden request parses to a different message".into()
    })?;
    Ok(format!(
        "register ({id}) and advice request match the golden documents and round-trip"
    ))
}

// 7 ---------------------------------------------------------------------------

fn body(agent: &str) -> String {
    json!({ "@id": agent }).to_string()
}

fn fetch(http: &dyn Transport, method: Method, url: &str, agent: &str) -> Result<Representation, String> {
    let payload = (method != Method::Get).then(|| body(agent));
    let r = http
        .send(
            method,
            url,
            payload.as_ref().map(|_| "application/json"),
            payload.as_deref(),
        )
        .map_err(|e| e.to_string())?;
    check(r.is_success(), || {
        format!("{method} {url} answered {}: {}", r.status, r.body)
    })?;
    Representation::parse(&r.body, url).map_err(|e| e.to_string())
}

fn register(http: &dyn Transport, entry: &str, agent: &str) -> Result<Representation, String> {
    let e = fetch(http, Method::Get, entry, agent)?;
    let form = e.forms.first().ok_or("entry point has no form")?.clone();
    fetch(http, form.method, &form.href, agent)
}

fn form_square(href: &str) -> Option<Square> {
    href.split('?').next()?.rsplit('/').next()?.parse().ok()
}

/// Wins when it can, otherwise takes the first open square in a fixed order.
fn scripted_choice(view: &GameView, open: &[Square]) -> Square {
    for &s in open {
        let mut cells = view.cells;
        cells[s.index()] = view.agent_mark;
        if game::classify(&cells).winner() == Some(view.agent_mark) {
            return s;
        }
    }
    const ORDER: [usize; 9] = [4, 0, 8, 2, 6, 1, 3, 5, 7];
    ORDER
        .iter()
        .map(|&i| Square::ALL[i])
        .find(|s| open.contains(s))
        .expect("an open square")
}

fn rdf_export() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let running = server::spawn(ServiceConfig {
        bind_address: ([127, 0, 0, 1], 0).into(),
        bot: BotKind::Random,
        export_dir: Some(dir.path().to_path_buf()),
        rng_seed: 7,
        ..ServiceConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let vocab = running.service().vocabulary().clone();
    let http = HttpTransport::new(Duration::from_secs(10));
    let agent = "http://agent.zero";
    for attempt in 1..=200 {
        let mut rep = register(&http, &running.entry_url(), agent)?;
        loop {
            let view = GameView::from_representation(&rep, &vocab).map_err(|e| e.to_string())?;
            let open: Vec<Square> = rep.forms.iter().filter_map(|f| form_square(&f.href)).collect();
            if open.is_empty() {
                break;
            }
            let square = scripted_choice(&view, &open);
            let href = rep
                .forms
                .iter()
                .find(|f| form_square(&f.href) == Some(square))
                .unwrap()
                .href
                .clone();
            rep = fetch(&http, Method::Put, &href, agent)?;
        }
        let view = GameView::from_representation(&rep, &vocab).map_err(|e| e.to_string())?;
        let result_href = rep
            .link_with_rel(&vocab.ttt(ttt::RESULT_REL))
            .ok_or("finished game has no result link")?
            .href
            .clone();
        fetch(&http, Method::Get, &result_href, agent)?;
        let moves = view.cells.iter().filter(|m| m.is_player()).count();
        if moves != 7 || view.status.winner() != Some(view.agent_mark) {
            continue;
        }
        let path = dir.path().join(format!("{}.ttl", view.game_id));
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let graph = parse_turtle(&text).map_err(|e| e.to_string())?;
        let move_nodes = graph.instances_of(&vocab.ttt(ttt::MOVE));
        check(move_nodes.len() == 7, || format!("{} move nodes", move_nodes.len()))?;
        for m in &move_nodes {
            let sq = graph.objects(m, &vocab.ttt(ttt::IN_SQUARE)).len();
            let by = graph.objects(m, &vocab.ttt(ttt::MOVE_TAKEN_BY)).len();
            check(sq == 1 && by == 1, || format!("{m}: {sq} inSquare, {by} moveTakenBy"))?;
        }
        let results = graph.with_predicate(&vocab.ttt(ttt::HAS_RESULT)).len();
        check(results == 1, || format!("{results} result assertions"))?;
        return Ok(format!(
            "{}.ttl (game {attempt}): 7 moves, each with one square and one role, one result",
            view.game_id
        ));
    }
    Err("no 7-move win in 200 scripted games".into())
}

// 8 ---------------------------------------------------------------------------

fn fault_tolerance() -> Verdict {
    let cfg = ExperimentConfig {
        mode: Mode::Transfer,
        episodes: 2_000,
        transport: TransportMode::LoopbackHttp,
        ..ExperimentConfig::default()
    };
    let advisor = pretrain(&PretrainConfig {
        episodes: cfg.advisor_pretrain_episodes,
        seed: cfg.pretrain_seed,
        bot: cfg.bot,
        hyper_params: cfg.hyper_params,
        use_symmetry: cfg.advisor_symmetry,
        transport: TransportMode::InProcess,
    })
    .map_err(|e| e.to_string())?;
    let mut asked_before_kill = 0u64;
    let mut hook = |r: &EpisodeRecord, control: &AdvisorControl| {
        if r.index < 50 {
            asked_before_kill += u64::from(r.advice_asked);
        }
        if r.index == 49 {
            control.kill();
        }
    };
    let run = run_arm(&cfg, 1, Arm::Advisee, Some(&advisor), &mut hook).map_err(|e| e.to_string())?;
    check(run.aborted.is_none(), || format!("aborted: {:?}", run.aborted))?;
    check(run.records.len() == 2_000, || format!("{} episodes", run.records.len()))?;
    let stats = run.advice.ok_or("no advice statistics")?;
    let budget = cfg.transfer.ask_budget;
    let remaining_at_kill = budget.saturating_sub(asked_before_kill);
    let bound = cfg.transfer.reply_timeout * (cfg.transfer.max_retries + 1) * remaining_at_kill as u32;
    check(stats.timeout_wait <= bound, || {
        format!("waited {:?} for replies, bound {bound:?}", stats.timeout_wait)
    })?;
    let asked: u64 = run.records.iter().map(|r| u64::from(r.advice_asked)).sum();
    let left = run.ask_budget_remaining.ok_or("no budget")?;
    check(stats.queries <= budget && asked <= budget && left <= budget, || {
        format!("budget {budget}: {} queries, {asked} asked, {left} left", stats.queries)
    })?;
    check(left == budget - stats.queries, || {
        format!("{left} left after {} queries", stats.queries)
    })?;
    let after_kill = stats.queries - asked_before_kill.min(stats.queries);
    Ok(format!(
        "2000 episodes; {asked_before_kill} asks before the kill, {after_kill} after; waited {:?} (bound {bound:?}); {left} asks left",
        stats.timeout_wait
    ))
}

// 9 ---------------------------------------------------------------------------

fn concurrent_exports() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let running = server::spawn(ServiceConfig {
        bind_address: ([127, 0, 0, 1], 0).into(),
        bot: BotKind::Random,
        export_dir: Some(dir.path().to_path_buf()),
        ..ServiceConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let vocab = running.service().vocabulary().clone();
    let entry = running.entry_url();
    let gate = Arc::new(std::sync::Barrier::new(50));
    let handles: Vec<_> = (0..50u64)
        .map(|i| {
            let (entry, vocab, gate) = (entry.clone(), vocab.clone(), gate.clone());
            std::thread::spawn(move || -> Result<(String, Vec<Square>), String> {
                let http = HttpTransport::new(Duration::from_secs(30));
                let agent = format!("http://agent{i}.example");
                let mut rng = ChaCha8Rng::seed_from_u64(i);
                gate.wait();
                let mut rep = register(&http, &entry, &agent)?;
                while let Some(form) = rep.forms.choose(&mut rng) {
                    let href = form.href.clone();
                    rep = fetch(&http, Method::Put, &href, &agent)?;
                }
                let view = GameView::from_representation(&rep, &vocab).map_err(|e| e.to_string())?;
                let result = rep
                    .link_with_rel(&vocab.ttt(ttt::RESULT_REL))
                    .ok_or("no result link")?
                    .href
                    .clone();
                fetch(&http, Method::Get, &result, &agent)?;
                let occupied = Square::ALL
                    .iter()
                    .copied()
                    .filter(|s| view.cells[s.index()].is_player())
                    .collect();
                Ok((view.game_id, occupied))
            })
        })
        .collect();
    let mut games = Vec::new();
    for h in handles {
        games.push(h.join().map_err(|_| "a game thread panicked")??);
    }
    let ids: BTreeSet<&str> = games.iter().map(|(id, _)| id.as_str()).collect();
    check(ids.len() == 50, || format!("{} distinct game ids", ids.len()))?;
    for (id, occupied) in &games {
        let text = std::fs::read_to_string(dir.path().join(format!("{id}.ttl"))).map_err(|e| format!("{id}: {e}"))?;
        let graph = parse_turtle(&text).map_err(|e| format!("{id}: {e}"))?;
        let game_nodes = graph.instances_of(&vocab.ttt(ttt::GAME));
        check(
            game_nodes.len() == 1 && game_nodes[0].ends_with(&format!("/{id}")),
            || format!("{id}: game nodes {game_nodes:?}"),
        )?;
        let moves = graph.instances_of(&vocab.ttt(ttt::MOVE));
        check(moves.len() == occupied.len(), || {
            format!("{id}: {} moves exported, {} squares taken", moves.len(), occupied.len())
        })?;
        let exported: BTreeSet<String> = moves
            .iter()
            .flat_map(|m| graph.objects(m, &vocab.ttt(ttt::IN_SQUARE)))
            .filter_map(|t| t.as_iri())
            .filter_map(|iri| iri.rsplit('/').next().map(str::to_string))
            .collect();
        let played: BTreeSet<String> = occupied.iter().map(|s| s.name()).collect();
        check(exported == played, || {
            format!("{id}: exported squares {exported:?}, board {played:?}")
        })?;
        for other in ids.iter().filter(|o| *o != id) {
            check(!text.contains(&format!("/{other}")), || {
                format!("{id} mentions {other}")
            })?;
        }
    }
    Ok("50 concurrent games exported cleanly".into())
}

fn learning_advisor() -> Result<String, String> {
    let advisor_table = pretrain(&PretrainConfig {
        episodes: 3_000,
        seed: 9,
        bot: BotKind::Heuristic,
        hyper_params: HyperParams::default(),
        use_symmetry: false,
        transport: TransportMode::InProcess,
    })
    .map_err(|e| e.to_string())?;
    let start_count = advisor_table.episode_count();
    let policy = shared(advisor_table);

    let training_world =
        World::start(TransportMode::InProcess, service_config(BotKind::Heuristic, 10)).map_err(|e| e.to_string())?;
    let mut trainer = Agent::new(
        AgentConfig::new("http://agent.zero", training_world.entry_url()),
        training_world.api(),
        policy.clone(),
    )
    .map_err(|e| e.to_string())?;
    trainer.resume_schedule(start_count);
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let training = std::thread::spawn(move || {
        let mut n = 0u64;
        while !flag.load(Ordering::SeqCst) {
            trainer.run_episode(n).expect("advisor training episode");
            n += 1;
        }
        n
    });

    let games =
        Arc::new(TttService::new(service_config(BotKind::Random, 11), "http://ttt.local").map_err(|e| e.to_string())?);
    let codec = MessageCodec::new(games.vocabulary());
    let advisor = Arc::new(Advisor::new(
        "http://agent.zero",
        policy.clone(),
        false,
        1_000,
        games.clone(),
        codec.clone(),
    ));
    let recommended = Arc::new(AtomicUsize::new(0));
    let handles: Vec<_> = (0..4u64)
        .map(|t| {
            let (games, codec, advisor, recommended) =
                (games.clone(), codec.clone(), advisor.clone(), recommended.clone());
            std::thread::spawn(move || -> Result<(), String> {
                let mut rng = ChaCha8Rng::seed_from_u64(100 + t);
                let agent = format!("http://advisee{t}.example");
                for i in 0..250 {
                    let mut rep = register(games.as_ref(), &games.entry_url(), &agent)?;
                    for _ in 0..rng.random_range(0..4) {
                        let Some(form) = rep.forms.choose(&mut rng) else { break };
                        let href = form.href.clone();
                        rep = fetch(games.as_ref(), Method::Put, &href, &agent)?;
                    }
                    if rep.forms.is_empty() {
                        rep = register(games.as_ref(), &games.entry_url(), &agent)?;
                    }
                    let board_url = rep.id.clone().ok_or("board has no id")?;
                    let conv = format!("t{t}m{i}");
                    let request = codec.advice_request(
                        &agent,
                        "http://agent.zero",
                        &format!("{agent}/response"),
                        &board_url,
                        &conv,
                    );
                    let reply = advisor.answer(&request);
                    let board = fetch(games.as_ref(), Method::Get, &board_url, &agent)?;
                    let legal: Vec<Square> = board.forms.iter().filter_map(|f| form_square(&f.href)).collect();
                    match codec.reply_content(&reply).map_err(|e| e.to_string())? {
                        AdviceReply::Recommended { square, score } => {
                            check((0.0..=1.0).contains(&score), || format!("{conv}: score {score}"))?;
                            check(legal.contains(&square), || format!("{conv}: {square:?} is not legal"))?;
                            recommended.fetch_add(1, Ordering::SeqCst);
                        }
                        AdviceReply::Failure(_) => {}
                    }
                }
                Ok(())
            })
        })
        .collect();
    let mut errors = Vec::new();
    for h in handles {
        if let Err(e) = h
            .join()
            .map_err(|_| "an advice thread panicked".to_string())
            .and_then(|r| r)
        {
            errors.push(e);
        }
    }
    stop.store(true, Ordering::SeqCst);
    let trained = training.join().map_err(|_| "advisor training panicked")?;
    check(errors.is_empty(), || errors.join("; "))?;
    let recommended = recommended.load(Ordering::SeqCst);
    let grown = policy.read().episode_count() - start_count;
    check(trained > 0 && grown == trained, || {
        format!("advisor trained {trained} episodes, table counts {grown}")
    })?;
    check(recommended > 500, || {
        format!("only {recommended} of 1000 requests were answered with advice")
    })?;
    Ok(format!(
        "1000 advice requests during {trained} training episodes; {recommended} recommendations, all legal with scores in [0,1]"
    ))
}

fn concurrency() -> Verdict {
    let a = concurrent_exports()?;
    let b = learning_advisor()?;
    Ok(format!("{a}; {b}"))
}
