//! Flat-text policy checkpoints.
//!
//! ```text
//! # episode_count 20000
//! # alpha 0.1
//! ...
//! # symmetry false
//! M---T---- 13 0.4187
//! ```
//!
//! Header lines are `# key value`; entry lines are `statekey RC value` where
//! `RC` are the row and column of the action. Every line has three fields.

use crate::game::Square;

use super::{HyperParams, QTable, StateKey};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("checkpoint line {line}: {message}")]
pub struct CheckpointError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub table: QTable,
    pub hyper_params: HyperParams,
    pub use_symmetry: bool,
}

pub fn write_checkpoint(table: &QTable, hp: &HyperParams, use_symmetry: bool) -> String {
    let mut out = String::new();
    let mut header = |k: &str, v: String| out.push_str(&format!("# {k} {v}\n"));
    header("episode_count", table.episode_count().to_string());
    header("alpha", hp.alpha.to_string());
    header("gamma", hp.gamma.to_string());
    header("epsilon_start", hp.epsilon_start.to_string());
    header("epsilon_decay", hp.epsilon_decay.to_string());
    header("epsilon_min", hp.epsilon_min.to_string());
    header("reward_win", hp.reward_win.to_string());
    header("reward_loss", hp.reward_loss.to_string());
    header("reward_draw", hp.reward_draw.to_string());
    header("symmetry", use_symmetry.to_string());
    for (state, action, value) in table.entries() {
        out.push_str(&format!("{state} {}{} {value}\n", action.row(), action.col()));
    }
    out
}

pub fn read_checkpoint(text: &str) -> Result<Checkpoint, CheckpointError> {
    let mut table = QTable::new();
    let mut hp = HyperParams::default();
    let mut use_symmetry = false;
    for (n, line) in text.lines().enumerate() {
        let err = |message: String| CheckpointError { line: n + 1, message };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        if fields[0] == "#" {
            let (key, value) = (fields[1], fields[2]);
            let float = || value.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
            match key {
                "episode_count" => {
                    let n = value.parse::<u64>().map_err(|e| err(format!("{key}: {e}")))?;
                    table.set_episode_count(n);
                }
                "alpha" => hp.alpha = float()?,
                "gamma" => hp.gamma = float()?,
                "epsilon_start" => hp.epsilon_start = float()?,
                "epsilon_decay" => hp.epsilon_decay = float()?,
                "epsilon_min" => hp.epsilon_min = float()?,
                "reward_win" => hp.reward_win = float()?,
                "reward_loss" => hp.reward_loss = float()?,
                "reward_draw" => hp.reward_draw = float()?,
                "symmetry" => use_symmetry = value.parse().map_err(|_| err(format!("bad symmetry {value:?}")))?,
                other => return Err(err(format!("unknown header {other:?}"))),
            }
            continue;
        }
        let state: StateKey = fields[0].parse().map_err(|e| err(format!("{e}")))?;
        let rc = fields[1].as_bytes();
        let action = (rc.len() == 2)
            .then(|| Square::new(rc[0].wrapping_sub(b'0'), rc[1].wrapping_sub(b'0')))
            .flatten()
            .ok_or_else(|| err(format!("bad action {:?}", fields[1])))?;
        let value: f64 = fields[2].parse().map_err(|e| err(format!("value: {e}")))?;
        if !value.is_finite() {
            return Err(err("non-finite value".into()));
        }
        table.set_value(state, action, value);
    }
    Ok(Checkpoint {
        table,
        hyper_params: hp,
        use_symmetry,
    })
}
