//! Per-episode results and their CSV form.

use std::fmt;
use std::io;
use std::str::FromStr;

pub const CSV_HEADER: [&str; 7] = [
    "index",
    "outcome",
    "reward",
    "steps",
    "advice_asked",
    "advice_followed",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Win,
    Loss,
    Draw,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Win => "win",
            Outcome::Loss => "loss",
            Outcome::Draw => "draw",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "win" => Ok(Outcome::Win),
            "loss" => Ok(Outcome::Loss),
            "draw" => Ok(Outcome::Draw),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub index: u64,
    pub outcome: Outcome,
    pub reward: f64,
    /// Moves made by the agent.
    pub steps: u32,
    pub advice_asked: u32,
    pub advice_followed: u32,
    pub wall_ms: u64,
}

pub fn write_csv<W: io::Write>(out: W, records: &[EpisodeRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.index.to_string(),
            r.outcome.to_string(),
            r.reward.to_string(),
            r.steps.to_string(),
            r.advice_asked.to_string(),
            r.advice_followed.to_string(),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<EpisodeRecord>, String> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(format!("unexpected header {headers:?}"));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| e.to_string())?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let num = |i: usize| field(i).parse::<u64>().map_err(|e| format!("{}: {e}", CSV_HEADER[i]));
        out.push(EpisodeRecord {
            index: num(0)?,
            outcome: field(1).parse()?,
            reward: field(2).parse().map_err(|e| format!("reward: {e}"))?,
            steps: num(3)? as u32,
            advice_asked: num(4)? as u32,
            advice_followed: num(5)? as u32,
            wall_ms: num(6)?,
        });
    }
    Ok(out)
}
