//! Tic-Tac-Toe rules engine and the built-in game bot.
//!
//! [`GameState`] is an immutable value: [`GameState::apply_move`] returns a new
//! state and leaves the receiver untouched, so states can be shared freely
//! across threads.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("square {0} is already occupied")]
    Occupied(Square),
    #[error("it is {expected}'s turn, not {got}")]
    WrongTurn { expected: Mark, got: Mark },
    #[error("the game is already over")]
    Finished,
    #[error("no moves available")]
    NoMovesAvailable,
    #[error("invalid square name {0:?}")]
    InvalidSquare(String),
    #[error("invalid mark {0:?}")]
    InvalidMark(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    X,
    O,
    Empty,
}

impl Mark {
    /// The other player's mark. `Empty` maps to itself.
    pub fn opponent(self) -> Mark {
        match self {
            Mark::X => Mark::O,
            Mark::O => Mark::X,
            Mark::Empty => Mark::Empty,
        }
    }

    pub fn is_player(self) -> bool {
        self != Mark::Empty
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mark::X => "X",
            Mark::O => "O",
            Mark::Empty => "Empty",
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mark {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "X" => Ok(Mark::X),
            "O" => Ok(Mark::O),
            "Empty" => Ok(Mark::Empty),
            other => Err(GameError::InvalidMark(other.to_string())),
        }
    }
}

/// A board square, 1-based row and column. Resource name `Square{row}{col}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square {
    row: u8,
    col: u8,
}

impl Square {
    /// All nine squares in row-major order.
    pub const ALL: [Square; 9] = {
        let mut all = [Square { row: 1, col: 1 }; 9];
        let mut i = 0;
        while i < 9 {
            all[i] = Square {
                row: (i / 3) as u8 + 1,
                col: (i % 3) as u8 + 1,
            };
            i += 1;
        }
        all
    };

    pub fn new(row: u8, col: u8) -> Option<Square> {
        ((1..=3).contains(&row) && (1..=3).contains(&col)).then_some(Square { row, col })
    }

    /// Square at a row-major index in `0..9`.
    pub fn from_index(index: usize) -> Option<Square> {
        Square::ALL.get(index).copied()
    }

    pub fn row(self) -> u8 {
        self.row
    }

    pub fn col(self) -> u8 {
        self.col
    }

    pub fn index(self) -> usize {
        (self.row as usize - 1) * 3 + (self.col as usize - 1)
    }

    /// Resource name, e.g. `Square11`.
    pub fn name(self) -> String {
        format!("Square{}{}", self.row, self.col)
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Square{}{}", self.row, self.col)
    }
}

impl FromStr for Square {
    type Err = GameError;

    /// Accepts `Square{R}{C}` with R, C in 1..=3.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || GameError::InvalidSquare(s.to_string());
        let digits = s.strip_prefix("Square").ok_or_else(invalid)?.as_bytes();
        if digits.len() != 2 {
            return Err(invalid());
        }
        let row = digits[0].wrapping_sub(b'0');
        let col = digits[1].wrapping_sub(b'0');
        Square::new(row, col).ok_or_else(invalid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameStatus {
    InProgress,
    WonByX,
    WonByO,
    Draw,
}

impl GameStatus {
    pub fn is_over(self) -> bool {
        self != GameStatus::InProgress
    }

    pub fn winner(self) -> Option<Mark> {
        match self {
            GameStatus::WonByX => Some(Mark::X),
            GameStatus::WonByO => Some(Mark::O),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GameStatus::InProgress => "InProgress",
            GameStatus::WonByX => "WonByX",
            GameStatus::WonByO => "WonByO",
            GameStatus::Draw => "Draw",
        }
    }
}

impl fmt::Display for GameStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameStatus {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "InProgress" => Ok(GameStatus::InProgress),
            "WonByX" => Ok(GameStatus::WonByX),
            "WonByO" => Ok(GameStatus::WonByO),
            "Draw" => Ok(GameStatus::Draw),
            other => Err(GameError::InvalidMark(other.to_string())),
        }
    }
}

/// The eight winning lines as row-major indices.
pub const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

/// Status of a grid, assuming it is a legal position.
pub fn classify(cells: &[Mark; 9]) -> GameStatus {
    for line in LINES {
        let first = cells[line[0]];
        if first.is_player() && line.iter().all(|&i| cells[i] == first) {
            return if first == Mark::X {
                GameStatus::WonByX
            } else {
                GameStatus::WonByO
            };
        }
    }
    if cells.iter().all(|m| m.is_player()) {
        GameStatus::Draw
    } else {
        GameStatus::InProgress
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    cells: [Mark; 9],
    to_move: Mark,
    status: GameStatus,
    history: Vec<(Square, Mark)>,
}

impl Default for GameState {
    fn default() -> Self {
        GameState::new()
    }
}

impl GameState {
    pub fn new() -> GameState {
        GameState {
            cells: [Mark::Empty; 9],
            to_move: Mark::X,
            status: GameStatus::InProgress,
            history: Vec::new(),
        }
    }

    /// Rebuilds a state by playing `moves` from the empty board, alternating from X.
    pub fn replay(moves: impl IntoIterator<Item = Square>) -> Result<GameState, GameError> {
        let mut state = GameState::new();
        for square in moves {
            let mark = state.to_move;
            state = state.apply_move(square, mark)?;
        }
        Ok(state)
    }

    pub fn cells(&self) -> &[Mark; 9] {
        &self.cells
    }

    pub fn get(&self, square: Square) -> Mark {
        self.cells[square.index()]
    }

    pub fn to_move(&self) -> Mark {
        self.to_move
    }

    pub fn status(&self) -> GameStatus {
        self.status
    }

    pub fn history(&self) -> &[(Square, Mark)] {
        &self.history
    }

    /// Empty squares in row-major order; empty once the game is over.
    pub fn legal_moves(&self) -> Vec<Square> {
        if self.status.is_over() {
            return Vec::new();
        }
        Square::ALL
            .into_iter()
            .filter(|s| self.cells[s.index()] == Mark::Empty)
            .collect()
    }

    pub fn apply_move(&self, square: Square, mark: Mark) -> Result<GameState, GameError> {
        if self.status.is_over() {
            return Err(GameError::Finished);
        }
        if mark != self.to_move {
            return Err(GameError::WrongTurn {
                expected: self.to_move,
                got: mark,
            });
        }
        if self.cells[square.index()] != Mark::Empty {
            return Err(GameError::Occupied(square));
        }
        let mut next = self.clone();
        next.cells[square.index()] = mark;
        next.history.push((square, mark));
        next.to_move = mark.opponent();
        next.status = classify(&next.cells);
        Ok(next)
    }

    /// Squares where `mark` would complete a line on its next move.
    pub fn winning_squares(&self, mark: Mark) -> Vec<Square> {
        winning_squares(&self.cells, mark)
    }
}

pub(crate) fn winning_squares(cells: &[Mark; 9], mark: Mark) -> Vec<Square> {
    let mut found: Vec<Square> = Vec::new();
    for line in LINES {
        let own = line.iter().filter(|&&i| cells[i] == mark).count();
        let empty: Vec<usize> = line.iter().copied().filter(|&i| cells[i] == Mark::Empty).collect();
        if own == 2 && empty.len() == 1 {
            let sq = Square::ALL[empty[0]];
            if !found.contains(&sq) {
                found.push(sq);
            }
        }
    }
    found.sort();
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BotKind {
    Random,
    /// Win if possible, else block, else random.
    #[default]
    Heuristic,
}

impl FromStr for BotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(BotKind::Random),
            "heuristic" => Ok(BotKind::Heuristic),
            other => Err(format!("unknown bot strategy {other:?}")),
        }
    }
}

impl fmt::Display for BotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BotKind::Random => "random",
            BotKind::Heuristic => "heuristic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BotStrategy {
    pub kind: BotKind,
    pub rng_seed: u64,
}

impl BotStrategy {
    pub fn new(kind: BotKind, rng_seed: u64) -> Self {
        BotStrategy { kind, rng_seed }
    }

    /// Chooses the bot's move for the side to move.
    ///
    /// The random draw is seeded from `rng_seed` and the move history, so the
    /// choice is a pure function of the strategy and the game so far.
    pub fn choose(&self, state: &GameState) -> Result<Square, GameError> {
        let legal = state.legal_moves();
        if legal.is_empty() {
            return Err(GameError::NoMovesAvailable);
        }
        if self.kind == BotKind::Heuristic {
            let me = state.to_move();
            if let Some(&win) = state.winning_squares(me).first() {
                return Ok(win);
            }
            if let Some(&block) = state.winning_squares(me.opponent()).first() {
                return Ok(block);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.history_seed(state));
        Ok(*legal.choose(&mut rng).expect("legal moves are non-empty"))
    }

    fn history_seed(&self, state: &GameState) -> u64 {
        let code = state
            .history()
            .iter()
            .fold(0u64, |acc, (sq, _)| acc * 10 + sq.index() as u64 + 1);
        seed::derive(self.rng_seed, code)
    }
}

/// Counts of distinct positions reachable from the empty board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReachableCounts {
    pub legal_positions: usize,
    pub terminal_positions: usize,
}

/// Breadth-first expansion of every position reachable by legal play,
/// stopping at terminal positions.
pub fn enumerate_reachable_states() -> ReachableCounts {
    let positions = reachable_positions();
    let terminal = positions.iter().filter(|cells| classify(cells).is_over()).count();
    ReachableCounts {
        legal_positions: positions.len(),
        terminal_positions: terminal,
    }
}

/// Every distinct grid reachable by legal play, in breadth-first order.
pub fn reachable_positions() -> Vec<[Mark; 9]> {
    let start = GameState::new();
    let mut seen: HashSet<[Mark; 9]> = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([start]);
    seen.insert(*queue[0].cells());
    while let Some(state) = queue.pop_front() {
        order.push(*state.cells());
        for square in state.legal_moves() {
            let next = state.apply_move(square, state.to_move()).expect("legal move applies");
            if seen.insert(*next.cells()) {
                queue.push_back(next);
            }
        }
    }
    order
}
