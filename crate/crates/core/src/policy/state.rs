//! State keys and the dihedral symmetry reduction.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::game::{Mark, Square};

/// Nine symbols, row-major: `M` for the learner's mark, `T` for the
/// opponent's, `-` for empty.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateKey([u8; 9]);

impl StateKey {
    pub const EMPTY: StateKey = StateKey([b'-'; 9]);

    pub fn as_bytes(&self) -> &[u8; 9] {
        &self.0
    }

    pub fn symbol(&self, square: Square) -> char {
        self.0[square.index()] as char
    }

    /// Relabels a grid from the point of view of `my_mark`.
    pub fn from_cells(cells: &[Mark; 9], my_mark: Mark) -> StateKey {
        let mut key = [b'-'; 9];
        for (k, &m) in key.iter_mut().zip(cells) {
            *k = if m == Mark::Empty {
                b'-'
            } else if m == my_mark {
                b'M'
            } else {
                b'T'
            };
        }
        StateKey(key)
    }

    fn ranks(&self) -> [u8; 9] {
        self.0.map(symbol_rank)
    }

    /// Canonical ordering: compares symbol by symbol with `M < T < -`.
    pub fn canonical_cmp(&self, other: &StateKey) -> Ordering {
        self.ranks().cmp(&other.ranks())
    }
}

fn symbol_rank(b: u8) -> u8 {
    match b {
        b'M' => 0,
        b'T' => 1,
        _ => 2,
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(std::str::from_utf8(&self.0).expect("ascii"))
    }
}

impl fmt::Debug for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateKey({self})")
    }
}

impl PartialOrd for StateKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for StateKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid state key {0:?}")]
pub struct InvalidStateKey(pub String);

impl FromStr for StateKey {
    type Err = InvalidStateKey;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes: [u8; 9] = s.as_bytes().try_into().map_err(|_| InvalidStateKey(s.to_string()))?;
        if bytes.iter().all(|b| matches!(b, b'M' | b'T' | b'-')) {
            Ok(StateKey(bytes))
        } else {
            Err(InvalidStateKey(s.to_string()))
        }
    }
}

/// The eight symmetries of the square as index permutations:
/// `transformed[p] = original[perm[p]]`.
pub const DIHEDRAL: [[u8; 9]; 8] = {
    let mut perms = [[0u8; 9]; 8];
    let mut t = 0;
    while t < 8 {
        let mut p = 0;
        while p < 9 {
            let (r, c) = (p / 3, p % 3);
            let (sr, sc) = match t {
                0 => (r, c),
                1 => (c, 2 - r),
                2 => (2 - r, 2 - c),
                3 => (2 - c, r),
                4 => (r, 2 - c),
                5 => (2 - r, c),
                6 => (c, r),
                _ => (2 - c, 2 - r),
            };
            perms[t][p] = (sr * 3 + sc) as u8;
            p += 1;
        }
        t += 1;
    }
    perms
};

/// Maps squares between canonical space and board space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionMap {
    to_board: [u8; 9],
}

impl ActionMap {
    pub const IDENTITY: ActionMap = ActionMap { to_board: DIHEDRAL[0] };

    pub fn from_permutation(perm: [u8; 9]) -> ActionMap {
        ActionMap { to_board: perm }
    }

    /// Canonical-space square to the board square it stands for.
    pub fn to_board(&self, canonical: Square) -> Square {
        Square::ALL[self.to_board[canonical.index()] as usize]
    }

    /// Board square to its canonical-space square.
    pub fn to_canonical(&self, board: Square) -> Square {
        let p = self
            .to_board
            .iter()
            .position(|&b| b as usize == board.index())
            .expect("permutation covers every square");
        Square::ALL[p]
    }
}

/// Builds the learner's state key for a grid. With `use_symmetry`, the key is
/// the minimum (under `M < T < -`) over the eight symmetric variants, and the
/// returned map translates canonical squares back to the real board.
pub fn canonicalize(cells: &[Mark; 9], my_mark: Mark, use_symmetry: bool) -> (StateKey, ActionMap) {
    let direct = StateKey::from_cells(cells, my_mark);
    if !use_symmetry {
        return (direct, ActionMap::IDENTITY);
    }
    let mut best: Option<(StateKey, [u8; 9])> = None;
    for perm in DIHEDRAL {
        let mut bytes = [b'-'; 9];
        for p in 0..9 {
            bytes[p] = direct.0[perm[p] as usize];
        }
        let candidate = StateKey(bytes);
        let better = match &best {
            None => true,
            Some((k, _)) => candidate.canonical_cmp(k) == Ordering::Less,
        };
        if better {
            best = Some((candidate, perm));
        }
    }
    let (key, perm) = best.expect("eight candidates");
    (key, ActionMap::from_permutation(perm))
}
