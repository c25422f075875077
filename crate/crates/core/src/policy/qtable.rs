use std::collections::{BTreeMap, HashMap};

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};

use crate::game::Square;

use super::{HyperParams, Policy, PolicyError, RunState, StateKey, Transition};

/// f64 with a total order, for the value multiset.
#[derive(Debug, Clone, Copy)]
struct Ordered(f64);

impl PartialEq for Ordered {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for Ordered {}
impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Tabular action values. Absent entries read as 0.
///
/// Alongside the entries the table keeps a multiset of every stored value, so
/// the global minimum and maximum used for advice scores are always exact and
/// cost `O(log n)` to maintain.
#[derive(Debug, Clone, Default)]
pub struct QTable {
    entries: HashMap<StateKey, [Option<f64>; 9]>,
    values: BTreeMap<Ordered, usize>,
    stored: usize,
    episode_count: u64,
    run_state: RunState,
}

impl QTable {
    pub fn new() -> Self {
        QTable::default()
    }

    /// Number of stored (state, action) entries.
    pub fn len(&self) -> usize {
        self.stored
    }

    pub fn is_empty(&self) -> bool {
        self.stored == 0
    }

    pub fn state_count(&self) -> usize {
        self.entries.len()
    }

    pub fn episode_count(&self) -> u64 {
        self.episode_count
    }

    pub fn set_episode_count(&mut self, n: u64) {
        self.episode_count = n;
    }

    pub fn record_episode(&mut self) {
        self.episode_count += 1;
    }

    pub fn value(&self, state: &StateKey, action: Square) -> f64 {
        self.stored_value(state, action).unwrap_or(0.0)
    }

    pub fn stored_value(&self, state: &StateKey, action: Square) -> Option<f64> {
        self.entries.get(state).and_then(|row| row[action.index()])
    }

    /// True if any action value is stored for `state`.
    pub fn visited(&self, state: &StateKey) -> bool {
        self.entries.contains_key(state)
    }

    /// Writes an entry directly, bypassing the run state.
    pub fn set_value(&mut self, state: StateKey, action: Square, value: f64) {
        assert!(value.is_finite(), "Q values must be finite");
        let row = self.entries.entry(state).or_insert([None; 9]);
        let slot = &mut row[action.index()];
        match slot.replace(value) {
            Some(old) => remove_one(&mut self.values, old),
            None => self.stored += 1,
        }
        *self.values.entry(Ordered(value)).or_insert(0) += 1;
    }

    /// Smallest and largest stored value.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        let min = self.values.keys().next()?.0;
        let max = self.values.keys().next_back()?.0;
        Some((min, max))
    }

    /// All stored entries, sorted by state key then square.
    pub fn entries(&self) -> Vec<(StateKey, Square, f64)> {
        let mut out: Vec<_> = self
            .entries
            .iter()
            .flat_map(|(s, row)| {
                row.iter()
                    .enumerate()
                    .filter_map(move |(i, v)| v.map(|v| (*s, Square::ALL[i], v)))
            })
            .collect();
        out.sort_by_key(|e| (e.0, e.1));
        out
    }

    /// Largest value among `actions` for `state`, absent entries counting as 0.
    pub fn max_value(&self, state: &StateKey, actions: &[Square]) -> f64 {
        actions
            .iter()
            .map(|&a| self.value(state, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Epsilon-greedy choice; greedy ties are broken uniformly at random.
    pub fn select_action(
        &self,
        state: &StateKey,
        legal: &[Square],
        epsilon: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Square, PolicyError> {
        if legal.is_empty() {
            return Err(PolicyError::NoLegalActions);
        }
        let explore = rng.random::<f64>() < epsilon;
        if explore {
            return Ok(*legal.choose(rng).expect("non-empty"));
        }
        let best = self.max_value(state, legal);
        let maximizers: Vec<Square> = legal
            .iter()
            .copied()
            .filter(|&a| self.value(state, a) == best)
            .collect();
        Ok(*maximizers.choose(rng).expect("at least one maximizer"))
    }

    /// One-step Q-learning update. Returns the stored value afterwards; a
    /// no-op unless the table is running.
    pub fn update(&mut self, t: &Transition<'_>, hp: &HyperParams) -> f64 {
        let current = self.value(&t.state, t.action);
        if self.run_state != RunState::Running {
            return current;
        }
        let bootstrap = match t.next {
            Some((next, legal)) if !legal.is_empty() => self.max_value(next, legal),
            _ => 0.0,
        };
        let target = t.reward + hp.gamma * bootstrap;
        let updated = current + hp.alpha * (target - current);
        self.set_value(t.state, t.action, updated);
        updated
    }

    /// Min-max normalised value of `(state, action)` over every stored value.
    /// A table whose values are all equal scores 0.5.
    pub fn normalized_score(&self, state: &StateKey, action: Square) -> Result<f64, PolicyError> {
        let (min, max) = self.value_range().ok_or(PolicyError::EmptyPolicy)?;
        if max == min {
            return Ok(0.5);
        }
        let v = self.value(state, action);
        Ok(((v - min) / (max - min)).clamp(0.0, 1.0))
    }

    /// The best stored action among `legal` with its score, or `None` when
    /// no legal action has a stored value for `state`.
    pub fn best_advised_action(&self, state: &StateKey, legal: &[Square]) -> Option<(Square, f64)> {
        let row = self.entries.get(state)?;
        let (action, _) = legal.iter().filter_map(|&a| row[a.index()].map(|v| (a, v))).fold(
            None,
            |best: Option<(Square, f64)>, (a, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((a, v)),
            },
        )?;
        let score = self.normalized_score(state, action).ok()?;
        Some((action, score))
    }

    pub fn run_state(&self) -> RunState {
        self.run_state
    }

    pub fn set_run_state(&mut self, rs: RunState) {
        self.run_state = rs;
    }
}

fn remove_one(values: &mut BTreeMap<Ordered, usize>, v: f64) {
    let key = Ordered(v);
    if let Some(count) = values.get_mut(&key) {
        *count -= 1;
        if *count == 0 {
            values.remove(&key);
        }
    }
}

impl Policy for QTable {
    fn select_action(
        &self,
        state: &StateKey,
        legal: &[Square],
        epsilon: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Square, PolicyError> {
        QTable::select_action(self, state, legal, epsilon, rng)
    }

    fn update(&mut self, transition: &Transition<'_>, hp: &HyperParams) -> f64 {
        QTable::update(self, transition, hp)
    }

    fn run_state(&self) -> RunState {
        self.run_state
    }

    fn set_run_state(&mut self, rs: RunState) {
        self.run_state = rs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sq(i: usize) -> Square {
        Square::ALL[i]
    }

    fn hp(alpha: f64, gamma: f64) -> HyperParams {
        HyperParams {
            alpha,
            gamma,
            ..HyperParams::default()
        }
    }

    #[test]
    fn greedy_picks_argmax() {
        let mut q = QTable::new();
        let s = StateKey::EMPTY;
        q.set_value(s, sq(0), 0.5);
        q.set_value(s, sq(1), 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(q.select_action(&s, &[sq(0), sq(1)], 0.0, &mut rng).unwrap(), sq(0));
        }
    }

    #[test]
    fn exploration_is_reproducible() {
        let q = QTable::new();
        let legal = [sq(0), sq(4), sq(8)];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10)
                .map(|_| q.select_action(&StateKey::EMPTY, &legal, 1.0, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn ties_are_broken_uniformly() {
        // Binomial(1000, 1/3): sd ~ 14.9, so 333 +- 60 is about 4 sd.
        let q = QTable::new();
        let legal = [sq(0), sq(1), sq(2)];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut counts = [0usize; 3];
        for _ in 0..1000 {
            let a = q.select_action(&StateKey::EMPTY, &legal, 0.0, &mut rng).unwrap();
            counts[a.index()] += 1;
        }
        for c in counts {
            assert!((273..=393).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn no_legal_actions() {
        let q = QTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            q.select_action(&StateKey::EMPTY, &[], 0.1, &mut rng),
            Err(PolicyError::NoLegalActions)
        );
    }

    #[test]
    fn terminal_update() {
        let mut q = QTable::new();
        let t = Transition::terminal(StateKey::EMPTY, sq(0), 1.0);
        assert!((q.update(&t, &hp(0.1, 0.9)) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bootstrapped_update() {
        let mut q = QTable::new();
        let s = StateKey::EMPTY;
        let next: StateKey = "M--------".parse().unwrap();
        q.set_value(s, sq(0), 0.5);
        q.set_value(next, sq(4), 0.5);
        let legal = [sq(4), sq(8)];
        let t = Transition::step(s, sq(0), 0.0, &next, &legal);
        assert!((q.update(&t, &hp(0.1, 0.9)) - 0.495).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_with_unit_discount() {
        let mut q = QTable::new();
        let s = StateKey::EMPTY;
        q.set_value(s, sq(0), 0.3);
        let legal = [sq(0)];
        let t = Transition::step(s, sq(0), 0.0, &s, &legal);
        for alpha in [0.01, 0.5, 1.0] {
            assert!((q.update(&t, &hp(alpha, 1.0)) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_scores() {
        let mut q = QTable::new();
        assert_eq!(
            q.normalized_score(&StateKey::EMPTY, sq(0)),
            Err(PolicyError::EmptyPolicy)
        );
        q.set_value(StateKey::EMPTY, sq(0), 0.7);
        assert_eq!(q.normalized_score(&StateKey::EMPTY, sq(0)), Ok(0.5));
        q.set_value(StateKey::EMPTY, sq(0), -1.0);
        q.set_value(StateKey::EMPTY, sq(1), 0.0);
        q.set_value(StateKey::EMPTY, sq(2), 1.0);
        assert_eq!(q.normalized_score(&StateKey::EMPTY, sq(2)), Ok(1.0));
        assert_eq!(q.normalized_score(&StateKey::EMPTY, sq(1)), Ok(0.5));
        assert_eq!(q.value_range(), Some((-1.0, 1.0)));
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn range_tracks_overwrites() {
        let mut q = QTable::new();
        q.set_value(StateKey::EMPTY, sq(0), 5.0);
        q.set_value(StateKey::EMPTY, sq(1), 1.0);
        q.set_value(StateKey::EMPTY, sq(0), 2.0);
        assert_eq!(q.value_range(), Some((1.0, 2.0)));
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn advice_lookup() {
        let mut q = QTable::new();
        let s = StateKey::EMPTY;
        assert_eq!(q.best_advised_action(&s, &[sq(0)]), None);
        q.set_value(s, sq(0), 0.2);
        q.set_value(s, sq(1), 0.6);
        q.set_value(s, sq(2), -0.4);
        let (a, score) = q.best_advised_action(&s, &[sq(0), sq(1), sq(2), sq(3)]).unwrap();
        assert_eq!(a, sq(1));
        assert_eq!(score, 1.0);
        // Only unstored legal actions: unknown.
        assert_eq!(q.best_advised_action(&s, &[sq(5)]), None);
        let (a, _) = q.best_advised_action(&s, &[sq(0), sq(2)]).unwrap();
        assert_eq!(a, sq(0));
    }

    #[test]
    fn paused_table_does_not_learn() {
        let mut q = QTable::new();
        q.set_run_state(RunState::Paused);
        let t = Transition::terminal(StateKey::EMPTY, sq(0), 1.0);
        assert_eq!(q.update(&t, &hp(0.1, 0.9)), 0.0);
        assert!(q.is_empty());
        q.set_run_state(RunState::Stopped);
        assert_eq!(q.update(&t, &hp(0.1, 0.9)), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(q.select_action(&StateKey::EMPTY, &[sq(3)], 0.0, &mut rng).is_ok());
        q.set_run_state(RunState::Running);
        assert!((q.update(&t, &hp(0.1, 0.9)) - 0.1).abs() < 1e-15);
    }
}
