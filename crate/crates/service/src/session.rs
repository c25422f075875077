use std::time::SystemTime;

use hyperttt_core::game::{BotStrategy, GameError, GameState, GameStatus, Mark, Square};
use hyperttt_core::rdf::{Term, TripleSet, RDF_TYPE};
use hyperttt_core::vocab::{ttt, Vocabulary};

/// IRIs of the nodes in one game's graph, all under `{root}/games/{id}`.
#[derive(Debug, Clone)]
pub struct GameIris {
    game: String,
}

impl GameIris {
    pub fn new(root: &str, game_id: &str) -> Self {
        GameIris {
            game: format!("{root}/games/{game_id}"),
        }
    }

    pub fn game(&self) -> &str {
        &self.game
    }

    pub fn role(&self, mark: Mark) -> String {
        format!("{}/roles/{mark}", self.game)
    }

    pub fn square(&self, square: Square) -> String {
        format!("{}/squares/{}", self.game, square.name())
    }

    pub fn move_node(&self, index: usize) -> String {
        format!("{}/moves/{index}", self.game)
    }
}

/// One game between a registered agent and the bot.
#[derive(Debug, Clone)]
pub struct GameSession {
    pub game_id: String,
    pub state: GameState,
    pub agent_mark: Mark,
    pub agent_iri: String,
    pub bot: BotStrategy,
    pub graph: TripleSet,
    pub created_at: SystemTime,
    pub iris: GameIris,
    /// Set once the result has been served (and exported, if enabled).
    pub result_served: bool,
}

impl GameSession {
    /// A fresh game with its seeded graph. If the bot holds X it opens.
    pub fn start(
        game_id: String,
        agent_iri: String,
        agent_mark: Mark,
        bot: BotStrategy,
        root: &str,
        vocab: &Vocabulary,
    ) -> Self {
        let iris = GameIris::new(root, &game_id);
        let mut session = GameSession {
            game_id,
            state: GameState::new(),
            agent_mark,
            agent_iri,
            bot,
            graph: TripleSet::new(),
            created_at: SystemTime::now(),
            iris,
            result_served: false,
        };
        session.seed_graph(vocab, root);
        if agent_mark != Mark::X {
            session.bot_move(vocab).expect("the bot can open an empty board");
        }
        session
    }

    fn seed_graph(&mut self, vocab: &Vocabulary, root: &str) {
        let t = |local: &str| vocab.ttt(local);
        let game = self.iris.game().to_string();
        let g = &mut self.graph;
        g.add(&game, RDF_TYPE, Term::iri(t(ttt::GAME)));
        g.add(&game, &t(ttt::GAME_ID), Term::string(&self.game_id));
        for mark in [Mark::X, Mark::O] {
            let role = self.iris.role(mark);
            let player = if mark == self.agent_mark {
                self.agent_iri.clone()
            } else {
                format!("{root}/bot")
            };
            g.add(&role, RDF_TYPE, Term::iri(t(ttt::PLAYER_ROLE)));
            g.add(&role, &t(ttt::HAS_MARK), Term::string(mark.as_str()));
            g.add(&role, &t(ttt::PLAYED_BY), Term::iri(player));
            g.add(&game, &t(ttt::HAS_PLAYER_ROLE), Term::iri(role));
        }
        for square in Square::ALL {
            let node = self.iris.square(square);
            g.add(&node, RDF_TYPE, Term::iri(t(ttt::SQUARE)));
            g.add(&node, &t(ttt::ROW), Term::integer(square.row().into()));
            g.add(&node, &t(ttt::COLUMN), Term::integer(square.col().into()));
            g.add(&game, &t(ttt::HAS_SQUARE), Term::iri(node));
        }
    }

    pub fn is_agent_turn(&self) -> bool {
        self.state.status() == GameStatus::InProgress && self.state.to_move() == self.agent_mark
    }

    /// Applies the agent's move, then the bot's reply if the game goes on.
    pub fn play_exchange(&mut self, square: Square, vocab: &Vocabulary) -> Result<(), GameError> {
        if self.state.status().is_over() {
            return Err(GameError::Finished);
        }
        if self.state.to_move() != self.agent_mark {
            return Err(GameError::WrongTurn {
                expected: self.state.to_move(),
                got: self.agent_mark,
            });
        }
        self.record(square, self.agent_mark, vocab)?;
        if !self.state.status().is_over() {
            self.bot_move(vocab)?;
        }
        Ok(())
    }

    fn bot_move(&mut self, vocab: &Vocabulary) -> Result<(), GameError> {
        let square = self.bot.choose(&self.state)?;
        self.record(square, self.agent_mark.opponent(), vocab)
    }

    fn record(&mut self, square: Square, mark: Mark, vocab: &Vocabulary) -> Result<(), GameError> {
        self.state = self.state.apply_move(square, mark)?;
        let index = self.state.history().len();
        let node = self.iris.move_node(index);
        let g = &mut self.graph;
        g.add(&node, RDF_TYPE, Term::iri(vocab.ttt(ttt::MOVE)));
        g.add(&node, &vocab.ttt(ttt::IN_SQUARE), Term::iri(self.iris.square(square)));
        g.add(&node, &vocab.ttt(ttt::MOVE_TAKEN_BY), Term::iri(self.iris.role(mark)));
        g.add(&node, &vocab.ttt(ttt::MOVE_INDEX), Term::integer(index as i64));
        if let Some(result) = self.result_iri(vocab) {
            self.graph
                .add(self.iris.game(), &vocab.ttt(ttt::HAS_RESULT), Term::iri(result));
        }
        Ok(())
    }

    /// The winner's role IRI, the draw marker, or `None` while in progress.
    pub fn result_iri(&self, vocab: &Vocabulary) -> Option<String> {
        match self.state.status() {
            GameStatus::InProgress => None,
            GameStatus::Draw => Some(vocab.ttt(ttt::DRAW)),
            status => status.winner().map(|m| self.iris.role(m)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hyperttt_core::game::BotKind;

    fn session(agent_mark: Mark) -> (GameSession, Vocabulary) {
        let vocab = Vocabulary::default();
        let s = GameSession::start(
            "id000001".into(),
            "http://agents/a".into(),
            agent_mark,
            BotStrategy::new(BotKind::Random, 9),
            "http://ttt.test",
            &vocab,
        );
        (s, vocab)
    }

    #[test]
    fn seeded_graph_shape() {
        let (s, vocab) = session(Mark::X);
        assert_eq!(s.graph.instances_of(&vocab.ttt(ttt::GAME)).len(), 1);
        assert_eq!(s.graph.instances_of(&vocab.ttt(ttt::PLAYER_ROLE)).len(), 2);
        assert_eq!(s.graph.instances_of(&vocab.ttt(ttt::SQUARE)).len(), 9);
        assert!(s.graph.instances_of(&vocab.ttt(ttt::MOVE)).is_empty());
        assert!(s.is_agent_turn());
    }

    #[test]
    fn bot_opens_when_agent_is_o() {
        let (s, vocab) = session(Mark::O);
        assert_eq!(s.state.history().len(), 1);
        assert_eq!(s.graph.instances_of(&vocab.ttt(ttt::MOVE)).len(), 1);
        assert!(s.is_agent_turn());
    }

    #[test]
    fn exchange_adds_two_moves_and_grows_graph() {
        let (mut s, vocab) = session(Mark::X);
        let before = s.graph.len();
        s.play_exchange(Square::ALL[0], &vocab).unwrap();
        assert_eq!(s.graph.instances_of(&vocab.ttt(ttt::MOVE)).len(), 2);
        assert!(s.graph.len() > before);
        assert_eq!(
            s.play_exchange(Square::ALL[0], &vocab),
            Err(GameError::Occupied(Square::ALL[0]))
        );
    }
}
