//! Reading the game state back out of a game-service representation.

use crate::game::{GameStatus, Mark, Square};
use crate::vocab::{ttt, Vocabulary};

use super::{PropertyValue, Representation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ViewError {
    #[error("missing property {0}")]
    Missing(String),
    #[error("invalid value for {0}")]
    Invalid(String),
}

/// How a finished game ended, as named by its result property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameOutcome {
    /// The player role IRI of the winner.
    Winner(String),
    Draw,
}

/// The board as described by a representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameView {
    pub url: Option<String>,
    pub game_id: String,
    pub cells: [Mark; 9],
    pub to_move: Mark,
    pub status: GameStatus,
    pub agent_mark: Mark,
    pub agent_role: String,
    pub outcome: Option<GameOutcome>,
}

impl GameView {
    /// Like [`GameView::from_representation`], taking the vocabulary from the
    /// document's own `@context`.
    pub fn from_document(rep: &Representation) -> Result<Self, ViewError> {
        let vocab = Vocabulary::from_context(&rep.context)
            .ok_or_else(|| ViewError::Missing("ttt prefix in @context".to_string()))?;
        Self::from_representation(rep, &vocab)
    }

    pub fn from_representation(rep: &Representation, vocab: &Vocabulary) -> Result<Self, ViewError> {
        let text = |local: &str| -> Result<&str, ViewError> {
            rep.property(&vocab.ttt(local))
                .ok_or_else(|| ViewError::Missing(local.to_string()))?
                .as_text()
                .ok_or_else(|| ViewError::Invalid(local.to_string()))
        };
        let mark = |local: &str| -> Result<Mark, ViewError> {
            text(local)?.parse().map_err(|_| ViewError::Invalid(local.to_string()))
        };
        let mut cells = [Mark::Empty; 9];
        for square in Square::ALL {
            cells[square.index()] = mark(&ttt::square_property(square))?;
        }
        let status: GameStatus = text(ttt::STATUS)?
            .parse()
            .map_err(|_| ViewError::Invalid(ttt::STATUS.to_string()))?;
        let agent_role = rep
            .property(&vocab.ttt(ttt::AGENT_ROLE))
            .and_then(PropertyValue::as_iri)
            .ok_or_else(|| ViewError::Missing(ttt::AGENT_ROLE.to_string()))?
            .to_string();
        let outcome = match rep.property(&vocab.ttt(ttt::HAS_RESULT)) {
            None => None,
            Some(PropertyValue::Iri(iri)) if *iri == vocab.ttt(ttt::DRAW) => Some(GameOutcome::Draw),
            Some(PropertyValue::Iri(iri)) => Some(GameOutcome::Winner(iri.clone())),
            Some(_) => return Err(ViewError::Invalid(ttt::HAS_RESULT.to_string())),
        };
        Ok(GameView {
            url: rep.id.clone(),
            game_id: text(ttt::GAME_ID)?.to_string(),
            cells,
            to_move: mark(ttt::TO_MOVE)?,
            status,
            agent_mark: mark(ttt::AGENT_MARK)?,
            agent_role,
            outcome,
        })
    }

    /// Empty squares while the game is in progress.
    pub fn open_squares(&self) -> Vec<Square> {
        if self.status.is_over() {
            return Vec::new();
        }
        Square::ALL
            .into_iter()
            .filter(|s| self.cells[s.index()] == Mark::Empty)
            .collect()
    }
}
