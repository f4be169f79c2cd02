use std::path::PathBuf;

use thiserror::Error;

use crate::cards::Rank;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("card id {0} out of range 0..108")]
    InvalidCardId(usize),
    #[error("invalid card: {0}")]
    InvalidCard(String),
    #[error("seat {0} out of range 0..4")]
    InvalidSeat(usize),
    #[error("{0:?} cannot be a level")]
    InvalidLevel(Rank),
    #[error("invalid deal: {0}")]
    InvalidDeal(String),
    #[error("remaining-card count {0} exceeds 27")]
    CountOutOfRange(usize),
    #[error("level difference {0} outside 0..=14")]
    LevelDiffOutOfRange(i32),
    #[error("operation not allowed in phase {0}")]
    WrongPhase(&'static str),
    #[error("illegal action: {0}")]
    IllegalAction(String),
    #[error("rate undefined: no opportunities")]
    NoOpportunities,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error("deck file: {0}")]
    DeckFile(String),
    #[error("replay diverged at step {step}: {reason}")]
    ReplayDivergence { step: usize, reason: String },
    #[error("bad agent spec {0:?}")]
    AgentSpec(String),
    #[error("config: {0}")]
    Config(String),
    #[error("input aborted")]
    Aborted,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
