use serde::{Deserialize, Serialize};

use crate::cards::{Level, Seat};
use crate::error::{Error, Result};

/// Finishing order of a completed mini game, all four seats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiniResult {
    pub order: Vec<Seat>,
}

impl MiniResult {
    pub fn banker(&self) -> Seat {
        self.order[0]
    }

    pub fn dweller(&self) -> Seat {
        self.order[3]
    }
}

/// Winning team (the banker's) and how many levels it goes up:
/// 3 with the teammate second, 2 with the teammate third, 1 otherwise.
pub fn settle(finished_order: &[Seat]) -> (usize, u8) {
    let banker = finished_order[0];
    let mate = banker.teammate();
    let upgrade = match finished_order.iter().position(|s| *s == mate) {
        Some(1) => 3,
        Some(2) => 2,
        _ => 1,
    };
    (banker.team(), upgrade)
}

/// Points for (winner, loser) given the level difference.
pub fn score(level_diff: i32) -> Result<(u8, u8)> {
    if !(0..=14).contains(&level_diff) {
        return Err(Error::LevelDiffOutOfRange(level_diff));
    }
    let d = level_diff as u8;
    Ok((14 + d, 14 - d))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub levels: [Level; 2],
    pub mini_games: u32,
    pub previous: Option<MiniResult>,
    pub over: bool,
    pub winner: Option<usize>,
}

impl Default for GameState {
    fn default() -> Self {
        GameState {
            levels: [Level::TWO; 2],
            mini_games: 0,
            previous: None,
            over: false,
            winner: None,
        }
    }
}

impl GameState {
    /// Level in force for the next mini game: the last winner's level, or
    /// 2 for the first mini game.
    pub fn acting_level(&self) -> Level {
        match &self.previous {
            None => Level::TWO,
            Some(prev) => self.levels[prev.banker().team()],
        }
    }

    /// Points for each team from the current level difference.
    pub fn final_score(&self) -> Option<[u8; 2]> {
        let winner = self.winner?;
        let diff = self.levels[winner].index() as i32 - self.levels[1 - winner].index() as i32;
        let (w, l) = score(diff.max(0)).ok()?;
        let mut out = [l; 2];
        out[winner] = w;
        Some(out)
    }
}

/// Applies a finished mini game: the winning team goes up (capped at A),
/// and the game ends when that team was already at A and its members did
/// not finish last.
pub fn advance_game(game: &GameState, result: &MiniResult) -> GameState {
    let (team, upgrade) = settle(&result.order);
    let mut next = game.clone();
    let at_ace = game.levels[team] == Level::ACE;
    next.levels[team] = game.levels[team].upgraded(upgrade);
    next.mini_games += 1;
    next.previous = Some(result.clone());
    if at_ace && upgrade >= 2 {
        next.over = true;
        next.winner = Some(team);
    }
    next
}
