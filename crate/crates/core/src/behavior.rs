//! Cooperating, dwarfing and assisting: opportunity detection, the
//! per-candidate status one-hots and rate bookkeeping.
//!
//! Whether an opportunity exists depends only on the decision point. The
//! status of a candidate ("chooses" vs "refuses") depends on the action,
//! so statuses are computed per (state, candidate) pair.

use serde::{Deserialize, Serialize};

use crate::cards::Seat;
use crate::combos::{is_top_ranked, PlayOrPass};
use crate::engine::MiniGameState;
use crate::error::{Error, Result};

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    Cooperating,
    Dwarfing,
    Assisting,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [
        Behavior::Cooperating,
        Behavior::Dwarfing,
        Behavior::Assisting,
    ];
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BehaviorStatus {
    Cannot,
    Chooses,
    Refuses,
}

impl BehaviorStatus {
    pub fn one_hot(self) -> [u8; 3] {
        match self {
            BehaviorStatus::Cannot => [1, 0, 0],
            BehaviorStatus::Chooses => [0, 1, 0],
            BehaviorStatus::Refuses => [0, 0, 1],
        }
    }
}

/// Which behaviors are available at one decision point.
#[derive(Debug, Copy, Clone, Default, PartialEq, Eq)]
pub struct Opportunities {
    pub cooperating: bool,
    pub dwarfing: bool,
    pub assisting: bool,
    /// Smallest live opponent hand, when an opponent is still playing.
    min_opponent_hand: Option<usize>,
    /// Teammate's hand size, when the teammate is still playing.
    teammate_hand: Option<usize>,
}

fn min_opponent_hand(state: &MiniGameState, seat: Seat) -> Option<usize> {
    [seat.offset(1), seat.offset(3)]
        .into_iter()
        .filter(|s| !state.is_finished(*s))
        .map(|s| state.hand(s).len())
        .min()
}

fn teammate_hand(state: &MiniGameState, seat: Seat) -> Option<usize> {
    let mate = seat.teammate();
    (!state.is_finished(mate)).then(|| state.hand(mate).len())
}

/// Conditions (a) and (b) of cooperating: the teammate played within the
/// last two actions and every action since was an opponent's pass.
fn teammate_play_unanswered(state: &MiniGameState, seat: Seat) -> bool {
    let mate = seat.teammate();
    match &state.table {
        Some((_, owner)) if *owner == mate => {}
        _ => return false,
    }
    let recent = &state.history[state.history.len().saturating_sub(2)..];
    let Some(pos) = recent.iter().rposition(|(s, a)| *s == mate && !a.is_pass()) else {
        return false;
    };
    recent[pos + 1..]
        .iter()
        .all(|(s, a)| a.is_pass() && s.is_opponent(seat))
}

impl Opportunities {
    /// `legal` must be the legal actions of the seat to act.
    pub fn detect(state: &MiniGameState, legal: &[PlayOrPass]) -> Opportunities {
        let seat = state.current;
        let level = state.acting_level;
        let min_opp = min_opponent_hand(state, seat);
        let mate = teammate_hand(state, seat);
        let mut out = Opportunities {
            min_opponent_hand: min_opp,
            teammate_hand: mate,
            ..Default::default()
        };
        if state.is_leading() {
            let plays = legal.iter().filter_map(PlayOrPass::combo);
            for combo in plays {
                let size = combo.size();
                if min_opp.is_some_and(|m| size > m) {
                    out.dwarfing = true;
                }
                if mate.is_some_and(|m| size < m) && !is_top_ranked(combo, level) {
                    out.assisting = true;
                }
                if out.dwarfing && out.assisting {
                    break;
                }
            }
        } else {
            out.cooperating =
                teammate_play_unanswered(state, seat) && legal.iter().any(|a| !a.is_pass());
        }
        out
    }

    pub fn get(&self, behavior: Behavior) -> bool {
        match behavior {
            Behavior::Cooperating => self.cooperating,
            Behavior::Dwarfing => self.dwarfing,
            Behavior::Assisting => self.assisting,
        }
    }

    fn executes(&self, behavior: Behavior, state: &MiniGameState, candidate: &PlayOrPass) -> bool {
        match behavior {
            Behavior::Cooperating => candidate.is_pass(),
            Behavior::Dwarfing => candidate
                .combo()
                .is_some_and(|c| self.min_opponent_hand.is_some_and(|m| c.size() > m)),
            Behavior::Assisting => candidate.combo().is_some_and(|c| {
                self.teammate_hand.is_some_and(|m| c.size() < m)
                    && !is_top_ranked(c, state.acting_level)
            }),
        }
    }

    pub fn status(
        &self,
        behavior: Behavior,
        state: &MiniGameState,
        candidate: &PlayOrPass,
    ) -> BehaviorStatus {
        if !self.get(behavior) {
            BehaviorStatus::Cannot
        } else if self.executes(behavior, state, candidate) {
            BehaviorStatus::Chooses
        } else {
            BehaviorStatus::Refuses
        }
    }

    /// Statuses in the order cooperating, dwarfing, assisting.
    pub fn statuses(&self, state: &MiniGameState, candidate: &PlayOrPass) -> [BehaviorStatus; 3] {
        Behavior::ALL.map(|b| self.status(b, state, candidate))
    }
}

fn detect_for(state: &MiniGameState, seat: Seat) -> Result<Opportunities> {
    if state.current != seat {
        return Err(Error::IllegalAction(format!("{seat} is not to act")));
    }
    Ok(Opportunities::detect(state, &state.legal_actions()?))
}

pub fn cooperation_opportunity(state: &MiniGameState, seat: Seat) -> Result<bool> {
    Ok(detect_for(state, seat)?.cooperating)
}

pub fn cooperation_status(
    state: &MiniGameState,
    seat: Seat,
    candidate: &PlayOrPass,
) -> Result<BehaviorStatus> {
    Ok(detect_for(state, seat)?.status(Behavior::Cooperating, state, candidate))
}

pub fn dwarfing_status(
    state: &MiniGameState,
    seat: Seat,
    candidate: &PlayOrPass,
) -> Result<BehaviorStatus> {
    Ok(detect_for(state, seat)?.status(Behavior::Dwarfing, state, candidate))
}

pub fn assisting_status(
    state: &MiniGameState,
    seat: Seat,
    candidate: &PlayOrPass,
) -> Result<BehaviorStatus> {
    Ok(detect_for(state, seat)?.status(Behavior::Assisting, state, candidate))
}

/// Opportunity and execution counts per behavior.
#[derive(Debug, Copy, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorCounters {
    pub opportunities: [u64; 3],
    pub executions: [u64; 3],
}

impl BehaviorCounters {
    /// Counts one decision where `chosen` was played.
    pub fn record(&mut self, opps: &Opportunities, state: &MiniGameState, chosen: &PlayOrPass) {
        for (i, b) in Behavior::ALL.into_iter().enumerate() {
            if opps.get(b) {
                self.opportunities[i] += 1;
                if opps.executes(b, state, chosen) {
                    self.executions[i] += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &BehaviorCounters) {
        for i in 0..3 {
            self.opportunities[i] += other.opportunities[i];
            self.executions[i] += other.executions[i];
        }
    }

    pub fn rate(&self, behavior: Behavior) -> Result<f64> {
        let i = behavior as usize;
        rate(self.opportunities[i], self.executions[i])
    }

    /// Rate or `None` when there were no opportunities.
    pub fn rate_opt(&self, behavior: Behavior) -> Option<f64> {
        self.rate(behavior).ok()
    }
}

pub fn rate(opportunities: u64, executions: u64) -> Result<f64> {
    if opportunities == 0 {
        return Err(Error::NoOpportunities);
    }
    Ok(executions as f64 / opportunities as f64)
}
