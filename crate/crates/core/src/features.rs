//! State and action encoding.
//!
//! Flat state layout (1075 entries, all binary), seen from the acting seat
//! with the other seats in play order (next, teammate, previous):
//!
//! | offset | size     | content                                   |
//! |--------|----------|-------------------------------------------|
//! | 0      | 108      | own hand                                  |
//! | 108    | 108      | union of the other three hands            |
//! | 216    | 4 x 108  | latest action of self, next, mate, prev   |
//! | 648    | 3 x 108  | cards played so far by next, mate, prev   |
//! | 972    | 3 x 27   | remaining-card count one-hots             |
//! | 1053   | 13       | level one-hot                             |
//! | 1066   | 3 x 3    | cooperating, dwarfing, assisting statuses |
//!
//! The history is the 20 most recent actions, oldest first, zero-padded at
//! the old end, grouped into 5 timesteps of 4 actions (432 entries each).

use crate::behavior::Opportunities;
use crate::cards::{CardSet, Level, Seat, DECK_SIZE, FACE_COUNT, HAND_SIZE};
use crate::combos::PlayOrPass;
use crate::engine::MiniGameState;
use crate::error::{Error, Result};

pub const FLAT_LEN: usize = 1075;
pub const HISTORY_ACTIONS: usize = 20;
pub const HISTORY_STEPS: usize = 5;
pub const ACTIONS_PER_STEP: usize = 4;
pub const HISTORY_STEP_LEN: usize = ACTIONS_PER_STEP * DECK_SIZE;
pub const ACTION_LEN: usize = DECK_SIZE;

pub const OWN_HAND_OFFSET: usize = 0;
pub const OTHERS_OFFSET: usize = 108;
pub const LAST_ACTIONS_OFFSET: usize = 216;
pub const PLAYED_OFFSET: usize = 648;
pub const REMAINING_OFFSET: usize = 972;
pub const LEVEL_OFFSET: usize = 1053;
pub const FLAGS_OFFSET: usize = 1066;

pub fn encode_cards(cards: CardSet) -> [u8; DECK_SIZE] {
    let mut v = [0u8; DECK_SIZE];
    for id in cards.iter() {
        v[id.index()] = 1;
    }
    v
}

/// One-hot of a remaining-card count at slot `n - 1`; zero vector for 0.
pub fn encode_count(n: usize) -> Result<[u8; HAND_SIZE]> {
    if n > HAND_SIZE {
        return Err(Error::CountOutOfRange(n));
    }
    let mut v = [0u8; HAND_SIZE];
    if n > 0 {
        v[n - 1] = 1;
    }
    Ok(v)
}

pub fn encode_level(level: Level) -> [u8; FACE_COUNT] {
    let mut v = [0u8; FACE_COUNT];
    v[level.index()] = 1;
    v
}

/// Physical cards of the action; all zeros for a pass.
pub fn encode_action(action: &PlayOrPass) -> CardSet {
    action.cards()
}

/// Structured form of the flat state and history vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateFeatures {
    pub own_hand: CardSet,
    pub others_hands: CardSet,
    /// Self, next, teammate, previous.
    pub last_actions: [CardSet; 4],
    /// Next, teammate, previous.
    pub played: [CardSet; 3],
    /// Next, teammate, previous; counts above 27 cannot occur in play.
    pub remaining: [u8; 3],
    pub level: Level,
    /// Cooperating, dwarfing, assisting one-hots, or all zeros when the
    /// behavior features are ablated.
    pub flags: [[u8; 3]; 3],
    /// Oldest first.
    pub history: [CardSet; HISTORY_ACTIONS],
}

fn push_set(out: &mut Vec<usize>, offset: usize, set: CardSet) {
    out.extend(set.iter().map(|id| offset + id.index()));
}

impl StateFeatures {
    /// Indices of the ones in the flat vector, ascending.
    pub fn flat_ones(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(128);
        self.base_ones(&mut out);
        self.flag_ones(&mut out);
        out
    }

    /// Ones of every flat slice except the behavior flags.
    pub fn base_ones(&self, out: &mut Vec<usize>) {
        push_set(out, OWN_HAND_OFFSET, self.own_hand);
        push_set(out, OTHERS_OFFSET, self.others_hands);
        for (i, set) in self.last_actions.iter().enumerate() {
            push_set(out, LAST_ACTIONS_OFFSET + i * DECK_SIZE, *set);
        }
        for (i, set) in self.played.iter().enumerate() {
            push_set(out, PLAYED_OFFSET + i * DECK_SIZE, *set);
        }
        for (i, &n) in self.remaining.iter().enumerate() {
            if n > 0 {
                out.push(REMAINING_OFFSET + i * HAND_SIZE + n as usize - 1);
            }
        }
        out.push(LEVEL_OFFSET + self.level.index());
    }

    pub fn flag_ones(&self, out: &mut Vec<usize>) {
        for (b, hot) in self.flags.iter().enumerate() {
            for (k, &bit) in hot.iter().enumerate() {
                if bit == 1 {
                    out.push(FLAGS_OFFSET + b * 3 + k);
                }
            }
        }
    }

    pub fn flat(&self) -> Vec<u8> {
        let mut v = vec![0u8; FLAT_LEN];
        for i in self.flat_ones() {
            v[i] = 1;
        }
        v
    }

    /// Indices of the ones in history timestep `t` (0 = oldest).
    pub fn history_step_ones(&self, t: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for k in 0..ACTIONS_PER_STEP {
            push_set(
                &mut out,
                k * DECK_SIZE,
                self.history[t * ACTIONS_PER_STEP + k],
            );
        }
        out
    }

    /// `HISTORY_STEPS` rows of `HISTORY_STEP_LEN` entries.
    pub fn history_matrix(&self) -> Vec<Vec<u8>> {
        (0..HISTORY_STEPS)
            .map(|t| {
                let mut row = vec![0u8; HISTORY_STEP_LEN];
                for i in self.history_step_ones(t) {
                    row[i] = 1;
                }
                row
            })
            .collect()
    }

    pub fn without_flags(&self) -> StateFeatures {
        StateFeatures {
            flags: [[0; 3]; 3],
            ..self.clone()
        }
    }
}

/// Candidate-independent part of the encoding of one decision point.
#[derive(Debug, Clone)]
pub struct DecisionEncoder {
    base: StateFeatures,
    opportunities: Opportunities,
    with_flags: bool,
}

impl DecisionEncoder {
    /// `legal` must be the legal actions of the seat to act.
    pub fn new(state: &MiniGameState, legal: &[PlayOrPass], with_flags: bool) -> DecisionEncoder {
        let seat = state.current;
        DecisionEncoder {
            base: base_features(state, seat),
            opportunities: Opportunities::detect(state, legal),
            with_flags,
        }
    }

    pub fn opportunities(&self) -> &Opportunities {
        &self.opportunities
    }

    /// Features with all flags zeroed, shared by every candidate.
    pub fn base(&self) -> &StateFeatures {
        &self.base
    }

    pub fn flags(&self, state: &MiniGameState, candidate: &PlayOrPass) -> [[u8; 3]; 3] {
        if !self.with_flags {
            return [[0; 3]; 3];
        }
        self.opportunities
            .statuses(state, candidate)
            .map(|s| s.one_hot())
    }

    pub fn encode(&self, state: &MiniGameState, candidate: &PlayOrPass) -> StateFeatures {
        StateFeatures {
            flags: self.flags(state, candidate),
            ..self.base.clone()
        }
    }
}

fn base_features(state: &MiniGameState, seat: Seat) -> StateFeatures {
    let others = [seat.offset(1), seat.offset(2), seat.offset(3)];
    let own_hand = state.hand(seat);
    let played_all = state.played_cards();
    let last = |s: Seat| {
        state
            .last_action_of(s)
            .map_or(CardSet::EMPTY, |a| a.cards())
    };
    let mut history = [CardSet::EMPTY; HISTORY_ACTIONS];
    let recent = &state.history[state.history.len().saturating_sub(HISTORY_ACTIONS)..];
    let pad = HISTORY_ACTIONS - recent.len();
    for (i, (_, a)) in recent.iter().enumerate() {
        history[pad + i] = a.cards();
    }
    StateFeatures {
        own_hand,
        others_hands: own_hand.union(played_all).complement(),
        last_actions: [
            last(seat),
            last(others[0]),
            last(others[1]),
            last(others[2]),
        ],
        played: others.map(|s| state.played_by(s)),
        remaining: others.map(|s| state.hand(s).len().min(HAND_SIZE) as u8),
        level: state.acting_level,
        flags: [[0; 3]; 3],
        history,
    }
}

/// Features of `candidate` at the current decision, from `seat`'s view.
pub fn encode_state(
    state: &MiniGameState,
    seat: Seat,
    candidate: &PlayOrPass,
) -> Result<StateFeatures> {
    if state.current != seat {
        return Err(Error::IllegalAction(format!("{seat} is not to act")));
    }
    let legal = state.legal_actions()?;
    Ok(DecisionEncoder::new(state, &legal, true).encode(state, candidate))
}
