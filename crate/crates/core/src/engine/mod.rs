//! Mini-game state machine: turn order, tricks, borrowing the wind and
//! standings. Full-game bookkeeping and the tribute phase live in the
//! submodules.

mod game;
mod tribute;

pub use game::{advance_game, score, settle, GameState, MiniResult};
pub use tribute::{return_card, tribute, tribute_card, TributeRecord};

use serde::{Deserialize, Serialize};

use crate::cards::{CardSet, Deal, Level, Seat};
use crate::combos::{beats, classify, legal_follows, legal_leads, Combo, PlayOrPass};
use crate::error::{Error, Result};

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Tribute,
    Play,
    Done,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Tribute => "tribute",
            Phase::Play => "play",
            Phase::Done => "done",
        }
    }
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Standing {
    Banker,
    Follower,
    Third,
    Dweller,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniGameState {
    pub hands: [CardSet; 4],
    /// Per-team level, indexed by `Seat::team`.
    pub levels: [Level; 2],
    /// Level governing wilds and rank lifts for this mini game.
    pub acting_level: Level,
    pub current: Seat,
    /// Live combination and the seat that played it.
    pub table: Option<(Combo, Seat)>,
    pub consecutive_passes: u8,
    pub history: Vec<(Seat, PlayOrPass)>,
    pub finished_order: Vec<Seat>,
    pub phase: Phase,
    /// Hands at the start of play, after any tribute exchange.
    pub initial_hands: [CardSet; 4],
}

impl MiniGameState {
    /// A mini game ready to play, with `deal.leader` on lead.
    pub fn new(deal: &Deal, levels: [Level; 2], acting_level: Level) -> MiniGameState {
        MiniGameState {
            hands: deal.hands,
            levels,
            acting_level,
            current: deal.leader,
            table: None,
            consecutive_passes: 0,
            history: Vec::new(),
            finished_order: Vec::new(),
            phase: Phase::Play,
            initial_hands: deal.hands,
        }
    }

    /// Both teams at level 2, no tribute: the evaluation unit.
    pub fn evaluation(deal: &Deal) -> MiniGameState {
        MiniGameState::new(deal, [Level::TWO; 2], Level::TWO)
    }

    /// A mini game that must first run the tribute phase.
    pub fn awaiting_tribute(deal: &Deal, levels: [Level; 2], acting_level: Level) -> MiniGameState {
        let mut state = MiniGameState::new(deal, levels, acting_level);
        state.phase = Phase::Tribute;
        state
    }

    /// Runs the tribute exchange against the previous result and moves to
    /// the play phase.
    pub fn resolve_tribute(&mut self, prev: &MiniResult) -> Result<TributeRecord> {
        if self.phase != Phase::Tribute {
            return Err(Error::WrongPhase(self.phase.name()));
        }
        let record = tribute(prev, &self.hands, self.acting_level);
        record.apply(&mut self.hands);
        self.current = record.leader;
        self.initial_hands = self.hands;
        self.phase = Phase::Play;
        Ok(record)
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn is_finished(&self, seat: Seat) -> bool {
        self.hands[seat.index()].is_empty()
    }

    pub fn hand(&self, seat: Seat) -> CardSet {
        self.hands[seat.index()]
    }

    /// True when the seat to act has no live combination to answer.
    pub fn is_leading(&self) -> bool {
        self.table.is_none()
    }

    pub fn live_seats(&self) -> impl Iterator<Item = Seat> + '_ {
        Seat::ALL.into_iter().filter(|s| !self.is_finished(*s))
    }

    /// Cards played so far by `seat` in this mini game.
    pub fn played_by(&self, seat: Seat) -> CardSet {
        self.history
            .iter()
            .filter(|(s, _)| *s == seat)
            .fold(CardSet::EMPTY, |acc, (_, a)| acc.union(a.cards()))
    }

    pub fn played_cards(&self) -> CardSet {
        self.history
            .iter()
            .fold(CardSet::EMPTY, |acc, (_, a)| acc.union(a.cards()))
    }

    /// The most recent action of `seat`, if it has acted.
    pub fn last_action_of(&self, seat: Seat) -> Option<&PlayOrPass> {
        self.history
            .iter()
            .rev()
            .find(|(s, _)| *s == seat)
            .map(|(_, a)| a)
    }

    fn next_live_after(&self, seat: Seat) -> Seat {
        (1..=4)
            .map(|k| seat.offset(k))
            .find(|s| !self.is_finished(*s))
            .unwrap_or(seat)
    }

    pub fn legal_actions(&self) -> Result<Vec<PlayOrPass>> {
        if self.phase != Phase::Play {
            return Err(Error::WrongPhase(self.phase.name()));
        }
        let hand = self.hand(self.current);
        let level = self.acting_level;
        Ok(match &self.table {
            None => legal_leads(hand, level)
                .into_iter()
                .map(PlayOrPass::Play)
                .collect(),
            Some((last, _)) => std::iter::once(PlayOrPass::Pass)
                .chain(
                    legal_follows(hand, last, level)
                        .into_iter()
                        .map(PlayOrPass::Play),
                )
                .collect(),
        })
    }

    /// Checks legality without generating the full action list.
    pub fn check_legal(&self, action: &PlayOrPass) -> Result<()> {
        if self.phase != Phase::Play {
            return Err(Error::WrongPhase(self.phase.name()));
        }
        match (action, &self.table) {
            (PlayOrPass::Pass, None) => {
                Err(Error::IllegalAction("cannot pass when leading".into()))
            }
            (PlayOrPass::Pass, Some(_)) => Ok(()),
            (PlayOrPass::Play(combo), table) => {
                if !combo.cards.is_subset(self.hand(self.current)) {
                    return Err(Error::IllegalAction(format!("{combo} not in hand")));
                }
                let valid = classify(combo.cards, self.acting_level)
                    .iter()
                    .any(|c| c.kind == combo.kind && c.rank == combo.rank);
                if !valid {
                    return Err(Error::IllegalAction(format!(
                        "{combo} is not a valid combination"
                    )));
                }
                if let Some((last, _)) = table {
                    if !beats(combo, last) {
                        return Err(Error::IllegalAction(format!(
                            "{combo} does not beat {last}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn apply(&mut self, action: PlayOrPass) -> Result<()> {
        self.check_legal(&action)?;
        self.apply_unchecked(action);
        Ok(())
    }

    /// Applies an action already known to be legal.
    pub fn apply_unchecked(&mut self, action: PlayOrPass) {
        let seat = self.current;
        match &action {
            PlayOrPass::Play(combo) => {
                let hand = &mut self.hands[seat.index()];
                *hand = hand.difference(combo.cards);
                self.table = Some((combo.clone(), seat));
                self.consecutive_passes = 0;
                let emptied = hand.is_empty();
                self.history.push((seat, action));
                if emptied {
                    self.finished_order.push(seat);
                    if self.finished_order.len() >= 3 {
                        self.phase = Phase::Done;
                        return;
                    }
                }
                self.current = self.next_live_after(seat);
            }
            PlayOrPass::Pass => {
                self.history.push((seat, action));
                self.consecutive_passes += 1;
                let (_, owner) = self.table.as_ref().expect("pass only while following");
                let owner = *owner;
                let live = self.live_seats().count();
                let needed = if self.is_finished(owner) {
                    live
                } else {
                    live - 1
                };
                if self.consecutive_passes as usize >= needed {
                    self.table = None;
                    self.consecutive_passes = 0;
                    self.current = if !self.is_finished(owner) {
                        owner
                    } else if !self.is_finished(owner.teammate()) {
                        owner.teammate()
                    } else {
                        self.next_live_after(owner)
                    };
                } else {
                    self.current = self.next_live_after(seat);
                }
            }
        }
    }

    /// Standing per seat once the mini game is done.
    pub fn standings(&self) -> Option<[Standing; 4]> {
        if !self.is_done() {
            return None;
        }
        Some(standings_from_order(&self.full_order()))
    }

    /// Finishing order with the last remaining seat appended.
    pub fn full_order(&self) -> Vec<Seat> {
        let mut order = self.finished_order.clone();
        for s in Seat::ALL {
            if !order.contains(&s) {
                order.push(s);
            }
        }
        order
    }

    pub fn result(&self) -> Option<MiniResult> {
        self.is_done().then(|| MiniResult {
            order: self.full_order(),
        })
    }
}

pub fn standings_from_order(order: &[Seat]) -> [Standing; 4] {
    const BY_PLACE: [Standing; 4] = [
        Standing::Banker,
        Standing::Follower,
        Standing::Third,
        Standing::Dweller,
    ];
    let mut out = [Standing::Dweller; 4];
    for (place, seat) in order.iter().enumerate() {
        out[seat.index()] = BY_PLACE[place];
    }
    out
}
