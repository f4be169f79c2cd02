use serde::{Deserialize, Serialize};

use crate::cards::{is_wild_id, single_rank_ordinal, CardId, CardSet, Level, Rank, Seat};

use super::MiniResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TributeRecord {
    /// (from, to, card)
    pub donations: Vec<(Seat, Seat, CardId)>,
    pub returns: Vec<(Seat, Seat, CardId)>,
    pub denied: bool,
    pub leader: Seat,
}

impl TributeRecord {
    pub fn apply(&self, hands: &mut [CardSet; 4]) {
        for &(from, to, card) in self.donations.iter().chain(self.returns.iter()) {
            hands[from.index()].remove(card);
            hands[to.index()].insert(card);
        }
    }
}

/// The donor's highest-ranked card, wilds excluded; lowest id on ties.
pub fn tribute_card(hand: CardSet, level: Level) -> Option<CardId> {
    hand.iter()
        .filter(|c| !is_wild_id(*c, level))
        .max_by_key(|c| {
            (
                single_rank_ordinal(c.rank(), level),
                std::cmp::Reverse(c.index()),
            )
        })
}

/// The lowest-ranked card with face value at most ten, non-wild first,
/// lowest id on ties. Falls back to the lowest card when none qualifies.
pub fn return_card(hand: CardSet, level: Level) -> Option<CardId> {
    let order_key = |c: &CardId| {
        (
            is_wild_id(*c, level),
            single_rank_ordinal(c.rank(), level),
            c.index(),
        )
    };
    let small = hand
        .iter()
        .filter(|c| c.rank().face_value().is_some_and(|v| v <= 10))
        .min_by_key(order_key);
    small.or_else(|| hand.iter().min_by_key(order_key))
}

/// Decides the tribute exchange before a mini game. `hands` are the fresh
/// deal; `level` is the level the new mini game is played at.
pub fn tribute(prev: &MiniResult, hands: &[CardSet; 4], level: Level) -> TributeRecord {
    let [banker, follower, third, dweller] =
        [prev.order[0], prev.order[1], prev.order[2], prev.order[3]];
    let double = third.team() == dweller.team();
    let donors: Vec<Seat> = if double {
        vec![third, dweller]
    } else {
        vec![dweller]
    };

    let red_jokers: usize = donors
        .iter()
        .map(|d| {
            hands[d.index()]
                .iter()
                .filter(|c| c.rank() == Rank::RedJoker)
                .count()
        })
        .sum();
    if red_jokers == 2 {
        return TributeRecord {
            donations: vec![],
            returns: vec![],
            denied: true,
            leader: banker,
        };
    }

    let mut donations = Vec::new();
    for &d in &donors {
        if let Some(card) = tribute_card(hands[d.index()], level) {
            donations.push((d, card));
        }
    }

    let assigned: Vec<(Seat, Seat, CardId)> = if !double {
        donations.iter().map(|&(d, c)| (d, banker, c)).collect()
    } else {
        let (a, b) = (donations[0], donations[1]);
        let rank = |c: CardId| single_rank_ordinal(c.rank(), level);
        if rank(a.1) == rank(b.1) {
            // Equal cards go to the opponent farthest clockwise from each
            // donor, which is the seat just before the donor.
            donations
                .iter()
                .map(|&(d, c)| (d, d.offset(3), c))
                .collect()
        } else {
            let (high, low) = if rank(a.1) > rank(b.1) {
                (a, b)
            } else {
                (b, a)
            };
            vec![(high.0, banker, high.1), (low.0, follower, low.1)]
        }
    };

    let mut after = *hands;
    for &(from, to, card) in &assigned {
        after[from.index()].remove(card);
        after[to.index()].insert(card);
    }
    let returns = assigned
        .iter()
        .filter_map(|&(donor, recipient, _)| {
            return_card(after[recipient.index()], level).map(|c| (recipient, donor, c))
        })
        .collect();
    let leader = assigned
        .iter()
        .find(|(_, to, _)| *to == banker)
        .map_or(banker, |(from, _, _)| *from);
    TributeRecord {
        donations: assigned,
        returns,
        denied: false,
        leader,
    }
}
