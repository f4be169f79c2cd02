//! Brute-force reference for legal-move generation.
//!
//! Enumerates every subset of a hand with at most ten cards, every
//! assignment of the wild cards in it to a concrete non-joker card, and
//! pattern-matches the resulting concrete multiset. Shares nothing with
//! the template generator except the card types and `beats`.

use std::collections::BTreeSet;

use guanzero::cards::{is_wild_id, single_rank_ordinal, CardId, CardSet, Level, Rank, Suit};
use guanzero::combos::{beats, Combo, ComboType};

pub type Key = (u128, ComboType, u8);

/// Face value with the ace high (2..=14); jokers map to 0.
fn face(rank: Rank) -> u8 {
    rank.face_value().unwrap_or(0)
}

/// Declared rank of a run of distinct face values `faces` (sorted), each
/// repeated the same number of times, or `None` if not consecutive.
fn run_rank(faces: &[u8]) -> Option<u8> {
    if faces.contains(&0) {
        return None;
    }
    let consecutive = |v: &[u8]| v.windows(2).all(|w| w[1] == w[0] + 1);
    if consecutive(faces) {
        return Some(faces[0]);
    }
    // Ace counted as one.
    if faces.last() == Some(&14) {
        let mut low: Vec<u8> = faces.iter().map(|&f| if f == 14 { 1 } else { f }).collect();
        low.sort();
        if consecutive(&low) {
            return Some(1);
        }
    }
    None
}

/// All (type, declared rank) readings of a concrete multiset.
pub fn concrete_readings(cards: &[(Rank, Suit)], level: Level) -> Vec<(ComboType, u8)> {
    let n = cards.len();
    let mut out = Vec::new();
    // Count by rank.
    let mut counts = [0u8; 15];
    for (r, _) in cards {
        counts[r.index()] += 1;
    }
    let distinct: Vec<Rank> = Rank::ALL
        .iter()
        .copied()
        .filter(|r| counts[r.index()] > 0)
        .collect();
    let key = |r: Rank| single_rank_ordinal(r, level);
    let all_same = distinct.len() == 1;
    let has_joker = distinct.iter().any(|r| r.is_joker());

    match n {
        1 => out.push((ComboType::Single, key(cards[0].0))),
        2 if all_same => out.push((ComboType::Pair, key(distinct[0]))),
        3 if all_same && !has_joker => out.push((ComboType::Triple, key(distinct[0]))),
        _ => {}
    }
    if n >= 4 && all_same && !has_joker {
        out.push((ComboType::Bomb(n as u8), key(distinct[0])));
    }
    if n == 4 && counts[Rank::BlackJoker.index()] == 2 && counts[Rank::RedJoker.index()] == 2 {
        out.push((ComboType::JokerBomb, 0));
    }
    if n == 5 && distinct.len() == 2 {
        let (a, b) = (distinct[0], distinct[1]);
        for (t, p) in [(a, b), (b, a)] {
            if counts[t.index()] == 3 && counts[p.index()] == 2 && !t.is_joker() {
                out.push((ComboType::FullHouse, key(t)));
            }
        }
    }
    if n == 5 && distinct.len() == 5 {
        let faces: Vec<u8> = distinct.iter().map(|&r| face(r)).collect();
        if let Some(rank) = run_rank(&faces) {
            out.push((ComboType::Straight, rank));
            if cards.iter().all(|(_, s)| *s == cards[0].1) {
                out.push((ComboType::StraightFlush, rank));
            }
        }
    }
    if n == 6 && distinct.len() == 3 && distinct.iter().all(|r| counts[r.index()] == 2) {
        let faces: Vec<u8> = distinct.iter().map(|&r| face(r)).collect();
        if let Some(rank) = run_rank(&faces) {
            out.push((ComboType::Tube, rank));
        }
    }
    if n == 6 && distinct.len() == 2 && distinct.iter().all(|r| counts[r.index()] == 3) {
        let faces: Vec<u8> = distinct.iter().map(|&r| face(r)).collect();
        if let Some(rank) = run_rank(&faces) {
            out.push((ComboType::Plate, rank));
        }
    }
    out
}

fn wild_choices() -> Vec<(Rank, Suit)> {
    let mut v = Vec::with_capacity(52);
    for r in Rank::FACES {
        for s in Suit::REAL {
            v.push((r, s));
        }
    }
    v
}

/// All (cards, type, rank) readings of exactly `subset`.
pub fn classify_subset(subset: &[CardId], level: Level, into: &mut BTreeSet<Key>) {
    let bits = subset.iter().fold(0u128, |acc, id| acc | 1 << id.index());
    let mut fixed: Vec<(Rank, Suit)> = Vec::new();
    let mut wild_count = 0;
    for id in subset {
        if is_wild_id(*id, level) {
            wild_count += 1;
        } else {
            let c = id.card();
            fixed.push((c.rank, c.suit));
        }
    }
    let choices = wild_choices();
    let assign = |cards: &[(Rank, Suit)], into: &mut BTreeSet<Key>| {
        for (kind, rank) in concrete_readings(cards, level) {
            into.insert((bits, kind, rank));
        }
    };
    match wild_count {
        0 => assign(&fixed, into),
        1 => {
            for w in &choices {
                let mut cards = fixed.clone();
                cards.push(*w);
                assign(&cards, into);
            }
        }
        2 => {
            for w1 in &choices {
                for w2 in &choices {
                    let mut cards = fixed.clone();
                    cards.push(*w1);
                    cards.push(*w2);
                    assign(&cards, into);
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Every combination formable from `hand` as (cards, type, rank).
pub fn oracle_leads(hand: CardSet, level: Level) -> BTreeSet<Key> {
    let ids = hand.to_vec();
    let n = ids.len();
    let mut out = BTreeSet::new();
    let mut subset = Vec::with_capacity(10);
    for mask in 1u32..(1 << n) {
        if mask.count_ones() > 10 {
            continue;
        }
        subset.clear();
        subset.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| ids[i]));
        classify_subset(&subset, level, &mut out);
    }
    out
}

pub fn key_to_combo(key: &Key) -> Combo {
    Combo {
        kind: key.1,
        rank: key.2,
        cards: CardSet::from_bits(key.0),
        wild_targets: Vec::new(),
    }
}

pub fn oracle_follows(hand: CardSet, last: &Combo, level: Level) -> BTreeSet<Key> {
    oracle_leads(hand, level)
        .into_iter()
        .filter(|k| beats(&key_to_combo(k), last))
        .collect()
}

pub fn keys_of(combos: &[Combo]) -> BTreeSet<Key> {
    combos
        .iter()
        .map(|c| (c.cards.bits(), c.kind, c.rank))
        .collect()
}

/// Random test hand: sometimes dense in a few ranks so sequences, bombs
/// and full houses appear, with a controlled number of wilds.
pub fn random_hand(rng: &mut impl rand::Rng, level: Level, max_size: usize) -> CardSet {
    use rand::seq::SliceRandom;
    let size = rng.random_range(1..=max_size);
    let wilds: Vec<CardId> = CardId::all().filter(|c| is_wild_id(*c, level)).collect();
    let n_wild = rng.random_range(0..=2usize).min(size);
    let dense = rng.random_bool(0.5);
    let lo = rng.random_range(0..13usize);
    let span = rng.random_range(3..=6usize);
    let mut pool: Vec<CardId> = CardId::all()
        .filter(|c| !is_wild_id(*c, level))
        .filter(|c| {
            if !dense {
                return true;
            }
            let r = c.rank();
            r.is_joker() || (0..span).any(|k| Rank::FACES[(lo + k) % 13] == r)
        })
        .collect();
    pool.shuffle(rng);
    let mut hand: CardSet = wilds.into_iter().take(n_wild).collect();
    for id in pool {
        if hand.len() >= size {
            break;
        }
        hand.insert(id);
    }
    hand
}
