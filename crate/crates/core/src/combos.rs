//! Playable combinations, the trump relation and legal-move generation.
//!
//! Generation is template driven: every combination type is a list of rank
//! slots (rank, how many cards, optional suit). Each slot is filled with a
//! subset of the hand's natural cards of that rank, topped up with wild
//! cards. Two generated combos are the same action when they share
//! physical cards, type and declared rank; among wild assignments that
//! collapse this way the smallest target list is kept.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cards::{is_wild_id, single_rank_ordinal, CardId, CardSet, Level, Rank, Suit};

#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComboType {
    Single,
    Pair,
    Triple,
    /// Two triples of consecutive ranks.
    Plate,
    /// Three pairs of consecutive ranks.
    Tube,
    FullHouse,
    Straight,
    /// Four to ten cards of one rank.
    Bomb(u8),
    StraightFlush,
    JokerBomb,
}

impl ComboType {
    pub fn size(self) -> usize {
        match self {
            ComboType::Single => 1,
            ComboType::Pair => 2,
            ComboType::Triple => 3,
            ComboType::Plate | ComboType::Tube => 6,
            ComboType::FullHouse | ComboType::Straight | ComboType::StraightFlush => 5,
            ComboType::Bomb(n) => n as usize,
            ComboType::JokerBomb => 4,
        }
    }

    /// Position on the bomb ladder, `None` for ordinary combinations:
    /// Bomb(4) < Bomb(5) < StraightFlush < Bomb(6) < ... < Bomb(10) < JokerBomb.
    pub fn bomb_tier(self) -> Option<u8> {
        match self {
            ComboType::Bomb(4) => Some(0),
            ComboType::Bomb(5) => Some(1),
            ComboType::StraightFlush => Some(2),
            ComboType::Bomb(n) => Some(n - 3),
            ComboType::JokerBomb => Some(8),
            _ => None,
        }
    }

    pub fn is_bomb(self) -> bool {
        self.bomb_tier().is_some()
    }

    /// Sequences rank by the face value of their lowest card.
    pub fn is_sequence(self) -> bool {
        matches!(
            self,
            ComboType::Straight | ComboType::StraightFlush | ComboType::Tube | ComboType::Plate
        )
    }

    pub fn name(self) -> String {
        match self {
            ComboType::Single => "single".into(),
            ComboType::Pair => "pair".into(),
            ComboType::Triple => "triple".into(),
            ComboType::Plate => "plate".into(),
            ComboType::Tube => "tube".into(),
            ComboType::FullHouse => "full_house".into(),
            ComboType::Straight => "straight".into(),
            ComboType::Bomb(n) => format!("bomb{n}"),
            ComboType::StraightFlush => "straight_flush".into(),
            ComboType::JokerBomb => "joker_bomb".into(),
        }
    }

    pub fn parse(s: &str) -> Option<ComboType> {
        let t = match s {
            "single" => ComboType::Single,
            "pair" => ComboType::Pair,
            "triple" => ComboType::Triple,
            "plate" => ComboType::Plate,
            "tube" => ComboType::Tube,
            "full_house" => ComboType::FullHouse,
            "straight" => ComboType::Straight,
            "straight_flush" => ComboType::StraightFlush,
            "joker_bomb" => ComboType::JokerBomb,
            other => {
                let n: u8 = other.strip_prefix("bomb")?.parse().ok()?;
                if !(4..=10).contains(&n) {
                    return None;
                }
                ComboType::Bomb(n)
            }
        };
        Some(t)
    }
}

impl fmt::Display for ComboType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The card a wild stands in for. Never a joker.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WildTarget {
    pub rank: Rank,
    pub suit: Suit,
}

/// Declared rank of an A-low sequence.
pub const ACE_LOW_RANK: u8 = 1;

/// Identity of an action: physical cards, type and declared rank.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComboKey {
    pub kind: ComboType,
    pub rank: u8,
    pub cards: CardSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Combo {
    pub kind: ComboType,
    /// For sequences: face value of the lowest card (2..=10, or 1 when
    /// A-low). Otherwise: `single_rank_ordinal` of the combo's rank.
    pub rank: u8,
    pub cards: CardSet,
    /// Sorted by wild card id.
    pub wild_targets: Vec<(CardId, WildTarget)>,
}

impl Combo {
    pub fn key(&self) -> ComboKey {
        ComboKey {
            kind: self.kind,
            rank: self.rank,
            cards: self.cards,
        }
    }

    pub fn size(&self) -> usize {
        self.cards.len()
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.kind, self.cards)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlayOrPass {
    Pass,
    Play(Combo),
}

impl PlayOrPass {
    pub fn is_pass(&self) -> bool {
        matches!(self, PlayOrPass::Pass)
    }

    pub fn combo(&self) -> Option<&Combo> {
        match self {
            PlayOrPass::Pass => None,
            PlayOrPass::Play(c) => Some(c),
        }
    }

    pub fn cards(&self) -> CardSet {
        self.combo().map_or(CardSet::EMPTY, |c| c.cards)
    }
}

impl fmt::Display for PlayOrPass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayOrPass::Pass => f.write_str("pass"),
            PlayOrPass::Play(c) => c.fmt(f),
        }
    }
}

/// True iff `a` may be played over `b`.
pub fn beats(a: &Combo, b: &Combo) -> bool {
    match (a.kind.bomb_tier(), b.kind.bomb_tier()) {
        (None, None) => a.kind == b.kind && a.rank > b.rank,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (Some(ta), Some(tb)) => match ta.cmp(&tb) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a.rank > b.rank,
        },
    }
}

/// Highest declared rank any combination of this type can reach with a
/// full double deck. Used to decide whether a combination is unbeatable
/// within its own type and size.
pub fn max_rank(kind: ComboType, level: Level) -> u8 {
    let lifted = single_rank_ordinal(level.rank(), level);
    match kind {
        ComboType::Single | ComboType::Pair => single_rank_ordinal(Rank::RedJoker, level),
        ComboType::Triple | ComboType::FullHouse => lifted,
        // Eight natural cards exist per rank, so any size up to eight can
        // be formed from the level rank.
        ComboType::Bomb(n) if n <= 8 => lifted,
        // Nine and ten need both wilds on top of eight naturals, which the
        // level rank cannot supply.
        ComboType::Bomb(_) => {
            let top = if level.rank() == Rank::Ace {
                Rank::King
            } else {
                Rank::Ace
            };
            single_rank_ordinal(top, level)
        }
        ComboType::Straight | ComboType::StraightFlush => 10,
        ComboType::Tube => 12,
        ComboType::Plate => 13,
        ComboType::JokerBomb => 0,
    }
}

/// True when no same-type, same-size combination can beat `combo`.
pub fn is_top_ranked(combo: &Combo, level: Level) -> bool {
    combo.rank >= max_rank(combo.kind, level)
}

#[derive(Debug, Copy, Clone)]
struct Slot {
    rank: Rank,
    count: u8,
    suit: Option<Suit>,
}

#[derive(Debug, Clone)]
struct Template {
    kind: ComboType,
    rank: u8,
    slots: Vec<Slot>,
    /// Natural cards that are always part of the combination (joker pairs).
    fixed: CardSet,
}

impl Template {
    fn new(kind: ComboType, rank: u8, slots: Vec<Slot>) -> Template {
        Template {
            kind,
            rank,
            slots,
            fixed: CardSet::EMPTY,
        }
    }
}

fn slot(rank: Rank, count: u8) -> Slot {
    Slot {
        rank,
        count,
        suit: None,
    }
}

/// Natural (non-wild) cards of a hand bucketed by rank and suit.
struct HandIndex {
    by_rank_suit: [[Vec<CardId>; 4]; 13],
    by_rank: [Vec<CardId>; 13],
    black: Vec<CardId>,
    red: Vec<CardId>,
    wilds: Vec<CardId>,
}

impl HandIndex {
    fn new(hand: CardSet, level: Level) -> HandIndex {
        let mut index = HandIndex {
            by_rank_suit: Default::default(),
            by_rank: Default::default(),
            black: Vec::new(),
            red: Vec::new(),
            wilds: Vec::new(),
        };
        for id in hand.iter() {
            let card = id.card();
            if is_wild_id(id, level) {
                index.wilds.push(id);
                continue;
            }
            match card.rank {
                Rank::BlackJoker => index.black.push(id),
                Rank::RedJoker => index.red.push(id),
                r => {
                    index.by_rank[r.index()].push(id);
                    index.by_rank_suit[r.index()][card.suit.index()].push(id);
                }
            }
        }
        index
    }

    fn naturals(&self, s: &Slot) -> &[CardId] {
        match s.suit {
            Some(suit) => &self.by_rank_suit[s.rank.index()][suit.index()],
            None => &self.by_rank[s.rank.index()],
        }
    }
}

fn face_key(rank: Rank, level: Level) -> u8 {
    single_rank_ordinal(rank, level)
}

/// Ranks of a sequence window of `len` ranks starting at face index `start`;
/// start 12 (ace) is the A-low window.
fn window(start: usize, len: usize) -> Option<(Vec<Rank>, u8)> {
    if start == Rank::Ace.index() {
        let mut ranks = vec![Rank::Ace];
        ranks.extend(Rank::FACES[..len - 1].iter().copied());
        Some((ranks, ACE_LOW_RANK))
    } else if start + len <= 13 {
        Some((Rank::FACES[start..start + len].to_vec(), start as u8 + 2))
    } else {
        None
    }
}

fn sequence_templates(kind: ComboType, len: usize, per_rank: u8, out: &mut Vec<Template>) {
    for start in 0..13 {
        let Some((ranks, rank)) = window(start, len) else {
            continue;
        };
        if kind == ComboType::StraightFlush {
            for suit in Suit::REAL {
                let slots = ranks
                    .iter()
                    .map(|&r| Slot {
                        rank: r,
                        count: 1,
                        suit: Some(suit),
                    })
                    .collect();
                out.push(Template::new(kind, rank, slots));
            }
        } else {
            let slots = ranks.iter().map(|&r| slot(r, per_rank)).collect();
            out.push(Template::new(kind, rank, slots));
        }
    }
}

/// Every template of `kind` that the hand could possibly fill.
fn templates_for(kind: ComboType, index: &HandIndex, level: Level, out: &mut Vec<Template>) {
    let w = index.wilds.len();
    let fits = |r: Rank, k: usize| index.by_rank[r.index()].len() + w >= k;
    match kind {
        ComboType::Single => {
            // Naturals and jokers are handled as one-slot templates; wilds
            // fill the slot of any face rank.
            for r in Rank::FACES {
                if fits(r, 1) {
                    out.push(Template::new(kind, face_key(r, level), vec![slot(r, 1)]));
                }
            }
            for (jokers, r) in [
                (&index.black, Rank::BlackJoker),
                (&index.red, Rank::RedJoker),
            ] {
                for &j in jokers.iter() {
                    let mut t = Template::new(kind, face_key(r, level), vec![]);
                    t.fixed = CardSet::EMPTY.with(j);
                    out.push(t);
                }
            }
        }
        ComboType::Pair | ComboType::Triple | ComboType::Bomb(_) => {
            let k = kind.size();
            for r in Rank::FACES {
                if fits(r, k) {
                    out.push(Template::new(
                        kind,
                        face_key(r, level),
                        vec![slot(r, k as u8)],
                    ));
                }
            }
            if kind == ComboType::Pair {
                for (jokers, r) in [
                    (&index.black, Rank::BlackJoker),
                    (&index.red, Rank::RedJoker),
                ] {
                    if jokers.len() == 2 {
                        let mut t = Template::new(kind, face_key(r, level), vec![]);
                        t.fixed = jokers.iter().copied().collect();
                        out.push(t);
                    }
                }
            }
        }
        ComboType::FullHouse => {
            for t in Rank::FACES {
                if !fits(t, 3) {
                    continue;
                }
                let key = face_key(t, level);
                for p in Rank::FACES {
                    if p != t && fits(p, 2) {
                        out.push(Template::new(kind, key, vec![slot(t, 3), slot(p, 2)]));
                    }
                }
                for jokers in [&index.black, &index.red] {
                    if jokers.len() == 2 {
                        let mut tpl = Template::new(kind, key, vec![slot(t, 3)]);
                        tpl.fixed = jokers.iter().copied().collect();
                        out.push(tpl);
                    }
                }
            }
        }
        ComboType::Straight => sequence_templates(kind, 5, 1, out),
        ComboType::StraightFlush => sequence_templates(kind, 5, 1, out),
        ComboType::Tube => sequence_templates(kind, 3, 2, out),
        ComboType::Plate => sequence_templates(kind, 2, 3, out),
        ComboType::JokerBomb => {
            if index.black.len() == 2 && index.red.len() == 2 {
                let mut t = Template::new(kind, 0, vec![]);
                t.fixed = index
                    .black
                    .iter()
                    .chain(index.red.iter())
                    .copied()
                    .collect();
                out.push(t);
            }
        }
    }
}

const ALL_KINDS: [ComboType; 16] = [
    ComboType::Single,
    ComboType::Pair,
    ComboType::Triple,
    ComboType::Plate,
    ComboType::Tube,
    ComboType::FullHouse,
    ComboType::Straight,
    ComboType::Bomb(4),
    ComboType::Bomb(5),
    ComboType::StraightFlush,
    ComboType::Bomb(6),
    ComboType::Bomb(7),
    ComboType::Bomb(8),
    ComboType::Bomb(9),
    ComboType::Bomb(10),
    ComboType::JokerBomb,
];

type Targets = Vec<(CardId, WildTarget)>;

#[derive(Default)]
struct Collector {
    found: HashMap<ComboKey, Targets>,
}

impl Collector {
    fn add(&mut self, key: ComboKey, targets: Targets) {
        self.found
            .entry(key)
            .and_modify(|cur| {
                if targets < *cur {
                    *cur = targets.clone();
                }
            })
            .or_insert(targets);
    }

    fn into_sorted(self) -> Vec<Combo> {
        let mut combos: Vec<Combo> = self
            .found
            .into_iter()
            .map(|(key, wild_targets)| Combo {
                kind: key.kind,
                rank: key.rank,
                cards: key.cards,
                wild_targets,
            })
            .collect();
        combos.sort_by_key(|a| a.key());
        combos
    }
}

/// Calls `f` with every subset of `items` of exactly `k` elements.
fn for_each_subset(items: &[CardId], k: usize, mut f: impl FnMut(CardSet)) {
    let n = items.len();
    if k > n {
        return;
    }
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            let set = items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, id)| *id)
                .collect();
            f(set);
        }
    }
}

fn expand(template: &Template, index: &HandIndex, out: &mut Collector) {
    let mut fills: Vec<WildTarget> = Vec::new();
    expand_slot(template, index, 0, template.fixed, &mut fills, out);
}

fn expand_slot(
    template: &Template,
    index: &HandIndex,
    at: usize,
    chosen: CardSet,
    fills: &mut Vec<WildTarget>,
    out: &mut Collector,
) {
    let wilds = &index.wilds;
    if at == template.slots.len() {
        emit(template, wilds, chosen, fills, out);
        return;
    }
    let s = template.slots[at];
    let naturals = index.naturals(&s);
    let count = s.count as usize;
    let wilds_left = wilds.len() - fills.len();
    let lo = count.saturating_sub(wilds_left);
    let hi = count.min(naturals.len());
    for j in lo..=hi {
        let need = count - j;
        let target = WildTarget {
            rank: s.rank,
            suit: s.suit.unwrap_or(Suit::Spades),
        };
        for_each_subset(naturals, j, |subset| {
            let before = fills.len();
            fills.extend(std::iter::repeat_n(target, need));
            expand_slot(template, index, at + 1, chosen.union(subset), fills, out);
            fills.truncate(before);
        });
    }
}

fn emit(
    template: &Template,
    wilds: &[CardId],
    chosen: CardSet,
    fills: &[WildTarget],
    out: &mut Collector,
) {
    let m = fills.len();
    let mut sorted_fills = fills.to_vec();
    sorted_fills.sort();
    let mut push = |used: &[CardId]| {
        let cards = used.iter().fold(chosen, |acc, id| acc.with(*id));
        let targets = used
            .iter()
            .copied()
            .zip(sorted_fills.iter().copied())
            .collect();
        out.add(
            ComboKey {
                kind: template.kind,
                rank: template.rank,
                cards,
            },
            targets,
        );
    };
    match m {
        0 => push(&[]),
        1 => {
            for w in wilds {
                push(std::slice::from_ref(w));
            }
        }
        2 => push(&wilds[..2]),
        _ => unreachable!("at most two wild cards exist"),
    }
}

fn generate(
    hand: CardSet,
    level: Level,
    mut keep_template: impl FnMut(&Template) -> bool,
) -> Vec<Combo> {
    let index = HandIndex::new(hand, level);
    let mut templates = Vec::new();
    for kind in ALL_KINDS {
        if kind.size() <= hand.len() {
            templates_for(kind, &index, level, &mut templates);
        }
    }
    let mut out = Collector::default();
    for t in templates.iter().filter(|t| keep_template(t)) {
        expand(t, &index, &mut out);
    }
    out.into_sorted()
}

/// Every combination formable from `hand`. Never empty for a non-empty hand.
pub fn legal_leads(hand: CardSet, level: Level) -> Vec<Combo> {
    generate(hand, level, |_| true)
}

/// Every combination formable from `hand` that beats `last`.
pub fn legal_follows(hand: CardSet, last: &Combo, level: Level) -> Vec<Combo> {
    let last_tier = last.kind.bomb_tier();
    generate(hand, level, |t| match (t.kind.bomb_tier(), last_tier) {
        (None, None) => t.kind == last.kind && t.rank > last.rank,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => a > b || (a == b && t.rank > last.rank),
    })
}

/// Every interpretation of exactly these cards as a playable combination.
pub fn classify(cards: CardSet, level: Level) -> Vec<Combo> {
    let n = cards.len();
    if n == 0 || n > 10 {
        return Vec::new();
    }
    generate(cards, level, |t| t.kind.size() == n)
        .into_iter()
        .filter(|c| c.cards == cards)
        .collect()
}

/// Looks up the legal combination with this identity, if any.
pub fn find_combo(
    hand: CardSet,
    kind: ComboType,
    rank: u8,
    cards: CardSet,
    level: Level,
) -> Option<Combo> {
    if !cards.is_subset(hand) {
        return None;
    }
    classify(cards, level)
        .into_iter()
        .find(|c| c.kind == kind && c.rank == rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::{card_index, Card};

    fn c(deck: u8, suit: Suit, rank: Rank) -> CardId {
        card_index(Card::new(deck, suit, rank).unwrap())
    }

    fn set(ids: &[CardId]) -> CardSet {
        ids.iter().copied().collect()
    }

    fn lv(r: Rank) -> Level {
        Level::new(r).unwrap()
    }

    #[test]
    fn mixed_jokers_are_not_a_pair() {
        let cards = set(&[
            c(0, Suit::None, Rank::BlackJoker),
            c(0, Suit::None, Rank::RedJoker),
        ]);
        assert!(classify(cards, Level::TWO).is_empty());
    }

    #[test]
    fn four_jokers_form_joker_bomb() {
        let cards = set(&[
            c(0, Suit::None, Rank::BlackJoker),
            c(1, Suit::None, Rank::BlackJoker),
            c(0, Suit::None, Rank::RedJoker),
            c(1, Suit::None, Rank::RedJoker),
        ]);
        let found = classify(cards, Level::TWO);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, ComboType::JokerBomb);
    }

    #[test]
    fn two_wilds_and_two_kings_at_level_five() {
        let level = lv(Rank::Five);
        let cards = set(&[
            c(0, Suit::Hearts, Rank::Five),
            c(1, Suit::Hearts, Rank::Five),
            c(0, Suit::Spades, Rank::King),
            c(0, Suit::Diamonds, Rank::King),
        ]);
        let found = classify(cards, level);
        let kinds: Vec<_> = found.iter().map(|c| (c.kind, c.rank)).collect();
        assert_eq!(
            kinds,
            vec![(ComboType::Bomb(4), single_rank_ordinal(Rank::King, level))]
        );
        let targets = &found[0].wild_targets;
        assert_eq!(targets.len(), 2);
        assert!(targets.iter().all(|(_, t)| t.rank == Rank::King));
    }

    #[test]
    fn ace_low_sequences_rank_one() {
        let straight = set(&[
            c(0, Suit::Spades, Rank::Ace),
            c(0, Suit::Clubs, Rank::Two),
            c(0, Suit::Spades, Rank::Three),
            c(0, Suit::Diamonds, Rank::Four),
            c(0, Suit::Spades, Rank::Five),
        ]);
        let found = classify(straight, lv(Rank::Nine));
        assert_eq!(found.len(), 1);
        assert_eq!(
            (found[0].kind, found[0].rank),
            (ComboType::Straight, ACE_LOW_RANK)
        );

        let plate = set(&[
            c(0, Suit::Spades, Rank::Ace),
            c(1, Suit::Spades, Rank::Ace),
            c(0, Suit::Clubs, Rank::Ace),
            c(0, Suit::Spades, Rank::Two),
            c(1, Suit::Spades, Rank::Two),
            c(0, Suit::Clubs, Rank::Two),
        ]);
        let found = classify(plate, lv(Rank::Nine));
        assert_eq!(found.len(), 1);
        assert_eq!(
            (found[0].kind, found[0].rank),
            (ComboType::Plate, ACE_LOW_RANK)
        );
    }

    #[test]
    fn no_wraparound_straight() {
        let cards = set(&[
            c(0, Suit::Spades, Rank::Jack),
            c(0, Suit::Clubs, Rank::Queen),
            c(0, Suit::Spades, Rank::King),
            c(0, Suit::Diamonds, Rank::Ace),
            c(0, Suit::Spades, Rank::Two),
        ]);
        assert!(classify(cards, lv(Rank::Nine)).is_empty());
    }

    #[test]
    fn level_cards_face_value_in_sequences() {
        // Level 7: 5-6-7-8-9 is a straight of rank 5 even though 7 is lifted.
        let cards = set(&[
            c(0, Suit::Spades, Rank::Five),
            c(0, Suit::Clubs, Rank::Six),
            c(0, Suit::Spades, Rank::Seven),
            c(0, Suit::Diamonds, Rank::Eight),
            c(0, Suit::Spades, Rank::Nine),
        ]);
        let found = classify(cards, lv(Rank::Seven));
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].rank, 5);
    }

    #[test]
    fn same_suit_straight_reads_both_ways() {
        let cards = set(&[
            c(0, Suit::Clubs, Rank::Three),
            c(0, Suit::Clubs, Rank::Four),
            c(0, Suit::Clubs, Rank::Five),
            c(0, Suit::Clubs, Rank::Six),
            c(0, Suit::Clubs, Rank::Seven),
        ]);
        let kinds: Vec<_> = classify(cards, Level::TWO).iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![ComboType::Straight, ComboType::StraightFlush]);
    }

    fn combo(kind: ComboType, rank: u8) -> Combo {
        Combo {
            kind,
            rank,
            cards: CardSet::EMPTY,
            wild_targets: vec![],
        }
    }

    #[test]
    fn bomb_ladder() {
        let ladder = [
            combo(ComboType::Bomb(4), 13),
            combo(ComboType::Bomb(5), 0),
            combo(ComboType::StraightFlush, 1),
            combo(ComboType::Bomb(6), 0),
            combo(ComboType::Bomb(7), 0),
            combo(ComboType::Bomb(8), 0),
            combo(ComboType::Bomb(9), 0),
            combo(ComboType::Bomb(10), 12),
            combo(ComboType::JokerBomb, 0),
        ];
        for i in 0..ladder.len() {
            for j in 0..ladder.len() {
                assert_eq!(beats(&ladder[i], &ladder[j]), i > j, "{i} vs {j}");
            }
        }
        let big_single = combo(ComboType::Single, 15);
        assert!(beats(&ladder[0], &big_single));
        assert!(!beats(&big_single, &ladder[0]));
    }

    #[test]
    fn rank_comparisons() {
        let level = lv(Rank::Five);
        let single = |r: Rank| combo(ComboType::Single, single_rank_ordinal(r, level));
        assert!(beats(&single(Rank::Five), &single(Rank::Ace)));
        assert!(beats(&single(Rank::RedJoker), &single(Rank::BlackJoker)));
        assert!(beats(
            &combo(ComboType::Straight, 2),
            &combo(ComboType::Straight, ACE_LOW_RANK)
        ));
        assert!(!beats(
            &combo(ComboType::Pair, 9),
            &combo(ComboType::Single, 3)
        ));
        assert!(!beats(
            &combo(ComboType::Pair, 9),
            &combo(ComboType::Pair, 9)
        ));
    }

    #[test]
    fn single_card_hand_has_one_lead() {
        let hand = set(&[c(0, Suit::Clubs, Rank::Nine)]);
        let leads = legal_leads(hand, Level::TWO);
        assert_eq!(leads.len(), 1);
        assert_eq!(leads[0].kind, ComboType::Single);
    }

    #[test]
    fn four_of_a_kind_leads() {
        let hand = set(&[
            c(0, Suit::Clubs, Rank::Nine),
            c(1, Suit::Clubs, Rank::Nine),
            c(0, Suit::Spades, Rank::Nine),
            c(0, Suit::Diamonds, Rank::Nine),
        ]);
        let leads = legal_leads(hand, Level::TWO);
        let count = |k| leads.iter().filter(|c| c.kind == k).count();
        assert_eq!(count(ComboType::Single), 4);
        assert_eq!(count(ComboType::Pair), 6);
        assert_eq!(count(ComboType::Triple), 4);
        assert_eq!(count(ComboType::Bomb(4)), 1);
        assert_eq!(leads.len(), 15);
    }

    #[test]
    fn nothing_follows_joker_bomb() {
        let mut hand = CardSet::FULL;
        for j in [Rank::BlackJoker, Rank::RedJoker] {
            hand.remove(c(0, Suit::None, j));
        }
        let jb = combo(ComboType::JokerBomb, 0);
        assert!(legal_follows(hand, &jb, Level::TWO).is_empty());
    }

    #[test]
    fn red_joker_single_needs_a_bomb() {
        let hand = set(&[
            c(0, Suit::Clubs, Rank::Nine),
            c(0, Suit::Spades, Rank::Ace),
            c(1, Suit::None, Rank::RedJoker),
        ]);
        let last = combo(
            ComboType::Single,
            single_rank_ordinal(Rank::RedJoker, Level::TWO),
        );
        assert!(legal_follows(hand, &last, Level::TWO).is_empty());
    }

    #[test]
    fn wilds_never_target_jokers_and_follows_beat() {
        let level = lv(Rank::Seven);
        let hand: CardSet = [
            c(0, Suit::Hearts, Rank::Seven),
            c(1, Suit::Hearts, Rank::Seven),
            c(0, Suit::Clubs, Rank::Eight),
            c(0, Suit::Clubs, Rank::Nine),
            c(1, Suit::Spades, Rank::Nine),
            c(0, Suit::None, Rank::BlackJoker),
            c(1, Suit::None, Rank::BlackJoker),
            c(0, Suit::Diamonds, Rank::Ten),
        ]
        .into_iter()
        .collect();
        let leads = legal_leads(hand, level);
        for l in &leads {
            assert!(l.wild_targets.iter().all(|(_, t)| !t.rank.is_joker()));
            assert!(l.cards.is_subset(hand));
            let follows = legal_follows(hand, l, level);
            assert!(follows.iter().all(|f| beats(f, l)));
        }
    }

    #[test]
    fn top_ranked_combos() {
        let level = lv(Rank::Jack);
        let triple_level = combo(ComboType::Triple, single_rank_ordinal(Rank::Jack, level));
        assert!(is_top_ranked(&triple_level, level));
        let single_two = combo(ComboType::Single, single_rank_ordinal(Rank::Two, level));
        assert!(!is_top_ranked(&single_two, level));
        assert!(is_top_ranked(&combo(ComboType::Straight, 10), level));
        assert!(!is_top_ranked(&combo(ComboType::Straight, 9), level));
    }

    #[test]
    fn combo_type_names_roundtrip() {
        for k in ALL_KINDS {
            assert_eq!(ComboType::parse(&k.name()), Some(k));
        }
        assert_eq!(ComboType::parse("bomb11"), None);
    }
}
