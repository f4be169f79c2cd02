//! Physical cards, the 108-slot index layout and dealing.
//!
//! The layout is an 8 x 15 grid. Rows 0-3 hold deck 0 (Spades, Hearts,
//! Clubs, Diamonds), rows 4-7 hold deck 1 in the same suit order. Columns
//! 0-12 are the faces 2..A. Columns 13 and 14 only exist on rows 3 and 7,
//! where they hold that deck's black and red joker. A `CardId` is the
//! row-major position of a card in this grid with the 12 unused cells
//! skipped, so ids run from 0 to 107.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DECK_SIZE: usize = 108;
pub const HAND_SIZE: usize = 27;
/// Face ranks 2..A.
pub const FACE_COUNT: usize = 13;

#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rank {
    Two,
    Three,
    Four,
    Five,
    Six,
    Seven,
    Eight,
    Nine,
    Ten,
    Jack,
    Queen,
    King,
    Ace,
    BlackJoker,
    RedJoker,
}

impl Rank {
    pub const ALL: [Rank; 15] = [
        Rank::Two,
        Rank::Three,
        Rank::Four,
        Rank::Five,
        Rank::Six,
        Rank::Seven,
        Rank::Eight,
        Rank::Nine,
        Rank::Ten,
        Rank::Jack,
        Rank::Queen,
        Rank::King,
        Rank::Ace,
        Rank::BlackJoker,
        Rank::RedJoker,
    ];

    pub const FACES: [Rank; 13] = [
        Rank::Two,
        Rank::Three,
        Rank::Four,
        Rank::Five,
        Rank::Six,
        Rank::Seven,
        Rank::Eight,
        Rank::Nine,
        Rank::Ten,
        Rank::Jack,
        Rank::Queen,
        Rank::King,
        Rank::Ace,
    ];

    /// Position in `Rank::ALL`: 0 for Two up to 14 for the red joker.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Rank> {
        Rank::ALL.get(i).copied()
    }

    pub fn is_joker(self) -> bool {
        matches!(self, Rank::BlackJoker | Rank::RedJoker)
    }

    /// Numeric face value: 2..=14 for 2..A. Jokers have none.
    pub fn face_value(self) -> Option<u8> {
        if self.is_joker() {
            None
        } else {
            Some(self as u8 + 2)
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rank::Two => "2",
            Rank::Three => "3",
            Rank::Four => "4",
            Rank::Five => "5",
            Rank::Six => "6",
            Rank::Seven => "7",
            Rank::Eight => "8",
            Rank::Nine => "9",
            Rank::Ten => "10",
            Rank::Jack => "J",
            Rank::Queen => "Q",
            Rank::King => "K",
            Rank::Ace => "A",
            Rank::BlackJoker => "BJ",
            Rank::RedJoker => "RJ",
        }
    }

    pub fn parse(s: &str) -> Option<Rank> {
        Rank::ALL
            .iter()
            .copied()
            .find(|r| r.symbol().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Suit {
    Spades,
    Hearts,
    Clubs,
    Diamonds,
    /// Jokers only.
    None,
}

impl Suit {
    pub const REAL: [Suit; 4] = [Suit::Spades, Suit::Hearts, Suit::Clubs, Suit::Diamonds];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Suit::Spades => "s",
            Suit::Hearts => "h",
            Suit::Clubs => "c",
            Suit::Diamonds => "d",
            Suit::None => "",
        }
    }
}

/// One of the 108 physical cards.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Card {
    pub deck: u8,
    pub suit: Suit,
    pub rank: Rank,
}

impl Card {
    pub fn new(deck: u8, suit: Suit, rank: Rank) -> Result<Card> {
        let valid = deck < 2 && (rank.is_joker() == (suit == Suit::None));
        if valid {
            Ok(Card { deck, suit, rank })
        } else {
            Err(Error::InvalidCard(format!("deck {deck} {suit:?} {rank:?}")))
        }
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.rank, self.suit.symbol())
    }
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CardId(u8);

impl CardId {
    pub fn new(index: usize) -> Result<CardId> {
        if index < DECK_SIZE {
            Ok(CardId(index as u8))
        } else {
            Err(Error::InvalidCardId(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn card(self) -> Card {
        // Ids are range-checked at construction.
        index_card(self.index()).expect("CardId in range")
    }

    pub fn rank(self) -> Rank {
        self.card().rank
    }

    pub fn suit(self) -> Suit {
        self.card().suit
    }

    pub fn all() -> impl Iterator<Item = CardId> {
        (0..DECK_SIZE as u8).map(CardId)
    }
}

impl fmt::Display for CardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.card().fmt(f)
    }
}

/// Cells per deck in the layout: three 13-wide rows plus one 15-wide row.
const CELLS_PER_DECK: usize = 54;

pub fn card_index(card: Card) -> CardId {
    let base = card.deck as usize * CELLS_PER_DECK;
    let offset = match card.rank {
        Rank::BlackJoker => 3 * FACE_COUNT + 13,
        Rank::RedJoker => 3 * FACE_COUNT + 14,
        face => card.suit.index() * FACE_COUNT + face.index(),
    };
    CardId((base + offset) as u8)
}

pub fn index_card(index: usize) -> Result<Card> {
    if index >= DECK_SIZE {
        return Err(Error::InvalidCardId(index));
    }
    let deck = (index / CELLS_PER_DECK) as u8;
    let offset = index % CELLS_PER_DECK;
    let card = match offset {
        52 => Card {
            deck,
            suit: Suit::None,
            rank: Rank::BlackJoker,
        },
        53 => Card {
            deck,
            suit: Suit::None,
            rank: Rank::RedJoker,
        },
        o => Card {
            deck,
            suit: Suit::REAL[o / FACE_COUNT],
            rank: Rank::FACES[o % FACE_COUNT],
        },
    };
    Ok(card)
}

/// The rank in force for a mini game. Never a joker.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Rank", into = "Rank")]
pub struct Level(Rank);

impl Level {
    pub const TWO: Level = Level(Rank::Two);
    pub const ACE: Level = Level(Rank::Ace);

    pub fn new(rank: Rank) -> Result<Level> {
        if rank.is_joker() {
            Err(Error::InvalidLevel(rank))
        } else {
            Ok(Level(rank))
        }
    }

    pub fn rank(self) -> Rank {
        self.0
    }

    /// 0 for level 2, 12 for level A.
    pub fn index(self) -> usize {
        self.0.index()
    }

    /// Raise by `steps`, capped at A.
    pub fn upgraded(self, steps: u8) -> Level {
        let i = (self.0.index() + steps as usize).min(Rank::Ace.index());
        Level(Rank::FACES[i])
    }

    pub fn all() -> impl Iterator<Item = Level> {
        Rank::FACES.into_iter().map(Level)
    }
}

impl TryFrom<Rank> for Level {
    type Error = Error;
    fn try_from(rank: Rank) -> Result<Level> {
        Level::new(rank)
    }
}

impl From<Level> for Rank {
    fn from(level: Level) -> Rank {
        level.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Hearts of the level rank are wild.
pub fn is_wild(card: Card, level: Level) -> bool {
    card.suit == Suit::Hearts && card.rank == level.rank()
}

pub fn is_wild_id(id: CardId, level: Level) -> bool {
    is_wild(id.card(), level)
}

/// Strict order key for singles, pairs, triples, full houses and bombs:
/// faces in face order, the level rank lifted above A, then the jokers.
pub fn single_rank_ordinal(rank: Rank, level: Level) -> u8 {
    match rank {
        Rank::RedJoker => 15,
        Rank::BlackJoker => 14,
        r if r == level.rank() => 13,
        r => r.index() as u8,
    }
}

/// A set of physical cards, one bit per `CardId`.
#[derive(Copy, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<CardId>", from = "Vec<CardId>")]
pub struct CardSet(u128);

impl CardSet {
    pub const EMPTY: CardSet = CardSet(0);
    pub const FULL: CardSet = CardSet((1u128 << DECK_SIZE) - 1);

    pub fn from_bits(bits: u128) -> CardSet {
        CardSet(bits & Self::FULL.0)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, id: CardId) -> bool {
        self.0 >> id.index() & 1 == 1
    }

    pub fn insert(&mut self, id: CardId) {
        self.0 |= 1 << id.index();
    }

    pub fn remove(&mut self, id: CardId) {
        self.0 &= !(1 << id.index());
    }

    pub fn with(mut self, id: CardId) -> CardSet {
        self.insert(id);
        self
    }

    pub fn union(self, other: CardSet) -> CardSet {
        CardSet(self.0 | other.0)
    }

    pub fn intersection(self, other: CardSet) -> CardSet {
        CardSet(self.0 & other.0)
    }

    pub fn difference(self, other: CardSet) -> CardSet {
        CardSet(self.0 & !other.0)
    }

    pub fn complement(self) -> CardSet {
        CardSet(!self.0 & Self::FULL.0)
    }

    pub fn is_subset(self, other: CardSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: CardSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Ascending by id.
    pub fn iter(self) -> CardSetIter {
        CardSetIter(self.0)
    }

    pub fn to_vec(self) -> Vec<CardId> {
        self.iter().collect()
    }
}

impl FromIterator<CardId> for CardSet {
    fn from_iter<I: IntoIterator<Item = CardId>>(iter: I) -> Self {
        let mut set = CardSet::EMPTY;
        for id in iter {
            set.insert(id);
        }
        set
    }
}

impl From<Vec<CardId>> for CardSet {
    fn from(ids: Vec<CardId>) -> Self {
        ids.into_iter().collect()
    }
}

impl From<CardSet> for Vec<CardId> {
    fn from(set: CardSet) -> Self {
        set.to_vec()
    }
}

impl fmt::Debug for CardSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.iter().map(|c| c.index()))
            .finish()
    }
}

impl fmt::Display for CardSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut ids = self.to_vec();
        ids.sort_by_key(|id| (id.rank(), id.suit()));
        let parts: Vec<String> = ids.iter().map(|id| id.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

pub struct CardSetIter(u128);

impl Iterator for CardSetIter {
    type Item = CardId;

    fn next(&mut self) -> Option<CardId> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(CardId(i as u8))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for CardSetIter {}

/// Seat 0..3 in play order. Seats 0 and 2 are one team, 1 and 3 the other.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seat(u8);

impl Seat {
    pub const ALL: [Seat; 4] = [Seat(0), Seat(1), Seat(2), Seat(3)];

    pub fn new(index: usize) -> Result<Seat> {
        if index < 4 {
            Ok(Seat(index as u8))
        } else {
            Err(Error::InvalidSeat(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn teammate(self) -> Seat {
        Seat((self.0 + 2) % 4)
    }

    /// The seat that acts after this one.
    pub fn next(self) -> Seat {
        Seat((self.0 + 1) % 4)
    }

    /// Seat `k` steps further in play order.
    pub fn offset(self, k: usize) -> Seat {
        Seat(((self.0 as usize + k) % 4) as u8)
    }

    /// 0 for seats 0 and 2, 1 for seats 1 and 3.
    pub fn team(self) -> usize {
        (self.0 % 2) as usize
    }

    pub fn is_opponent(self, other: Seat) -> bool {
        self.team() != other.team()
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0 + 1)
    }
}

/// Four disjoint 27-card hands covering the whole deck.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deal {
    pub hands: [CardSet; 4],
    pub leader: Seat,
}

impl Deal {
    /// Seat `s` receives positions `27 s .. 27 (s + 1)` of the permutation.
    pub fn from_permutation(permutation: &[CardId], leader: Seat) -> Result<Deal> {
        if permutation.len() != DECK_SIZE {
            return Err(Error::InvalidDeal(format!(
                "expected {DECK_SIZE} cards, got {}",
                permutation.len()
            )));
        }
        let mut hands = [CardSet::EMPTY; 4];
        for (i, chunk) in permutation.chunks(HAND_SIZE).enumerate() {
            hands[i] = chunk.iter().copied().collect();
        }
        let deal = Deal { hands, leader };
        deal.validate()?;
        Ok(deal)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = CardSet::EMPTY;
        for hand in &self.hands {
            if !hand.is_disjoint(seen) {
                return Err(Error::InvalidDeal("hands overlap".into()));
            }
            seen = seen.union(*hand);
        }
        if seen != CardSet::FULL {
            return Err(Error::InvalidDeal("hands do not cover the deck".into()));
        }
        Ok(())
    }
}

/// Seeded uniform permutation of all 108 ids.
pub fn shuffled_deck(seed: u64) -> Vec<CardId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<CardId> = CardId::all().collect();
    ids.shuffle(&mut rng);
    ids
}

/// Independent seed for stream `k` of `base` (splitmix64 finalizer).
pub fn derive_seed(base: u64, k: u64) -> u64 {
    let mut z = base ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn deal(seed: u64) -> Deal {
    Deal::from_permutation(&shuffled_deck(seed), Seat(0)).expect("a shuffle is a permutation")
}
