//! JSON-lines game logs and their verification.
//!
//! A log is a header line, then per mini game a `deal` record (hands after
//! any tribute), one `action` record per move and a `result` record.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cards::{CardId, CardSet, Deal, Level, Seat};
use crate::combos::{find_combo, ComboType, PlayOrPass};
use crate::engine::{settle, MiniGameState, TributeRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionRecord {
    Play {
        #[serde(rename = "type")]
        kind: String,
        rank: u8,
        card_ids: Vec<u8>,
    },
    Pass(PassTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassTag {
    Pass,
}

impl ActionRecord {
    pub fn of(action: &PlayOrPass) -> ActionRecord {
        match action {
            PlayOrPass::Pass => ActionRecord::Pass(PassTag::Pass),
            PlayOrPass::Play(c) => ActionRecord::Play {
                kind: c.kind.name(),
                rank: c.rank,
                card_ids: c.cards.iter().map(|id| id.index() as u8).collect(),
            },
        }
    }

    /// Rebuilds the action against `hand`; fails if it cannot be formed.
    pub fn resolve(&self, hand: CardSet, level: Level) -> Result<PlayOrPass> {
        match self {
            ActionRecord::Pass(_) => Ok(PlayOrPass::Pass),
            ActionRecord::Play {
                kind,
                rank,
                card_ids,
            } => {
                let kind = ComboType::parse(kind)
                    .ok_or_else(|| Error::IllegalAction(format!("unknown type {kind:?}")))?;
                let cards = card_ids
                    .iter()
                    .map(|&i| CardId::new(i as usize))
                    .collect::<Result<CardSet>>()?;
                find_combo(hand, kind, *rank, cards, level)
                    .map(PlayOrPass::Play)
                    .ok_or_else(|| {
                        Error::IllegalAction(format!(
                            "{kind} rank {rank} from {cards} not formable"
                        ))
                    })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header {
        code_version: String,
        config_hash: String,
        seats: [String; 4],
    },
    Deal {
        game: u64,
        mini: u32,
        levels: [Level; 2],
        acting_level: Level,
        leader: Seat,
        hands: [CardSet; 4],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tribute: Option<TributeRecord>,
    },
    Action {
        game: u64,
        mini: u32,
        seat: Seat,
        action: ActionRecord,
    },
    Result {
        game: u64,
        mini: u32,
        order: Vec<Seat>,
        team: usize,
        upgrade: u8,
    },
}

pub struct ReplayWriter<W: Write> {
    out: W,
}

impl<W: Write> ReplayWriter<W> {
    pub fn new(out: W) -> Self {
        ReplayWriter { out }
    }

    pub fn write(&mut self, record: &Record) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    /// Deal record for a state that is about to be played.
    pub fn deal(
        &mut self,
        game: u64,
        mini: u32,
        state: &MiniGameState,
        tribute: Option<TributeRecord>,
    ) -> Result<()> {
        self.write(&Record::Deal {
            game,
            mini,
            levels: state.levels,
            acting_level: state.acting_level,
            leader: state.current,
            hands: state.hands,
            tribute,
        })
    }

    pub fn action(&mut self, game: u64, mini: u32, seat: Seat, action: &PlayOrPass) -> Result<()> {
        self.write(&Record::Action {
            game,
            mini,
            seat,
            action: ActionRecord::of(action),
        })
    }

    pub fn result(&mut self, game: u64, mini: u32, order: &[Seat]) -> Result<()> {
        let (team, upgrade) = settle(order);
        self.write(&Record::Result {
            game,
            mini,
            order: order.to_vec(),
            team,
            upgrade,
        })
    }

    /// Appends already-serialized records.
    pub fn write_raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.out.write_all(bytes)?;
        Ok(())
    }

    pub fn get_mut(&mut self) -> &mut W {
        &mut self.out
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn read_records(input: impl BufRead) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::ReplayDivergence {
            step: i + 1,
            reason: format!("unparsable record: {e}"),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplaySummary {
    pub mini_games: usize,
    pub actions: usize,
}

/// Re-simulates every mini game in the log, checking that each recorded
/// action is legal for the seat to act and each result matches.
pub fn check(records: &[Record]) -> Result<ReplaySummary> {
    check_with(records, |_, _| {})
}

/// Like [`check`], calling `visit` with the state before each recorded
/// action and the action itself.
pub fn check_with(
    records: &[Record],
    mut visit: impl FnMut(&MiniGameState, &PlayOrPass),
) -> Result<ReplaySummary> {
    let diverge = |step: usize, reason: String| Error::ReplayDivergence {
        step: step + 1,
        reason,
    };
    let mut summary = ReplaySummary::default();
    let mut state: Option<(u64, u32, MiniGameState)> = None;
    for (i, rec) in records.iter().enumerate() {
        match rec {
            Record::Header { .. } => {}
            Record::Deal {
                game,
                mini,
                levels,
                acting_level,
                leader,
                hands,
                ..
            } => {
                if state.is_some() {
                    return Err(diverge(i, "deal before previous result".into()));
                }
                let deal = Deal {
                    hands: *hands,
                    leader: *leader,
                };
                deal.validate().map_err(|e| diverge(i, e.to_string()))?;
                state = Some((
                    *game,
                    *mini,
                    MiniGameState::new(&deal, *levels, *acting_level),
                ));
            }
            Record::Action {
                game,
                mini,
                seat,
                action,
            } => {
                let Some((g, m, s)) = state.as_mut() else {
                    return Err(diverge(i, "action outside a mini game".into()));
                };
                if (*g, *m) != (*game, *mini) {
                    return Err(diverge(
                        i,
                        format!("action tagged {game}/{mini} inside {g}/{m}"),
                    ));
                }
                if s.is_done() || s.current != *seat {
                    return Err(diverge(i, format!("{seat} is not to act")));
                }
                let resolved = action
                    .resolve(s.hand(*seat), s.acting_level)
                    .map_err(|e| diverge(i, e.to_string()))?;
                visit(s, &resolved);
                s.apply(resolved).map_err(|e| diverge(i, e.to_string()))?;
                summary.actions += 1;
            }
            Record::Result {
                game,
                mini,
                order,
                team,
                upgrade,
            } => {
                let Some((g, m, s)) = state.take() else {
                    return Err(diverge(i, "result outside a mini game".into()));
                };
                if (g, m) != (*game, *mini) {
                    return Err(diverge(
                        i,
                        format!("result tagged {game}/{mini} inside {g}/{m}"),
                    ));
                }
                if !s.is_done() {
                    return Err(diverge(i, "result before the mini game ended".into()));
                }
                let full = s.full_order();
                if full != *order || settle(&full) != (*team, *upgrade) {
                    return Err(diverge(
                        i,
                        format!("recorded result {order:?} differs from replayed {full:?}"),
                    ));
                }
                summary.mini_games += 1;
            }
        }
    }
    if state.is_some() {
        return Err(diverge(
            records.len().saturating_sub(1),
            "log ends inside a mini game".into(),
        ));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::deal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn logged_game(seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = ReplayWriter::new(Vec::new());
        w.write(&Record::Header {
            code_version: "t".into(),
            config_hash: "h".into(),
            seats: Default::default(),
        })
        .unwrap();
        let mut s = MiniGameState::evaluation(&deal(seed));
        w.deal(0, 0, &s, None).unwrap();
        while !s.is_done() {
            let legal = s.legal_actions().unwrap();
            let a = legal[rng.random_range(0..legal.len())].clone();
            w.action(0, 0, s.current, &a).unwrap();
            s.apply(a).unwrap();
        }
        w.result(0, 0, &s.full_order()).unwrap();
        w.into_inner()
    }

    #[test]
    fn own_logs_check() {
        let bytes = logged_game(3);
        let recs = read_records(&bytes[..]).unwrap();
        let summary = check(&recs).unwrap();
        assert_eq!(summary.mini_games, 1);
        assert_eq!(summary.actions, recs.len() - 3);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.lines().nth(2).unwrap().contains("\"card_ids\""));
        assert!(text.contains("\"action\":\"pass\""));
    }

    #[test]
    fn tampering_is_detected() {
        let recs = read_records(&logged_game(4)[..]).unwrap();
        let mut swapped = recs.clone();
        swapped.swap(3, 4);
        assert!(check(&swapped).is_err());
        let truncated = &recs[..recs.len() - 1];
        assert!(check(truncated).is_err());
        let mut bad_result = recs.clone();
        if let Some(Record::Result { order, .. }) = bad_result.last_mut() {
            order.reverse();
        }
        assert!(check(&bad_result).is_err());
    }
}
