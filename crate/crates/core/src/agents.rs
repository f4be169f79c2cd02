//! Players: uniform random, a scripted rule player, the learned greedy
//! player (with or without behavior features) and a terminal human.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cards::CardSet;
use crate::checkpoint::{self, Snapshot};
use crate::combos::{Combo, PlayOrPass};
use crate::engine::MiniGameState;
use crate::error::{Error, Result};
use crate::features::DecisionEncoder;
use crate::valuenet::{score_candidates, Candidate, NetParams};

pub trait Agent: Send {
    fn name(&self) -> String;

    /// Picks one of `legal`, the non-empty legal actions of the seat to act.
    fn choose(
        &mut self,
        state: &MiniGameState,
        legal: &[PlayOrPass],
        rng: &mut ChaCha8Rng,
    ) -> Result<PlayOrPass>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct RandomAgent;

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(
        &mut self,
        _: &MiniGameState,
        legal: &[PlayOrPass],
        rng: &mut ChaCha8Rng,
    ) -> Result<PlayOrPass> {
        if legal.is_empty() {
            return Err(Error::IllegalAction("no legal actions".into()));
        }
        Ok(legal[rng.random_range(0..legal.len())].clone())
    }
}

/// Scripted stand-in for a competition rule bot.
#[derive(Debug, Default, Clone, Copy)]
pub struct RuleAgent;

/// Bombs are kept back unless the table owner is an opponent this close
/// to going out.
pub const RULE_BOMB_THRESHOLD: usize = 5;

fn plays(legal: &[PlayOrPass]) -> impl Iterator<Item = (usize, &Combo)> {
    legal
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.combo().map(|c| (i, c)))
}

fn weakest_bomb<'a>(it: impl Iterator<Item = (usize, &'a Combo)>) -> Option<usize> {
    it.filter(|(_, c)| c.kind.is_bomb())
        .min_by_key(|(i, c)| (c.kind.bomb_tier(), c.rank, c.wild_targets.len(), *i))
        .map(|(i, _)| i)
}

pub fn rule_choice(state: &MiniGameState, legal: &[PlayOrPass]) -> usize {
    match &state.table {
        None => plays(legal)
            .filter(|(_, c)| !c.kind.is_bomb())
            .min_by_key(|(i, c)| {
                (
                    std::cmp::Reverse(c.size()),
                    c.rank,
                    c.wild_targets.len(),
                    *i,
                )
            })
            .map(|(i, _)| i)
            .or_else(|| weakest_bomb(plays(legal)))
            .unwrap_or(0),
        Some((_, owner)) => {
            let plain = plays(legal)
                .filter(|(_, c)| !c.kind.is_bomb())
                .min_by_key(|(i, c)| (c.rank, c.wild_targets.len(), *i))
                .map(|(i, _)| i);
            if let Some(i) = plain {
                return i;
            }
            let pass = legal.iter().position(|a| a.is_pass()).unwrap_or(0);
            let urgent =
                owner.is_opponent(state.current) && state.hand(*owner).len() <= RULE_BOMB_THRESHOLD;
            if urgent {
                weakest_bomb(plays(legal)).unwrap_or(pass)
            } else {
                pass
            }
        }
    }
}

impl Agent for RuleAgent {
    fn name(&self) -> String {
        "rule".into()
    }

    fn choose(
        &mut self,
        state: &MiniGameState,
        legal: &[PlayOrPass],
        _: &mut ChaCha8Rng,
    ) -> Result<PlayOrPass> {
        if legal.is_empty() {
            return Err(Error::IllegalAction("no legal actions".into()));
        }
        Ok(legal[rule_choice(state, legal)].clone())
    }
}

/// True when `a` precedes `b` as 108-entry binary vectors compared entry
/// by entry from card 0.
pub fn action_lex_less(a: CardSet, b: CardSet) -> bool {
    let diff = a.bits() ^ b.bits();
    diff != 0 && b.bits() >> diff.trailing_zeros() & 1 == 1
}

/// Q estimate of every legal action at the current decision.
pub fn q_values(
    net: &NetParams<f32>,
    state: &MiniGameState,
    legal: &[PlayOrPass],
    with_flags: bool,
) -> (DecisionEncoder, Vec<f32>) {
    let enc = DecisionEncoder::new(state, legal, with_flags);
    let cands: Vec<Candidate> = legal
        .iter()
        .map(|a| Candidate {
            flags: enc.flags(state, a),
            action: a.cards(),
        })
        .collect();
    let q = score_candidates(net, enc.base(), &cands);
    (enc, q)
}

/// Argmax of `q`; ties go to the lexicographically smaller action vector,
/// then to the earlier legal action.
pub fn greedy_index(q: &[f32], legal: &[PlayOrPass]) -> usize {
    let mut best = 0;
    for i in 1..q.len() {
        let better = match q[i].total_cmp(&q[best]) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => action_lex_less(legal[i].cards(), legal[best].cards()),
        };
        if better {
            best = i;
        }
    }
    best
}

/// Greedy player over the seat networks of a checkpoint set.
#[derive(Clone)]
pub struct DmcAgent {
    pub nets: Snapshot,
    pub with_flags: bool,
}

impl DmcAgent {
    pub fn new(nets: Snapshot, with_flags: bool) -> DmcAgent {
        DmcAgent { nets, with_flags }
    }

    pub fn pick(&self, state: &MiniGameState, legal: &[PlayOrPass]) -> usize {
        if legal.len() == 1 {
            return 0;
        }
        let (_, q) = q_values(
            &self.nets[state.current.index()],
            state,
            legal,
            self.with_flags,
        );
        greedy_index(&q, legal)
    }
}

impl Agent for DmcAgent {
    fn name(&self) -> String {
        if self.with_flags {
            "dmc"
        } else {
            "dmc-noflags"
        }
        .into()
    }

    fn choose(
        &mut self,
        state: &MiniGameState,
        legal: &[PlayOrPass],
        _: &mut ChaCha8Rng,
    ) -> Result<PlayOrPass> {
        if legal.is_empty() {
            return Err(Error::IllegalAction("no legal actions".into()));
        }
        Ok(legal[self.pick(state, legal)].clone())
    }
}

/// Terminal player: shows the legal actions and reads an index.
pub struct HumanAgent<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead + Send, W: Write + Send> HumanAgent<R, W> {
    pub fn new(input: R, output: W) -> Self {
        HumanAgent { input, output }
    }
}

impl<R: BufRead + Send, W: Write + Send> Agent for HumanAgent<R, W> {
    fn name(&self) -> String {
        "human".into()
    }

    fn choose(
        &mut self,
        state: &MiniGameState,
        legal: &[PlayOrPass],
        _: &mut ChaCha8Rng,
    ) -> Result<PlayOrPass> {
        let seat = state.current;
        let out = &mut self.output;
        writeln!(out, "\n{seat} to act, level {}", state.acting_level)?;
        writeln!(out, "hand: {}", state.hand(seat))?;
        let counts: Vec<String> = (1..4)
            .map(|k| format!("{}:{}", seat.offset(k), state.hand(seat.offset(k)).len()))
            .collect();
        writeln!(out, "cards left: {}", counts.join(" "))?;
        match &state.table {
            Some((combo, owner)) => writeln!(out, "table: {combo} by {owner}")?,
            None => writeln!(out, "table: empty, you lead")?,
        }
        for (i, a) in legal.iter().enumerate() {
            writeln!(out, "  [{i}] {a}")?;
        }
        loop {
            write!(out, "choice> ")?;
            out.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                return Err(Error::Aborted);
            }
            let line = line.trim();
            if line.eq_ignore_ascii_case("pass") {
                match legal.iter().find(|a| a.is_pass()) {
                    Some(p) => return Ok(p.clone()),
                    None => {
                        writeln!(out, "you cannot pass when leading")?;
                        continue;
                    }
                }
            }
            match line.parse::<usize>() {
                Ok(i) if i < legal.len() => return Ok(legal[i].clone()),
                _ => writeln!(out, "enter a number from 0 to {}", legal.len() - 1)?,
            }
        }
    }
}

/// Parsed form of an agent spec string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSpec {
    Random,
    Rule,
    /// `dmc:<dir>` or `dmc-noflags:<dir>`, optionally `<dir>@<frames>`.
    Dmc {
        dir: PathBuf,
        frames: Option<u64>,
        with_flags: bool,
    },
    Human,
}

impl AgentSpec {
    pub fn parse(s: &str) -> Result<AgentSpec> {
        let dmc = |rest: &str, with_flags: bool| -> Result<AgentSpec> {
            if rest.is_empty() {
                return Err(Error::AgentSpec(format!(
                    "{s}: missing checkpoint directory"
                )));
            }
            let (dir, frames) = match rest.rsplit_once('@') {
                Some((d, f)) => {
                    let f = f
                        .parse()
                        .map_err(|_| Error::AgentSpec(format!("{s}: bad frame count {f:?}")))?;
                    (d, Some(f))
                }
                None => (rest, None),
            };
            Ok(AgentSpec::Dmc {
                dir: dir.into(),
                frames,
                with_flags,
            })
        };
        match s {
            "random" => Ok(AgentSpec::Random),
            "rule" => Ok(AgentSpec::Rule),
            "human" => Ok(AgentSpec::Human),
            _ => {
                if let Some(rest) = s.strip_prefix("dmc:") {
                    dmc(rest, true)
                } else if let Some(rest) = s.strip_prefix("dmc-noflags:") {
                    dmc(rest, false)
                } else {
                    Err(Error::AgentSpec(format!(
                        "{s:?}: expected random, rule, human, dmc:<dir> or dmc-noflags:<dir>"
                    )))
                }
            }
        }
    }

    pub fn build(&self) -> Result<Box<dyn Agent>> {
        Ok(match self {
            AgentSpec::Random => Box::new(RandomAgent),
            AgentSpec::Rule => Box::new(RuleAgent),
            AgentSpec::Human => Box::new(HumanAgent::new(
                std::io::BufReader::new(std::io::stdin()),
                std::io::stdout(),
            )),
            AgentSpec::Dmc {
                dir,
                frames,
                with_flags,
            } => {
                let (nets, _) = checkpoint::load_set(dir, *frames)?;
                Box::new(DmcAgent::new(nets, *with_flags))
            }
        })
    }
}
