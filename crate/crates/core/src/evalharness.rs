//! Paired-deck matches between two agents with seat swapping.
//!
//! Seating `Even` puts agent A in seats p1/p3; `Odd` (the swap) puts it in
//! p2/p4 with the same decks. `wr_as_team_a` is A's win rate in the first
//! seating, `wr_as_team_b` its win rate in the second.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{Agent, AgentSpec};
use crate::behavior::{Behavior, BehaviorCounters, Opportunities};
use crate::cards::{derive_seed, shuffled_deck, CardId, Deal, Seat};
use crate::checkpoint::{self, CODE_VERSION};
use crate::engine::{advance_game, settle, GameState, MiniGameState};
use crate::error::{Error, Result};
use crate::replay::{Record, ReplayWriter};

pub const DECK_FILE_VERSION: u32 = 1;

/// Safety cap on mini games in one full game.
pub const MAX_MINI_GAMES: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckEntry {
    pub permutation: Vec<CardId>,
    pub leader: Seat,
}

impl DeckEntry {
    pub fn deal(&self) -> Result<Deal> {
        Deal::from_permutation(&self.permutation, self.leader)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckFile {
    pub version: u32,
    pub seed: u64,
    pub decks: Vec<DeckEntry>,
}

pub fn gen_decks(n: usize, seed: u64) -> Result<DeckFile> {
    if n == 0 {
        return Err(Error::DeckFile("need at least one deck".into()));
    }
    let decks = (0..n as u64)
        .map(|k| DeckEntry {
            permutation: shuffled_deck(derive_seed(seed, k)),
            leader: Seat::ALL[0],
        })
        .collect();
    Ok(DeckFile {
        version: DECK_FILE_VERSION,
        seed,
        decks,
    })
}

impl DeckFile {
    pub fn validate(&self) -> Result<()> {
        if self.version != DECK_FILE_VERSION {
            return Err(Error::DeckFile(format!(
                "unsupported version {}",
                self.version
            )));
        }
        for (k, d) in self.decks.iter().enumerate() {
            d.deal()
                .map_err(|e| Error::DeckFile(format!("deck {k}: {e}")))?;
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(
            serde_json::to_string(self)
                .expect("serializable")
                .as_bytes(),
        ))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<DeckFile> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::DeckFile(format!("{}: {e}", path.display())))?;
        let file: DeckFile = serde_json::from_str(&text)
            .map_err(|e| Error::DeckFile(format!("{}: {e}", path.display())))?;
        file.validate()?;
        Ok(file)
    }

    /// Deal for mini game `mini` of full game `k`: the file's deck first,
    /// then seeded reshuffles.
    pub fn deal_for(&self, k: usize, mini: u32) -> Result<Deal> {
        if mini == 0 {
            return self.decks[k].deal();
        }
        let seed = derive_seed(
            derive_seed(self.seed, k as u64),
            u64::from(mini) + (1 << 32),
        );
        Deal::from_permutation(&shuffled_deck(seed), self.decks[k].leader)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seating {
    /// Agent A in p1 and p3.
    Even,
    /// Agent A in p2 and p4.
    Odd,
}

impl Seating {
    /// Agent index (0 = A, 1 = B) for each seat.
    pub fn agents(self) -> [usize; 4] {
        match self {
            Seating::Even => [0, 1, 0, 1],
            Seating::Odd => [1, 0, 1, 0],
        }
    }

    /// Team (seat parity) agent A plays for.
    pub fn team_of_a(self) -> usize {
        match self {
            Seating::Even => 0,
            Seating::Odd => 1,
        }
    }
}

/// Plays the rest of `state`, asking `agents[seat_agent[seat]]` at each
/// decision. Behavior counts are added to `counters[agent]`.
pub fn play_mini_game<W: Write>(
    state: &mut MiniGameState,
    agents: &mut [Box<dyn Agent>],
    seat_agent: [usize; 4],
    rng: &mut ChaCha8Rng,
    counters: &mut [BehaviorCounters],
    mut log: Option<(&mut ReplayWriter<W>, u64, u32)>,
) -> Result<()> {
    while !state.is_done() {
        let seat = state.current;
        let legal = state.legal_actions()?;
        let who = seat_agent[seat.index()];
        let action = agents[who].choose(state, &legal, rng)?;
        state.check_legal(&action)?;
        let opps = Opportunities::detect(state, &legal);
        counters[who].record(&opps, state, &action);
        if let Some((w, game, mini)) = log.as_mut() {
            w.action(*game, *mini, seat, &action)?;
        }
        state.apply_unchecked(action);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub team_a: String,
    pub team_b: String,
    pub n_games: usize,
    pub swap: bool,
    /// Full games with levels and tribute instead of level-2 mini games.
    pub full_game: bool,
    pub seed: u64,
    pub threads: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            team_a: "random".into(),
            team_b: "random".into(),
            n_games: 1000,
            swap: true,
            full_game: false,
            seed: 0,
            threads: 1,
        }
    }
}

impl MatchConfig {
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("serializable");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub deck: usize,
    pub seating: Seating,
    /// "a" or "b".
    pub winner: String,
    /// Finishing order of the (last) mini game.
    pub standings: Vec<Seat>,
    pub upgrade: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mini_games: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_score: Option<[u8; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRates {
    pub cooperating: Option<f64>,
    pub dwarfing: Option<f64>,
    pub assisting: Option<f64>,
    pub counters: BehaviorCounters,
}

/// Rates from summed counters; a behavior with no opportunities is absent.
pub fn behavior_report(counters: &BehaviorCounters) -> BehaviorRates {
    BehaviorRates {
        cooperating: counters.rate_opt(Behavior::Cooperating),
        dwarfing: counters.rate_opt(Behavior::Dwarfing),
        assisting: counters.rate_opt(Behavior::Assisting),
        counters: *counters,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRates {
    pub team_a: BehaviorRates,
    pub team_b: BehaviorRates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub config: MatchConfig,
    pub config_hash: String,
    pub code_version: String,
    pub deck_seed: u64,
    /// SHA-256 of the canonical JSON form of the deck file.
    pub deck_hash: String,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub games_played: usize,
    pub wr_as_team_a: Option<f64>,
    pub wr_as_team_b: Option<f64>,
    pub rates: TeamRates,
    pub per_game: Vec<GameOutcome>,
}

impl MatchReport {
    /// Win rate over both seatings.
    pub fn wr_combined(&self) -> Option<f64> {
        let n = self.per_game.len();
        (n > 0).then(|| self.per_game.iter().filter(|g| g.winner == "a").count() as f64 / n as f64)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

struct Job {
    deck: usize,
    seating: Seating,
}

struct JobResult {
    outcome: GameOutcome,
    counters: [BehaviorCounters; 2],
    log: Vec<u8>,
}

fn play_job(
    job: &Job,
    decks: &DeckFile,
    cfg: &MatchConfig,
    agents: &mut [Box<dyn Agent>],
    with_log: bool,
) -> Result<JobResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        cfg.seed,
        2 * job.deck as u64 + (job.seating == Seating::Odd) as u64,
    ));
    let seat_agent = job.seating.agents();
    let mut counters = [BehaviorCounters::default(); 2];
    let mut w = ReplayWriter::new(Vec::new());
    let game_id = job.deck as u64;
    let winner_label = |team: usize| {
        if team == job.seating.team_of_a() {
            "a"
        } else {
            "b"
        }
        .to_string()
    };
    if !cfg.full_game {
        let mut state = MiniGameState::evaluation(&decks.decks[job.deck].deal()?);
        if with_log {
            w.deal(game_id, 0, &state, None)?;
        }
        let log = with_log.then_some((&mut w, game_id, 0));
        play_mini_game(&mut state, agents, seat_agent, &mut rng, &mut counters, log)?;
        let order = state.full_order();
        if with_log {
            w.result(game_id, 0, &order)?;
        }
        let (team, upgrade) = settle(&order);
        let outcome = GameOutcome {
            deck: job.deck,
            seating: job.seating,
            winner: winner_label(team),
            standings: order,
            upgrade,
            mini_games: None,
            final_score: None,
        };
        return Ok(JobResult {
            outcome,
            counters,
            log: w.into_inner(),
        });
    }
    let mut game = GameState::default();
    let mut last = (Vec::new(), 0u8);
    while !game.over {
        if game.mini_games >= MAX_MINI_GAMES {
            return Err(Error::IllegalAction(format!(
                "full game on deck {} exceeded {MAX_MINI_GAMES} mini games",
                job.deck
            )));
        }
        let mini = game.mini_games;
        let deal = decks.deal_for(job.deck, mini)?;
        let acting = game.acting_level();
        let (mut state, tribute) = match &game.previous {
            None => (MiniGameState::new(&deal, game.levels, acting), None),
            Some(prev) => {
                let mut s = MiniGameState::awaiting_tribute(&deal, game.levels, acting);
                let rec = s.resolve_tribute(prev)?;
                (s, Some(rec))
            }
        };
        if with_log {
            w.deal(game_id, mini, &state, tribute)?;
        }
        let log = with_log.then_some((&mut w, game_id, mini));
        play_mini_game(&mut state, agents, seat_agent, &mut rng, &mut counters, log)?;
        let order = state.full_order();
        if with_log {
            w.result(game_id, mini, &order)?;
        }
        let result = state.result().expect("mini game finished");
        game = advance_game(&game, &result);
        last = (order, settle(&result.order).1);
    }
    let winner = game.winner.expect("finished game has a winner");
    let outcome = GameOutcome {
        deck: job.deck,
        seating: job.seating,
        winner: winner_label(winner),
        standings: last.0,
        upgrade: last.1,
        mini_games: Some(game.mini_games),
        final_score: game.final_score(),
    };
    Ok(JobResult {
        outcome,
        counters,
        log: w.into_inner(),
    })
}

fn build_agents(cfg: &MatchConfig) -> Result<Vec<Box<dyn Agent>>> {
    Ok(vec![
        AgentSpec::parse(&cfg.team_a)?.build()?,
        AgentSpec::parse(&cfg.team_b)?.build()?,
    ])
}

/// Finished jobs of one worker and the error that stopped it, if any.
type WorkerOutput = (Vec<(usize, JobResult)>, Option<String>);

/// Plays the match. Agent failures stop play and return a partial report
/// with `valid = false`. When `replay` is given, every game is logged to it
/// in (deck, seating) order.
pub fn run_match(
    cfg: &MatchConfig,
    decks: &DeckFile,
    replay: Option<&mut dyn Write>,
) -> Result<MatchReport> {
    if cfg.n_games == 0 {
        return Err(Error::Config("n_games must be at least 1".into()));
    }
    if decks.decks.len() < cfg.n_games {
        return Err(Error::DeckFile(format!(
            "{} decks for {} games",
            decks.decks.len(),
            cfg.n_games
        )));
    }
    let specs = [
        AgentSpec::parse(&cfg.team_a)?,
        AgentSpec::parse(&cfg.team_b)?,
    ];
    let interactive = specs.contains(&AgentSpec::Human);
    let threads = if interactive { 1 } else { cfg.threads.max(1) };
    let seatings: &[Seating] = if cfg.swap {
        &[Seating::Even, Seating::Odd]
    } else {
        &[Seating::Even]
    };
    let jobs: Vec<Job> = seatings
        .iter()
        .flat_map(|&seating| (0..cfg.n_games).map(move |deck| Job { deck, seating }))
        .collect();
    let with_log = replay.is_some();

    // Each worker owns its agents and takes every `threads`-th job.
    let worker = |w: usize| -> (Vec<(usize, JobResult)>, Option<String>) {
        let mut done = Vec::new();
        let mut agents = match build_agents(cfg) {
            Ok(a) => a,
            Err(e) => return (done, Some(e.to_string())),
        };
        for (i, job) in jobs.iter().enumerate().skip(w).step_by(threads) {
            match play_job(job, decks, cfg, &mut agents, with_log) {
                Ok(r) => done.push((i, r)),
                Err(e) => {
                    return (
                        done,
                        Some(format!("deck {} ({:?}): {e}", job.deck, job.seating)),
                    )
                }
            }
        }
        (done, None)
    };
    let parts: Vec<WorkerOutput> = if threads == 1 {
        vec![worker(0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads).map(|w| s.spawn(move || worker(w))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("match worker panicked"))
                .collect()
        })
    };
    let mut error = None;
    let mut results: Vec<(usize, JobResult)> = Vec::with_capacity(jobs.len());
    for (done, err) in parts {
        results.extend(done);
        if error.is_none() {
            error = err;
        }
    }
    results.sort_by_key(|(i, _)| *i);
    if let Some(out) = replay {
        let header = Record::Header {
            code_version: CODE_VERSION.into(),
            config_hash: cfg.hash(),
            seats: [
                cfg.team_a.clone(),
                cfg.team_b.clone(),
                cfg.team_a.clone(),
                cfg.team_b.clone(),
            ],
        };
        let mut w = ReplayWriter::new(&mut *out);
        w.write(&header)?;
        for (_, r) in &results {
            out.write_all(&r.log)?;
        }
        out.flush()?;
    }
    let mut counters = [BehaviorCounters::default(); 2];
    let mut wins = [[0usize; 2]; 2];
    let mut per_game = Vec::with_capacity(results.len());
    for (_, r) in results {
        let s = (r.outcome.seating == Seating::Odd) as usize;
        wins[s][0] += 1;
        if r.outcome.winner == "a" {
            wins[s][1] += 1;
        }
        counters[0].merge(&r.counters[0]);
        counters[1].merge(&r.counters[1]);
        per_game.push(r.outcome);
    }
    let wr = |s: usize| (wins[s][0] > 0).then(|| wins[s][1] as f64 / wins[s][0] as f64);
    Ok(MatchReport {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        code_version: CODE_VERSION.into(),
        deck_seed: decks.seed,
        deck_hash: decks.hash(),
        valid: error.is_none(),
        error,
        games_played: per_game.len(),
        wr_as_team_a: wr(0),
        wr_as_team_b: wr(1),
        rates: TeamRates {
            team_a: behavior_report(&counters[0]),
            team_b: behavior_report(&counters[1]),
        },
        per_game,
    })
}

/// One row of a win-rate-versus-training-frames series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub frames: u64,
    pub wr_as_team_a: Option<f64>,
    pub wr_as_team_b: Option<f64>,
    pub cooperating: Option<f64>,
    pub dwarfing: Option<f64>,
    pub assisting: Option<f64>,
}

/// Evaluates every complete checkpoint set in `dir` (as `dmc` or
/// `dmc-noflags`) against `cfg.team_b`.
pub fn wr_curve(
    dir: &Path,
    with_flags: bool,
    cfg: &MatchConfig,
    decks: &DeckFile,
) -> Result<Vec<CurveRow>> {
    let prefix = if with_flags { "dmc" } else { "dmc-noflags" };
    let mut rows = Vec::new();
    for frames in checkpoint::complete_sets(dir)? {
        let c = MatchConfig {
            team_a: format!("{prefix}:{}@{frames}", dir.display()),
            ..cfg.clone()
        };
        let r = run_match(&c, decks, None)?;
        if let Some(e) = r.error {
            return Err(Error::AgentSpec(e));
        }
        rows.push(CurveRow {
            frames,
            wr_as_team_a: r.wr_as_team_a,
            wr_as_team_b: r.wr_as_team_b,
            cooperating: r.rates.team_a.cooperating,
            dwarfing: r.rates.team_a.dwarfing,
            assisting: r.rates.team_a.assisting,
        });
    }
    Ok(rows)
}

pub fn write_curve_csv(rows: &[CurveRow], out: &mut impl Write) -> Result<()> {
    let f = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6}"));
    writeln!(
        out,
        "frames,wr_as_team_a,wr_as_team_b,cooperating,dwarfing,assisting"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.frames,
            f(r.wr_as_team_a),
            f(r.wr_as_team_b),
            f(r.cooperating),
            f(r.dwarfing),
            f(r.assisting)
        )?;
    }
    Ok(())
}
