//! Deep Monte-Carlo self-play.
//!
//! Actors play epsilon-greedy episodes against an immutable snapshot of
//! the four seat networks and push every (state, action, return) sample to
//! that seat's bounded queue. A single learner owns the parameters, takes
//! batches from the queues, regresses Q toward the returns and publishes a
//! fresh snapshot every `sync_interval` episodes.
//!
//! With `deterministic = true` everything runs on the calling thread,
//! alternating one episode with all learner steps it enables.

use std::collections::VecDeque;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, Select, Sender};
use parking_lot::{Mutex, RwLock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{greedy_index, q_values};
use crate::behavior::{Behavior, BehaviorCounters};
use crate::cards::{deal, derive_seed, Seat};
use crate::checkpoint::{self, Sidecar, Snapshot, CODE_VERSION};
use crate::engine::{advance_game, settle, GameState, MiniGameState};
use crate::error::{Error, Result};
use crate::evalharness::hex;
use crate::features::DecisionEncoder;
use crate::replay::{Record, ReplayWriter};
use crate::valuenet::{loss_and_grads, sgd_step, NetParams, NetShape, Sample, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub epsilon: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    /// Episodes between snapshot publications.
    pub sync_interval: u64,
    /// Per-seat queue capacity.
    pub buffer_capacity: usize,
    /// Learning on a seat waits until its buffer holds this many samples;
    /// batches are then drawn uniformly from the buffer (each sample once).
    pub learn_start: usize,
    pub actor_count: usize,
    pub seed: u64,
    pub total_frames: u64,
    pub checkpoint_interval: u64,
    /// False trains the ablation with all behavior features zeroed.
    pub behavior_flags: bool,
    /// Episodes are successive mini games of full games with tribute.
    pub full_game: bool,
    pub deterministic: bool,
    /// Log every n-th episode to `replays.jsonl`; 0 disables.
    pub replay_interval: u64,
    pub hidden: usize,
    pub width: usize,
    pub run_dir: PathBuf,
    pub run_id: String,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        let shape = NetShape::default();
        TrainerConfig {
            epsilon: 0.01,
            batch_size: 32,
            lr: 1e-4,
            momentum: 0.9,
            sync_interval: 10,
            buffer_capacity: 50_000,
            learn_start: 2_000,
            actor_count: 4,
            seed: 0,
            total_frames: 200_000,
            checkpoint_interval: 50_000,
            behavior_flags: true,
            full_game: false,
            deterministic: false,
            replay_interval: 0,
            hidden: shape.hidden,
            width: shape.width,
            run_dir: "runs".into(),
            run_id: "default".into(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must be in [0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("need 1 <= batch_size <= buffer_capacity");
        }
        if self.learn_start > self.buffer_capacity {
            return bad("learn_start cannot exceed buffer_capacity");
        }
        if !(self.lr.is_finite() && self.lr >= 0.0 && (0.0..1.0).contains(&self.momentum)) {
            return bad("need lr >= 0 and momentum in [0, 1)");
        }
        if self.sync_interval == 0 || self.actor_count == 0 || self.checkpoint_interval == 0 {
            return bad("sync_interval, actor_count and checkpoint_interval must be positive");
        }
        if self.hidden == 0 || self.width == 0 {
            return bad("network sizes must be positive");
        }
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) {
            return bad("run_id must be a plain name");
        }
        Ok(())
    }

    pub fn shape(&self) -> NetShape {
        NetShape {
            hidden: self.hidden,
            width: self.width,
        }
    }

    pub fn run_path(&self) -> PathBuf {
        self.run_dir.join(&self.run_id)
    }

    /// Hash of the settings that shape the learned parameters (paths,
    /// budget, logging cadence and parallelism excluded).
    pub fn hash(&self) -> String {
        let canon = TrainerConfig {
            total_frames: 0,
            checkpoint_interval: 0,
            replay_interval: 0,
            run_dir: PathBuf::new(),
            run_id: String::new(),
            actor_count: if self.deterministic {
                1
            } else {
                self.actor_count
            },
            ..self.clone()
        };
        hex(&Sha256::digest(
            serde_json::to_string(&canon)
                .expect("serializable")
                .as_bytes(),
        ))
    }
}

/// One seat-episode worth of training samples plus bookkeeping.
#[derive(Debug, Clone)]
pub struct Episode {
    pub transitions: [Vec<Sample>; 4],
    pub order: Vec<Seat>,
    pub counters: BehaviorCounters,
}

impl Episode {
    pub fn frames(&self) -> u64 {
        self.transitions.iter().map(|t| t.len() as u64).sum()
    }
}

/// Plays `state` to the end. At each decision a uniform legal action is
/// taken with probability `epsilon`, else the greedy action of the acting
/// seat's network. All samples of a seat get that seat's final return.
pub fn run_episode<W: Write>(
    nets: &Snapshot,
    mut state: MiniGameState,
    epsilon: f64,
    with_flags: bool,
    rng: &mut ChaCha8Rng,
    mut log: Option<(&mut ReplayWriter<W>, u64, u32)>,
) -> Result<Episode> {
    let mut transitions: [Vec<Sample>; 4] = Default::default();
    let mut counters = BehaviorCounters::default();
    while !state.is_done() {
        let seat = state.current;
        let legal = state.legal_actions()?;
        let (enc, pick) = if legal.len() == 1 {
            (DecisionEncoder::new(&state, &legal, with_flags), 0)
        } else if rng.random_bool(epsilon) {
            (
                DecisionEncoder::new(&state, &legal, with_flags),
                rng.random_range(0..legal.len()),
            )
        } else {
            let (enc, q) = q_values(&nets[seat.index()], &state, &legal, with_flags);
            (enc, greedy_index(&q, &legal))
        };
        let action = &legal[pick];
        counters.record(enc.opportunities(), &state, action);
        transitions[seat.index()].push(Sample {
            state: enc.encode(&state, action),
            action: action.cards(),
            target: 0.0,
        });
        if let Some((w, game, mini)) = log.as_mut() {
            w.action(*game, *mini, seat, action)?;
        }
        state.apply_unchecked(action.clone());
    }
    let order = state.full_order();
    let (team, upgrade) = settle(&order);
    for seat in Seat::ALL {
        let g = if seat.team() == team {
            upgrade as f32
        } else {
            -(upgrade as f32)
        };
        for t in transitions[seat.index()].iter_mut() {
            t.target = g;
        }
    }
    Ok(Episode {
        transitions,
        order,
        counters,
    })
}

/// Removes `n` samples chosen uniformly at random from `buf`.
pub fn draw_batch(buf: &mut VecDeque<Sample>, n: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    (0..n.min(buf.len()))
        .map(|_| {
            let i = rng.random_range(0..buf.len());
            buf.swap_remove_back(i).expect("index in range")
        })
        .collect()
}

/// One optimizer step on a seat network; returns the batch MSE.
pub fn learner_step(
    net: &mut NetParams<f32>,
    velocity: &mut NetParams<f32>,
    batch: &[Sample],
    lr: f32,
    momentum: f32,
) -> Result<f32> {
    let (mse, grads) = loss_and_grads(net, batch)?;
    sgd_step(net, &grads, velocity, lr, momentum)?;
    Ok(mse)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsLine {
    pub wall_s: f64,
    pub frames: u64,
    pub position: String,
    pub mse: f64,
    pub episodes: u64,
    pub coop_rate: Option<f64>,
    pub dwarf_rate: Option<f64>,
    pub assist_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub run_path: PathBuf,
    pub frames: u64,
    pub episodes: u64,
    pub learner_steps: u64,
    pub checkpoints: Vec<u64>,
    pub resumed_from: Option<u64>,
}

/// Produces the initial state of each episode for one actor.
struct EpisodeSource {
    seed: u64,
    full_game: bool,
    game: GameState,
    game_index: u64,
}

impl EpisodeSource {
    fn new(seed: u64, full_game: bool) -> Self {
        EpisodeSource {
            seed,
            full_game,
            game: GameState::default(),
            game_index: 0,
        }
    }

    /// State for episode `id`, with ids for the replay log and the tribute
    /// record when one was exchanged.
    fn next(
        &mut self,
        id: u64,
    ) -> Result<(
        MiniGameState,
        u64,
        u32,
        Option<crate::engine::TributeRecord>,
    )> {
        let d = deal(derive_seed(self.seed, id));
        if !self.full_game {
            return Ok((MiniGameState::evaluation(&d), id, 0, None));
        }
        if self.game.over {
            self.game = GameState::default();
            self.game_index += 1;
        }
        let acting = self.game.acting_level();
        let mini = self.game.mini_games;
        match &self.game.previous {
            None => Ok((
                MiniGameState::new(&d, self.game.levels, acting),
                self.game_index,
                mini,
                None,
            )),
            Some(prev) => {
                let mut s = MiniGameState::awaiting_tribute(&d, self.game.levels, acting);
                let rec = s.resolve_tribute(prev)?;
                Ok((s, self.game_index, mini, Some(rec)))
            }
        }
    }

    fn finish(&mut self, order: &[Seat]) {
        if self.full_game {
            let result = crate::engine::MiniResult {
                order: order.to_vec(),
            };
            self.game = advance_game(&self.game, &result);
        }
    }
}

struct RunFiles {
    path: PathBuf,
    metrics: BufWriter<File>,
    replays: Option<ReplayWriter<BufWriter<File>>>,
}

fn open_append(path: &Path, fresh: bool) -> Result<BufWriter<File>> {
    let f = OpenOptions::new()
        .create(true)
        .write(true)
        .append(!fresh)
        .truncate(fresh)
        .open(path)?;
    Ok(BufWriter::new(f))
}

/// Learner-side state shared by both execution modes.
struct Learner {
    cfg: TrainerConfig,
    nets: Vec<NetParams<f32>>,
    velocity: Vec<NetParams<f32>>,
    frames: u64,
    episodes: u64,
    steps: u64,
    counters: BehaviorCounters,
    next_checkpoint: u64,
    checkpoints: Vec<u64>,
    start: Instant,
    wall_offset: f64,
    files: RunFiles,
}

impl Learner {
    fn wall(&self) -> f64 {
        if self.cfg.deterministic {
            0.0
        } else {
            self.wall_offset + self.start.elapsed().as_secs_f64()
        }
    }

    fn ready(&self, buf: &VecDeque<Sample>) -> bool {
        buf.len() >= self.cfg.batch_size.max(self.cfg.learn_start)
    }

    fn snapshot(&self) -> Snapshot {
        std::array::from_fn(|i| Arc::new(self.nets[i].clone()))
    }

    fn step(&mut self, pos: usize, batch: &[Sample]) -> Result<()> {
        let mse = learner_step(
            &mut self.nets[pos],
            &mut self.velocity[pos],
            batch,
            self.cfg.lr as f32,
            self.cfg.momentum as f32,
        )?;
        self.steps += 1;
        let line = MetricsLine {
            wall_s: self.wall(),
            frames: self.frames,
            position: checkpoint::position_name(Seat::ALL[pos]),
            mse: mse as f64,
            episodes: self.episodes,
            coop_rate: self.counters.rate_opt(Behavior::Cooperating),
            dwarf_rate: self.counters.rate_opt(Behavior::Dwarfing),
            assist_rate: self.counters.rate_opt(Behavior::Assisting),
        };
        serde_json::to_writer(&mut self.files.metrics, &line)?;
        self.files.metrics.write_all(b"\n")?;
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<()> {
        if self.checkpoints.last() == Some(&self.frames) {
            return Ok(());
        }
        let side = Sidecar {
            format_version: FORMAT_VERSION,
            code_version: CODE_VERSION.into(),
            position: String::new(),
            frames: self.frames,
            episodes: self.episodes,
            wall_s: self.wall(),
            config_hash: self.cfg.hash(),
            behavior_flags: self.cfg.behavior_flags,
            hidden: self.cfg.hidden,
            width: self.cfg.width,
        };
        self.files.metrics.flush()?;
        if let Some(r) = self.files.replays.as_mut() {
            r.flush()?;
        }
        checkpoint::save_set(&self.files.path, &self.nets, &side)?;
        self.checkpoints.push(self.frames);
        Ok(())
    }

    fn maybe_checkpoint(&mut self) -> Result<()> {
        if self.frames >= self.next_checkpoint {
            self.checkpoint()?;
            while self.next_checkpoint <= self.frames {
                self.next_checkpoint += self.cfg.checkpoint_interval;
            }
        }
        Ok(())
    }
}

fn setup(cfg: &TrainerConfig) -> Result<(Learner, Option<u64>)> {
    cfg.validate()?;
    let path = cfg.run_path();
    fs::create_dir_all(&path)?;
    let config_path = path.join("config.json");
    let resume = if path.exists() {
        checkpoint::latest_set(&path)?
    } else {
        None
    };
    let shape = cfg.shape();
    let (nets, frames, episodes, wall) = match resume {
        Some(f) => {
            let (snap, side) = checkpoint::load_set(&path, Some(f))?;
            if side.config_hash != cfg.hash() {
                return Err(Error::Config(format!(
                    "run {} was trained with a different configuration (hash {})",
                    path.display(),
                    side.config_hash
                )));
            }
            (
                snap.iter().map(|n| (**n).clone()).collect(),
                side.frames,
                side.episodes,
                side.wall_s,
            )
        }
        None => (
            (0..4)
                .map(|p| NetParams::init(shape, derive_seed(cfg.seed, 1000 + p)))
                .collect::<Vec<_>>(),
            0,
            0,
            0.0,
        ),
    };
    let fresh = resume.is_none();
    fs::write(&config_path, serde_json::to_string_pretty(cfg)? + "\n")?;
    let metrics = open_append(&path.join("metrics.jsonl"), fresh)?;
    let replays = if cfg.replay_interval > 0 {
        let mut w = ReplayWriter::new(open_append(&path.join("replays.jsonl"), fresh)?);
        if fresh {
            w.write(&Record::Header {
                code_version: CODE_VERSION.into(),
                config_hash: cfg.hash(),
                seats: std::array::from_fn(|_| "self-play".to_string()),
            })?;
        }
        Some(w)
    } else {
        None
    };
    let velocity = (0..4).map(|_| NetParams::zeros(shape)).collect();
    let next_checkpoint = (frames / cfg.checkpoint_interval + 1) * cfg.checkpoint_interval;
    let learner = Learner {
        cfg: cfg.clone(),
        nets,
        velocity,
        frames,
        episodes,
        steps: 0,
        counters: BehaviorCounters::default(),
        next_checkpoint,
        checkpoints: Vec::new(),
        start: Instant::now(),
        wall_offset: wall,
        files: RunFiles {
            path,
            metrics,
            replays,
        },
    };
    Ok((learner, resume))
}

/// Trains until `total_frames` samples have been produced (or `stop` is
/// raised), checkpointing every `checkpoint_interval` frames and at the
/// end. An existing run directory with checkpoints is resumed.
pub fn train(cfg: &TrainerConfig, stop: Option<Arc<AtomicBool>>) -> Result<TrainSummary> {
    let (mut learner, resumed_from) = setup(cfg)?;
    let stop = stop.unwrap_or_default();
    if cfg.deterministic {
        train_interleaved(&mut learner, &stop)?;
    } else {
        train_threaded(&mut learner, &stop)?;
    }
    learner.checkpoint()?;
    learner.files.metrics.flush()?;
    if let Some(r) = learner.files.replays.as_mut() {
        r.flush()?;
    }
    Ok(TrainSummary {
        run_path: learner.files.path.clone(),
        frames: learner.frames,
        episodes: learner.episodes,
        learner_steps: learner.steps,
        checkpoints: learner.checkpoints.clone(),
        resumed_from,
    })
}

fn train_interleaved(l: &mut Learner, stop: &AtomicBool) -> Result<()> {
    let cfg = l.cfg.clone();
    let mut source = EpisodeSource::new(cfg.seed, cfg.full_game);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1 << 40 | l.episodes));
    let mut buffers: [VecDeque<Sample>; 4] = Default::default();
    let mut draw_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1 << 50 | l.episodes));
    let mut snap = l.snapshot();
    while l.frames < cfg.total_frames && !stop.load(Ordering::Relaxed) {
        let id = l.episodes;
        let (state, game, mini, tribute) = source.next(id)?;
        let logged = cfg.replay_interval > 0 && id.is_multiple_of(cfg.replay_interval);
        let ep = match l.files.replays.as_mut().filter(|_| logged) {
            Some(w) => {
                w.deal(game, mini, &state, tribute)?;
                let ep = run_episode(
                    &snap,
                    state,
                    cfg.epsilon,
                    cfg.behavior_flags,
                    &mut rng,
                    Some((&mut *w, game, mini)),
                )?;
                w.result(game, mini, &ep.order)?;
                ep
            }
            None => run_episode::<Vec<u8>>(
                &snap,
                state,
                cfg.epsilon,
                cfg.behavior_flags,
                &mut rng,
                None,
            )?,
        };
        source.finish(&ep.order);
        l.frames += ep.frames();
        l.episodes += 1;
        l.counters.merge(&ep.counters);
        for (buf, t) in buffers.iter_mut().zip(ep.transitions) {
            buf.extend(t);
            while buf.len() > cfg.buffer_capacity {
                buf.pop_front();
            }
        }
        loop {
            let mut any = false;
            for (pos, buf) in buffers.iter_mut().enumerate() {
                if l.ready(buf) {
                    let batch = draw_batch(buf, cfg.batch_size, &mut draw_rng);
                    l.step(pos, &batch)?;
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
        if l.episodes.is_multiple_of(cfg.sync_interval) {
            snap = l.snapshot();
        }
        l.maybe_checkpoint()?;
    }
    Ok(())
}

struct Shared {
    published: RwLock<Arc<Snapshot>>,
    stop: AtomicBool,
    frames: AtomicU64,
    episodes: AtomicU64,
    counters: Mutex<BehaviorCounters>,
    replays: Mutex<Option<ReplayWriter<Vec<u8>>>>,
    error: Mutex<Option<Error>>,
}

fn actor_loop(
    a: usize,
    cfg: &TrainerConfig,
    shared: &Shared,
    senders: &[Sender<Sample>],
) -> Result<()> {
    let mut source = EpisodeSource::new(derive_seed(cfg.seed, 1 << 20 | a as u64), cfg.full_game);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1 << 30 | a as u64));
    let mut k = 0u64;
    while !shared.stop.load(Ordering::Relaxed) {
        let snap = shared.published.read().clone();
        let id = k * cfg.actor_count as u64 + a as u64;
        k += 1;
        let (state, game, mini, tribute) = source.next(id)?;
        let logged = cfg.replay_interval > 0 && id.is_multiple_of(cfg.replay_interval);
        let mut local = ReplayWriter::new(Vec::new());
        let ep = if logged {
            local.deal(game, mini, &state, tribute)?;
            let ep = run_episode(
                &snap,
                state,
                cfg.epsilon,
                cfg.behavior_flags,
                &mut rng,
                Some((&mut local, game, mini)),
            )?;
            local.result(game, mini, &ep.order)?;
            ep
        } else {
            run_episode::<Vec<u8>>(
                &snap,
                state,
                cfg.epsilon,
                cfg.behavior_flags,
                &mut rng,
                None,
            )?
        };
        source.finish(&ep.order);
        let frames = ep.frames();
        for (pos, ts) in ep.transitions.into_iter().enumerate() {
            for t in ts {
                let mut item = t;
                loop {
                    match senders[pos].send_timeout(item, Duration::from_millis(50)) {
                        Ok(()) => break,
                        Err(crossbeam_channel::SendTimeoutError::Timeout(back)) => {
                            if shared.stop.load(Ordering::Relaxed) {
                                return Ok(());
                            }
                            item = back;
                        }
                        Err(crossbeam_channel::SendTimeoutError::Disconnected(_)) => return Ok(()),
                    }
                }
            }
        }
        shared.counters.lock().merge(&ep.counters);
        if logged {
            if let Some(w) = shared.replays.lock().as_mut() {
                w.write_raw(&local.into_inner())?;
            }
        }
        shared.frames.fetch_add(frames, Ordering::SeqCst);
        shared.episodes.fetch_add(1, Ordering::SeqCst);
    }
    Ok(())
}

fn train_threaded(l: &mut Learner, stop: &AtomicBool) -> Result<()> {
    let cfg = l.cfg.clone();
    let shared = Shared {
        published: RwLock::new(Arc::new(l.snapshot())),
        stop: AtomicBool::new(false),
        frames: AtomicU64::new(l.frames),
        episodes: AtomicU64::new(l.episodes),
        counters: Mutex::new(BehaviorCounters::default()),
        replays: Mutex::new((cfg.replay_interval > 0).then(|| ReplayWriter::new(Vec::new()))),
        error: Mutex::new(None),
    };
    let (senders, receivers): (Vec<Sender<Sample>>, Vec<Receiver<Sample>>) =
        (0..4).map(|_| bounded(cfg.buffer_capacity)).unzip();
    let mut last_publish = l.episodes;
    let mut buffers: [VecDeque<Sample>; 4] = Default::default();
    let mut draw_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1 << 50 | l.episodes));
    let result = std::thread::scope(|s| -> Result<()> {
        for a in 0..cfg.actor_count {
            let (shared, senders, cfg) = (&shared, &senders, &cfg);
            s.spawn(move || {
                if let Err(e) = actor_loop(a, cfg, shared, senders) {
                    shared.error.lock().get_or_insert(e);
                    shared.stop.store(true, Ordering::SeqCst);
                }
            });
        }
        let outcome = (|| -> Result<()> {
            loop {
                l.frames = shared.frames.load(Ordering::SeqCst);
                l.episodes = shared.episodes.load(Ordering::SeqCst);
                l.counters = *shared.counters.lock();
                if l.frames >= cfg.total_frames
                    || stop.load(Ordering::Relaxed)
                    || shared.stop.load(Ordering::Relaxed)
                {
                    return Ok(());
                }
                let mut any = false;
                for pos in 0..4 {
                    while buffers[pos].len() < cfg.buffer_capacity {
                        match receivers[pos].try_recv() {
                            Ok(t) => buffers[pos].push_back(t),
                            Err(_) => break,
                        }
                    }
                    if l.ready(&buffers[pos]) {
                        let batch = draw_batch(&mut buffers[pos], cfg.batch_size, &mut draw_rng);
                        l.step(pos, &batch)?;
                        any = true;
                    }
                }
                if l.episodes >= last_publish + cfg.sync_interval {
                    *shared.published.write() = Arc::new(l.snapshot());
                    last_publish = l.episodes;
                }
                if let Some(w) = shared.replays.lock().as_mut() {
                    let bytes = std::mem::take(w.get_mut());
                    if let Some(out) = l.files.replays.as_mut() {
                        out.write_raw(&bytes)?;
                    }
                }
                l.maybe_checkpoint()?;
                if !any {
                    let mut sel = Select::new();
                    for r in &receivers {
                        sel.recv(r);
                    }
                    let _ = sel.ready_timeout(Duration::from_millis(20));
                }
            }
        })();
        shared.stop.store(true, Ordering::SeqCst);
        // Unblock actors waiting on full queues.
        for r in &receivers {
            while r.try_recv().is_ok() {}
        }
        outcome
    });
    l.frames = shared.frames.load(Ordering::SeqCst);
    l.episodes = shared.episodes.load(Ordering::SeqCst);
    if let Some(w) = shared.replays.lock().as_mut() {
        let bytes = std::mem::take(w.get_mut());
        if let Some(out) = l.files.replays.as_mut() {
            out.write_raw(&bytes)?;
        }
    }
    result?;
    if let Some(e) = shared.error.lock().take() {
        return Err(e);
    }
    Ok(())
}
