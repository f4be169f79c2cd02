//! Command-line entry point: `gen-decks`, `train`, `eval`, `play`, `replay`.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{Agent, AgentSpec, HumanAgent};
use crate::behavior::{BehaviorCounters, Opportunities};
use crate::cards::{deal, Seat};
use crate::checkpoint::CODE_VERSION;
use crate::engine::{settle, MiniGameState};
use crate::error::{Error, Result};
use crate::evalharness::{
    gen_decks, play_mini_game, run_match, wr_curve, write_curve_csv, DeckFile, MatchConfig,
};
use crate::replay::{check_with, read_records, Record, ReplayWriter};
use crate::trainer::{train, TrainerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_ABORTED: i32 = 5;

/// Environment variable capping actor and evaluation threads.
pub const THREADS_ENV: &str = "GUANZERO_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "guanzero",
    version,
    about = "Guandan engine, DMC trainer and evaluation harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a file of pre-shuffled decks for evaluation.
    GenDecks {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train (or resume) a run.
    Train(TrainArgs),
    /// Paired-deck match between two agents.
    Eval(EvalArgs),
    /// Play one mini game in the terminal against three agents.
    Play {
        #[arg(long, default_value = "rule")]
        opponents: String,
        #[arg(long, value_parser = parse_seat, default_value = "p1")]
        seat: Seat,
        #[arg(long, default_value_t = 0)]
        deal_seed: u64,
        /// Append the finished game to this log.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Verify a game log by re-simulating it.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        check: bool,
        /// Print behavior statuses for every decision.
        #[arg(long)]
        behaviors: bool,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML file with trainer settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub no_behavior_flags: bool,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub behavior_flags: Option<bool>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub sync_interval: Option<u64>,
    #[arg(long)]
    pub buffer_capacity: Option<usize>,
    #[arg(long)]
    pub learn_start: Option<usize>,
    #[arg(long)]
    pub actor_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoint_interval: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub full_game: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
    #[arg(long)]
    pub replay_interval: Option<u64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, default_value = "random")]
    pub team_a: String,
    #[arg(long, default_value = "random")]
    pub team_b: String,
    /// Deck file; generated from --seed when absent.
    #[arg(long)]
    pub decks: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub games: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub swap: bool,
    #[arg(long)]
    pub full_game: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Log every game here.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Evaluate every checkpoint set in this directory as team A instead.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub curve_noflags: bool,
    /// CSV output for --curve (stdout when absent).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn parse_seat(s: &str) -> std::result::Result<Seat, String> {
    Seat::ALL
        .into_iter()
        .find(|seat| seat.to_string() == s)
        .ok_or_else(|| format!("expected p1, p2, p3 or p4, got {s:?}"))
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::AgentSpec(_) => EXIT_USAGE,
        Error::Io(_) | Error::Checkpoint { .. } | Error::DeckFile(_) => EXIT_IO,
        Error::Aborted => EXIT_ABORTED,
        _ => EXIT_VALIDATION,
    }
}

/// Thread cap from the environment, if set to a positive number.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

fn capped(n: usize) -> usize {
    thread_cap().map_or(n, |c| n.min(c)).max(1)
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::GenDecks { n, seed, out } => {
            let file = gen_decks(n as usize, seed)?;
            file.write(&out)?;
            println!(
                "wrote {n} decks to {} (sha256 {})",
                out.display(),
                file.hash()
            );
            Ok(EXIT_OK)
        }
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Play {
            opponents,
            seat,
            deal_seed,
            replay,
        } => cmd_play(&opponents, seat, deal_seed, replay.as_deref()),
        Command::Replay {
            log,
            check,
            behaviors,
        } => cmd_replay(&log, check, behaviors),
    }
}

pub fn train_config(args: &TrainArgs) -> Result<TrainerConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => TrainerConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    set!(
        epsilon,
        batch_size,
        lr,
        momentum,
        sync_interval,
        buffer_capacity,
        learn_start,
        actor_count,
        seed,
        checkpoint_interval,
        full_game,
        deterministic,
        replay_interval,
        hidden,
        width,
        run_id,
        behavior_flags
    );
    if let Some(f) = args.frames {
        cfg.total_frames = f;
    }
    if let Some(d) = &args.out_dir {
        cfg.run_dir = d.clone();
    }
    if args.no_behavior_flags {
        cfg.behavior_flags = false;
    }
    cfg.actor_count = capped(cfg.actor_count);
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let cfg = train_config(&args)?;
    let s = train(&cfg, None)?;
    if let Some(f) = s.resumed_from {
        println!("resumed from {f} frames");
    }
    println!(
        "run {}: {} frames, {} episodes, {} learner steps, checkpoints at {:?}",
        s.run_path.display(),
        s.frames,
        s.episodes,
        s.learner_steps,
        s.checkpoints
    );
    Ok(EXIT_OK)
}

fn fmt_rate(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn cmd_eval(args: EvalArgs) -> Result<i32> {
    let decks = match &args.decks {
        Some(p) => DeckFile::read(p)?,
        None => gen_decks(args.games.max(1), args.seed)?,
    };
    let threads = capped(
        args.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    );
    let cfg = MatchConfig {
        team_a: args.team_a.clone(),
        team_b: args.team_b.clone(),
        n_games: args.games,
        swap: args.swap,
        full_game: args.full_game,
        seed: args.seed,
        threads,
    };
    // Fail on bad specs and missing checkpoints before any play.
    if args.curve.is_none() {
        for spec in [&cfg.team_a, &cfg.team_b] {
            AgentSpec::parse(spec)?.build()?;
        }
    }

    if let Some(dir) = &args.curve {
        let rows = wr_curve(dir, !args.curve_noflags, &cfg, &decks)?;
        match &args.csv {
            Some(p) => write_curve_csv(&rows, &mut File::create(p)?)?,
            None => write_curve_csv(&rows, &mut io::stdout().lock())?,
        }
        return Ok(EXIT_OK);
    }

    let report = match &args.replay {
        Some(p) => {
            let mut f = io::BufWriter::new(File::create(p)?);
            run_match(&cfg, &decks, Some(&mut f))?
        }
        None => run_match(&cfg, &decks, None)?,
    };
    if let Some(p) = &args.report {
        report.write(p)?;
    }
    println!(
        "{} vs {}: {} games, deck sha256 {}",
        cfg.team_a, cfg.team_b, report.games_played, report.deck_hash
    );
    println!("wr_as_team_a {}", fmt_rate(report.wr_as_team_a));
    if cfg.swap {
        println!("wr_as_team_b {}", fmt_rate(report.wr_as_team_b));
    }
    let r = &report.rates.team_a;
    println!(
        "team A rates: cooperating {} dwarfing {} assisting {}",
        fmt_rate(r.cooperating),
        fmt_rate(r.dwarfing),
        fmt_rate(r.assisting)
    );
    if let Some(e) = &report.error {
        eprintln!("match invalid: {e}");
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_OK)
}

fn cmd_play(opponents: &str, seat: Seat, deal_seed: u64, replay: Option<&Path>) -> Result<i32> {
    let spec = AgentSpec::parse(opponents)?;
    if spec == AgentSpec::Human {
        return Err(Error::AgentSpec("opponents cannot be human".into()));
    }
    let mut agents: Vec<Box<dyn Agent>> = vec![
        Box::new(HumanAgent::new(BufReader::new(io::stdin()), io::stdout())),
        spec.build()?,
    ];
    let mut seat_agent = [1; 4];
    seat_agent[seat.index()] = 0;
    let mut state = MiniGameState::evaluation(&deal(deal_seed));
    let mut rng = ChaCha8Rng::seed_from_u64(deal_seed);
    let mut counters = [BehaviorCounters::default(); 2];
    let mut log = ReplayWriter::new(Vec::new());
    let mut seats: [String; 4] = std::array::from_fn(|_| opponents.to_string());
    seats[seat.index()] = "human".into();
    log.write(&Record::Header {
        code_version: CODE_VERSION.into(),
        config_hash: String::new(),
        seats,
    })?;
    log.deal(deal_seed, 0, &state, None)?;
    play_mini_game(
        &mut state,
        &mut agents,
        seat_agent,
        &mut rng,
        &mut counters,
        Some((&mut log, deal_seed, 0)),
    )?;
    let order = state.full_order();
    log.result(deal_seed, 0, &order)?;
    let (team, upgrade) = settle(&order);
    let names: Vec<String> = order.iter().map(|s| s.to_string()).collect();
    println!("\nstandings: {}", names.join(" > "));
    let won = team == seat.index() % 2;
    println!(
        "{} (upgrade {upgrade})",
        if won {
            "your team wins"
        } else {
            "your team loses"
        }
    );
    if let Some(p) = replay {
        let mut f = OpenOptions::new().create(true).append(true).open(p)?;
        f.write_all(&log.into_inner())?;
        println!("appended to {}", p.display());
    }
    Ok(EXIT_OK)
}

fn cmd_replay(log: &Path, check: bool, behaviors: bool) -> Result<i32> {
    let file = File::open(log)?;
    let records = read_records(BufReader::new(file))?;
    if !check && !behaviors {
        let headers = records
            .iter()
            .filter(|r| matches!(r, Record::Header { .. }))
            .count();
        println!(
            "{} records, {headers} headers (use --check to verify)",
            records.len()
        );
        return Ok(EXIT_OK);
    }
    let mut out = io::stdout().lock();
    let mut step = 0usize;
    let mut failed = None;
    let summary = check_with(&records, |state, action| {
        step += 1;
        if !behaviors || failed.is_some() {
            return;
        }
        let line = state.legal_actions().map(|legal| {
            let st = Opportunities::detect(state, &legal).statuses(state, action);
            format!(
                "{step} {} {action}: cooperating {:?} dwarfing {:?} assisting {:?}",
                state.current, st[0], st[1], st[2]
            )
        });
        match line {
            Ok(l) => {
                if let Err(e) = writeln!(out, "{l}") {
                    failed = Some(Error::Io(e));
                }
            }
            Err(e) => failed = Some(e),
        }
    });
    if let Some(e) = failed {
        return Err(e);
    }
    let summary = summary?;
    writeln!(
        out,
        "OK {} mini games, {} actions",
        summary.mini_games, summary.actions
    )?;
    Ok(EXIT_OK)
}
