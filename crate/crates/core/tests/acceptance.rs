//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 7 and 8 read trained runs from `GUANZERO_ACCEPT_FLAGS` and
//! `GUANZERO_ACCEPT_NOFLAGS` (default `runs/acc-flags` and
//! `runs/acc-noflags` at the workspace root); see the README for the
//! training commands. The process exits non-zero on a failed criterion
//! only when `GUANZERO_ACCEPT_STRICT=1`.

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use guanzero::cards::{card_index, deal, Card, CardSet, Level, Rank, Seat, Suit};
use guanzero::checkpoint::{complete_sets, read_sidecar};
use guanzero::combos::{legal_follows, legal_leads};
use guanzero::engine::{return_card, score, settle, tribute, MiniGameState, MiniResult};
use guanzero::evalharness::{gen_decks, run_match, DeckFile, MatchConfig, MatchReport};
use guanzero::features::{
    encode_action, DecisionEncoder, ACTION_LEN, FLAT_LEN, HISTORY_STEPS, HISTORY_STEP_LEN,
};
use guanzero::trainer::{train, TrainerConfig};
use guanzero::valuenet::{loss_and_grads, sgd_step, NetParams, NetShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::fixtures::random_samples;
use common::gradcheck::gradient_errors;
use common::oracle::{key_to_combo, keys_of, oracle_follows, oracle_leads, random_hand};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn threads() -> usize {
    let n = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("GUANZERO_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .map_or(n, |c: usize| n.min(c.max(1)))
}

fn random_level(rng: &mut impl Rng) -> Level {
    Level::new(Rank::FACES[rng.random_range(0..13)]).unwrap()
}

fn c1_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut leads, mut follows) = (0, 0);
    while leads < 1000 || follows < 1000 {
        let level = random_level(&mut rng);
        let hand = random_hand(&mut rng, level, 12);
        if leads < 1000 {
            if keys_of(&legal_leads(hand, level)) != oracle_leads(hand, level) {
                return Err(format!("legal_leads differs on {hand} at level {level}"));
            }
            leads += 1;
        }
        let other = random_hand(&mut rng, level, 8).difference(hand);
        if follows >= 1000 || other.is_empty() {
            continue;
        }
        let table: Vec<_> = oracle_leads(other, level).into_iter().collect();
        let last = key_to_combo(&table[rng.random_range(0..table.len())]);
        if keys_of(&legal_follows(hand, &last, level)) != oracle_follows(hand, &last, level) {
            return Err(format!(
                "legal_follows differs on {hand} vs {last} at level {level}"
            ));
        }
        follows += 1;
    }
    Ok(format!(
        "{leads} lead hands and {follows} follow hands equal the subset oracle"
    ))
}

fn order(ix: [usize; 4]) -> Vec<Seat> {
    ix.iter().map(|&i| Seat::new(i).unwrap()).collect()
}

fn c2_tables() -> Outcome {
    // Upgrade table: (partner's place) -> levels, for both teams.
    let upgrades = [([0, 2, 1, 3], 3), ([0, 1, 2, 3], 2), ([0, 1, 3, 2], 1)];
    for (o, u) in upgrades {
        for shift in 0..4 {
            let rotated = o.map(|i| (i + shift) % 4);
            let got = settle(&order(rotated));
            if got != (shift % 2, u) {
                return Err(format!(
                    "settle({rotated:?}) = {got:?}, want ({}, {u})",
                    shift % 2
                ));
            }
        }
    }
    let table8: [(i32, (u8, u8)); 15] = [
        (0, (14, 14)),
        (1, (15, 13)),
        (2, (16, 12)),
        (3, (17, 11)),
        (4, (18, 10)),
        (5, (19, 9)),
        (6, (20, 8)),
        (7, (21, 7)),
        (8, (22, 6)),
        (9, (23, 5)),
        (10, (24, 4)),
        (11, (25, 3)),
        (12, (26, 2)),
        (13, (27, 1)),
        (14, (28, 0)),
    ];
    for (d, want) in table8 {
        match score(d) {
            Ok(got) if got == want => {}
            other => return Err(format!("score({d}) = {other:?}, want {want:?}")),
        }
    }
    Ok("settle matches all 3 standings for both teams; score matches all 15 columns".into())
}

fn c(deck: u8, suit: Suit, rank: Rank) -> guanzero::cards::CardId {
    card_index(Card::new(deck, suit, rank).unwrap())
}

fn hands(h: [Vec<guanzero::cards::CardId>; 4]) -> [CardSet; 4] {
    h.map(|v| v.into_iter().collect())
}

fn s(i: usize) -> Seat {
    Seat::new(i).unwrap()
}

fn c3_tribute() -> Outcome {
    // Single tribute: dweller gives its best non-wild card to the banker.
    let level = Level::new(Rank::Five).unwrap();
    let h = hands([
        vec![
            c(0, Suit::Clubs, Rank::Three),
            c(0, Suit::Spades, Rank::King),
        ],
        vec![c(0, Suit::Clubs, Rank::Four)],
        vec![c(0, Suit::Clubs, Rank::Six)],
        vec![
            c(0, Suit::Hearts, Rank::Five),
            c(0, Suit::Spades, Rank::Ace),
            c(1, Suit::Clubs, Rank::Nine),
        ],
    ]);
    let rec = tribute(
        &MiniResult {
            order: order([0, 1, 2, 3]),
        },
        &h,
        level,
    );
    check(
        !rec.denied
            && rec.donations == vec![(s(3), s(0), c(0, Suit::Spades, Rank::Ace))]
            && rec.returns == vec![(s(0), s(3), c(0, Suit::Clubs, Rank::Three))]
            && rec.leader == s(3),
        format!("single tribute record {rec:?}"),
    )?;

    // Double tribute: the higher card goes to the banker.
    let h = hands([
        vec![c(0, Suit::Clubs, Rank::Three)],
        vec![c(0, Suit::Clubs, Rank::King), c(0, Suit::Clubs, Rank::Four)],
        vec![c(0, Suit::Clubs, Rank::Six)],
        vec![
            c(0, Suit::Spades, Rank::Ace),
            c(0, Suit::Spades, Rank::Seven),
        ],
    ]);
    let rec = tribute(
        &MiniResult {
            order: order([2, 0, 1, 3]),
        },
        &h,
        Level::TWO,
    );
    check(
        rec.donations
            == vec![
                (s(3), s(2), c(0, Suit::Spades, Rank::Ace)),
                (s(1), s(0), c(0, Suit::Clubs, Rank::King)),
            ]
            && rec.leader == s(3),
        format!("double tribute record {rec:?}"),
    )?;

    // Equal cards: each donor pays the opponent farthest clockwise from it.
    for (banker, follower, third, dweller) in
        [(0, 2, 1, 3), (2, 0, 3, 1), (1, 3, 0, 2), (3, 1, 2, 0)]
    {
        let mut h: [CardSet; 4] = Default::default();
        h[third] = [
            c(0, Suit::Spades, Rank::Ace),
            c(0, Suit::Spades, Rank::Three),
        ]
        .into_iter()
        .collect();
        h[dweller] = [c(1, Suit::Clubs, Rank::Ace), c(1, Suit::Clubs, Rank::Three)]
            .into_iter()
            .collect();
        h[banker] = [c(0, Suit::Clubs, Rank::Seven)].into_iter().collect();
        h[follower] = [c(0, Suit::Diamonds, Rank::Eight)].into_iter().collect();
        let rec = tribute(
            &MiniResult {
                order: order([banker, follower, third, dweller]),
            },
            &h,
            Level::TWO,
        );
        let ok = rec.donations.len() == 2
            && rec
                .donations
                .iter()
                .all(|(from, to, _)| to.index() == (from.index() + 3) % 4);
        let to_banker = rec.donations.iter().find(|d| d.1 == s(banker)).map(|d| d.0);
        check(
            ok && to_banker == Some(rec.leader),
            format!("tie-break record {rec:?}"),
        )?;
    }

    // Returns are at most 10 in face value whenever a small card is held.
    for seed in 0..200 {
        let d = deal(seed);
        let level = Level::TWO.upgraded((seed % 13) as u8);
        let rec = tribute(
            &MiniResult {
                order: order([0, 1, 2, 3]),
            },
            &d.hands,
            level,
        );
        for (from, _, card) in &rec.returns {
            let mut hand = d.hands[from.index()];
            for (_, to, given) in &rec.donations {
                if to == from {
                    hand.insert(*given);
                }
            }
            let face = card.rank().face_value();
            let has_small = hand
                .iter()
                .any(|id| id.rank().face_value().is_some_and(|f| f <= 10));
            check(
                !has_small || face.is_some_and(|f| f <= 10),
                format!("return {card} at seed {seed}"),
            )?;
            check(
                return_card(hand, level) == Some(*card),
                format!("return card mismatch at seed {seed}"),
            )?;
        }
    }

    // Denial: the losing side holds both red jokers.
    let rj = |deck| c(deck, Suit::None, Rank::RedJoker);
    let h = hands([
        vec![c(0, Suit::Clubs, Rank::Three)],
        vec![c(0, Suit::Clubs, Rank::Four)],
        vec![c(0, Suit::Clubs, Rank::Six)],
        vec![rj(0), rj(1)],
    ]);
    let single = tribute(
        &MiniResult {
            order: order([1, 0, 2, 3]),
        },
        &h,
        Level::TWO,
    );
    let h = hands([
        vec![c(0, Suit::Clubs, Rank::Three)],
        vec![rj(0)],
        vec![c(0, Suit::Clubs, Rank::Six)],
        vec![rj(1)],
    ]);
    let double = tribute(
        &MiniResult {
            order: order([0, 2, 1, 3]),
        },
        &h,
        Level::TWO,
    );
    check(
        single.denied
            && single.donations.is_empty()
            && single.leader == s(1)
            && double.denied
            && double.leader == s(0),
        format!("denial records {single:?} / {double:?}"),
    )?;
    Ok("single, double, clockwise tie-break, return <= 10 and red-joker denial all hold".into())
}

fn c4_dimensions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut states = 0;
    let mut game = 0;
    while states < 10_000 {
        let mut st = MiniGameState::evaluation(&deal(90_000 + game));
        game += 1;
        while !st.is_done() && states < 10_000 {
            let legal = st.legal_actions().map_err(|e| e.to_string())?;
            let pick = &legal[rng.random_range(0..legal.len())];
            let f = DecisionEncoder::new(&st, &legal, true).encode(&st, pick);
            let flat = f.flat();
            let hist = f.history_matrix();
            let action = encode_action(pick);
            let own: usize = flat[..108].iter().map(|&b| b as usize).sum();
            let hand = st.hand(st.current).len();
            if flat.len() != FLAT_LEN
                || hist.len() != HISTORY_STEPS
                || hist.iter().any(|r| r.len() != HISTORY_STEP_LEN)
                || ACTION_LEN != 108
                || action.len() != pick.cards().len()
                || own != hand
            {
                return Err(format!(
                    "state {states}: flat {} hist {}x{} own {own} vs hand {hand}",
                    flat.len(),
                    hist.len(),
                    hist[0].len()
                ));
            }
            states += 1;
            st.apply(pick.clone()).map_err(|e| e.to_string())?;
        }
    }
    check(
        FLAT_LEN == 108 + 108 + 4 * 108 + 3 * 108 + 3 * 27 + 13 + 9 && HISTORY_STEP_LEN == 432,
        format!("flat {FLAT_LEN}, history {HISTORY_STEPS}x{HISTORY_STEP_LEN}, action {ACTION_LEN}; hand popcount exact on {states} states"),
    )
}

fn c5_gradients() -> Outcome {
    let t = Instant::now();
    let p = NetParams::<f64>::init(NetShape::default(), 11);
    let batch = random_samples(21, 3);
    let errors = gradient_errors(&p, &batch, 31);
    let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    let per_tensor = (0..p.tensors.len()).all(|k| errors.iter().filter(|e| e.0 == k).count() >= 10);
    check(
        per_tensor && worst < 1e-3 && secs < 60.0,
        format!(
            "{} coordinates over {} tensors, max relative error {worst:.2e}, {secs:.1}s",
            errors.len(),
            p.tensors.len()
        ),
    )
}

fn c6_overfit() -> Outcome {
    let t = Instant::now();
    let mut p = NetParams::<f32>::init(NetShape::default(), 12);
    let mut v = NetParams::zeros(p.shape);
    let batch = random_samples(22, 32);
    for step in 0..=10_000 {
        let (mse, g) = loss_and_grads(&p, &batch).map_err(|e| e.to_string())?;
        if mse < 1e-6 {
            let secs = t.elapsed().as_secs_f64();
            return check(
                secs < 300.0,
                format!("mse {mse:.2e} after {step} steps, {secs:.0}s"),
            );
        }
        if step == 10_000 {
            return Err(format!("mse {mse:.2e} after 10000 steps"));
        }
        sgd_step(&mut p, &g, &mut v, 1e-3, 0.9).map_err(|e| e.to_string())?;
    }
    unreachable!()
}

fn run_dir(var: &str, default: &str) -> PathBuf {
    std::env::var_os(var).map(PathBuf::from).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../..")
            .join(default)
    })
}

fn eval_vs_random(spec: String, decks: &DeckFile) -> Result<MatchReport, String> {
    let cfg = MatchConfig {
        team_a: spec,
        team_b: "random".into(),
        n_games: 1000,
        seed: 77,
        threads: threads(),
        ..Default::default()
    };
    let r = run_match(&cfg, decks, None).map_err(|e| e.to_string())?;
    match r.error {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// The run's frame counts closest to 1/3, 2/3 and all of its final set.
fn spaced_sets(dir: &Path) -> Result<Vec<u64>, String> {
    let sets = complete_sets(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let last = *sets
        .last()
        .ok_or_else(|| format!("{}: no checkpoints", dir.display()))?;
    let near = |target: u64| *sets.iter().min_by_key(|f| f.abs_diff(target)).unwrap();
    Ok(vec![near(last / 3), near(2 * last / 3), last])
}

/// Returns the outcome and, when evaluation ran, the final set's report.
fn c7_training(dir: &Path, decks: &DeckFile) -> (Outcome, Option<MatchReport>) {
    match c7_inner(dir, decks) {
        Ok((ok, msg, report)) => (check(ok, msg), Some(report)),
        Err(e) => (Err(e), None),
    }
}

fn c7_inner(dir: &Path, decks: &DeckFile) -> Result<(bool, String, MatchReport), String> {
    let frames = spaced_sets(dir)?;
    let last = *frames.last().unwrap();
    let side = read_sidecar(dir, Seat::ALL[0], last).map_err(|e| e.to_string())?;
    if side.frames < 200_000 || !side.behavior_flags {
        return Err(format!(
            "final set has {} frames (flags {}); need >= 200000 with flags",
            side.frames, side.behavior_flags
        ));
    }
    let mut reports = Vec::new();
    for f in &frames {
        reports.push(eval_vs_random(format!("dmc:{}@{f}", dir.display()), decks)?);
    }
    let wrs: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r.wr_as_team_a.unwrap(), r.wr_as_team_b.unwrap()))
        .collect();
    let combined: Vec<f64> = wrs.iter().map(|w| (w.0 + w.1) / 2.0).collect();
    let (fa, fb) = *wrs.last().unwrap();
    let monotone = combined.windows(2).all(|w| w[1] >= w[0] - 0.03);
    let curve: Vec<String> = frames
        .iter()
        .zip(&wrs)
        .map(|(f, w)| format!("{f}:{:.3}/{:.3}", w.0, w.1))
        .collect();
    let msg = format!(
        "WR vs random at {} (team A / team B seating)",
        curve.join(", ")
    );
    let final_report = reports.pop().unwrap();
    Ok((fa >= 0.80 && fb >= 0.80 && monotone, msg, final_report))
}

fn c8_flags(flagged: &MatchReport, noflags_dir: &Path, decks: &DeckFile) -> Outcome {
    let last = *spaced_sets(noflags_dir)?.last().unwrap();
    let side = read_sidecar(noflags_dir, Seat::ALL[0], last).map_err(|e| e.to_string())?;
    if side.behavior_flags || side.frames < 200_000 {
        return Err(format!(
            "ablation run has {} frames (flags {}); need >= 200000 without flags",
            side.frames, side.behavior_flags
        ));
    }
    let abl = eval_vs_random(
        format!("dmc-noflags:{}@{last}", noflags_dir.display()),
        decks,
    )?;
    let (fc, ac) = (flagged.rates.team_a.counters, abl.rates.team_a.counters);
    let rate = |r: Option<f64>| r.unwrap_or(f64::NAN);
    let (fr, ar) = (
        rate(flagged.rates.team_a.cooperating),
        rate(abl.rates.team_a.cooperating),
    );
    let opp = |c: guanzero::behavior::BehaviorCounters| c.opportunities[0];
    check(
        fr - ar >= 0.05 && opp(fc) >= 500 && opp(ac) >= 500,
        format!(
            "cooperating {fr:.3} (flags, {} opportunities) vs {ar:.3} (ablation, {} opportunities)",
            opp(fc),
            opp(ac)
        ),
    )
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = |id: &str| TrainerConfig {
        hidden: 16,
        width: 32,
        batch_size: 16,
        buffer_capacity: 4000,
        learn_start: 200,
        total_frames: 4000,
        checkpoint_interval: 2000,
        deterministic: true,
        replay_interval: 1,
        seed: 9,
        epsilon: 0.1,
        lr: 1e-3,
        run_dir: dir.path().into(),
        run_id: id.into(),
        ..Default::default()
    };
    train(&cfg("one"), None).map_err(|e| e.to_string())?;
    train(&cfg("two"), None).map_err(|e| e.to_string())?;
    let read =
        |id: &str, f: &str| std::fs::read(dir.path().join(id).join(f)).map_err(|e| e.to_string());
    let (m1, m2) = (read("one", "metrics.jsonl")?, read("two", "metrics.jsonl")?);
    let (r1, r2) = (read("one", "replays.jsonl")?, read("two", "replays.jsonl")?);
    check(
        m1 == m2 && r1 == r2 && !m1.is_empty() && !r1.is_empty(),
        format!(
            "metrics ({} bytes) and replays ({} bytes) identical across two runs",
            m1.len(),
            r1.len()
        ),
    )
}

fn c10_symmetry() -> Outcome {
    let decks = gen_decks(1000, 10).map_err(|e| e.to_string())?;
    let rule = MatchConfig {
        team_a: "rule".into(),
        team_b: "rule".into(),
        n_games: 1000,
        seed: 10,
        threads: threads(),
        ..Default::default()
    };
    let r = run_match(&rule, &decks, None).map_err(|e| e.to_string())?;
    let (a, b) = (r.wr_as_team_a.unwrap(), r.wr_as_team_b.unwrap());
    check(a + b == 1.0, format!("rule vs rule: {a} + {b} != 1"))?;
    let rnd = MatchConfig {
        team_a: "random".into(),
        team_b: "random".into(),
        ..rule
    };
    let r = run_match(&rnd, &decks, None).map_err(|e| e.to_string())?;
    let (ra, rb) = (r.wr_as_team_a.unwrap(), r.wr_as_team_b.unwrap());
    let inside = |x: f64| (0.45..=0.55).contains(&x);
    check(
        inside(ra) && inside(rb),
        format!("rule vs rule {a:.3} + {b:.3} = 1; random vs random {ra:.3} / {rb:.3} over 1000 paired games"),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, t: Instant, out: Outcome| {
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("criterion {n:>2} PASS {name}: {msg} [{secs:.0}s]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {name}: {msg} [{secs:.0}s]");
            }
        }
    };
    let t = Instant::now();
    report(1, "rules oracle", t, c1_oracle());
    let t = Instant::now();
    report(2, "upgrade and score tables", t, c2_tables());
    let t = Instant::now();
    report(3, "tribute suite", t, c3_tribute());
    let t = Instant::now();
    report(4, "encoding dimensions", t, c4_dimensions());
    let t = Instant::now();
    report(5, "gradient check", t, c5_gradients());
    let t = Instant::now();
    report(6, "overfit one batch", t, c6_overfit());

    let decks = gen_decks(1000, 2024).expect("decks");
    let flags_dir = run_dir("GUANZERO_ACCEPT_FLAGS", "runs/acc-flags");
    let noflags_dir = run_dir("GUANZERO_ACCEPT_NOFLAGS", "runs/acc-noflags");
    let t = Instant::now();
    let (c7, flagged) = c7_training(&flags_dir, &decks);
    report(7, "training vs random", t, c7);
    let t = Instant::now();
    let c8 = match flagged {
        Some(r) => c8_flags(&r, &noflags_dir, &decks),
        None => Err(format!(
            "no evaluated flagged run at {}",
            flags_dir.display()
        )),
    };
    report(8, "behavior flag effect", t, c8);
    let t = Instant::now();
    report(9, "determinism", t, c9_determinism());
    let t = Instant::now();
    report(10, "symmetry", t, c10_symmetry());

    if failed == 0 {
        println!("all acceptance criteria passed");
        return;
    }
    println!("{failed} acceptance criteria failed");
    // The verdicts above are the record; only strict mode fails the process.
    if std::env::var("GUANZERO_ACCEPT_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
