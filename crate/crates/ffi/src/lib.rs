//! C ABI over the guanzero engine and agents.
//!
//! Every call returns a [`GzStatus`]; on failure a message is kept per
//! thread and can be fetched with `gz_last_error_message`. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use guanzero::agents::{Agent, AgentSpec};
use guanzero::cards::{deal, CardSet, Seat};
use guanzero::combos::PlayOrPass;
use guanzero::engine::{settle, MiniGameState};
use guanzero::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    IllegalAction = 3,
    Io = 4,
    Checkpoint = 5,
    BufferTooSmall = 6,
    Panic = 7,
    Internal = 8,
}

/// A mini game at level 2 with its current legal actions.
pub struct GzGame {
    state: MiniGameState,
    legal: Vec<PlayOrPass>,
}

/// An agent built from a spec string, with its own rng.
pub struct GzAgent {
    agent: Box<dyn Agent>,
    rng: ChaCha8Rng,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Fallible = Result<(), (GzStatus, String)>;

fn fail<T>(status: GzStatus, msg: impl Into<String>) -> Result<T, (GzStatus, String)> {
    Err((status, msg.into()))
}

fn from_core(e: Error) -> (GzStatus, String) {
    let status = match &e {
        Error::IllegalAction(_) => GzStatus::IllegalAction,
        Error::Io(_) => GzStatus::Io,
        Error::Checkpoint { .. } => GzStatus::Checkpoint,
        Error::AgentSpec(_) | Error::InvalidSeat(_) => GzStatus::InvalidArgument,
        _ => GzStatus::Internal,
    };
    (status, e.to_string())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Fallible) -> GzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GzStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GzStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (GzStatus, String)> {
    // SAFETY: caller passes either null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| (GzStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (GzStatus, String)> {
    // SAFETY: as above, and the handle is not aliased during the call.
    unsafe { p.as_mut() }.ok_or_else(|| (GzStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Fallible {
    if p.is_null() {
        return fail(GzStatus::NullPointer, format!("{what} is null"));
    }
    // SAFETY: non-null and, per the contract, valid for writes.
    unsafe { p.write(v) };
    Ok(())
}

/// Copies card ids into `out` (capacity `cap`); `out_len` always gets the
/// full count.
unsafe fn write_cards(cards: CardSet, out: *mut u8, cap: usize, out_len: *mut usize) -> Fallible {
    let n = cards.len();
    unsafe { write_out(out_len, n, "out_len") }?;
    if n > cap {
        return fail(
            GzStatus::BufferTooSmall,
            format!("need room for {n} card ids, got {cap}"),
        );
    }
    if n > 0 && out.is_null() {
        return fail(GzStatus::NullPointer, "out_ids is null");
    }
    for (i, id) in cards.iter().enumerate() {
        // SAFETY: i < n <= cap.
        unsafe { out.add(i).write(id.index() as u8) };
    }
    Ok(())
}

fn seat(i: u8) -> Result<Seat, (GzStatus, String)> {
    Seat::ALL.get(i as usize).copied().ok_or_else(|| {
        (
            GzStatus::InvalidArgument,
            format!("seat {i} out of range 0..4"),
        )
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the last error message on this thread, without the
/// terminating NUL; 0 when there is none.
#[no_mangle]
pub extern "C" fn gz_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copies the last error message (NUL-terminated) into `buf`.
///
/// # Safety
/// `buf` must be valid for `cap` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn gz_last_error_message(buf: *mut c_char, cap: usize) -> GzStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone()).unwrap_or_default();
    let bytes = msg.as_bytes_with_nul();
    if buf.is_null() {
        return GzStatus::NullPointer;
    }
    if bytes.len() > cap {
        return GzStatus::BufferTooSmall;
    }
    // SAFETY: buf holds at least bytes.len() bytes.
    unsafe { ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len()) };
    GzStatus::Ok
}

/// Deals a level-2 mini game from `deal_seed`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn gz_game_new(deal_seed: u64, out: *mut *mut GzGame) -> GzStatus {
    guard(|| {
        let state = MiniGameState::evaluation(&deal(deal_seed));
        let legal = state.legal_actions().map_err(from_core)?;
        if out.is_null() {
            return fail(GzStatus::NullPointer, "out is null");
        }
        let game = Box::into_raw(Box::new(GzGame { state, legal }));
        // SAFETY: checked non-null above.
        unsafe { out.write(game) };
        Ok(())
    })
}

/// # Safety
/// `game` must be null or a handle from `gz_game_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gz_game_free(game: *mut GzGame) {
    if !game.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(game) });
    }
}

/// # Safety
/// `game` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gz_game_current_seat(game: *const GzGame, out: *mut u8) -> GzStatus {
    guard(|| {
        let g = unsafe { deref(game, "game") }?;
        unsafe { write_out(out, g.state.current.index() as u8, "out") }
    })
}

/// # Safety
/// `game` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gz_game_is_done(game: *const GzGame, out: *mut bool) -> GzStatus {
    guard(|| {
        let g = unsafe { deref(game, "game") }?;
        unsafe { write_out(out, g.state.is_done(), "out") }
    })
}

/// Card ids (0..107) held by `seat`.
///
/// # Safety
/// `out_ids` must be valid for `cap` bytes, `out_len` for one write.
#[no_mangle]
pub unsafe extern "C" fn gz_game_hand(
    game: *const GzGame,
    seat_index: u8,
    out_ids: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> GzStatus {
    guard(|| {
        let g = unsafe { deref(game, "game") }?;
        let s = seat(seat_index)?;
        unsafe { write_cards(g.state.hand(s), out_ids, cap, out_len) }
    })
}

/// Number of legal actions for the seat to act (0 once the game is over).
///
/// # Safety
/// `game` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gz_game_legal_count(game: *const GzGame, out: *mut usize) -> GzStatus {
    guard(|| {
        let g = unsafe { deref(game, "game") }?;
        unsafe { write_out(out, g.legal.len(), "out") }
    })
}

/// Cards of legal action `index`; a pass has no cards and sets `is_pass`.
///
/// # Safety
/// Pointers as for `gz_game_hand`; `is_pass` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gz_game_legal_action(
    game: *const GzGame,
    index: usize,
    out_ids: *mut u8,
    cap: usize,
    out_len: *mut usize,
    is_pass: *mut bool,
) -> GzStatus {
    guard(|| {
        let g = unsafe { deref(game, "game") }?;
        let Some(a) = g.legal.get(index) else {
            return fail(
                GzStatus::InvalidArgument,
                format!("action {index} of {}", g.legal.len()),
            );
        };
        unsafe { write_out(is_pass, a.is_pass(), "is_pass") }?;
        unsafe { write_cards(a.cards(), out_ids, cap, out_len) }
    })
}

/// Plays legal action `index` for the seat to act.
///
/// # Safety
/// `game` must be a live handle not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn gz_game_apply(game: *mut GzGame, index: usize) -> GzStatus {
    guard(|| {
        let g = unsafe { deref_mut(game, "game") }?;
        if g.state.is_done() {
            return fail(GzStatus::IllegalAction, "game is over");
        }
        let Some(a) = g.legal.get(index).cloned() else {
            return fail(
                GzStatus::InvalidArgument,
                format!("action {index} of {}", g.legal.len()),
            );
        };
        g.state.apply(a).map_err(from_core)?;
        g.legal = if g.state.is_done() {
            Vec::new()
        } else {
            g.state.legal_actions().map_err(from_core)?
        };
        Ok(())
    })
}

/// Finishing order (4 seats), winning team (0 = p1/p3) and upgrade 1..3.
///
/// # Safety
/// `out_order` must be valid for 4 bytes, the others for one write.
#[no_mangle]
pub unsafe extern "C" fn gz_game_result(
    game: *const GzGame,
    out_order: *mut u8,
    out_team: *mut u8,
    out_upgrade: *mut u8,
) -> GzStatus {
    guard(|| {
        let g = unsafe { deref(game, "game") }?;
        if !g.state.is_done() {
            return fail(GzStatus::InvalidArgument, "game is not over");
        }
        if out_order.is_null() {
            return fail(GzStatus::NullPointer, "out_order is null");
        }
        let order = g.state.full_order();
        let (team, upgrade) = settle(&order);
        for (i, s) in order.iter().enumerate() {
            // SAFETY: order has 4 entries and out_order room for 4.
            unsafe { out_order.add(i).write(s.index() as u8) };
        }
        unsafe { write_out(out_team, team as u8, "out_team") }?;
        unsafe { write_out(out_upgrade, upgrade, "out_upgrade") }
    })
}

/// Builds an agent from a spec ("random", "rule", "dmc:<dir>[@frames]",
/// "dmc-noflags:<dir>"). Interactive agents are not available here.
///
/// # Safety
/// `spec` must be a NUL-terminated string, `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gz_agent_new(
    spec: *const c_char,
    seed: u64,
    out: *mut *mut GzAgent,
) -> GzStatus {
    guard(|| {
        if spec.is_null() || out.is_null() {
            return fail(GzStatus::NullPointer, "spec or out is null");
        }
        // SAFETY: caller promises a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(spec) }
            .to_str()
            .map_err(|e| (GzStatus::InvalidArgument, e.to_string()))?;
        let parsed = AgentSpec::parse(text).map_err(from_core)?;
        if parsed == AgentSpec::Human {
            return fail(GzStatus::InvalidArgument, "human agents need a terminal");
        }
        let agent = parsed.build().map_err(from_core)?;
        let handle = Box::into_raw(Box::new(GzAgent {
            agent,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }));
        // SAFETY: checked non-null above.
        unsafe { out.write(handle) };
        Ok(())
    })
}

/// # Safety
/// `agent` must be null or a handle from `gz_agent_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gz_agent_free(agent: *mut GzAgent) {
    if !agent.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(agent) });
    }
}

/// Index of the agent's choice among the game's legal actions.
///
/// # Safety
/// Both handles must be live; `out_index` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gz_agent_choose(
    agent: *mut GzAgent,
    game: *const GzGame,
    out_index: *mut usize,
) -> GzStatus {
    guard(|| {
        let a = unsafe { deref_mut(agent, "agent") }?;
        let g = unsafe { deref(game, "game") }?;
        if g.state.is_done() {
            return fail(GzStatus::IllegalAction, "game is over");
        }
        let choice = a
            .agent
            .choose(&g.state, &g.legal, &mut a.rng)
            .map_err(from_core)?;
        let Some(i) = g.legal.iter().position(|l| *l == choice) else {
            return fail(
                GzStatus::Internal,
                "agent chose an action outside the legal list",
            );
        };
        unsafe { write_out(out_index, i, "out_index") }
    })
}
