//! C ABI for `tsgame`.
//!
//! Games and solutions are opaque heap handles released with their `_free`
//! functions. Every fallible call returns a [`TsgStatus`]; on failure the
//! message is available from [`tsg_last_error`] on the same thread. Array
//! accessors copy into caller buffers laid out time-major: row `k` holds the
//! vector at the `k`-th scale point.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tsgame::cli::{GameConfig, SolveReport};
use tsgame::games::{self, InfoPattern, LinearGameSpec, NashSolution};
use tsgame::Error;

/// Status codes; the first four match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsgStatus {
    Ok = 0,
    InvalidInput = 1,
    Degenerate = 2,
    CheckFailed = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsgInfo {
    Ol = 0,
    Mps = 1,
}

/// A validated game.
pub struct TsgGame {
    config: GameConfig,
    game: LinearGameSpec,
}

/// A Nash candidate produced by [`tsg_solve`].
pub struct TsgSolution {
    game: LinearGameSpec,
    tolerance: f64,
    solution: NashSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: TsgStatus, msg: impl Into<String>) -> TsgStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> TsgStatus {
    let status = match e {
        Error::Degenerate { .. } | Error::NonRegressive(_) => TsgStatus::Degenerate,
        _ => TsgStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> TsgStatus) -> TsgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == TsgStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(TsgStatus::Panic, "internal panic"),
    }
}

fn copy_out(values: &[f64], out: *mut f64, len: usize) -> TsgStatus {
    if out.is_null() {
        return fail(TsgStatus::NullPointer, "output buffer is null");
    }
    if len < values.len() {
        return fail(
            TsgStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        );
    }
    // SAFETY: caller guarantees `out` points to `len` writable doubles.
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    TsgStatus::Ok
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn tsg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tsg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a JSON game configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsg_game_from_json(
    json: *const c_char,
    out: *mut *mut TsgGame,
) -> TsgStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(TsgStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(_) => return fail(TsgStatus::InvalidInput, "config is not valid UTF-8"),
        };
        let config = match GameConfig::from_json(text) {
            Ok(c) => c,
            Err(m) => return fail(TsgStatus::InvalidInput, m),
        };
        match config.to_game() {
            Ok(game) => {
                *out = Box::into_raw(Box::new(TsgGame { config, game }));
                TsgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `game` must come from [`tsg_game_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsg_game_free(game: *mut TsgGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// # Safety
/// `game` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tsg_game_players(game: *const TsgGame) -> usize {
    game.as_ref().map_or(0, |g| g.game.players())
}

/// # Safety
/// `game` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tsg_game_state_dim(game: *const TsgGame) -> usize {
    game.as_ref().map_or(0, |g| g.game.state_dim())
}

/// Control dimension of player `player` (0-based); 0 when out of range.
///
/// # Safety
/// `game` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tsg_game_control_dim(game: *const TsgGame, player: usize) -> usize {
    game.as_ref()
        .filter(|g| player < g.game.players())
        .map_or(0, |g| g.game.control_dim(player))
}

/// Number of time-scale points.
///
/// # Safety
/// `game` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tsg_game_num_points(game: *const TsgGame) -> usize {
    game.as_ref().map_or(0, |g| g.game.scale().len())
}

/// Copies the time-scale points into `out`.
///
/// # Safety
/// `game` must be a valid handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tsg_game_points(
    game: *const TsgGame,
    out: *mut f64,
    len: usize,
) -> TsgStatus {
    guard(|| match game.as_ref() {
        None => fail(TsgStatus::NullPointer, "null game"),
        Some(g) => copy_out(g.game.scale().points(), out, len),
    })
}

/// Solves `game` under `info`.
///
/// # Safety
/// `game` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsg_solve(
    game: *const TsgGame,
    info: TsgInfo,
    out: *mut *mut TsgSolution,
) -> TsgStatus {
    guard(|| {
        let Some(g) = game.as_ref() else {
            return fail(TsgStatus::NullPointer, "null game");
        };
        if out.is_null() {
            return fail(TsgStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let info = match info {
            TsgInfo::Ol => InfoPattern::Ol,
            TsgInfo::Mps => InfoPattern::Mps,
        };
        match games::solve(&g.game, info) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(TsgSolution {
                    game: g.game.clone(),
                    tolerance: g.config.tolerances.residual,
                    solution,
                }));
                TsgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `sol` must come from [`tsg_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsg_solution_free(sol: *mut TsgSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Cost of player `player` (0-based).
///
/// # Safety
/// `sol` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsg_solution_cost(
    sol: *const TsgSolution,
    player: usize,
    out: *mut f64,
) -> TsgStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(TsgStatus::NullPointer, "null solution");
        };
        match s.solution.costs.get(player) {
            None => fail(
                TsgStatus::InvalidInput,
                format!("player: no player {}", player + 1),
            ),
            Some(c) => copy_out(&[*c], out, 1),
        }
    })
}

/// Largest residual of the necessary conditions over all players; NaN for a
/// null handle.
///
/// # Safety
/// `sol` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tsg_solution_max_residual(sol: *const TsgSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.solution.max_residual())
}

fn flatten(g: &tsgame::GridFunction) -> Vec<f64> {
    g.values().iter().flat_map(|m| m.iter().copied()).collect()
}

/// State trajectory, `num_points * state_dim` values.
///
/// # Safety
/// `sol` must be a valid handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tsg_solution_state(
    sol: *const TsgSolution,
    out: *mut f64,
    len: usize,
) -> TsgStatus {
    guard(|| match sol.as_ref() {
        None => fail(TsgStatus::NullPointer, "null solution"),
        Some(s) => copy_out(&flatten(&s.solution.candidate.x), out, len),
    })
}

/// Controls of `player`, `num_points * control_dim` values; the last row is
/// unused by the dynamics.
///
/// # Safety
/// `sol` must be a valid handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tsg_solution_control(
    sol: *const TsgSolution,
    player: usize,
    out: *mut f64,
    len: usize,
) -> TsgStatus {
    guard(|| match sol.as_ref() {
        None => fail(TsgStatus::NullPointer, "null solution"),
        Some(s) if player >= s.game.players() => fail(
            TsgStatus::InvalidInput,
            format!("player: no player {}", player + 1),
        ),
        Some(s) => copy_out(
            &flatten(s.solution.candidate.controls.player(player)),
            out,
            len,
        ),
    })
}

/// Costate of `player`, `num_points * state_dim` values.
///
/// # Safety
/// `sol` must be a valid handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tsg_solution_costate(
    sol: *const TsgSolution,
    player: usize,
    out: *mut f64,
    len: usize,
) -> TsgStatus {
    guard(|| match sol.as_ref() {
        None => fail(TsgStatus::NullPointer, "null solution"),
        Some(s) if player >= s.game.players() => fail(
            TsgStatus::InvalidInput,
            format!("player: no player {}", player + 1),
        ),
        Some(s) => copy_out(&flatten(&s.solution.candidate.costates[player]), out, len),
    })
}

/// Feedback gain `F(t_k)` of `player` (row-major, `control_dim * state_dim`).
/// Only MPS solutions carry gains.
///
/// # Safety
/// `sol` must be a valid handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tsg_solution_gain(
    sol: *const TsgSolution,
    player: usize,
    k: usize,
    out: *mut f64,
    len: usize,
) -> TsgStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(TsgStatus::NullPointer, "null solution");
        };
        let Some(strat) = s.solution.strategies.as_ref() else {
            return fail(
                TsgStatus::InvalidInput,
                "info: open-loop solutions have no feedback gains",
            );
        };
        if player >= s.game.players() {
            return fail(
                TsgStatus::InvalidInput,
                format!("player: no player {}", player + 1),
            );
        }
        if k >= s.game.scale().len() {
            return fail(
                TsgStatus::InvalidInput,
                format!("k: instant index {k} out of range"),
            );
        }
        let f = strat.gains[player].at(k);
        let row_major: Vec<f64> = f.transpose().iter().copied().collect();
        copy_out(&row_major, out, len)
    })
}

/// The `report.json` document for this solution. Release with
/// [`tsg_string_free`].
///
/// # Safety
/// `sol` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsg_solution_report_json(
    sol: *const TsgSolution,
    out: *mut *mut c_char,
) -> TsgStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(TsgStatus::NullPointer, "null solution");
        };
        if out.is_null() {
            return fail(TsgStatus::NullPointer, "null output pointer");
        }
        let report = SolveReport::new(&s.game, &s.solution, s.tolerance);
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        *out = CString::new(json).expect("json has no NUL").into_raw();
        TsgStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
