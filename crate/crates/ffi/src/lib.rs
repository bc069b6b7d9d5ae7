//! C interface: opaque game-config and simulator handles, policy rollouts
//! and the zero-sum matrix solver. Every function returns a `GsgiStatus`;
//! `gsgi_last_error` describes the most recent failure on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gsgi::cli::parse_policy;
use gsgi::game::{AttackerAction, GameConfig, GameState, MapKind, Move, Side};
use gsgi::metagame::{estimate_pair, solve_zero_sum};
use gsgi::rng;
use gsgi::GsgiError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GsgiStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Budget = 3,
    InvalidArgument = 4,
    TerminalState = 5,
    Io = 6,
    Panic = 7,
}

/// Map kinds for `gsgi_config_preset`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GsgiMapKind {
    Uniform = 0,
    GaussianMixture = 1,
}

/// Immutable game definition.
pub struct GsgiConfig {
    inner: GameConfig,
}

/// One running episode.
pub struct GsgiSimulator {
    config: GameConfig,
    state: GameState,
    rng: rng::Rng,
}

/// Outcome of one simulator step.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GsgiStep {
    pub reward: f64,
    pub terminal: bool,
    pub caught: bool,
    pub triggered: u32,
    pub removed: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &GsgiError) -> GsgiStatus {
    match e {
        GsgiError::Budget { .. } => GsgiStatus::Budget,
        GsgiError::TerminalState => GsgiStatus::TerminalState,
        GsgiError::Io(_) => GsgiStatus::Io,
        GsgiError::Config(_) | GsgiError::Dimensions(_) | GsgiError::Json(_) | GsgiError::Checkpoint(_) => {
            GsgiStatus::Config
        }
        _ => GsgiStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), GsgiStatus>>(f: F) -> GsgiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsgiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            GsgiStatus::Panic
        }
    }
}

fn check<T>(r: gsgi::Result<T>) -> Result<T, GsgiStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null<T>(p: *const T, what: &str) -> Result<(), GsgiStatus> {
    if p.is_null() {
        set_error(&format!("{what} is null"));
        Err(GsgiStatus::NullPointer)
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, GsgiStatus> {
    null(p, what)?;
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not UTF-8"));
        GsgiStatus::InvalidArgument
    })
}

/// Message of the last failure on this thread; valid until the next call
/// that fails. Never null.
#[no_mangle]
pub extern "C" fn gsgi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gsgi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Square preset grid with corner entries and a central post.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gsgi_config_preset(
    size: u32,
    kind: GsgiMapKind,
    seed: u64,
    out: *mut *mut GsgiConfig,
) -> GsgiStatus {
    guard(|| {
        null(out, "out")?;
        let kind = match kind {
            GsgiMapKind::Uniform => MapKind::Uniform,
            GsgiMapKind::GaussianMixture => MapKind::GaussianMixture,
        };
        let inner = check(GameConfig::preset(size as usize, kind, seed))?;
        *out = Box::into_raw(Box::new(GsgiConfig { inner }));
        Ok(())
    })
}

/// Parse a JSON game configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gsgi_config_from_json(json: *const c_char, out: *mut *mut GsgiConfig) -> GsgiStatus {
    guard(|| {
        null(out, "out")?;
        let s = str_arg(json, "json")?;
        let inner: GameConfig = check(serde_json::from_str(s).map_err(GsgiError::from))?;
        *out = Box::into_raw(Box::new(GsgiConfig { inner }));
        Ok(())
    })
}

/// Grid size, horizon and tool count of a configuration; any output
/// pointer may be null.
///
/// # Safety
/// `cfg` must come from a `gsgi_config_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn gsgi_config_dims(
    cfg: *const GsgiConfig,
    rows: *mut u32,
    cols: *mut u32,
    horizon: *mut u32,
    tools: *mut u32,
) -> GsgiStatus {
    guard(|| {
        null(cfg, "cfg")?;
        let c = &(*cfg).inner;
        for (p, v) in [
            (rows, c.rows() as u32),
            (cols, c.cols() as u32),
            (horizon, c.horizon),
            (tools, c.num_tools),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gsgi_config_free(cfg: *mut GsgiConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Start an episode at entry point `entry` (an index into the config's
/// entry list). Triggers are drawn from `seed`.
///
/// # Safety
/// `cfg` must be a live config handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gsgi_sim_new(
    cfg: *const GsgiConfig,
    entry: u32,
    seed: u64,
    out: *mut *mut GsgiSimulator,
) -> GsgiStatus {
    guard(|| {
        null(cfg, "cfg")?;
        null(out, "out")?;
        let config = (*cfg).inner.clone();
        let Some(e) = config.entry_points.get(entry as usize).copied() else {
            set_error(&format!("entry index {entry} out of range"));
            return Err(GsgiStatus::InvalidArgument);
        };
        let state = GameState::initial(&config, e);
        *out = Box::into_raw(Box::new(GsgiSimulator {
            config,
            state,
            rng: rng::stream(seed, "triggers", 0),
        }));
        Ok(())
    })
}

/// Advance one step. `defender_move` is 0..5 (up, down, left, right, stay);
/// `attacker_action` is `move * 2 + place`.
///
/// # Safety
/// `sim` must be a live simulator handle and `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn gsgi_sim_step(
    sim: *mut GsgiSimulator,
    defender_move: u32,
    attacker_action: u32,
    out: *mut GsgiStep,
) -> GsgiStatus {
    guard(|| {
        null(sim, "sim")?;
        let s = &mut *sim;
        let (Some(d), Some(a)) = (
            Move::from_index(defender_move as usize),
            AttackerAction::from_index(attacker_action as usize),
        ) else {
            set_error("action index out of range");
            return Err(GsgiStatus::InvalidArgument);
        };
        let ev = check(s.state.step(&s.config, d, a, &mut s.rng))?;
        if !out.is_null() {
            *out = GsgiStep {
                reward: ev.defender_reward,
                terminal: ev.terminal,
                caught: ev.caught,
                triggered: ev.triggered.len() as u32,
                removed: ev.removed.len() as u32,
            };
        }
        Ok(())
    })
}

/// Time step, positions as row-major cell indices, tools in hand and the
/// cumulative defender reward; any output pointer may be null.
///
/// # Safety
/// `sim` must be a live simulator handle.
#[no_mangle]
pub unsafe extern "C" fn gsgi_sim_state(
    sim: *const GsgiSimulator,
    t: *mut u32,
    defender_cell: *mut u32,
    attacker_cell: *mut u32,
    tools_remaining: *mut u32,
    cumulative_reward: *mut f64,
) -> GsgiStatus {
    guard(|| {
        null(sim, "sim")?;
        let s = &*sim;
        let st = &s.state;
        for (p, v) in [
            (t, st.t),
            (defender_cell, s.config.index(st.defender_pos) as u32),
            (attacker_cell, s.config.index(st.attacker_pos) as u32),
            (tools_remaining, st.tools_remaining),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        if !cumulative_reward.is_null() {
            *cumulative_reward = st.cumulative_defender_reward;
        }
        Ok(())
    })
}

/// Footprint bits the given side (0 defender, 1 attacker) sees in its cell.
///
/// # Safety
/// `sim` must be a live simulator handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gsgi_sim_visible_bits(sim: *const GsgiSimulator, side: u32, out: *mut u8) -> GsgiStatus {
    guard(|| {
        null(sim, "sim")?;
        null(out, "out")?;
        let side = match side {
            0 => Side::Defender,
            1 => Side::Attacker,
            _ => {
                set_error("side must be 0 or 1");
                return Err(GsgiStatus::InvalidArgument);
            }
        };
        let s = &*sim;
        *out = s.state.visible_bits(&s.config, side);
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gsgi_sim_free(sim: *mut GsgiSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Mean defender utility and its standard error of two policies given as
/// policy specs (`random-sweep`, `heuristic-attacker`, `net:PATH`, ...).
///
/// # Safety
/// Strings must be NUL-terminated; `mean` and `std_error` writable.
#[no_mangle]
pub unsafe extern "C" fn gsgi_evaluate(
    cfg: *const GsgiConfig,
    defender: *const c_char,
    attacker: *const c_char,
    episodes: u32,
    seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> GsgiStatus {
    guard(|| {
        null(cfg, "cfg")?;
        null(mean, "mean")?;
        null(std_error, "std_error")?;
        let c = &(*cfg).inner;
        let d = check(parse_policy(
            str_arg(defender, "defender")?,
            Side::Defender,
            Path::new("."),
        ))?;
        let a = check(parse_policy(
            str_arg(attacker, "attacker")?,
            Side::Attacker,
            Path::new("."),
        ))?;
        if d.len() != 1 || a.len() != 1 {
            set_error("mixtures are not supported here");
            return Err(GsgiStatus::InvalidArgument);
        }
        let e = check(estimate_pair(
            c,
            &d[0].policy,
            &a[0].policy,
            episodes as usize,
            seed,
            None,
        ))?;
        *mean = e.mean;
        *std_error = e.std_error;
        Ok(())
    })
}

/// Solve the zero-sum game with row-major defender payoffs `g` (`rows` x
/// `cols`). Writes the defender mixture to `defender[rows]`, the attacker
/// mixture to `attacker[cols]` and the value.
///
/// # Safety
/// `g` must hold `rows * cols` doubles; outputs must be writable with the
/// stated lengths.
#[no_mangle]
pub unsafe extern "C" fn gsgi_solve_zero_sum(
    g: *const f64,
    rows: usize,
    cols: usize,
    defender: *mut f64,
    attacker: *mut f64,
    value: *mut f64,
) -> GsgiStatus {
    guard(|| {
        null(g, "g")?;
        null(defender, "defender")?;
        null(attacker, "attacker")?;
        null(value, "value")?;
        let flat = std::slice::from_raw_parts(g, rows * cols);
        let m: Vec<Vec<f64>> = flat.chunks(cols.max(1)).map(<[f64]>::to_vec).collect();
        let sol = check(solve_zero_sum(&m))?;
        ptr::copy_nonoverlapping(sol.defender.as_ptr(), defender, rows);
        ptr::copy_nonoverlapping(sol.attacker.as_ptr(), attacker, cols);
        *value = sol.value;
        Ok(())
    })
}
