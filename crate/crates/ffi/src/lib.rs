//! C interface to the winning-sets library.
//!
//! Objects are opaque handles created by the constructor functions and
//! released with the matching `ws_*_free`. Every fallible call returns a
//! [`WsStatus`]; the message of the last failure on the calling thread is
//! available from [`ws_last_error`]. Strings go in as NUL-terminated UTF-8
//! and come out through caller buffers: when `cap` is too small the call
//! returns `WS_STATUS_BUFFER_TOO_SMALL` and stores the required size,
//! terminator included, in `needed`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use winning_sets::cantor::{avoiding_construction, full_construction, golden_mean, middle_thirds, CantorConstruction};
use winning_sets::cli::{self, Command, Options, RunSettings};
use winning_sets::engine::{GameConfig, Move, SchmidtVariant, Transcript, Verdict};
use winning_sets::fractal::{box_dimension, ScaleProfile};
use winning_sets::scalar::{format_exact, parse_exact};
use winning_sets::strategies::schmidt_lift_parameters;
use winning_sets::{Ball, Error, SpaceTag};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BufferTooSmall = 3,
    Parse = 4,
    InvalidParameter = 5,
    DepthNotBuilt = 6,
    WrongSpace = 7,
    NumericallyAmbiguous = 8,
    StrategyFault = 9,
    ConstructionInvalid = 10,
    CheckFailed = 11,
    UnknownStrategy = 12,
    Panic = 13,
    Other = 14,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsSpace {
    RealLine = 0,
    Shift = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsVariant {
    Classic = 0,
    Strong = 1,
    Weak = 2,
    VeryStrong = 3,
}

/// Shape of a move passed to [`ws_transcript_push`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsMoveKind {
    BobBall = 0,
    AliceBall = 1,
    AliceCollection = 2,
    AliceRemovalSet = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsVerdict {
    Legal = 0,
    Illegal = 1,
    DefaultWinAlice = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsCommand {
    Play = 0,
    Sweep = 1,
    BuildCantor = 2,
    Verify = 3,
    Dim = 4,
    Render = 5,
}

/// A Cantor construction.
pub struct WsConstruction(CantorConstruction);

/// A refereed game in progress.
pub struct WsTranscript(Transcript);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> WsStatus {
    match e {
        Error::Parse(_) => WsStatus::Parse,
        Error::InvalidParameter(_) | Error::NotInU(_) | Error::NonPositiveScale | Error::ParameterMismatch(_) => {
            WsStatus::InvalidParameter
        }
        Error::DepthNotBuilt { .. } | Error::DepthExhausted(_) => WsStatus::DepthNotBuilt,
        Error::WrongSpace(_) => WsStatus::WrongSpace,
        Error::NumericallyAmbiguous(_) => WsStatus::NumericallyAmbiguous,
        Error::StrategyFault { .. } | Error::EmptyTranscript => WsStatus::StrategyFault,
        Error::BudgetExceeded { .. } | Error::NotADescendant { .. } | Error::NotLocal { .. } => {
            WsStatus::ConstructionInvalid
        }
        Error::UnknownStrategy(_) => WsStatus::UnknownStrategy,
        Error::ParameterGateFailed(_)
        | Error::GateFailed(_)
        | Error::NotACover(_)
        | Error::BadCountExceeded { .. }
        | Error::CoverSampleInsufficient(_)
        | Error::CoverBudgetViolated(_)
        | Error::BudgetViolated(_)
        | Error::NotRegularAtSample { .. }
        | Error::WitnessNotFound(_) => WsStatus::CheckFailed,
        _ => WsStatus::Other,
    }
}

fn fail(status: WsStatus, message: String) -> WsStatus {
    LAST_ERROR.with(|m| *m.borrow_mut() = message);
    status
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), WsStatus>) -> WsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WsStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(WsStatus::Panic, msg)
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, WsStatus>;
}

impl<T> OrStatus<T> for winning_sets::Result<T> {
    fn or_status(self) -> Result<T, WsStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, WsStatus> {
    if p.is_null() {
        return Err(fail(WsStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(WsStatus::InvalidUtf8, e.to_string()))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, WsStatus> {
    p.as_mut()
        .ok_or_else(|| fail(WsStatus::NullPointer, "null output pointer".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, WsStatus> {
    p.as_ref()
        .ok_or_else(|| fail(WsStatus::NullPointer, "null handle".into()))
}

/// Copies `s` plus a terminator into `buf` when it fits.
unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), WsStatus> {
    let size = s.len() + 1;
    if !needed.is_null() {
        *needed = size;
    }
    if buf.is_null() || cap < size {
        return Err(fail(WsStatus::BufferTooSmall, format!("need {size} bytes, have {cap}")));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// A static description of `status`.
#[no_mangle]
pub extern "C" fn ws_status_message(status: WsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        WsStatus::Ok => c"ok",
        WsStatus::NullPointer => c"null pointer",
        WsStatus::InvalidUtf8 => c"invalid UTF-8",
        WsStatus::BufferTooSmall => c"buffer too small",
        WsStatus::Parse => c"parse error",
        WsStatus::InvalidParameter => c"invalid parameter",
        WsStatus::DepthNotBuilt => c"depth not built",
        WsStatus::WrongSpace => c"wrong space",
        WsStatus::NumericallyAmbiguous => c"numerically ambiguous",
        WsStatus::StrategyFault => c"strategy fault",
        WsStatus::ConstructionInvalid => c"invalid construction",
        WsStatus::CheckFailed => c"check failed",
        WsStatus::UnknownStrategy => c"unknown strategy",
        WsStatus::Panic => c"internal panic",
        WsStatus::Other => c"error",
    };
    s.as_ptr()
}

/// The message of the last failed call on this thread (empty if none).
///
/// # Safety
/// `buf` must point to `cap` writable bytes or be null; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ws_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> WsStatus {
    let msg = LAST_ERROR.with(|m| m.borrow().clone());
    let size = msg.len() + 1;
    if !needed.is_null() {
        *needed = size;
    }
    if buf.is_null() || cap < size {
        return WsStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), msg.len());
    *buf.add(msg.len()) = 0;
    WsStatus::Ok
}

/// Builds `golden`, `middle-thirds`, `full-shift` or `avoid:<bits>` to `depth`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ws_construction_builtin(
    name: *const c_char,
    depth: usize,
    out_handle: *mut *mut WsConstruction,
) -> WsStatus {
    guard(|| {
        let name = text(name)?;
        let slot = out(out_handle)?;
        let c = match name {
            "golden" => golden_mean(depth),
            "middle-thirds" => middle_thirds(depth),
            "full-shift" => full_construction(Ball::root_cylinder(), 2, depth),
            _ => match name.strip_prefix("avoid:") {
                Some(bits) => bits
                    .chars()
                    .map(|ch| match ch {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        _ => Err(Error::Parse(format!("bad bit string {bits:?}"))),
                    })
                    .collect::<winning_sets::Result<Vec<u8>>>()
                    .and_then(|p| avoiding_construction(&p, depth)),
                None => Err(Error::Parse(format!("unknown construction {name:?}"))),
            },
        }
        .or_status()?;
        *slot = Box::into_raw(Box::new(WsConstruction(c)));
        Ok(())
    })
}

/// Loads a construction from its text dump.
///
/// # Safety
/// `dump` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ws_construction_load(dump: *const c_char, out_handle: *mut *mut WsConstruction) -> WsStatus {
    guard(|| {
        let dump = text(dump)?;
        let slot = out(out_handle)?;
        let c = CantorConstruction::load(dump).or_status()?;
        *slot = Box::into_raw(Box::new(WsConstruction(c)));
        Ok(())
    })
}

/// Releases a construction. Null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ws_construction_free(h: *mut WsConstruction) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `out_depth` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ws_construction_depth(h: *const WsConstruction, out_depth: *mut usize) -> WsStatus {
    guard(|| {
        *out(out_depth)? = handle(h)?.0.depth();
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ws_construction_survivor_count(
    h: *const WsConstruction,
    depth: usize,
    out_count: *mut usize,
) -> WsStatus {
    guard(|| {
        let c = &handle(h)?.0;
        *out(out_count)? = c.survivors(depth).or_status()?.len();
        Ok(())
    })
}

/// The text dump accepted by [`ws_construction_load`].
///
/// # Safety
/// `h` must be a live handle; `buf` must hold `cap` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn ws_construction_dump(
    h: *const WsConstruction,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> WsStatus {
    guard(|| write_str(&handle(h)?.0.dump(), buf, cap, needed))
}

/// SVG of levels `0..=depth`.
///
/// # Safety
/// `h` must be a live handle; `buf` must hold `cap` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn ws_construction_render_svg(
    h: *const WsConstruction,
    depth: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> WsStatus {
    guard(|| {
        let svg = cli::render_levels(&handle(h)?.0, depth).or_status()?;
        write_str(&svg, buf, cap, needed)
    })
}

/// Box-dimension estimate from survivor counts at depths `lo..=hi`.
///
/// # Safety
/// `h` must be a live handle; `out_estimate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ws_construction_box_dimension(
    h: *const WsConstruction,
    lo: usize,
    hi: usize,
    out_estimate: *mut f64,
) -> WsStatus {
    guard(|| {
        let c = &handle(h)?.0;
        let slot = out(out_estimate)?;
        let est = ScaleProfile::from_construction(c, lo..=hi)
            .and_then(|p| box_dimension(&p))
            .or_status()?;
        *slot = est.estimate;
        Ok(())
    })
}

/// Writes `"<alpha> <beta>"`, the lifted parameters of `(alpha0, beta0)`.
///
/// # Safety
/// Inputs must be NUL-terminated; `buf` must hold `cap` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn ws_schmidt_lift(
    alpha0: *const c_char,
    beta0: *const c_char,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> WsStatus {
    guard(|| {
        let a0 = parse_exact(text(alpha0)?).or_status()?;
        let b0 = parse_exact(text(beta0)?).or_status()?;
        let (a, b) = schmidt_lift_parameters(&a0, &b0).or_status()?;
        write_str(&format!("{} {}", format_exact(&a), format_exact(&b)), buf, cap, needed)
    })
}

fn space(s: WsSpace) -> SpaceTag {
    match s {
        WsSpace::RealLine => SpaceTag::RealLine,
        WsSpace::Shift => SpaceTag::Shift,
    }
}

unsafe fn new_transcript(
    cfg: winning_sets::Result<GameConfig>,
    out_handle: *mut *mut WsTranscript,
) -> Result<(), WsStatus> {
    let slot = out(out_handle)?;
    let cfg = cfg.or_status()?;
    *slot = Box::into_raw(Box::new(WsTranscript(Transcript::new(cfg))));
    Ok(())
}

/// An empty Schmidt-game transcript.
///
/// # Safety
/// Scalars are NUL-terminated rationals like `"1/3"`; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ws_transcript_schmidt(
    sp: WsSpace,
    variant: WsVariant,
    alpha: *const c_char,
    beta: *const c_char,
    out_handle: *mut *mut WsTranscript,
) -> WsStatus {
    guard(|| {
        let variant = match variant {
            WsVariant::Classic => SchmidtVariant::Classic,
            WsVariant::Strong => SchmidtVariant::Strong,
            WsVariant::Weak => SchmidtVariant::Weak,
            WsVariant::VeryStrong => SchmidtVariant::VeryStrong,
        };
        let (a, b) = (
            parse_exact(text(alpha)?).or_status()?,
            parse_exact(text(beta)?).or_status()?,
        );
        new_transcript(GameConfig::schmidt(space(sp), variant, a, b), out_handle)
    })
}

/// An empty absolute-game transcript.
///
/// # Safety
/// See [`ws_transcript_schmidt`].
#[no_mangle]
pub unsafe extern "C" fn ws_transcript_absolute(
    sp: WsSpace,
    beta: *const c_char,
    out_handle: *mut *mut WsTranscript,
) -> WsStatus {
    guard(|| {
        let b = parse_exact(text(beta)?).or_status()?;
        new_transcript(GameConfig::absolute(space(sp), b), out_handle)
    })
}

/// An empty potential-game transcript.
///
/// # Safety
/// See [`ws_transcript_schmidt`].
#[no_mangle]
pub unsafe extern "C" fn ws_transcript_potential(
    sp: WsSpace,
    c: *const c_char,
    beta: *const c_char,
    out_handle: *mut *mut WsTranscript,
) -> WsStatus {
    guard(|| {
        let (c, b) = (
            parse_exact(text(c)?).or_status()?,
            parse_exact(text(beta)?).or_status()?,
        );
        new_transcript(GameConfig::potential(space(sp), c, b), out_handle)
    })
}

/// An empty Cantor-game transcript.
///
/// # Safety
/// See [`ws_transcript_schmidt`].
#[no_mangle]
pub unsafe extern "C" fn ws_transcript_cantor(
    sp: WsSpace,
    eps: *const c_char,
    modulus: u64,
    out_handle: *mut *mut WsTranscript,
) -> WsStatus {
    guard(|| {
        let eps = parse_exact(text(eps)?).or_status()?;
        new_transcript(GameConfig::cantor(space(sp), eps, modulus), out_handle)
    })
}

/// Releases a transcript. Null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ws_transcript_free(h: *mut WsTranscript) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Referees and appends a move. `balls` is a whitespace-separated list such
/// as `"R:1/2:1/4"` or `"S:01 S:10"`; single-ball moves take exactly one.
///
/// # Safety
/// `h` must be a live handle; `balls` NUL-terminated; `out_verdict` writable.
#[no_mangle]
pub unsafe extern "C" fn ws_transcript_push(
    h: *mut WsTranscript,
    kind: WsMoveKind,
    balls: *const c_char,
    out_verdict: *mut WsVerdict,
) -> WsStatus {
    guard(|| {
        let t = h
            .as_mut()
            .ok_or_else(|| fail(WsStatus::NullPointer, "null handle".into()))?;
        let slot = out(out_verdict)?;
        let parsed = text(balls)?
            .split_whitespace()
            .map(str::parse::<Ball>)
            .collect::<winning_sets::Result<Vec<_>>>()
            .or_status()?;
        let single = |v: Vec<Ball>| -> Result<Ball, WsStatus> {
            match <[Ball; 1]>::try_from(v) {
                Ok([b]) => Ok(b),
                Err(v) => Err(fail(WsStatus::Parse, format!("expected one ball, got {}", v.len()))),
            }
        };
        let mv = match kind {
            WsMoveKind::BobBall => Move::BobBall(single(parsed)?),
            WsMoveKind::AliceBall => Move::AliceBall(single(parsed)?),
            WsMoveKind::AliceCollection => Move::AliceCollection(parsed),
            WsMoveKind::AliceRemovalSet => Move::AliceRemovalSet(parsed),
        };
        *slot = match t.0.push(mv).or_status()? {
            Verdict::Legal => WsVerdict::Legal,
            Verdict::Illegal(_) => WsVerdict::Illegal,
            Verdict::DefaultWinAlice(_) => WsVerdict::DefaultWinAlice,
        };
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ws_transcript_len(h: *const WsTranscript, out_len: *mut usize) -> WsStatus {
    guard(|| {
        *out(out_len)? = handle(h)?.0.len();
        Ok(())
    })
}

/// The line-delimited transcript export.
///
/// # Safety
/// `h` must be a live handle; `buf` must hold `cap` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn ws_transcript_export(
    h: *const WsTranscript,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> WsStatus {
    guard(|| write_str(&handle(h)?.0.export(), buf, cap, needed))
}

/// Runs a scenario file as the `winsets` binary would and stores its exit
/// code (0 pass, 1 invariant failure, 2 parse error). Summaries are discarded;
/// artifacts go to `out_dir`.
///
/// # Safety
/// Paths must be NUL-terminated; `out_exit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ws_run_scenarios(
    command: WsCommand,
    spec_path: *const c_char,
    out_dir: *const c_char,
    out_exit: *mut i32,
) -> WsStatus {
    guard(|| {
        let spec = PathBuf::from(text(spec_path)?);
        let dir = PathBuf::from(text(out_dir)?);
        let slot = out(out_exit)?;
        let o = Options {
            spec: spec.clone(),
            out: dir.clone(),
            depth: None,
            precision: None,
            seed: None,
        };
        let cmd = match command {
            WsCommand::Play => Command::Play(o),
            WsCommand::Sweep => Command::Sweep(o),
            WsCommand::BuildCantor => Command::BuildCantor(o),
            WsCommand::Verify => Command::Verify(o),
            WsCommand::Dim => Command::Dim(o),
            WsCommand::Render => Command::Render(o),
        };
        let settings = RunSettings {
            out: dir,
            ..RunSettings::default()
        };
        let outcome = cli::run_file(&cmd, &spec, &settings, &mut std::io::sink());
        if let Err(e) = &outcome {
            fail(status_of(e), e.to_string());
        }
        *slot = cli::exit_code(&outcome);
        Ok(())
    })
}
