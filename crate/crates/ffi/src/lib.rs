//! C ABI for `tsvsim`.
//!
//! Every fallible call returns a `TsvStatus`. On failure the message is
//! available from `tsv_last_error` on the same thread until the next call.
//! Handles are opaque and must be released with their `_free` function.
//!
//! Words cross the boundary as little-endian byte strings of
//! `ceil(bitwidth / 8)` bytes. Levels (wire, control, 3x3 cells) are one byte
//! per wire, `0` or `1`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use tsvsim::codec::{reset_channel, ChannelState, CodecSpec, LinkCodec, SwitchThreshold};
use tsvsim::model::{CouplingParams, Transition, TransitionPattern};
use tsvsim::replay::{replay, Aggregation, ReplayOptions};
use tsvsim::trace::{parse_text_trace, Word};
use tsvsim::{BitOrder, Error, GridLayout, CLASS_COUNT};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    DecoderMismatch = 4,
    Panic = 5,
}

/// Number of crosstalk classes and of histogram bins in `TsvRunSummary`.
pub const TSV_CLASS_COUNT: usize = 40;

const _: () = assert!(TSV_CLASS_COUNT == CLASS_COUNT);

/// Passed as `st` to select the uncoded link.
pub const TSV_UNCODED: i32 = -1;

/// Bus delay aggregation: maximum over data TSVs.
pub const TSV_AGGREGATE_MAX: u32 = 0;
/// Bus delay aggregation: mean over data TSVs.
pub const TSV_AGGREGATE_MEAN: u32 = 1;

/// A grid layout. Immutable once created.
pub struct TsvLayout(Arc<GridLayout>);

/// Transmitter side of a link.
pub struct TsvEncoder {
    codec: CodecSpec,
    state: ChannelState,
}

/// Receiver side of a link.
pub struct TsvDecoder {
    codec: CodecSpec,
    state: ChannelState,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TsvRunSummary {
    pub cycles: u64,
    pub mean_bus_delay: f64,
    pub max_bus_delay: f64,
    /// Mean delay over the uncoded baseline on the same trace; NaN when the
    /// baseline has zero delay.
    pub normalized_delay: f64,
    pub retention_rate: f64,
    pub control_transitions: u64,
    pub class_histogram: [u64; TSV_CLASS_COUNT],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: TsvStatus, message: impl Into<String>) -> TsvStatus {
    set_error(message.into());
    status
}

fn from_error(err: Error) -> TsvStatus {
    let status = match err {
        Error::TraceParse { .. } | Error::TraceTruncated { .. } | Error::TracePadding { .. } => {
            TsvStatus::Parse
        }
        Error::DecoderMismatch { .. } => TsvStatus::DecoderMismatch,
        _ => TsvStatus::InvalidArgument,
    };
    fail(status, err.to_string())
}

fn guard(body: impl FnOnce() -> TsvStatus) -> TsvStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(TsvStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(TsvStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

unsafe fn levels(ptr: *const u8, len: usize, what: &str) -> Result<Vec<bool>, TsvStatus> {
    slice::from_raw_parts(ptr, len)
        .iter()
        .map(|&v| match v {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(fail(
                TsvStatus::InvalidArgument,
                format!("{what} level must be 0 or 1, got {other}"),
            )),
        })
        .collect()
}

fn codec_for(st: i32) -> Result<CodecSpec, TsvStatus> {
    if st == TSV_UNCODED {
        return Ok(CodecSpec::Uncoded);
    }
    let st = u32::try_from(st).map_err(|_| {
        fail(
            TsvStatus::InvalidArgument,
            format!("invalid threshold {st}"),
        )
    })?;
    SwitchThreshold::new(st)
        .map(|st| CodecSpec::Retention { st })
        .map_err(from_error)
}

fn params(lambda1: f64, lambda2: f64, pi0: f64) -> Result<CouplingParams, TsvStatus> {
    CouplingParams::new(lambda1, lambda2, pi0).map_err(from_error)
}

unsafe fn pattern(prev: *const u8, next: *const u8) -> Result<TransitionPattern, TsvStatus> {
    let prev = levels(prev, 9, "prev")?;
    let next = levels(next, 9, "next")?;
    let t: Vec<Transition> = prev
        .iter()
        .zip(&next)
        .map(|(&p, &n)| Transition::between(p, n))
        .collect();
    Ok(TransitionPattern::new(
        t[4],
        [t[0], t[1], t[2], t[3], t[5], t[6], t[7], t[8]],
    ))
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tsv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Creates a layout. `cols == 0` picks the smallest width that fits
/// `bitwidth` bits; `snake` selects snake bit order instead of row-major.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsv_layout_new(
    rows: usize,
    cols: usize,
    bitwidth: usize,
    snake: bool,
    out: *mut *mut TsvLayout,
) -> TsvStatus {
    guard(|| {
        non_null!(out);
        let cols = if cols == 0 {
            bitwidth.div_ceil(rows.max(1)).max(3)
        } else {
            cols
        };
        let order = if snake {
            BitOrder::Snake
        } else {
            BitOrder::RowMajor
        };
        match GridLayout::with_order(rows, cols, bitwidth, order) {
            Ok(layout) => {
                *out = Box::into_raw(Box::new(TsvLayout(Arc::new(layout))));
                TsvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `layout` must come from `tsv_layout_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsv_layout_free(layout: *mut TsvLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

/// # Safety
/// `layout` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsv_layout_tsv_count(layout: *const TsvLayout) -> usize {
    layout.as_ref().map_or(0, |l| l.0.tsv_count())
}

/// Victims, which equals the number of control TSVs.
///
/// # Safety
/// `layout` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsv_layout_victim_count(layout: *const TsvLayout) -> usize {
    layout.as_ref().map_or(0, |l| l.0.control_count())
}

/// # Safety
/// `layout` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsv_layout_overhead_percent(layout: *const TsvLayout) -> f64 {
    layout
        .as_ref()
        .map_or(f64::NAN, |l| l.0.tsv_overhead_percent())
}

/// Classifies the center of a 3x3 cluster. `prev` and `next` hold nine
/// levels in row-major order.
///
/// # Safety
/// `prev` and `next` must point to 9 bytes; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsv_classify(
    prev: *const u8,
    next: *const u8,
    class_out: *mut u8,
    coefficient_out: *mut f64,
) -> TsvStatus {
    guard(|| {
        non_null!(prev, next, class_out, coefficient_out);
        match pattern(prev, next) {
            Ok(p) => {
                *class_out = p.class().index();
                *coefficient_out = p.coefficient().value();
                TsvStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Delay of the center TSV of a 3x3 cluster; zero when it does not switch.
///
/// # Safety
/// `prev` and `next` must point to 9 bytes; `delay_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsv_delay3d(
    prev: *const u8,
    next: *const u8,
    lambda1: f64,
    lambda2: f64,
    pi0: f64,
    delay_out: *mut f64,
) -> TsvStatus {
    guard(|| {
        non_null!(prev, next, delay_out);
        match (pattern(prev, next), params(lambda1, lambda2, pi0)) {
            (Ok(p), Ok(params)) => *delay_out = p.delay(&params),
            (Err(status), _) | (_, Err(status)) => return status,
        }
        TsvStatus::Ok
    })
}

/// Creates an encoder at its reset state. `st` is the switching threshold,
/// or `TSV_UNCODED`.
///
/// # Safety
/// `layout` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsv_encoder_new(
    layout: *const TsvLayout,
    st: i32,
    out: *mut *mut TsvEncoder,
) -> TsvStatus {
    guard(|| {
        non_null!(layout, out);
        let codec = match codec_for(st) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let state = reset_channel(&(*layout).0);
        *out = Box::into_raw(Box::new(TsvEncoder { codec, state }));
        TsvStatus::Ok
    })
}

/// # Safety
/// `encoder` must come from `tsv_encoder_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsv_encoder_free(encoder: *mut TsvEncoder) {
    if !encoder.is_null() {
        drop(Box::from_raw(encoder));
    }
}

/// Encodes one word. Writes one level per TSV to `wire_out` and one per
/// control TSV to `control_out`; `retained_out` (may be NULL) receives the
/// number of suppressed victim transitions.
///
/// # Safety
/// `word` must hold `word_len` bytes; `wire_out` and `control_out` must hold
/// `tsv_layout_tsv_count` and `tsv_layout_victim_count` bytes.
#[no_mangle]
pub unsafe extern "C" fn tsv_encoder_encode(
    encoder: *mut TsvEncoder,
    word: *const u8,
    word_len: usize,
    wire_out: *mut u8,
    control_out: *mut u8,
    retained_out: *mut usize,
) -> TsvStatus {
    guard(|| {
        non_null!(encoder, word, wire_out, control_out);
        let encoder = &mut *encoder;
        let width = encoder.state.layout().bit_width();
        let word = match read_word(word, word_len, width) {
            Ok(w) => w,
            Err(status) => return status,
        };
        match encoder.codec.encode(&mut encoder.state, &word) {
            Ok(result) => {
                write_levels(&result.wire_next, wire_out);
                write_levels(&result.control_next, control_out);
                if !retained_out.is_null() {
                    *retained_out = result.retained.len();
                }
                TsvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Creates a decoder at its reset state. `st` must match the encoder's.
///
/// # Safety
/// `layout` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsv_decoder_new(
    layout: *const TsvLayout,
    st: i32,
    out: *mut *mut TsvDecoder,
) -> TsvStatus {
    guard(|| {
        non_null!(layout, out);
        let codec = match codec_for(st) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let state = reset_channel(&(*layout).0);
        *out = Box::into_raw(Box::new(TsvDecoder { codec, state }));
        TsvStatus::Ok
    })
}

/// # Safety
/// `decoder` must come from `tsv_decoder_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsv_decoder_free(decoder: *mut TsvDecoder) {
    if !decoder.is_null() {
        drop(Box::from_raw(decoder));
    }
}

/// Recovers a word from observed levels into `word_out`.
///
/// # Safety
/// `wire` and `control` must hold `tsv_layout_tsv_count` and
/// `tsv_layout_victim_count` bytes; `word_out` must hold `word_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tsv_decoder_decode(
    decoder: *mut TsvDecoder,
    wire: *const u8,
    control: *const u8,
    word_out: *mut u8,
    word_len: usize,
) -> TsvStatus {
    guard(|| {
        non_null!(decoder, wire, control, word_out);
        let decoder = &mut *decoder;
        let layout = Arc::clone(decoder.state.layout());
        if word_len != Word::record_len(layout.bit_width()) {
            return word_len_error(word_len, layout.bit_width());
        }
        let wire = match levels(wire, layout.tsv_count(), "wire") {
            Ok(v) => v,
            Err(status) => return status,
        };
        let control = match levels(control, layout.control_count(), "control") {
            Ok(v) => v,
            Err(status) => return status,
        };
        match decoder.codec.decode(&mut decoder.state, &wire, &control) {
            Ok(word) => {
                let bytes = word.to_le_bytes();
                ptr::copy_nonoverlapping(bytes.as_ptr(), word_out, bytes.len());
                TsvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Replays a text trace on a `rows`-row grid (`cols == 0` sizes it to the
/// trace) and fills `summary`. The uncoded baseline is replayed as well to
/// compute the normalized delay.
///
/// # Safety
/// `text` must hold `text_len` bytes and `summary` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsv_simulate_text(
    text: *const u8,
    text_len: usize,
    rows: usize,
    cols: usize,
    st: i32,
    aggregation: u32,
    summary: *mut TsvRunSummary,
) -> TsvStatus {
    guard(|| {
        non_null!(text, summary);
        let codec = match codec_for(st) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let aggregation = match aggregation {
            TSV_AGGREGATE_MAX => Aggregation::Max,
            TSV_AGGREGATE_MEAN => Aggregation::Mean,
            other => {
                return fail(
                    TsvStatus::InvalidArgument,
                    format!("unknown aggregation {other}"),
                )
            }
        };
        let trace = match parse_text_trace(slice::from_raw_parts(text, text_len)) {
            Ok(t) => t,
            Err(e) => return from_error(e),
        };
        let mut layout_ptr = ptr::null_mut();
        let status = tsv_layout_new(rows, cols, trace.width(), false, &mut layout_ptr);
        if status != TsvStatus::Ok {
            return status;
        }
        let layout = Box::from_raw(layout_ptr);
        let options = ReplayOptions {
            aggregation,
            ..ReplayOptions::default()
        };
        let run = replay(&trace, &layout.0, &codec, &options)
            .and_then(|r| Ok((r, replay(&trace, &layout.0, &CodecSpec::Uncoded, &options)?)));
        match run {
            Ok((mut report, baseline)) => {
                let normalized = report.normalize_against(&baseline).unwrap_or(f64::NAN);
                *summary = TsvRunSummary {
                    cycles: report.cycles,
                    mean_bus_delay: report.mean_bus_delay,
                    max_bus_delay: report.max_bus_delay,
                    normalized_delay: normalized,
                    retention_rate: report.retention_rate,
                    control_transitions: report.control_transitions,
                    class_histogram: report.class_histogram,
                };
                TsvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

fn word_len_error(len: usize, width: usize) -> TsvStatus {
    fail(
        TsvStatus::InvalidArgument,
        format!(
            "word must be {} bytes for width {width}, got {len}",
            Word::record_len(width)
        ),
    )
}

unsafe fn read_word(ptr: *const u8, len: usize, width: usize) -> Result<Word, TsvStatus> {
    if len != Word::record_len(width) {
        return Err(word_len_error(len, width));
    }
    Word::from_le_bytes(slice::from_raw_parts(ptr, len), width).ok_or_else(|| {
        fail(
            TsvStatus::InvalidArgument,
            format!("bits above width {width} must be zero"),
        )
    })
}

unsafe fn write_levels(levels: &[bool], out: *mut u8) {
    for (i, &l) in levels.iter().enumerate() {
        *out.add(i) = u8::from(l);
    }
}
