//! C ABI over `newslens`.
//!
//! Every fallible function returns an [`NlStatus`]. On failure, [`nl_last_error`] describes
//! the most recent error on the calling thread. Handles are opaque, created by `*_load`
//! and released by the matching `*_free`; freeing NULL is a no-op. Output buffers are
//! caller-owned, with their capacity passed as a length; strings returned through `char **`
//! are owned by the caller and released with [`nl_string_free`].
//!
//! Handles are immutable after loading and may be shared across threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use newslens::archive::TensorArchive;
use newslens::classifier::{HeadFile, LinearHead};
use newslens::encoder::{EncoderConfig, EncoderWeights};
use newslens::interpret::{cam, highlight_count};
use newslens::pipeline::{Backend, EncoderBackend};
use newslens::static_embed::{gap_pool, TokenMatrix};
use newslens::tfidf::TfidfModel;
use newslens::tokenize::WordPieceVocab;
use newslens::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlStatus {
    Ok = 0,
    /// NULL pointer, bad UTF-8, out-of-range value or wrong buffer length.
    InvalidArgument = 1,
    Io = 2,
    Format = 3,
    Tensor = 4,
    DimMismatch = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> NlStatus {
    match err {
        Error::Io { .. } => NlStatus::Io,
        Error::Format(_) | Error::Json(_) => NlStatus::Format,
        Error::Tensor { .. } => NlStatus::Tensor,
        Error::DimMismatch { .. } => NlStatus::DimMismatch,
        Error::InvalidArgument(_) => NlStatus::InvalidArgument,
    }
}

/// Runs `f`, records any error or panic, and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> NlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            NlStatus::Internal
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(invalid(format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Error> {
    p.as_ref().ok_or_else(|| invalid(format!("{name} is NULL")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Error> {
    if p.is_null() {
        return Err(invalid(format!("{name} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `values` into a caller buffer that must hold exactly `values.len()` entries.
unsafe fn write_out(values: &[f64], out: *mut f64, out_len: usize) -> Result<(), Error> {
    if out.is_null() {
        return Err(invalid("output buffer is NULL"));
    }
    if out_len != values.len() {
        return Err(Error::DimMismatch {
            expected: values.len(),
            actual: out_len,
        });
    }
    std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(values);
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Error> {
    if out.is_null() {
        return Err(invalid("output handle pointer is NULL"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the next failing
/// call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn nl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of tokens flagged when highlighting the top `fraction` of `n` scored tokens.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nl_highlight_count(fraction: f64, n: usize, out: *mut usize) -> NlStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(invalid(format!("fraction {fraction} not in [0, 1]")));
        }
        let out = out.as_mut().ok_or_else(|| invalid("out is NULL"))?;
        *out = highlight_count(fraction, n);
        Ok(())
    })
}

// ---------------------------------------------------------------- linear head

/// Trained linear classification head.
pub struct NlHead(LinearHead);

/// Loads a head saved by `newslens linear-eval --head-out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nl_head_load(path: *const c_char, out: *mut *mut NlHead) -> NlStatus {
    guard(|| {
        let head = HeadFile::load(str_arg(path, "path")?)?.head()?;
        store(out, NlHead(head))
    })
}

/// # Safety
/// `head` must be NULL or a handle from [`nl_head_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl_head_free(head: *mut NlHead) {
    release(head);
}

/// Input dimension; 0 for NULL.
///
/// # Safety
/// `head` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nl_head_dim(head: *const NlHead) -> usize {
    head.as_ref().map_or(0, |h| h.0.dim())
}

/// Number of classes; 0 for NULL.
///
/// # Safety
/// `head` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nl_head_classes(head: *const NlHead) -> usize {
    head.as_ref().map_or(0, |h| h.0.classes())
}

/// Logits of a pooled vector `z` of length `dim`; `out` holds `classes` values.
///
/// # Safety
/// `z` must point to `z_len` doubles and `out` to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nl_head_logits(
    head: *const NlHead,
    z: *const f64,
    z_len: usize,
    out: *mut f64,
    out_len: usize,
) -> NlStatus {
    guard(|| {
        let head = handle(head, "head")?;
        let y = head.0.logits(slice_arg(z, z_len, "z")?)?;
        write_out(&y, out, out_len)
    })
}

/// CAM scores of a row-major `n_rows × dim` token matrix for `class`; every row counts.
///
/// # Safety
/// `rows` must point to `n_rows * dim` doubles and `out` to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nl_cam(
    head: *const NlHead,
    rows: *const f64,
    n_rows: usize,
    dim: usize,
    class: usize,
    out: *mut f64,
    out_len: usize,
) -> NlStatus {
    guard(|| {
        let head = handle(head, "head")?;
        let len = n_rows.checked_mul(dim).ok_or_else(|| invalid("n_rows * dim overflows"))?;
        let data = slice_arg(rows, len, "rows")?.to_vec();
        let matrix = ndarray::Array2::from_shape_vec((n_rows, dim), data).map_err(|e| invalid(e.to_string()))?;
        let tokens: Vec<String> = (0..n_rows).map(|i| i.to_string()).collect();
        let scores = cam(&TokenMatrix::dense(matrix), &tokens.into(), &head.0, class)?;
        write_out(&scores.scores, out, out_len)
    })
}

// ---------------------------------------------------------------- encoder

/// Frozen encoder with its WordPiece vocabulary.
pub struct NlEncoder(Backend);

/// Loads encoder weights and vocabulary. The geometry is inferred from tensor shapes with
/// `num_heads` attention heads; `max_length` 0 means `min(512, max positions)`.
///
/// # Safety
/// `weights` and `vocab` must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nl_encoder_load(
    weights: *const c_char,
    vocab: *const c_char,
    num_heads: usize,
    max_length: usize,
    out: *mut *mut NlEncoder,
) -> NlStatus {
    guard(|| {
        let archive = TensorArchive::read(str_arg(weights, "weights")?)?;
        let vocab = WordPieceVocab::load(str_arg(vocab, "vocab")?)?;
        let config = EncoderConfig::infer(&archive, num_heads)?;
        let max_length = if max_length == 0 {
            config.max_positions.min(512)
        } else {
            max_length
        };
        let backend = EncoderBackend::new(EncoderWeights::from_archive(&archive, config)?, vocab, max_length)?;
        store(out, NlEncoder(Backend::Encoder(backend)))
    })
}

/// # Safety
/// `encoder` must be NULL or a handle from [`nl_encoder_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl_encoder_free(encoder: *mut NlEncoder) {
    release(encoder);
}

/// Hidden size; 0 for NULL.
///
/// # Safety
/// `encoder` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nl_encoder_dim(encoder: *const NlEncoder) -> usize {
    encoder.as_ref().map_or(0, |e| e.0.dim())
}

/// Mean of the final hidden states over the content tokens of `text`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nl_encoder_embed(
    encoder: *const NlEncoder,
    text: *const c_char,
    out: *mut f64,
    out_len: usize,
) -> NlStatus {
    guard(|| {
        let encoder = handle(encoder, "encoder")?;
        let view = encoder.0.token_view(str_arg(text, "text")?)?;
        write_out(&gap_pool(&view.matrix).vector, out, out_len)
    })
}

/// CAM explanation of `text` as a JSON object with `tokens`, `scores`, `flags`, `class`,
/// `class_source`, `logits`, `fraction` and `count_basis`. A negative `class` explains the
/// predicted class. Free `*json` with [`nl_string_free`].
///
/// # Safety
/// `text` must be a NUL-terminated string and `json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nl_explain_json(
    encoder: *const NlEncoder,
    head: *const NlHead,
    text: *const c_char,
    class: i64,
    fraction: f64,
    json: *mut *mut c_char,
) -> NlStatus {
    guard(|| {
        let encoder = handle(encoder, "encoder")?;
        let head = handle(head, "head")?;
        if json.is_null() {
            return Err(invalid("json is NULL"));
        }
        let class = usize::try_from(class).ok();
        let report = encoder.0.explain(&head.0, str_arg(text, "text")?, class, fraction)?;
        let s = serde_json::to_string(&report)?;
        *json = CString::new(s).map_err(|e| invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

// ---------------------------------------------------------------- tf-idf

/// Fitted TF-IDF vectorizer.
pub struct NlTfidf(TfidfModel);

/// Loads a vectorizer saved as JSON.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nl_tfidf_load(path: *const c_char, out: *mut *mut NlTfidf) -> NlStatus {
    guard(|| {
        let model = TfidfModel::load(str_arg(path, "path")?)?;
        store(out, NlTfidf(model))
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`nl_tfidf_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl_tfidf_free(model: *mut NlTfidf) {
    release(model);
}

/// Vocabulary size; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nl_tfidf_dim(model: *const NlTfidf) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// L2-normalized TF-IDF vector of `text`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nl_tfidf_transform(
    model: *const NlTfidf,
    text: *const c_char,
    out: *mut f64,
    out_len: usize,
) -> NlStatus {
    guard(|| {
        let model = handle(model, "model")?;
        write_out(&model.0.transform(str_arg(text, "text")?), out, out_len)
    })
}
