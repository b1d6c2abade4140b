//! C ABI over `concept-core`.
//!
//! Every fallible call returns a [`ConceptStatus`]. On failure the message is kept per
//! thread and can be read with [`concept_last_error`]. Handles are opaque and must be
//! released with their matching `*_free` function. Strings returned through `out_json`
//! are owned by the caller and released with [`concept_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use concept_core::causal::{self, DiscreteScm};
use concept_core::classifier::TopicClassifier;
use concept_core::corpus::{EntityRecord, RawRecord};
use concept_core::evaluation::{hearst_extract, Language};
use concept_core::extractor::{extract_concepts, PointerModel, PromptSource};
use concept_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    MissingArtifact = 4,
    Validation = 5,
    UnsupportedConditioning = 6,
    Checkpoint = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptLanguage {
    En = 0,
    Zh = 1,
}

/// Trained topic classifier.
pub struct ConceptClassifier(TopicClassifier);

/// Trained span extractor.
pub struct ConceptExtractor(PointerModel);

/// Validated discrete structural causal model.
pub struct ConceptScm(DiscreteScm);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ConceptStatus {
    match e {
        Error::MissingArtifact(_) => ConceptStatus::MissingArtifact,
        Error::Validation(_) | Error::NoGoldSpan | Error::AttentionUnavailable => ConceptStatus::Validation,
        Error::InvalidArgument(_) => ConceptStatus::InvalidArgument,
        Error::UnsupportedConditioning(_) => ConceptStatus::UnsupportedConditioning,
        Error::Checkpoint(_) => ConceptStatus::Checkpoint,
        Error::Io { .. } | Error::Json(_) => ConceptStatus::Io,
    }
}

struct Fail(ConceptStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> ConceptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ConceptStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ConceptStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(ConceptStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ConceptStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// # Safety
/// `out` is null or writable.
unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(ConceptStatus::NullPointer, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// # Safety
/// `out` is null or writable.
unsafe fn write_json<T: serde::Serialize>(out: *mut *mut c_char, value: &T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(ConceptStatus::NullPointer, "output pointer is null".into()));
    }
    let text = serde_json::to_string(value).map_err(|e| Fail(ConceptStatus::Io, e.to_string()))?;
    *out = CString::new(text)
        .map_err(|_| Fail(ConceptStatus::Io, "interior NUL in output".into()))?
        .into_raw();
    Ok(())
}

fn record(entity: &str, abstract_text: &str) -> Result<EntityRecord, Fail> {
    EntityRecord::from_raw(RawRecord {
        entity: entity.to_string(),
        abstract_text: abstract_text.to_string(),
        concepts: Vec::new(),
        topic: None,
    })
    .map_err(|m| Fail(ConceptStatus::InvalidArgument, m))
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn concept_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn concept_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn concept_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn concept_classifier_load(path: *const c_char, out: *mut *mut ConceptClassifier) -> ConceptStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let m = TopicClassifier::load(Path::new(p))?;
        write_out(out, ConceptClassifier(m))
    })
}

/// # Safety
/// `h` is null or came from [`concept_classifier_load`] and was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn concept_classifier_free(h: *mut ConceptClassifier) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Topic distribution as JSON `{"probabilities": [...], "topic_index": n, "topic_name": s}`.
///
/// # Safety
/// `h` is a live classifier; the strings are NUL-terminated; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn concept_classifier_classify(
    h: *const ConceptClassifier,
    entity: *const c_char,
    abstract_text: *const c_char,
    out_json: *mut *mut c_char,
) -> ConceptStatus {
    guard(|| {
        let clf = h.as_ref().ok_or(Fail(ConceptStatus::NullPointer, "classifier is null".into()))?;
        let r = record(str_arg(entity, "entity")?, str_arg(abstract_text, "abstract")?)?;
        let dist = clf.0.classify_record(&r)?;
        write_json(out_json, &dist)
    })
}

/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn concept_extractor_load(path: *const c_char, out: *mut *mut ConceptExtractor) -> ConceptStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let m = PointerModel::load(Path::new(p))?;
        write_out(out, ConceptExtractor(m))
    })
}

/// # Safety
/// `h` is null or came from [`concept_extractor_load`] and was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn concept_extractor_free(h: *mut ConceptExtractor) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Extracted spans as JSON `{"entity", "topic", "spans": [{"text", "start", "end", "confidence"}]}`.
/// `classifier` supplies the prompt and may be null for a model trained without one. A NaN
/// `threshold` uses the checkpoint's value.
///
/// # Safety
/// `h` is a live extractor; `classifier` is null or live; the strings are NUL-terminated;
/// `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn concept_extractor_extract(
    h: *const ConceptExtractor,
    classifier: *const ConceptClassifier,
    entity: *const c_char,
    abstract_text: *const c_char,
    threshold: f64,
    out_json: *mut *mut c_char,
) -> ConceptStatus {
    guard(|| {
        let m = h.as_ref().ok_or(Fail(ConceptStatus::NullPointer, "extractor is null".into()))?;
        let r = record(str_arg(entity, "entity")?, str_arg(abstract_text, "abstract")?)?;
        let prompt = match classifier.as_ref() {
            Some(c) => PromptSource::Classifier(&c.0),
            None if m.0.config.use_prompt => {
                return Err(Fail(ConceptStatus::InvalidArgument, "prompted extractor needs a classifier".into()));
            }
            None => PromptSource::None,
        };
        let t = if threshold.is_nan() { m.0.config.threshold } else { threshold };
        let ex = extract_concepts(&r, &m.0, prompt, t)?;
        write_json(out_json, &ex)
    })
}

/// Hearst-pattern captures as a JSON array of strings.
///
/// # Safety
/// `text` is NUL-terminated; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn concept_hearst_extract(text: *const c_char, language: ConceptLanguage, out_json: *mut *mut c_char) -> ConceptStatus {
    guard(|| {
        let t = str_arg(text, "text")?;
        let lang = match language {
            ConceptLanguage::En => Language::En,
            ConceptLanguage::Zh => Language::Zh,
        };
        write_json(out_json, &hearst_extract(t, lang))
    })
}

/// Parses and validates an SCM from its JSON description.
///
/// # Safety
/// `json` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn concept_scm_from_json(json: *const c_char, out: *mut *mut ConceptScm) -> ConceptStatus {
    guard(|| {
        let scm = DiscreteScm::from_json(str_arg(json, "json")?)?;
        write_out(out, ConceptScm(scm))
    })
}

/// # Safety
/// `h` is null or came from [`concept_scm_from_json`] and was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn concept_scm_free(h: *mut ConceptScm) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Size of the `X` domain, or 0 for a null handle.
///
/// # Safety
/// `h` is null or live.
#[no_mangle]
pub unsafe extern "C" fn concept_scm_x_size(h: *const ConceptScm) -> usize {
    h.as_ref().map_or(0, |s| s.0.domains.x)
}

/// Size of the `S` domain, or 0 for a null handle.
///
/// # Safety
/// `h` is null or live.
#[no_mangle]
pub unsafe extern "C" fn concept_scm_s_size(h: *const ConceptScm) -> usize {
    h.as_ref().map_or(0, |s| s.0.domains.s)
}

/// Writes `P(S | do(X = x))` and its frontdoor and backdoor estimates into three buffers of
/// `len` doubles each. `len` must be at least the `S` domain size.
///
/// # Safety
/// `h` is live; each buffer holds `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn concept_scm_compare(
    h: *const ConceptScm,
    x: usize,
    truth: *mut f64,
    frontdoor: *mut f64,
    backdoor: *mut f64,
    len: usize,
) -> ConceptStatus {
    guard(|| {
        let scm = h.as_ref().ok_or(Fail(ConceptStatus::NullPointer, "scm is null".into()))?;
        if truth.is_null() || frontdoor.is_null() || backdoor.is_null() {
            return Err(Fail(ConceptStatus::NullPointer, "output buffer is null".into()));
        }
        let s = scm.0.domains.s;
        if len < s {
            return Err(Fail(ConceptStatus::BufferTooSmall, format!("buffers hold {len} values, need {s}")));
        }
        let c = causal::compare(&scm.0, x)?;
        std::slice::from_raw_parts_mut(truth, s).copy_from_slice(&c.truth);
        std::slice::from_raw_parts_mut(frontdoor, s).copy_from_slice(&c.frontdoor);
        std::slice::from_raw_parts_mut(backdoor, s).copy_from_slice(&c.backdoor);
        Ok(())
    })
}
