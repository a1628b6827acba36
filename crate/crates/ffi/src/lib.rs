//! C ABI over the sadgen models, PlantUML codec and scorer.
//!
//! Objects are opaque handles released with their `*_free` function.
//! Strings returned through `char **out` belong to the caller and are
//! released with [`sad_string_free`]. Every fallible call returns a
//! [`SadStatus`]; on failure [`sad_last_error`] describes it.

use sadgen::eval::{evaluate, format_triple, ScoreCard, ScoreConfig, ScoreTriple};
use sadgen::ingest::{model_from_json, model_to_json, parse_xmi, ModelDocument};
use sadgen::model::{reachable_states, validate_state_machine, ClassModel, StateMachine};
use sadgen::plantuml::{emit_class_plantuml, emit_state_plantuml, extract_plantuml_block, parse_state_plantuml};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidModel = 4,
    NoEntryPoint = 5,
    SerdeError = 6,
    OutOfRange = 7,
    Panic = 99,
}

pub struct SadStateMachine(StateMachine);
pub struct SadClassModel(ClassModel);
pub struct SadScoreCard(ScoreCard);

/// Scoring options. `q9_manual` is -1 for the automatic verdict, 0 or 1 to
/// override it.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SadScoreConfig {
    pub min_similarity: f64,
    pub name_threshold: f64,
    pub lenient_timeout: bool,
    pub q9_manual: i32,
}

/// One `X/Y (Z)` cell.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SadTriple {
    pub matched: u32,
    pub total: u32,
    pub hallucinated: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SadStatus, String);

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SadStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            SadStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SadStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(SadStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|e| Failure(SadStatus::SerdeError, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_triple(t: ScoreTriple) -> SadTriple {
    let c = |v: usize| u32::try_from(v).unwrap_or(u32::MAX);
    SadTriple {
        matched: c(t.matched),
        total: c(t.total),
        hallucinated: c(t.hallucinated),
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn sad_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn sad_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sad_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---- state machines

/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_state_machine_parse_plantuml(
    text: *const c_char,
    out: *mut *mut SadStateMachine,
) -> SadStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        let parsed = parse_state_plantuml(text).map_err(|e| {
            let status = match e {
                sadgen::plantuml::PumlError::Invalid(_) => SadStatus::InvalidModel,
                _ => SadStatus::ParseError,
            };
            Failure(status, e.to_string())
        })?;
        put(out, SadStateMachine(parsed.value))
    })
}

/// Accepts a `{"kind": "state_machine", "model": ...}` document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_state_machine_from_json(json: *const c_char, out: *mut *mut SadStateMachine) -> SadStatus {
    guard(|| {
        let json = read_str(json, "json")?;
        match model_from_json(json).map_err(|e| Failure(SadStatus::SerdeError, e.to_string()))? {
            ModelDocument::StateMachine(m) => put(out, SadStateMachine(m)),
            other => Err(Failure(
                SadStatus::SerdeError,
                format!("expected a state_machine document, found {}", other.kind()),
            )),
        }
    })
}

/// # Safety
/// `sm` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_state_machine_to_plantuml(sm: *const SadStateMachine, out: *mut *mut c_char) -> SadStatus {
    guard(|| put_string(out, emit_state_plantuml(&handle(sm, "sm")?.0)))
}

/// # Safety
/// `sm` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_state_machine_to_json(sm: *const SadStateMachine, out: *mut *mut c_char) -> SadStatus {
    guard(|| {
        let doc = ModelDocument::StateMachine(handle(sm, "sm")?.0.clone());
        put_string(out, model_to_json(&doc))
    })
}

/// Writes the number of well-formedness violations to `count`. When
/// `messages` is not NULL it receives them one per line.
///
/// # Safety
/// `sm` must be a live handle; `count` a valid pointer; `messages` NULL or
/// valid.
#[no_mangle]
pub unsafe extern "C" fn sad_state_machine_validate(
    sm: *const SadStateMachine,
    count: *mut usize,
    messages: *mut *mut c_char,
) -> SadStatus {
    guard(|| {
        let violations = validate_state_machine(&handle(sm, "sm")?.0);
        if count.is_null() {
            return Err(null("count"));
        }
        *count = violations.len();
        if !messages.is_null() {
            let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
            put_string(messages, text.join("\n"))?;
        }
        Ok(())
    })
}

/// Ids of the named states reachable from the top-level initial, one per
/// line in sorted order. Fails with NO_ENTRY_POINT when there is none.
///
/// # Safety
/// `sm` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_state_machine_reachable(sm: *const SadStateMachine, out: *mut *mut c_char) -> SadStatus {
    guard(|| {
        let ids = reachable_states(&handle(sm, "sm")?.0).map_err(|e| Failure(SadStatus::NoEntryPoint, e.to_string()))?;
        put_string(out, ids.into_iter().collect::<Vec<_>>().join("\n"))
    })
}

/// # Safety
/// `sm` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sad_state_machine_free(sm: *mut SadStateMachine) {
    if !sm.is_null() {
        drop(Box::from_raw(sm));
    }
}

// ---- class models

/// Parses `len` bytes of XMI.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_class_model_from_xmi(data: *const u8, len: usize, out: *mut *mut SadClassModel) -> SadStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let parsed = parse_xmi(bytes).map_err(|e| Failure(SadStatus::ParseError, e.to_string()))?;
        put(out, SadClassModel(parsed.value))
    })
}

/// Accepts a class or component model document; a component model yields
/// its class model.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_class_model_from_json(json: *const c_char, out: *mut *mut SadClassModel) -> SadStatus {
    guard(|| {
        let json = read_str(json, "json")?;
        match model_from_json(json).map_err(|e| Failure(SadStatus::SerdeError, e.to_string()))? {
            ModelDocument::ClassModel(m) => put(out, SadClassModel(m)),
            ModelDocument::ComponentModel(c) => put(out, SadClassModel(c.model)),
            other => Err(Failure(
                SadStatus::SerdeError,
                format!("expected a class_model document, found {}", other.kind()),
            )),
        }
    })
}

/// # Safety
/// `model` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_class_model_to_json(model: *const SadClassModel, out: *mut *mut c_char) -> SadStatus {
    guard(|| {
        let doc = ModelDocument::ClassModel(handle(model, "model")?.0.clone());
        put_string(out, model_to_json(&doc))
    })
}

/// # Safety
/// `model` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_class_model_to_plantuml(model: *const SadClassModel, out: *mut *mut c_char) -> SadStatus {
    guard(|| put_string(out, emit_class_plantuml(&handle(model, "model")?.0)))
}

/// Number of classes, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sad_class_model_class_count(model: *const SadClassModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.classes.len())
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sad_class_model_free(model: *mut SadClassModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---- scoring

#[no_mangle]
pub extern "C" fn sad_score_config_default() -> SadScoreConfig {
    let d = ScoreConfig::default();
    SadScoreConfig {
        min_similarity: d.min_similarity,
        name_threshold: d.name_threshold,
        lenient_timeout: d.lenient_timeout,
        q9_manual: -1,
    }
}

/// Scores `generated` against `ground_truth`. `config` may be NULL for the
/// defaults.
///
/// # Safety
/// Handles must be live; `config` NULL or valid; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_score(
    ground_truth: *const SadStateMachine,
    generated: *const SadStateMachine,
    config: *const SadScoreConfig,
    out: *mut *mut SadScoreCard,
) -> SadStatus {
    guard(|| {
        let gt = handle(ground_truth, "ground_truth")?;
        let gen = handle(generated, "generated")?;
        let c = config.as_ref().copied().unwrap_or_else(|| sad_score_config_default());
        let cfg = ScoreConfig {
            min_similarity: c.min_similarity,
            name_threshold: c.name_threshold,
            lenient_timeout: c.lenient_timeout,
            q9_manual: match c.q9_manual {
                0 => Some(false),
                1 => Some(true),
                _ => None,
            },
        };
        put(out, SadScoreCard(evaluate(&gt.0, &gen.0, &cfg)))
    })
}

/// Cell `question` (1 to 9) of a score card.
///
/// # Safety
/// `card` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_score_card_triple(card: *const SadScoreCard, question: u32, out: *mut SadTriple) -> SadStatus {
    guard(|| {
        let card = handle(card, "card")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let i = question
            .checked_sub(1)
            .filter(|&i| i < 9)
            .ok_or_else(|| Failure(SadStatus::OutOfRange, format!("question {question} is not in 1..=9")))?;
        *out = to_triple(card.0.triples()[i as usize]);
        Ok(())
    })
}

/// # Safety
/// `card` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_score_card_to_json(card: *const SadScoreCard, out: *mut *mut c_char) -> SadStatus {
    guard(|| {
        let card = handle(card, "card")?;
        let text = serde_json::to_string_pretty(&card.0).map_err(|e| Failure(SadStatus::SerdeError, e.to_string()))?;
        put_string(out, text)
    })
}

/// # Safety
/// `card` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sad_score_card_free(card: *mut SadScoreCard) {
    if !card.is_null() {
        drop(Box::from_raw(card));
    }
}

/// `X/Y (Z)` text of a triple.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_format_triple(triple: SadTriple, out: *mut *mut c_char) -> SadStatus {
    guard(|| {
        let t = ScoreTriple {
            matched: triple.matched as usize,
            total: triple.total as usize,
            hallucinated: triple.hallucinated as usize,
        };
        put_string(out, format_triple(&t))
    })
}

/// The `@startuml`..`@enduml` block of an LLM response.
///
/// # Safety
/// `response` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sad_extract_plantuml_block(response: *const c_char, out: *mut *mut c_char) -> SadStatus {
    guard(|| {
        let response = read_str(response, "response")?;
        let block = extract_plantuml_block(response).map_err(|e| Failure(SadStatus::ParseError, e.to_string()))?;
        put_string(out, block)
    })
}
