//! C ABI over the planner and the trained ranking model.
//!
//! Every fallible call returns a [`SeqrankStatus`]; on failure the message is
//! available from [`seqrank_last_error`] on the same thread. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `_free` function. Strings returned to the caller are released with
//! [`seqrank_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use seqrank::features::FeatureVector;
use seqrank::geometry::WeightVector;
use seqrank::planner::{plan_min_cost_sequence, PlanConfig, PlanReport, PlanResult};
use seqrank::ranking::{rpc_predict, RpcModel};
use seqrank::scene::{generate_scene, Scene, WorkspacePreset, WorkspaceSpec};
use seqrank::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqrankStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoViableSequence = 3,
    Domain = 4,
    Io = 5,
    Format = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqrankWorkspace {
    Container = 0,
    Shelf = 1,
}

pub struct SeqrankScene(Scene);

pub struct SeqrankPlan {
    result: PlanResult,
    weights: WeightVector,
}

pub struct SeqrankModel(RpcModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SeqrankStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoViableSequence(_) => SeqrankStatus::NoViableSequence,
            Error::Io(_) => SeqrankStatus::Io,
            Error::Json(_) | Error::Format(_) | Error::UnsupportedVersion(_) => SeqrankStatus::Format,
            Error::InvalidConfig(_) | Error::LengthMismatch { .. } | Error::UnknownClass(_) => {
                SeqrankStatus::InvalidArgument
            }
            _ => SeqrankStatus::Domain,
        };
        Fail(code, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SeqrankStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SeqrankStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeqrankStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SeqrankStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SeqrankStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(SeqrankStatus::Format, "string contains a NUL byte".into()))
}

/// Message of the most recent failure on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn seqrank_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn seqrank_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scene from its JSON form.
#[no_mangle]
pub unsafe extern "C" fn seqrank_scene_from_json(json: *const c_char, out: *mut *mut SeqrankScene) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let scene = Scene::from_json(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(SeqrankScene(scene)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_scene_load(path: *const c_char, out: *mut *mut SeqrankScene) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let scene = Scene::load(Path::new(read_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(SeqrankScene(scene)));
        Ok(())
    })
}

/// Generates a settled scene; `classes` is a comma-separated class list.
#[no_mangle]
pub unsafe extern "C" fn seqrank_scene_generate(
    classes: *const c_char,
    workspace: SeqrankWorkspace,
    seed: u64,
    out: *mut *mut SeqrankScene,
) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let list: Vec<String> = read_str(classes, "classes")?
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let preset = match workspace {
            SeqrankWorkspace::Container => WorkspacePreset::Container,
            SeqrankWorkspace::Shelf => WorkspacePreset::Shelf,
        };
        let scene = generate_scene(&list, &WorkspaceSpec::preset(preset), seed)?;
        *out = Box::into_raw(Box::new(SeqrankScene(scene)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_scene_object_count(scene: *const SeqrankScene, out: *mut usize) -> SeqrankStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(scene, "scene")?.0.objects.len();
        Ok(())
    })
}

/// Scene as JSON; release with `seqrank_string_free`.
#[no_mangle]
pub unsafe extern "C" fn seqrank_scene_to_json(scene: *const SeqrankScene, out: *mut *mut c_char) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = to_c_string(handle(scene, "scene")?.0.to_json()?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_scene_free(scene: *mut SeqrankScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Plans the cheapest removal order. `weights` points at six pose weights or
/// is null for the defaults; `exhaustive` disables all pruning.
#[no_mangle]
pub unsafe extern "C" fn seqrank_plan(
    scene: *const SeqrankScene,
    weights: *const f64,
    exhaustive: bool,
    out: *mut *mut SeqrankPlan,
) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let scene = handle(scene, "scene")?;
        let w = if weights.is_null() {
            WeightVector::default()
        } else {
            let mut a = [0.0; 6];
            a.copy_from_slice(std::slice::from_raw_parts(weights, 6));
            WeightVector::new(a)?
        };
        let cfg = if exhaustive {
            PlanConfig::exhaustive(w)
        } else {
            PlanConfig::with_weights(w)
        };
        let result = plan_min_cost_sequence(&scene.0, &cfg)?;
        *out = Box::into_raw(Box::new(SeqrankPlan { result, weights: w }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_plan_best_cost(plan: *const SeqrankPlan, out: *mut f64) -> SeqrankStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(plan, "plan")?.result.best.cost;
        Ok(())
    })
}

/// Copies the best removal order into `ids`. `len` always receives the
/// sequence length; a short buffer returns `BufferTooSmall` and copies nothing.
#[no_mangle]
pub unsafe extern "C" fn seqrank_plan_best_sequence(
    plan: *const SeqrankPlan,
    ids: *mut u32,
    capacity: usize,
    len: *mut usize,
) -> SeqrankStatus {
    guard(|| {
        let seq = &handle(plan, "plan")?.result.best.sequence;
        *out_ptr(len, "len")? = seq.len();
        if capacity < seq.len() {
            return Err(Fail(
                SeqrankStatus::BufferTooSmall,
                format!("need room for {} ids, got {capacity}", seq.len()),
            ));
        }
        if ids.is_null() {
            return Err(null("ids"));
        }
        std::slice::from_raw_parts_mut(ids, seq.len()).copy_from_slice(seq);
        Ok(())
    })
}

/// Fraction of tree nodes skipped without simulation.
#[no_mangle]
pub unsafe extern "C" fn seqrank_plan_pruned_fraction(plan: *const SeqrankPlan, out: *mut f64) -> SeqrankStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(plan, "plan")?.result.stats.pruned_fraction();
        Ok(())
    })
}

/// Full planning report as JSON; release with `seqrank_string_free`.
#[no_mangle]
pub unsafe extern "C" fn seqrank_plan_report_json(plan: *const SeqrankPlan, out: *mut *mut c_char) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = handle(plan, "plan")?;
        *out = to_c_string(PlanReport::new(&p.result, p.weights).to_json().map_err(Error::from)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_plan_free(plan: *mut SeqrankPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_model_load(path: *const c_char, out: *mut *mut SeqrankModel) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = RpcModel::load(Path::new(read_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(SeqrankModel(m)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_model_from_json(json: *const c_char, out: *mut *mut SeqrankModel) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = RpcModel::from_json(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(SeqrankModel(m)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_model_label_count(model: *const SeqrankModel, out: *mut usize) -> SeqrankStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(model, "model")?.0.labels.len();
        Ok(())
    })
}

/// Label at `index`; release with `seqrank_string_free`.
#[no_mangle]
pub unsafe extern "C" fn seqrank_model_label(
    model: *const SeqrankModel,
    index: usize,
    out: *mut *mut c_char,
) -> SeqrankStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let labels = &handle(model, "model")?.0.labels;
        let l = labels.get(index).ok_or_else(|| {
            Fail(
                SeqrankStatus::InvalidArgument,
                format!("label index {index} out of range ({} labels)", labels.len()),
            )
        })?;
        *out = to_c_string(l.clone())?;
        Ok(())
    })
}

/// Predicts a ranking for `features` and writes label indices into `order`,
/// most preferred first. `order` must hold one entry per label.
#[no_mangle]
pub unsafe extern "C" fn seqrank_model_predict(
    model: *const SeqrankModel,
    features: *const f64,
    feature_len: usize,
    order: *mut usize,
    capacity: usize,
) -> SeqrankStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        if features.is_null() {
            return Err(null("features"));
        }
        let n = m.labels.len();
        if capacity < n {
            return Err(Fail(
                SeqrankStatus::BufferTooSmall,
                format!("need room for {n} labels, got {capacity}"),
            ));
        }
        if order.is_null() {
            return Err(null("order"));
        }
        let x = FeatureVector(std::slice::from_raw_parts(features, feature_len).to_vec());
        let p = rpc_predict(m, &x)?;
        let dst = std::slice::from_raw_parts_mut(order, n);
        for (slot, label) in dst.iter_mut().zip(&p.ranking) {
            *slot = m.labels.iter().position(|l| l == label).expect("predicted label belongs to the model");
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqrank_model_free(model: *mut SeqrankModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
