//! C ABI over `opinion-core`.
//!
//! Models and catalogs live behind opaque handles that the caller frees
//! with the matching `_free` function. Every entry point returns an
//! [`OpnStatus`]; on failure, [`opn_last_error_message`] describes the
//! problem. Panics are caught at the boundary and reported as
//! `OPN_STATUS_PANIC`. States are row-major `na * no` arrays of deviations
//! (rows summing to zero).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use opinion_core::axial::{self, AxialRecord, AxialRecordJson, Mode};
use opinion_core::model::{ModelInstance, ModelSpec};
use opinion_core::sim::{integrate, SimConfig};
use opinion_core::spectral::{self, BifurcationKind};
use opinion_core::state::{classify_group_deviation, DeviationState, DissensusKind, GroupClass};
use opinion_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    OutOfSimplex = 4,
    Degenerate = 5,
    SizeExceeded = 6,
    Diverged = 7,
    Json = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpnBifurcationKind {
    Consensus = 0,
    Dissensus = 1,
    ModeInteraction = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpnGroupClass {
    Unopinionated = 0,
    Consensus = 1,
    Agreement = 2,
    DissensusUniform = 3,
    DissensusModerateExtremist = 4,
    DissensusOther = 5,
    Disagreement = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpnMode {
    Consensus = 0,
    Dissensus = 1,
}

/// Linear analysis at the neutral point. `lambda_crit` is NaN under mode
/// interaction.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpnAnalysis {
    pub kind: OpnBifurcationKind,
    pub lambda_crit: f64,
    pub c1: f64,
    pub c2: f64,
    pub eig_consensus: f64,
    pub eig_dissensus: f64,
}

pub struct OpnModel {
    inner: ModelInstance,
}

pub struct OpnCatalog {
    records: Vec<AxialRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OpnStatus {
    match e {
        Error::DimensionMismatch { .. } => OpnStatus::DimensionMismatch,
        Error::NotOnSimplex { .. } | Error::OutOfSimplex { .. } => OpnStatus::OutOfSimplex,
        Error::DegenerateDenominator { .. } => OpnStatus::Degenerate,
        Error::SizeExceeded { .. } | Error::GroupTooLarge { .. } => OpnStatus::SizeExceeded,
        Error::Diverged { .. } => OpnStatus::Diverged,
        Error::Json(_) | Error::Schema(_) => OpnStatus::Json,
        _ => OpnStatus::InvalidArgument,
    }
}

struct Fail(OpnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(OpnStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OpnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OpnStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            OpnStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(m: *const OpnModel) -> Result<&'a ModelInstance, Fail> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(len: usize, na: usize, no: usize) -> Result<(), Fail> {
    if len != na * no {
        return Err(Fail(OpnStatus::DimensionMismatch, format!("expected {} values ({na}x{no}), got {len}", na * no)));
    }
    Ok(())
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn group_class(c: GroupClass) -> OpnGroupClass {
    match c {
        GroupClass::Unopinionated => OpnGroupClass::Unopinionated,
        GroupClass::Consensus => OpnGroupClass::Consensus,
        GroupClass::Agreement => OpnGroupClass::Agreement,
        GroupClass::Dissensus(DissensusKind::Uniform) => OpnGroupClass::DissensusUniform,
        GroupClass::Dissensus(DissensusKind::ModerateExtremist) => OpnGroupClass::DissensusModerateExtremist,
        GroupClass::Dissensus(DissensusKind::Other) => OpnGroupClass::DissensusOther,
        GroupClass::Disagreement => OpnGroupClass::Disagreement,
    }
}

fn kind(k: BifurcationKind) -> OpnBifurcationKind {
    match k {
        BifurcationKind::Consensus => OpnBifurcationKind::Consensus,
        BifurcationKind::Dissensus => OpnBifurcationKind::Dissensus,
        BifurcationKind::ModeInteraction => OpnBifurcationKind::ModeInteraction,
    }
}

fn boxed_model(m: ModelInstance) -> *mut OpnModel {
    Box::into_raw(Box::new(OpnModel { inner: m }))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn opn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Homogeneous all-to-all model with zero bias.
///
/// # Safety
/// `out` must be a valid pointer to write the handle into.
#[no_mangle]
pub unsafe extern "C" fn opn_model_new_homogeneous(
    na: usize,
    no: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    lambda: f64,
    out: *mut *mut OpnModel,
) -> OpnStatus {
    guard(|| {
        let m = ModelInstance::homogeneous(na, no, alpha, beta, gamma, delta, lambda)?;
        put(out, boxed_model(m), "out")
    })
}

/// Model from the JSON model layout used by scenario files.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opn_model_from_json(json: *const c_char, out: *mut *mut OpnModel) -> OpnStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Fail(OpnStatus::Json, e.to_string()))?;
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| Fail(OpnStatus::Json, e.to_string()))?;
        put(out, boxed_model(spec.build()?), "out")
    })
}

/// New handle holding `model` with every coupling and bias entry shifted
/// by an independent uniform draw on `[-epsilon, epsilon]`.
///
/// # Safety
/// `model` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opn_model_perturb(model: *const OpnModel, epsilon: f64, seed: u64, out: *mut *mut OpnModel) -> OpnStatus {
    guard(|| {
        let m = model_ref(model)?.perturb(epsilon, seed)?;
        put(out, boxed_model(m), "out")
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opn_model_free(model: *mut OpnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `na` and `no` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn opn_model_dims(model: *const OpnModel, na: *mut usize, no: *mut usize) -> OpnStatus {
    guard(|| {
        let m = model_ref(model)?;
        put(na, m.na(), "na")?;
        put(no, m.no(), "no")
    })
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn opn_model_set_lambda(model: *mut OpnModel, lambda: f64) -> OpnStatus {
    guard(|| {
        let h = model.as_mut().ok_or_else(|| null("model"))?;
        h.inner = h.inner.with_lambda(lambda);
        Ok(())
    })
}

/// Tangent drift at `z`, written to `out`. Both arrays hold `len = na * no`
/// values.
///
/// # Safety
/// `z` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn opn_drift(model: *const OpnModel, z: *const f64, len: usize, out: *mut f64) -> OpnStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_len(len, m.na(), m.no())?;
        let z = DeviationState::from_flat(m.na(), m.no(), slice(z, len, "z")?.to_vec())?;
        let d = opinion_core::model::drift(&z, m)?;
        slice_mut(out, len, "out")?.copy_from_slice(d.as_slice());
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opn_analyze(model: *const OpnModel, out: *mut OpnAnalysis) -> OpnStatus {
    guard(|| {
        let (r, _) = spectral::analyze(model_ref(model)?)?;
        let a = OpnAnalysis {
            kind: kind(r.kind),
            lambda_crit: r.lambda_crit.unwrap_or(f64::NAN),
            c1: r.c1,
            c2: r.c2,
            eig_consensus: r.eig_consensus,
            eig_dissensus: r.eig_dissensus,
        };
        put(out, a, "out")
    })
}

/// Critical values from the gains. A branch whose denominator is not
/// positive reports NaN.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn opn_critical_lambdas(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    na: usize,
    kind_out: *mut OpnBifurcationKind,
    lambda_consensus: *mut f64,
    lambda_dissensus: *mut f64,
) -> OpnStatus {
    guard(|| {
        let p = spectral::critical_lambdas(alpha, beta, gamma, delta, na)?;
        put(kind_out, kind(p.kind), "kind_out")?;
        put(lambda_consensus, p.lambda_consensus.unwrap_or(f64::NAN), "lambda_consensus")?;
        put(lambda_dissensus, p.lambda_dissensus.unwrap_or(f64::NAN), "lambda_dissensus")
    })
}

/// Integrate at the model's λ from `z0` with RK4 step `dt` until `t_max` or
/// equilibrium. Writes the final state to `z_out` and its class to
/// `class_out` (classified with the default simulation tolerance).
///
/// # Safety
/// `z0` and `z_out` must point to `len` doubles; `class_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn opn_integrate(
    model: *const OpnModel,
    z0: *const f64,
    len: usize,
    dt: f64,
    t_max: f64,
    z_out: *mut f64,
    class_out: *mut OpnGroupClass,
) -> OpnStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_len(len, m.na(), m.no())?;
        let z = DeviationState::from_flat(m.na(), m.no(), slice(z0, len, "z0")?.to_vec())?;
        let mut cfg = SimConfig::new(t_max);
        cfg.dt = dt;
        cfg.sample_interval = t_max;
        let tr = integrate(m, &z, &cfg, None)?;
        let last = tr.last();
        slice_mut(z_out, len, "z_out")?.copy_from_slice(last.as_slice());
        put(class_out, group_class(classify_group_deviation(last, opinion_core::tol::THETA_SIM)), "class_out")
    })
}

/// Group class of a deviation state at tolerance `theta`.
///
/// # Safety
/// `z` must point to `na * no` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn opn_classify(z: *const f64, na: usize, no: usize, theta: f64, out: *mut OpnGroupClass) -> OpnStatus {
    guard(|| {
        let z = DeviationState::from_flat(na, no, slice(z, na * no, "z")?.to_vec())?;
        put(out, group_class(classify_group_deviation(&z, theta)), "out")
    })
}

/// Axial catalog for `S_na x S_no` on the consensus or dissensus space.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opn_catalog_new(na: usize, no: usize, mode: OpnMode, out: *mut *mut OpnCatalog) -> OpnStatus {
    guard(|| {
        if na == 0 || no < 2 {
            return Err(Fail(OpnStatus::InvalidArgument, format!("need na >= 1 and no >= 2, got {na}x{no}")));
        }
        let mode = match mode {
            OpnMode::Consensus => Mode::Consensus,
            OpnMode::Dissensus => Mode::Dissensus,
        };
        let c = OpnCatalog { records: axial::catalog(na, no, mode) };
        put(out, Box::into_raw(Box::new(c)), "out")
    })
}

/// # Safety
/// `catalog` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opn_catalog_free(catalog: *mut OpnCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// # Safety
/// `catalog` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opn_catalog_len(catalog: *const OpnCatalog, out: *mut usize) -> OpnStatus {
    guard(|| {
        let c = catalog.as_ref().ok_or_else(|| null("catalog"))?;
        put(out, c.records.len(), "out")
    })
}

unsafe fn record<'a>(catalog: *const OpnCatalog, index: usize) -> Result<&'a AxialRecord, Fail> {
    let c = catalog.as_ref().ok_or_else(|| null("catalog"))?;
    c.records
        .get(index)
        .ok_or_else(|| Fail(OpnStatus::InvalidArgument, format!("index {index} out of range (len {})", c.records.len())))
}

/// Unit fix vector of record `index`, `len = na * no` values.
///
/// # Safety
/// `catalog` must be a live handle; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn opn_catalog_fix_vector(catalog: *const OpnCatalog, index: usize, out: *mut f64, len: usize) -> OpnStatus {
    guard(|| {
        let r = record(catalog, index)?;
        check_len(len, r.na(), r.no())?;
        slice_mut(out, len, "out")?.copy_from_slice(r.fix_generator.as_slice());
        Ok(())
    })
}

/// Label of record `index`, e.g. `Sigma_x_m[m=2]`. Free with
/// [`opn_string_free`].
///
/// # Safety
/// `catalog` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opn_catalog_label(catalog: *const OpnCatalog, index: usize, out: *mut *mut c_char) -> OpnStatus {
    guard(|| {
        let r = record(catalog, index)?;
        let s = CString::new(r.label()).map_err(|e| Fail(OpnStatus::InvalidArgument, e.to_string()))?;
        put(out, s.into_raw(), "out")
    })
}

/// Whole catalog as a JSON array. Free with [`opn_string_free`].
///
/// # Safety
/// `catalog` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opn_catalog_to_json(catalog: *const OpnCatalog, out: *mut *mut c_char) -> OpnStatus {
    guard(|| {
        let c = catalog.as_ref().ok_or_else(|| null("catalog"))?;
        let recs: Vec<AxialRecordJson> = c.records.iter().map(AxialRecordJson::from).collect();
        let text = serde_json::to_string(&recs).map_err(|e| Fail(OpnStatus::Json, e.to_string()))?;
        let s = CString::new(text).map_err(|e| Fail(OpnStatus::Json, e.to_string()))?;
        put(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
