//! C ABI for the distillforge engine.
//!
//! Conventions:
//!
//! * Objects cross the boundary as opaque handles (`DfMatrix`, `DfNet`,
//!   `DfEmbeddings`) created and destroyed by paired `_new`/`_free` calls.
//! * Every fallible function returns a [`DfStatus`]; outputs come back
//!   through out-pointers that are written only on `DF_STATUS_OK`.
//! * `df_last_error_message` returns a thread-local description of the
//!   most recent failure on the calling thread.
//! * Strings returned as `char*` are owned by the caller and must be
//!   released with `df_string_free`.
//!
//! All panics are caught at the boundary and reported as
//! `DF_STATUS_PANIC`; nothing unwinds across the ABI.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use distillforge::config::RunConfig;
use distillforge::driver::{self, DistillOptions};
use distillforge::error::Error;
use distillforge::losses;
use distillforge::model::{Head, HeadSet, NetConfig, Stage, StudentNet};
use distillforge::numcore::matrix::{normalize_rows, Matrix};
use distillforge::pipeline::load_checkpoint;
use distillforge::teachers;

/// Status codes for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    ZeroNormRow = 4,
    MissingKey = 5,
    FormatError = 6,
    VersionMismatch = 7,
    NonFinite = 8,
    IoError = 9,
    ConfigError = 10,
    Panic = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DfStatus {
    match err {
        Error::ZeroNormRow(_) => DfStatus::ZeroNormRow,
        Error::ShapeMismatch { .. }
        | Error::BatchMismatch(_, _)
        | Error::DimMismatch { .. }
        | Error::CosineDimMismatch(_, _) => DfStatus::ShapeMismatch,
        Error::NonFiniteEvaluation | Error::NonFiniteLoss { .. } => DfStatus::NonFinite,
        Error::MissingKey(_) | Error::MissingQrel(_) => DfStatus::MissingKey,
        Error::FormatError { .. } => DfStatus::FormatError,
        Error::VersionMismatch { .. } => DfStatus::VersionMismatch,
        Error::EmptyTokenSequence(_) | Error::DataExhausted(_) => DfStatus::InvalidArgument,
        Error::Config(_) => DfStatus::ConfigError,
        Error::Io(_) => DfStatus::IoError,
    }
}

fn fail(err: &Error) -> DfStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Run `f` with panics contained; on panic, report `DF_STATUS_PANIC`.
fn guarded(f: impl FnOnce() -> DfStatus) -> DfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&msg);
            DfStatus::Panic
        }
    }
}

macro_rules! nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!(stringify!($ptr), " is null"));
            return DfStatus::NullPointer;
        }
    };
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, DfStatus> {
    if ptr.is_null() {
        set_error("string argument is null");
        return Err(DfStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        DfStatus::InvalidArgument
    })
}

// ---------------------------------------------------------------------------
// Library metadata and error reporting
// ---------------------------------------------------------------------------

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn df_version() -> *const c_char {
    VERSION.as_ptr().cast()
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn df_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string returned by this library.
///
/// # Safety
/// `ptr` must have been produced by a distillforge function documented to
/// transfer string ownership, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn df_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Opaque dense row-major f64 matrix.
pub struct DfMatrix(Matrix);

/// Create a matrix from a row-major buffer of `rows * cols` doubles.
///
/// # Safety
/// `data` must point to at least `rows * cols` readable doubles, and `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(out);
        let Some(len) = rows.checked_mul(cols) else {
            set_error("rows * cols overflows");
            return DfStatus::InvalidArgument;
        };
        if len > 0 {
            nonnull!(data);
        }
        let slice = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(data, len)
        };
        if slice.iter().any(|v| !v.is_finite()) {
            set_error("matrix data contains non-finite values");
            return DfStatus::NonFinite;
        }
        let m = Matrix::from_vec(rows, cols, slice.to_vec());
        *out = Box::into_raw(Box::new(DfMatrix(m)));
        DfStatus::Ok
    })
}

/// # Safety
/// `m` must be a live matrix handle; it must not be used after this call.
#[no_mangle]
pub unsafe extern "C" fn df_matrix_free(m: *mut DfMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` and `rows` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn df_matrix_rows(m: *const DfMatrix, rows: *mut usize) -> DfStatus {
    guarded(|| {
        nonnull!(m);
        nonnull!(rows);
        *rows = (*m).0.rows();
        DfStatus::Ok
    })
}

/// # Safety
/// `m` and `cols` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn df_matrix_cols(m: *const DfMatrix, cols: *mut usize) -> DfStatus {
    guarded(|| {
        nonnull!(m);
        nonnull!(cols);
        *cols = (*m).0.cols();
        DfStatus::Ok
    })
}

/// Copy the matrix out as row-major doubles. `len` must equal
/// `rows * cols`.
///
/// # Safety
/// `m` must be a live handle and `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn df_matrix_copy_data(
    m: *const DfMatrix,
    out: *mut f64,
    len: usize,
) -> DfStatus {
    guarded(|| {
        nonnull!(m);
        nonnull!(out);
        let data = (*m).0.data();
        if data.len() != len {
            set_error("destination length does not match matrix size");
            return DfStatus::InvalidArgument;
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(data);
        DfStatus::Ok
    })
}

/// Scale every row to unit Euclidean norm into a new matrix.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_normalize_rows(
    m: *const DfMatrix,
    out: *mut *mut DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(m);
        nonnull!(out);
        match normalize_rows(&(*m).0) {
            Ok(n) => {
                *out = Box::into_raw(Box::new(DfMatrix(n)));
                DfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fuse per-teacher output matrices (same batch) into the distillation
/// target: per-teacher row normalization, concatenation, renormalization.
///
/// # Safety
/// `teachers` must point to `k >= 1` live matrix handles; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_fuse(
    teachers: *const *const DfMatrix,
    k: usize,
    out: *mut *mut DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(teachers);
        nonnull!(out);
        if k == 0 {
            set_error("k must be at least 1");
            return DfStatus::InvalidArgument;
        }
        let handles = std::slice::from_raw_parts(teachers, k);
        let mut mats = Vec::with_capacity(k);
        for &h in handles {
            if h.is_null() {
                set_error("teacher matrix handle is null");
                return DfStatus::NullPointer;
            }
            mats.push((*h).0.clone());
        }
        match teachers::fuse(&mats) {
            Ok(fused) => {
                *out = Box::into_raw(Box::new(DfMatrix(fused.matrix)));
                DfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Number of unordered pairs of distinct text pairs for a batch of `m`:
/// `C(C(m,2), 2)`; zero for m < 3.
#[no_mangle]
pub extern "C" fn df_pair_count(m: u64) -> u64 {
    losses::pair_count(m as usize)
}

unsafe fn loss_out(
    value_out: *mut f64,
    grad_out: *mut *mut DfMatrix,
    value: f64,
    grad: Matrix,
) -> DfStatus {
    if !value_out.is_null() {
        *value_out = value;
    }
    if !grad_out.is_null() {
        *grad_out = Box::into_raw(Box::new(DfMatrix(grad)));
    }
    DfStatus::Ok
}

/// Pointwise alignment loss `sum_x (1 - s_x . t_x)` over unit rows, with
/// the gradient with respect to the student matrix.
///
/// # Safety
/// `s` and `t` must be live handles; `grad_out` may be null to skip the
/// gradient.
#[no_mangle]
pub unsafe extern "C" fn df_cosine_loss(
    s: *const DfMatrix,
    t: *const DfMatrix,
    value_out: *mut f64,
    grad_out: *mut *mut DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(s);
        nonnull!(t);
        match losses::cosine_loss(&(*s).0, &(*t).0) {
            Ok((v, g)) => loss_out(value_out, grad_out, v, g),
            Err(e) => fail(&e),
        }
    })
}

/// Pair-similarity loss: mean squared difference of the student and
/// teacher gram matrices. Column counts may differ.
///
/// # Safety
/// As for [`df_cosine_loss`].
#[no_mangle]
pub unsafe extern "C" fn df_sim_loss(
    s: *const DfMatrix,
    t: *const DfMatrix,
    value_out: *mut f64,
    grad_out: *mut *mut DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(s);
        nonnull!(t);
        match losses::sim_loss(&(*s).0, &(*t).0) {
            Ok((v, g)) => loss_out(value_out, grad_out, v, g),
            Err(e) => fail(&e),
        }
    })
}

/// Relative similarity loss: margin hinge over every teacher-ordered pair
/// of text pairs, divided by `C(C(m,2),2)`. `hinges_out` (optional)
/// receives the number of active hinges.
///
/// # Safety
/// As for [`df_cosine_loss`]; `hinges_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn df_resim_loss(
    s: *const DfMatrix,
    t: *const DfMatrix,
    margin: f64,
    value_out: *mut f64,
    grad_out: *mut *mut DfMatrix,
    hinges_out: *mut u64,
) -> DfStatus {
    guarded(|| {
        nonnull!(s);
        nonnull!(t);
        match losses::resim_loss(&(*s).0, &(*t).0, margin) {
            Ok((v, g, hinges)) => {
                if !hinges_out.is_null() {
                    *hinges_out = hinges;
                }
                loss_out(value_out, grad_out, v, g)
            }
            Err(e) => fail(&e),
        }
    })
}

// ---------------------------------------------------------------------------
// Student network
// ---------------------------------------------------------------------------

/// Opaque student network handle.
pub struct DfNet(StudentNet);

/// Create a freshly initialized student network.
///
/// # Safety
/// `head_dims` must point to 4 readable values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn df_net_new(
    base_dim: usize,
    hidden_dim: usize,
    tail_layers: usize,
    head_dims: *const usize,
    vision_dim: usize,
    seed: u64,
    out: *mut *mut DfNet,
) -> DfStatus {
    guarded(|| {
        nonnull!(head_dims);
        nonnull!(out);
        let dims = std::slice::from_raw_parts(head_dims, 4);
        let cfg = NetConfig {
            base_dim,
            hidden_dim,
            tail_layers,
            head_dims: [dims[0], dims[1], dims[2], dims[3]],
            vision_dim,
            seed,
        };
        match StudentNet::new(cfg) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(DfNet(net)));
                DfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Restore the network stored in a checkpoint file (for inference).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn df_net_from_checkpoint(
    path: *const c_char,
    out: *mut *mut DfNet,
) -> DfStatus {
    guarded(|| {
        nonnull!(out);
        let path = match cstr(path) {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let ckpt = match load_checkpoint(&path) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        match ckpt.restore_net() {
            Ok(net) => {
                *out = Box::into_raw(Box::new(DfNet(net)));
                DfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `net` must be a live handle; it must not be used after this call.
#[no_mangle]
pub unsafe extern "C" fn df_net_free(net: *mut DfNet) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

fn head_from_index(index: u32) -> Option<Head> {
    Head::ALL.get(index as usize).copied()
}

/// Run base features through the text path and one head (0..=3, widest
/// first); the output rows are unit-norm embeddings.
///
/// # Safety
/// `net` and `base` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn df_net_forward_text(
    net: *const DfNet,
    base: *const DfMatrix,
    head_index: u32,
    out: *mut *mut DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(net);
        nonnull!(base);
        nonnull!(out);
        let Some(head) = head_from_index(head_index) else {
            set_error("head_index must be 0..=3");
            return DfStatus::InvalidArgument;
        };
        match (*net).0.forward_text(&(*base).0, HeadSet::of(&[head])) {
            Ok(mut outputs) => {
                let m = outputs.take(head).expect("requested head");
                *out = Box::into_raw(Box::new(DfMatrix(m)));
                DfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Run per-image token matrices through the vision path and one head.
///
/// # Safety
/// `images` must point to `n_images` live matrix handles.
#[no_mangle]
pub unsafe extern "C" fn df_net_forward_vision(
    net: *const DfNet,
    images: *const *const DfMatrix,
    n_images: usize,
    head_index: u32,
    out: *mut *mut DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(net);
        nonnull!(images);
        nonnull!(out);
        let Some(head) = head_from_index(head_index) else {
            set_error("head_index must be 0..=3");
            return DfStatus::InvalidArgument;
        };
        let handles = std::slice::from_raw_parts(images, n_images);
        let mut mats = Vec::with_capacity(n_images);
        for &h in handles {
            if h.is_null() {
                set_error("image matrix handle is null");
                return DfStatus::NullPointer;
            }
            mats.push((*h).0.clone());
        }
        match (*net).0.forward_vision(&mats, HeadSet::of(&[head])) {
            Ok(mut outputs) => {
                let m = outputs.take(head).expect("requested head");
                *out = Box::into_raw(Box::new(DfMatrix(m)));
                DfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

// ---------------------------------------------------------------------------
// Embedding files
// ---------------------------------------------------------------------------

/// Opaque handle over an embedding file's ids and matrix.
pub struct DfEmbeddings {
    ids: Vec<CString>,
    matrix: Matrix,
}

/// Read an `EMB1` embedding file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn df_embeddings_read(
    path: *const c_char,
    out: *mut *mut DfEmbeddings,
) -> DfStatus {
    guarded(|| {
        nonnull!(out);
        let path = match cstr(path) {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        match distillforge::datakit::read_embeddings(&path) {
            Ok((ids, matrix)) => {
                let ids = ids
                    .into_iter()
                    .map(|id| CString::new(id).unwrap_or_default())
                    .collect();
                *out = Box::into_raw(Box::new(DfEmbeddings { ids, matrix }));
                DfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Write an `EMB1` embedding file (`ids` are NUL-terminated, one per row).
///
/// # Safety
/// `path` must be NUL-terminated; `ids` must point to `matrix.rows()`
/// valid strings; `matrix` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn df_embeddings_write(
    path: *const c_char,
    ids: *const *const c_char,
    matrix: *const DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(matrix);
        let path = match cstr(path) {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let rows = (*matrix).0.rows();
        if rows > 0 {
            nonnull!(ids);
        }
        let id_ptrs = if rows == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(ids, rows)
        };
        let mut owned = Vec::with_capacity(rows);
        for &p in id_ptrs {
            match cstr(p) {
                Ok(s) => owned.push(s.to_string()),
                Err(status) => return status,
            }
        }
        match distillforge::datakit::write_embeddings(&path, &owned, &(*matrix).0) {
            Ok(()) => DfStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `e` and `count` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn df_embeddings_count(
    e: *const DfEmbeddings,
    count: *mut usize,
) -> DfStatus {
    guarded(|| {
        nonnull!(e);
        nonnull!(count);
        *count = (*e).ids.len();
        DfStatus::Ok
    })
}

/// # Safety
/// `e` and `dim` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn df_embeddings_dim(e: *const DfEmbeddings, dim: *mut usize) -> DfStatus {
    guarded(|| {
        nonnull!(e);
        nonnull!(dim);
        *dim = (*e).matrix.cols();
        DfStatus::Ok
    })
}

/// Id of row `index`; the pointer is owned by the handle and valid until
/// the handle is freed.
///
/// # Safety
/// `e` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn df_embeddings_id(
    e: *const DfEmbeddings,
    index: usize,
    out: *mut *const c_char,
) -> DfStatus {
    guarded(|| {
        nonnull!(e);
        nonnull!(out);
        let ids = &(*e).ids;
        match ids.get(index) {
            Some(id) => {
                *out = id.as_ptr();
                DfStatus::Ok
            }
            None => {
                set_error("row index out of range");
                DfStatus::InvalidArgument
            }
        }
    })
}

/// Copy the embedding matrix out of the handle.
///
/// # Safety
/// `e` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn df_embeddings_matrix(
    e: *const DfEmbeddings,
    out: *mut *mut DfMatrix,
) -> DfStatus {
    guarded(|| {
        nonnull!(e);
        nonnull!(out);
        *out = Box::into_raw(Box::new(DfMatrix((*e).matrix.clone())));
        DfStatus::Ok
    })
}

/// # Safety
/// `e` must be a live handle; it must not be used after this call.
#[no_mangle]
pub unsafe extern "C" fn df_embeddings_free(e: *mut DfEmbeddings) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

/// Train one stage from a TOML run configuration. `resume`, `ckpt_out`
/// and `metrics_out` may be null for the config defaults.
///
/// # Safety
/// All non-null pointers must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn df_run_stage(
    config_path: *const c_char,
    stage: u32,
    resume: *const c_char,
    ckpt_out: *const c_char,
    metrics_out: *const c_char,
) -> DfStatus {
    guarded(|| {
        let config_path = match cstr(config_path) {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let opt_path = |ptr: *const c_char| -> Result<Option<PathBuf>, DfStatus> {
            if ptr.is_null() {
                Ok(None)
            } else {
                cstr(ptr).map(|s| Some(PathBuf::from(s)))
            }
        };
        let (resume, ckpt_out, metrics_out) =
            match (opt_path(resume), opt_path(ckpt_out), opt_path(metrics_out)) {
                (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
            };
        let stage = match u8::try_from(stage).ok().map(Stage::from_number) {
            Some(Ok(s)) => s,
            _ => {
                set_error("stage must be 1..=4");
                return DfStatus::InvalidArgument;
            }
        };
        let cfg = match RunConfig::load(&config_path) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        let opts = DistillOptions {
            resume,
            init: None,
            ckpt_out,
            metrics_out,
            timing: false,
        };
        match driver::distill(&cfg, stage, &opts) {
            Ok(_) => DfStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Evaluate a checkpoint against an eval manifest; on success `csv_out`
/// receives a newly allocated CSV string (release with `df_string_free`).
///
/// # Safety
/// `ckpt_path` and `manifest_path` must be NUL-terminated; `csv_out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_evaluate(
    ckpt_path: *const c_char,
    manifest_path: *const c_char,
    sweep: bool,
    csv_out: *mut *mut c_char,
) -> DfStatus {
    guarded(|| {
        nonnull!(csv_out);
        let ckpt = match cstr(ckpt_path) {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let manifest = match cstr(manifest_path) {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        match driver::evaluate(&ckpt, &manifest, sweep) {
            Ok(csv) => {
                let owned = CString::new(csv).unwrap_or_default();
                *csv_out = owned.into_raw();
                DfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
