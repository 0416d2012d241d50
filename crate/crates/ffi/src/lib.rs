//! C interface to `sgframe`.
//!
//! Graphs and dictionaries are opaque heap handles released with their
//! `_free` function. Every call returns an [`SgfStatus`]; on failure the
//! message is available from [`sgf_last_error_message`] on the same thread.
//! Coefficient buffers are flat and band-major: band 0's atoms first, in the
//! order of that band's centers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sgframe::config::{BankSpec, GraphConfig, InverseSpec, SpectrumConfig};
use sgframe::pipeline::{self, Context};
use sgframe::tasks::{self, DenoiseConfig};
use sgframe::{io, Coefficients, Dictionary, Error, LaplacianKind, SparseGraph};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    SizeMismatch = 4,
    TooLarge = 5,
    Parse = 6,
    ProvenanceMismatch = 7,
    NoPartition = 8,
    ZeroSignal = 9,
    Io = 10,
    Panic = 11,
    Utf8 = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgfLaplacian {
    Combinatorial = 0,
    Normalized = 1,
}

/// Opaque graph handle.
pub struct SgfGraph {
    graph: SparseGraph,
}

/// Opaque dictionary handle: the designed filter bank on one graph.
pub struct SgfDictionary {
    ctx: Context,
    dict: Dictionary,
    seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(SgfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::EmptyGraph | Error::InvalidGraph(_) => SgfStatus::InvalidGraph,
            Error::SizeMismatch { .. } => SgfStatus::SizeMismatch,
            Error::TooLarge { .. } => SgfStatus::TooLarge,
            Error::InvalidArgument(_) => SgfStatus::InvalidArgument,
            Error::Parse(_) => SgfStatus::Parse,
            Error::ProvenanceMismatch => SgfStatus::ProvenanceMismatch,
            Error::NoPartition(_) => SgfStatus::NoPartition,
            Error::ZeroSignal => SgfStatus::ZeroSignal,
            Error::Io(_) => SgfStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T = ()> = std::result::Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(SgfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> FfiResult) -> SgfStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(Failure(SgfStatus::Panic, msg))
    });
    match outcome {
        Ok(()) => {
            set_error("");
            SgfStatus::Ok
        }
        Err(Failure(status, msg)) => {
            set_error(&msg);
            status
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SgfStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

fn check_len(expected: usize, got: usize) -> FfiResult {
    if expected == got {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, got }.into())
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next `sgf_` call on the same thread.
#[no_mangle]
pub extern "C" fn sgf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sgf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` vertices from `m` undirected edges, each listed once.
/// `weight` may be null for unit weights.
///
/// # Safety
/// `src`, `dst` and (if non-null) `weight` must point to `m` readable
/// elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgf_graph_from_edges(
    n: usize,
    src: *const u32,
    dst: *const u32,
    weight: *const f64,
    m: usize,
    out: *mut *mut SgfGraph,
) -> SgfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let src = slice(src, m, "src")?;
        let dst = slice(dst, m, "dst")?;
        let w = if weight.is_null() { None } else { Some(slice(weight, m, "weight")?) };
        let edges = (0..m).map(|k| (src[k] as usize, dst[k] as usize, w.map_or(1.0, |w| w[k])));
        let graph = SparseGraph::from_edges(n, edges)?;
        *out = Box::into_raw(Box::new(SgfGraph { graph }));
        Ok(())
    })
}

/// Reads a Matrix Market (`.mtx`, `.mm`) or edge-list CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgf_graph_read(path: *const c_char, out: *mut *mut SgfGraph) -> SgfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let graph = io::read_graph(Path::new(path), None)?;
        *out = Box::into_raw(Box::new(SgfGraph { graph }));
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle or null.
#[no_mangle]
pub unsafe extern "C" fn sgf_graph_num_vertices(g: *const SgfGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.n_vertices())
}

/// # Safety
/// `g` must be a live graph handle or null.
#[no_mangle]
pub unsafe extern "C" fn sgf_graph_num_edges(g: *const SgfGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.n_edges())
}

/// # Safety
/// `g` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sgf_graph_free(g: *mut SgfGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Designs a filter bank on `g` and builds the dictionary with every vertex
/// as a center. `bank_toml` holds bank settings in the CLI's `--bank` format;
/// null selects the defaults. `lanczos_steps` of 0 keeps the degree bound on
/// the spectrum. The graph is copied; `g` may be freed afterwards.
///
/// # Safety
/// `g` must be a live graph handle, `bank_toml` null or NUL-terminated and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgf_dictionary_new(
    g: *const SgfGraph,
    bank_toml: *const c_char,
    laplacian: SgfLaplacian,
    lanczos_steps: usize,
    seed: u64,
    out: *mut *mut SgfDictionary,
) -> SgfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let g = handle(g, "graph")?;
        let spec = if bank_toml.is_null() {
            BankSpec::default()
        } else {
            BankSpec::from_toml(str_arg(bank_toml, "bank_toml")?)?
        };
        let laplacian = match laplacian {
            SgfLaplacian::Combinatorial => LaplacianKind::Combinatorial,
            SgfLaplacian::Normalized => LaplacianKind::Normalized,
        };
        let cfg = GraphConfig { path: None, format: None, generate: None, laplacian, lanczos_steps };
        let mut ctx = Context::new(g.graph.clone(), &cfg, SpectrumConfig::default(), seed)?;
        let bank = pipeline::design_bank(&mut ctx, &spec, None)?;
        let dict = pipeline::build_dictionary(&mut ctx, bank, &spec, None)?;
        *out = Box::into_raw(Box::new(SgfDictionary { ctx, dict, seed }));
        Ok(())
    })
}

/// # Safety
/// `d` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sgf_dictionary_free(d: *mut SgfDictionary) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live dictionary handle or null.
#[no_mangle]
pub unsafe extern "C" fn sgf_dictionary_num_vertices(d: *const SgfDictionary) -> usize {
    d.as_ref().map_or(0, |d| d.dict.n())
}

/// # Safety
/// `d` must be a live dictionary handle or null.
#[no_mangle]
pub unsafe extern "C" fn sgf_dictionary_num_bands(d: *const SgfDictionary) -> usize {
    d.as_ref().map_or(0, |d| d.dict.n_bands())
}

/// Length of a coefficient buffer.
///
/// # Safety
/// `d` must be a live dictionary handle or null.
#[no_mangle]
pub unsafe extern "C" fn sgf_dictionary_num_atoms(d: *const SgfDictionary) -> usize {
    d.as_ref().map_or(0, |d| d.dict.n_atoms())
}

/// Upper bound on the Laplacian spectrum used by the design.
///
/// # Safety
/// `d` must be a live dictionary handle or null.
#[no_mangle]
pub unsafe extern "C" fn sgf_dictionary_lambda_bar(d: *const SgfDictionary) -> f64 {
    d.as_ref().map_or(f64::NAN, |d| d.ctx.lambda_bar())
}

/// Frame bounds `A <= B`.
///
/// # Safety
/// `d` must be a live dictionary handle; `a` and `b` writable.
#[no_mangle]
pub unsafe extern "C" fn sgf_dictionary_frame_bounds(d: *mut SgfDictionary, a: *mut f64, b: *mut f64) -> SgfStatus {
    guard(|| {
        let d = d.as_mut().ok_or_else(|| null("dictionary"))?;
        if a.is_null() || b.is_null() {
            return Err(null("a/b"));
        }
        let fb = pipeline::bounds(&mut d.ctx, &d.dict)?;
        *a = fb.a;
        *b = fb.b;
        Ok(())
    })
}

fn template(d: &Dictionary) -> Coefficients {
    Coefficients {
        bands: d.centers().iter().map(|s| vec![0.0; s.len()]).collect(),
        centers: d.centers().to_vec(),
        provenance: Some(d.id()),
    }
}

/// Analysis: `coeffs[k] = <f, phi_k>` for all atoms.
///
/// # Safety
/// `f` must hold `n` values and `coeffs` room for `n_coeffs`.
#[no_mangle]
pub unsafe extern "C" fn sgf_analysis(
    d: *const SgfDictionary,
    f: *const f64,
    n: usize,
    coeffs: *mut f64,
    n_coeffs: usize,
) -> SgfStatus {
    guard(|| {
        let d = handle(d, "dictionary")?;
        check_len(d.dict.n(), n)?;
        check_len(d.dict.n_atoms(), n_coeffs)?;
        let f = slice(f, n, "f")?;
        let out = slice_mut(coeffs, n_coeffs, "coeffs")?;
        out.copy_from_slice(&d.dict.analysis(f)?.flatten());
        Ok(())
    })
}

/// Synthesis: `f = sum_k coeffs[k] phi_k`.
///
/// # Safety
/// `coeffs` must hold `n_coeffs` values and `f` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn sgf_synthesis(
    d: *const SgfDictionary,
    coeffs: *const f64,
    n_coeffs: usize,
    f: *mut f64,
    n: usize,
) -> SgfStatus {
    guard(|| {
        let d = handle(d, "dictionary")?;
        check_len(d.dict.n_atoms(), n_coeffs)?;
        check_len(d.dict.n(), n)?;
        let c = template(&d.dict).with_flat(slice(coeffs, n_coeffs, "coeffs")?)?;
        slice_mut(f, n, "f")?.copy_from_slice(&d.dict.synthesis(&c)?);
        Ok(())
    })
}

/// Least-squares inverse of the analysis by conjugate gradient.
///
/// # Safety
/// `coeffs` must hold `n_coeffs` values and `f` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn sgf_inverse_cg(
    d: *const SgfDictionary,
    coeffs: *const f64,
    n_coeffs: usize,
    tol: f64,
    max_iter: usize,
    f: *mut f64,
    n: usize,
) -> SgfStatus {
    guard(|| {
        let d = handle(d, "dictionary")?;
        check_len(d.dict.n_atoms(), n_coeffs)?;
        check_len(d.dict.n(), n)?;
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidArgument("tol must be positive and max_iter nonzero".into()).into());
        }
        let c = template(&d.dict).with_flat(slice(coeffs, n_coeffs, "coeffs")?)?;
        let rec = sgframe::frame::reconstruct(&d.dict, &c, &sgframe::Inverse::Cg { tol, max_iter })?;
        slice_mut(f, n, "f")?.copy_from_slice(&rec);
        Ok(())
    })
}

/// SURE soft-threshold denoising of `y` with known noise level `sigma`,
/// resynthesized by conjugate gradient.
///
/// # Safety
/// `y` must hold `n` values and `out` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn sgf_denoise(
    d: *mut SgfDictionary,
    y: *const f64,
    sigma: f64,
    out: *mut f64,
    n: usize,
) -> SgfStatus {
    guard(|| {
        let d = d.as_mut().ok_or_else(|| null("dictionary"))?;
        check_len(d.dict.n(), n)?;
        let y = slice(y, n, "y")?;
        let cfg = DenoiseConfig {
            sigma,
            thresholds: None,
            norm_probes: 100,
            seed: pipeline::stage_seed(d.seed, pipeline::STAGE_PROBES),
        };
        let inverse = pipeline::resolve_inverse(&mut d.ctx, &d.dict, InverseSpec::default())?;
        let res = tasks::denoise(&d.dict, y, &cfg, &inverse)?;
        slice_mut(out, n, "out")?.copy_from_slice(&res.signal);
        Ok(())
    })
}

/// `t0`-sparse approximation of `f` by orthogonal matching pursuit. Writes the
/// sparse coefficients (nullable) and the approximation.
///
/// # Safety
/// `f` must hold `n` values, `approx` room for `n` and `coeffs`, if non-null,
/// room for `n_coeffs`.
#[no_mangle]
pub unsafe extern "C" fn sgf_compress_omp(
    d: *const SgfDictionary,
    f: *const f64,
    n: usize,
    t0: usize,
    coeffs: *mut f64,
    n_coeffs: usize,
    approx: *mut f64,
) -> SgfStatus {
    guard(|| {
        let d = handle(d, "dictionary")?;
        check_len(d.dict.n(), n)?;
        if !coeffs.is_null() {
            check_len(d.dict.n_atoms(), n_coeffs)?;
        }
        let f = slice(f, n, "f")?;
        let approx = slice_mut(approx, n, "approx")?;
        let (c, rec, _) = tasks::compress_omp(&d.dict, f, t0)?;
        approx.copy_from_slice(&rec);
        if !coeffs.is_null() {
            slice_mut(coeffs, n_coeffs, "coeffs")?.copy_from_slice(&c.flatten());
        }
        Ok(())
    })
}
