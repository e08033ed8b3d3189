//! C ABI over `loopsoup`.
//!
//! Handles are opaque and owned by the caller once returned; free each with
//! its `_free` function. Every fallible call returns an `LsStatus`; on failure
//! `ls_last_error_message` gives the text for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use loopsoup::sampler::{sample_soup, LoopSoup, SamplerPlan};
use loopsoup::{Error, Partition, WeightedGraph};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidGraph = 4,
    Numerical = 5,
    TooLarge = 6,
    BufferTooSmall = 7,
    Io = 8,
    Panic = 9,
}

/// Weighted graph with killing.
pub struct LsGraph {
    inner: WeightedGraph,
}

/// Precomputed loop-length law for one graph.
pub struct LsPlan {
    inner: SamplerPlan,
}

/// One sampled soup.
pub struct LsSoup {
    inner: LoopSoup,
    labels: Vec<u32>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> LsStatus {
    match e {
        Error::DisconnectedGraph
        | Error::NonPositiveConductance(..)
        | Error::NegativeKilling(_)
        | Error::AllKillingZeroWithoutOverride
        | Error::NotSubstochastic(_)
        | Error::BadEdge(..)
        | Error::NoKilling
        | Error::Json(_) => LsStatus::InvalidGraph,
        Error::SingularSystem
        | Error::UnstableSum(_)
        | Error::NegativeMass(..)
        | Error::QuadratureFailure(_)
        | Error::Inconsistent { .. } => LsStatus::Numerical,
        Error::TooLarge(_) | Error::TooLargeForExactSum(_) | Error::BudgetExceeded(_) => LsStatus::TooLarge,
        Error::Io(_) | Error::Csv(_) => LsStatus::Io,
        _ => LsStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (LsStatus, String)>>(f: F) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LsStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            LsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (LsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (LsStatus, String) {
    (LsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (LsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), (LsStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to fit). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ls_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a graph from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_from_json(json: *const c_char, out: *mut *mut LsGraph) -> LsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let s = CStr::from_ptr(json).to_str().map_err(|e| (LsStatus::InvalidUtf8, e.to_string()))?;
        let g = WeightedGraph::from_json(s).map_err(lib)?;
        put(out, Box::into_raw(Box::new(LsGraph { inner: g })), "out")
    })
}

/// Complete graph on `n` vertices, unit conductances, uniform killing `kappa`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_complete(n: usize, kappa: f64, out: *mut *mut LsGraph) -> LsStatus {
    guard(|| {
        let g = WeightedGraph::complete(n, kappa).map_err(lib)?;
        put(out, Box::into_raw(Box::new(LsGraph { inner: g })), "out")
    })
}

/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_free(g: *mut LsGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_graph_vertex_count(g: *const LsGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.n())
}

/// Total loop mass of the graph.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_total_mass(g: *const LsGraph, out: *mut f64) -> LsStatus {
    guard(|| {
        let g = deref(g, "graph")?;
        let all: Vec<usize> = (0..g.inner.n()).collect();
        let m = loopsoup::loops::total_mass(&g.inner, &all).map_err(lib)?;
        put(out, m, "out")
    })
}

/// Probability that the soup clusters at intensity `alpha` refine the
/// partition given by `labels` (one block label per vertex, `n` entries).
///
/// # Safety
/// `g` must be a live handle, `labels` must point to `n` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_prob_finer(
    g: *const LsGraph,
    labels: *const u32,
    n: usize,
    alpha: f64,
    out: *mut f64,
) -> LsStatus {
    guard(|| {
        let g = deref(g, "graph")?;
        if labels.is_null() {
            return Err(null("labels"));
        }
        if n != g.inner.n() {
            return Err((LsStatus::InvalidArgument, format!("{n} labels for {} vertices", g.inner.n())));
        }
        let pi = Partition::from_labels(std::slice::from_raw_parts(labels, n));
        let p = loopsoup::analytics::prob_finer(&g.inner, &pi, alpha, None).map_err(lib)?;
        put(out, p, "out")
    })
}

/// Builds a sampling plan whose length cutoff leaves tail mass below `eps_tail`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_plan_build(g: *const LsGraph, eps_tail: f64, out: *mut *mut LsPlan) -> LsStatus {
    guard(|| {
        let g = deref(g, "graph")?;
        let p = SamplerPlan::build(&g.inner, eps_tail).map_err(lib)?;
        put(out, Box::into_raw(Box::new(LsPlan { inner: p })), "out")
    })
}

/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn ls_plan_free(p: *mut LsPlan) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Longest loop length the plan samples, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn ls_plan_max_length(p: *const LsPlan) -> usize {
    p.as_ref().map_or(0, |p| p.inner.l_max())
}

/// Samples one soup. The same (seed, replica) always gives the same soup.
///
/// # Safety
/// `g` and `plan` must be live handles, `plan` built from `g`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_sample(
    g: *const LsGraph,
    plan: *const LsPlan,
    alpha: f64,
    seed: u64,
    replica: u64,
    out: *mut *mut LsSoup,
) -> LsStatus {
    guard(|| {
        let g = deref(g, "graph")?;
        let plan = deref(plan, "plan")?;
        let s = sample_soup(&g.inner, &plan.inner, alpha, seed, replica).map_err(lib)?;
        let labels = s.clusters().labels().to_vec();
        put(out, Box::into_raw(Box::new(LsSoup { inner: s, labels })), "out")
    })
}

/// # Safety
/// `s` must be null or a live soup handle.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_free(s: *mut LsSoup) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of loops in the soup, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live soup handle.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_loop_count(s: *const LsSoup) -> usize {
    s.as_ref().map_or(0, |s| s.inner.len())
}

/// Writes the cluster label of each vertex into `out` (`len` must be at least
/// the vertex count). Labels are numbered by first appearance.
///
/// # Safety
/// `s` must be a live soup handle; `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_cluster_labels(s: *const LsSoup, out: *mut u32, len: usize) -> LsStatus {
    guard(|| {
        let s = deref(s, "soup")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < s.labels.len() {
            return Err((LsStatus::BufferTooSmall, format!("need {} labels, got room for {len}", s.labels.len())));
        }
        ptr::copy_nonoverlapping(s.labels.as_ptr(), out, s.labels.len());
        Ok(())
    })
}
