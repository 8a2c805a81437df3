//! C API for qwalk.
//!
//! Graphs and matrix sequences are opaque handles created by `qw_*_new`-style
//! calls and released with the matching `*_free`. Every fallible call returns
//! a [`QwStatus`]; on failure `qw_last_error_message` describes the error for
//! the calling thread. Outputs are written through caller-owned pointers.

use std::cell::RefCell;
use std::ffi::CString;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use libc::{c_char, size_t};
use qwalk::equivalence::{build_sequence, verify_theorem_properties, BuildOptions, TransitionMatrixSeq};
use qwalk::graph::{Ordering, PortGraph};
use qwalk::qw::{Coin, CoinKind, Shift, ShiftKind, Walk, WaveFunction};
use qwalk::trajectory::{sample_ensemble_with, SamplerKind};
use qwalk::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    NonUnitary = 4,
    Numerical = 5,
    NotApplicable = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwCoin {
    Hadamard = 0,
    Grover = 1,
    Identity = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwShift {
    Moving = 0,
    Arc = 1,
    Identity = 2,
}

/// Opaque graph handle.
pub struct QwGraph {
    inner: Arc<PortGraph>,
}

/// Opaque handle to `P(0..T)` and `ρ(0..=T)`.
pub struct QwSequence {
    inner: TransitionMatrixSeq,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QwStatus {
    match e {
        Error::IsolatedVertex(_) | Error::InvalidGraph(_) | Error::NotAdjacent(..) => QwStatus::InvalidGraph,
        Error::NonUnitaryCoin { .. } | Error::NonUnitaryInteraction { .. } => QwStatus::NonUnitary,
        Error::ColumnSum { .. } | Error::ColumnNotMaterialized { .. } | Error::NotNormalized(_) => {
            QwStatus::Numerical
        }
        Error::NotApplicable(_) | Error::InvalidShift(_) => QwStatus::NotApplicable,
        _ => QwStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics in the thread's last-error slot.
fn guard(f: impl FnOnce() -> Result<(), (QwStatus, String)>) -> QwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QwStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QwStatus::Panic
        }
    }
}

fn lift<T>(r: qwalk::Result<T>) -> Result<T, (QwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (QwStatus, String) {
    (QwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: size_t, what: &str) -> Result<&'a [T], (QwStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next qwalk call on the same thread.
#[no_mangle]
pub extern "C" fn qw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// NUL-terminated library version.
#[no_mangle]
pub extern "C" fn qw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn put_graph(out: *mut *mut QwGraph, g: qwalk::Result<PortGraph>) -> Result<(), (QwStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let g = lift(g)?;
    unsafe { *out = Box::into_raw(Box::new(QwGraph { inner: Arc::new(g) })) };
    Ok(())
}

/// Cycle on `n >= 3` vertices; port 0 steps `+1`, port 1 steps `-1`.
#[no_mangle]
pub extern "C" fn qw_graph_cycle(n: size_t, out: *mut *mut QwGraph) -> QwStatus {
    guard(|| put_graph(out, PortGraph::cycle(n)))
}

/// Periodic lattice with `ndims` side lengths, each at least 3.
///
/// # Safety
/// `dims` must point to `ndims` readable values.
#[no_mangle]
pub unsafe extern "C" fn qw_graph_torus(dims: *const size_t, ndims: size_t, out: *mut *mut QwGraph) -> QwStatus {
    guard(|| {
        let dims = slice(dims, ndims, "dims")?;
        put_graph(out, PortGraph::torus(dims))
    })
}

/// Undirected graph from `nedges` pairs stored flat in `edges`, ports in increasing neighbor order.
///
/// # Safety
/// `edges` must point to `2 * nedges` readable values.
#[no_mangle]
pub unsafe extern "C" fn qw_graph_from_edges(
    n: size_t,
    edges: *const size_t,
    nedges: size_t,
    out: *mut *mut QwGraph,
) -> QwStatus {
    guard(|| {
        let flat = slice(edges, 2 * nedges, "edges")?;
        let pairs: Vec<[usize; 2]> = flat.chunks(2).map(|p| [p[0], p[1]]).collect();
        put_graph(out, PortGraph::from_edges(n, &pairs, &Ordering::sorted()))
    })
}

/// # Safety
/// `graph` must be null or a handle from a `qw_graph_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn qw_graph_free(graph: *mut QwGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_graph_num_vertices(graph: *const QwGraph) -> size_t {
    graph.as_ref().map_or(0, |g| g.inner.num_vertices())
}

/// Evolves a single walker from `|start_vertex, start_port⟩` for `horizon`
/// steps and builds the equivalent random-walk matrices.
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_sequence_build(
    graph: *const QwGraph,
    coin: QwCoin,
    shift: QwShift,
    start_vertex: size_t,
    start_port: size_t,
    horizon: size_t,
    out: *mut *mut QwSequence,
) -> QwStatus {
    guard(|| {
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let g = &g.inner;
        let kind = match coin {
            QwCoin::Hadamard => CoinKind::Hadamard,
            QwCoin::Grover => CoinKind::Grover,
            QwCoin::Identity => CoinKind::Identity,
        };
        let shift_kind = match shift {
            QwShift::Moving => ShiftKind::Moving,
            QwShift::Arc => ShiftKind::Arc,
            QwShift::Identity => ShiftKind::Identity,
        };
        let walk = lift(Walk::single(
            g.clone(),
            lift(Coin::build(g, kind))?,
            lift(Shift::build(g, shift_kind))?,
        ))?;
        let psi0 = lift(WaveFunction::localized(g, start_vertex, start_port))?;
        let seq = lift(build_sequence(&walk, &psi0, horizon, &BuildOptions::default()))?;
        *out = Box::into_raw(Box::new(QwSequence { inner: seq }));
        Ok(())
    })
}

/// # Safety
/// `seq` must be null or a handle from `qw_sequence_build`, freed once.
#[no_mangle]
pub unsafe extern "C" fn qw_sequence_free(seq: *mut QwSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Number of matrices `T`, or 0 for a null handle.
///
/// # Safety
/// `seq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_sequence_horizon(seq: *const QwSequence) -> size_t {
    seq.as_ref().map_or(0, |s| s.inner.horizon())
}

/// Number of random-walk states.
///
/// # Safety
/// `seq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_sequence_num_states(seq: *const QwSequence) -> size_t {
    seq.as_ref().map_or(0, |s| s.inner.space.len())
}

/// Copies `ρ(t)` into `buf`, which must hold `qw_sequence_num_states` values.
///
/// # Safety
/// `seq` must be a live handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn qw_sequence_rho(seq: *const QwSequence, t: size_t, buf: *mut f64, len: size_t) -> QwStatus {
    guard(|| {
        let s = &seq.as_ref().ok_or_else(|| null("seq"))?.inner;
        let rho = s.rho.get(t).ok_or_else(|| {
            (QwStatus::InvalidArgument, format!("t={t} beyond horizon {}", s.horizon()))
        })?;
        if len < rho.len() {
            return Err((QwStatus::BufferTooSmall, format!("need {} values", rho.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(rho.as_ptr(), buf, rho.len());
        Ok(())
    })
}

/// Entry `p_{target, source}` of `P(t)`.
///
/// # Safety
/// `seq` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_sequence_entry(
    seq: *const QwSequence,
    t: size_t,
    target: size_t,
    source: size_t,
    out: *mut f64,
) -> QwStatus {
    guard(|| {
        let s = &seq.as_ref().ok_or_else(|| null("seq"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = s.matrices.get(t).ok_or_else(|| {
            (QwStatus::InvalidArgument, format!("t={t} beyond horizon {}", s.horizon()))
        })?;
        if target >= m.size() || source >= m.size() {
            return Err((QwStatus::InvalidArgument, "state out of range".into()));
        }
        *out = m.get(target, source);
        Ok(())
    })
}

/// Largest residual of the three matrix properties (entries in `[0, 1]`,
/// unit column sums, `P(t) ρ(t) = ρ(t+1)`).
///
/// # Safety
/// `seq` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_sequence_verify(seq: *const QwSequence, out: *mut f64) -> QwStatus {
    guard(|| {
        let s = &seq.as_ref().ok_or_else(|| null("seq"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = verify_theorem_properties(s);
        *out = r
            .max_entry_violation
            .max(r.max_column_sum_deviation)
            .max(r.max_propagation_residual);
        Ok(())
    })
}

/// Samples `m` trajectories of `steps` transitions into `states`, row-major
/// with `steps + 1` entries per trajectory.
///
/// # Safety
/// `seq` must be a live handle and `states` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn qw_sequence_sample(
    seq: *const QwSequence,
    m: size_t,
    steps: size_t,
    seed: u64,
    states: *mut size_t,
    len: size_t,
) -> QwStatus {
    guard(|| {
        let s = &seq.as_ref().ok_or_else(|| null("seq"))?.inner;
        let need = m
            .checked_mul(steps + 1)
            .ok_or((QwStatus::InvalidArgument, "size overflow".into()))?;
        if len < need {
            return Err((QwStatus::BufferTooSmall, format!("need {need} values")));
        }
        if states.is_null() {
            return Err(null("states"));
        }
        let ens = lift(sample_ensemble_with(s, m, seed, steps, SamplerKind::LinearScan))?;
        let out = std::slice::from_raw_parts_mut(states, need);
        for (row, traj) in out.chunks_mut(steps + 1).zip(&ens.trajectories) {
            row.copy_from_slice(&traj.states);
        }
        Ok(())
    })
}
