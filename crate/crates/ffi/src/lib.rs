//! C ABI over a loaded knowledge-graph snapshot.
//!
//! Every function returns an [`MsStatus`]. On failure the message is kept in
//! a thread-local buffer readable with [`ms_last_error`]. Strings handed out
//! through `out` parameters are owned by the caller and released with
//! [`ms_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use modelselect::api::{canonical_json, recommend_response, RecommendRequest};
use modelselect::config::Resources;
use modelselect::eval::corpus_stats;
use modelselect::graph::snapshot::{self, SnapshotError};
use modelselect::graph::EntityId;
use modelselect::inference::RankingContext;
use modelselect::{Error, KnowledgeGraph};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    NotFound = 4,
    Snapshot = 5,
    Internal = 6,
}

/// An opened snapshot. Opaque to C.
pub struct MsGraph {
    graph: KnowledgeGraph,
    ctx: RankingContext,
    version: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(MsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotFound(_) => MsStatus::NotFound,
            Error::InvalidArgument(_) => MsStatus::InvalidArgument,
            Error::Snapshot(_) => MsStatus::Snapshot,
            _ => MsStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

impl From<SnapshotError> for Failure {
    fn from(e: SnapshotError) -> Self {
        Failure(MsStatus::Snapshot, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MsStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(MsStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MsStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn graph_arg<'a>(g: *const MsGraph) -> Result<&'a MsGraph, Failure> {
    g.as_ref().ok_or_else(|| Failure(MsStatus::NullArgument, "graph is null".into()))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(MsStatus::NullArgument, "out is null".into()));
    }
    let c = CString::new(s).map_err(|_| Failure(MsStatus::Internal, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Opens the snapshot directory `dir`. On success `*out` holds a handle to
/// release with `ms_graph_free`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_graph_open(dir: *const c_char, out: *mut *mut MsGraph) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(MsStatus::NullArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let dir = str_arg(dir, "dir")?;
        let graph = snapshot::read(Path::new(dir))?;
        let version = snapshot::version_of(&graph);
        let ctx = RankingContext::from_resources(&Resources::bundled());
        *out = Box::into_raw(Box::new(MsGraph { graph, ctx, version }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `g` must come from `ms_graph_open` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ms_graph_free(g: *mut MsGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Runs a recommendation. `request` is the JSON body accepted by
/// `POST /api/recommend`; `*out` receives the canonical JSON response.
///
/// # Safety
/// Pointers must be valid; `request` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ms_recommend_json(g: *const MsGraph, request: *const c_char, out: *mut *mut c_char) -> MsStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let req: RecommendRequest = serde_json::from_str(str_arg(request, "request")?)
            .map_err(|e| Failure(MsStatus::InvalidArgument, format!("invalid request: {e}")))?;
        let resp = recommend_response(&g.graph, &req.to_query(g.ctx.ranking.default_k), &g.ctx)?;
        put_string(out, canonical_json(&resp))
    })
}

/// Entities and edges within `depth` hops of `id`, as JSON.
///
/// # Safety
/// Pointers must be valid; `id` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ms_subgraph_json(g: *const MsGraph, id: *const c_char, depth: u32, out: *mut *mut c_char) -> MsStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let id = EntityId::from(str_arg(id, "id")?);
        let sub = g.graph.get_subgraph(&id, depth as usize)?;
        put_string(out, canonical_json(&sub))
    })
}

/// Corpus statistics as JSON.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ms_stats_json(g: *const MsGraph, out: *mut *mut c_char) -> MsStatus {
    guard(|| {
        let g = graph_arg(g)?;
        put_string(out, canonical_json(&corpus_stats(&g.graph)))
    })
}

/// Number of integrity violations in the snapshot; 0 for a sound graph.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ms_validate(g: *const MsGraph, violations: *mut usize) -> MsStatus {
    guard(|| {
        let g = graph_arg(g)?;
        if violations.is_null() {
            return Err(Failure(MsStatus::NullArgument, "violations is null".into()));
        }
        *violations = g.graph.validate().len();
        Ok(())
    })
}

/// The snapshot version string.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ms_snapshot_version(g: *const MsGraph, out: *mut *mut c_char) -> MsStatus {
    guard(|| {
        let g = graph_arg(g)?;
        put_string(out, g.version.clone())
    })
}

/// Releases a string returned through an `out` parameter. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn ms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
