//! C ABI over graphs, ranking metrics, aggregation, partition scoring and
//! configured experiment runs.
//!
//! Every fallible call returns an [`FgStatus`]. On failure the message is
//! kept per thread and read back with [`fg_last_error_message`]. Handles are
//! opaque and released with their `_free` function; passing null to a
//! `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fedgdve::experiment::{load_adjacency_list, load_edge_list, load_movielens, run_experiment, ExperimentConfig};
use fedgdve::federation::{aggregate, SharedParams};
use fedgdve::graph::{Edge, InteractionGraph};
use fedgdve::numerics::DenseMatrix;
use fedgdve::partition::adjusted_mutual_info;
use fedgdve::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    OutOfRange = 4,
    Parse = 5,
    Config = 6,
    Io = 7,
    NonFinite = 8,
    Internal = 9,
}

/// Input file layouts.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FgFormat {
    /// Tab-separated `user item rating timestamp`.
    Movielens = 0,
    /// Whitespace-separated `user item`, `#` comments.
    EdgeList = 1,
    /// `user item item ...` per line.
    AdjacencyList = 2,
}

/// Mean ranking metrics over evaluated users.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FgMetrics {
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
    pub users: usize,
}

/// Final-round outcome of a configured run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FgRunSummary {
    pub rounds: usize,
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
    /// Mean fraction of global edges kept, or -1 for methods without selection.
    pub selected_ratio: f64,
}

/// Opaque bipartite interaction graph.
pub struct FgGraph(InteractionGraph);

/// Opaque experiment configuration.
pub struct FgConfig(ExperimentConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Shape { .. } => FgStatus::Shape,
            Error::IndexOutOfRange { .. } => FgStatus::OutOfRange,
            Error::Parse { .. } | Error::Json(_) | Error::Checkpoint(_) => FgStatus::Parse,
            Error::Config { .. } => FgStatus::Config,
            Error::Io(_) => FgStatus::Io,
            Error::NonFinite { .. } | Error::GradCheck { .. } => FgStatus::NonFinite,
            _ => FgStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(FgStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure(FgStatus::NullPointer, format!("{name} is null"))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            FgStatus::Internal
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bytes needed to hold the calling thread's last error message, NUL
/// included; 0 when the last call succeeded.
#[no_mangle]
pub extern "C" fn fg_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes_with_nul().len()))
}

/// Copies the last error message into `buf` (truncated, always
/// NUL-terminated when `len > 0`). Returns the bytes written without the NUL.
///
/// # Safety
/// `buf` must be valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn fg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        let n = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// Builds a graph from parallel `users`/`items` arrays of length `n`.
/// With `dedup` repeated pairs collapse; otherwise they are an error.
///
/// # Safety
/// `users` and `items` must be valid for `n` reads; `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_from_edges(
    num_users: usize,
    num_items: usize,
    users: *const u32,
    items: *const u32,
    n: usize,
    dedup: bool,
    out: *mut *mut FgGraph,
) -> FgStatus {
    guard(|| {
        let users = slice(users, n, "users")?;
        let items = slice(items, n, "items")?;
        let edges = users
            .iter()
            .zip(items)
            .map(|(&u, &i)| Edge::new(u as usize, i as usize))
            .collect();
        let g = if dedup {
            InteractionGraph::new_dedup(num_users, num_items, edges)?
        } else {
            InteractionGraph::new(num_users, num_items, edges)?
        };
        write_out(out, Box::into_raw(Box::new(FgGraph(g))), "out")
    })
}

/// Loads a dataset file; raw ids are densely re-indexed in first-seen order.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_load(path: *const c_char, format: FgFormat, out: *mut *mut FgGraph) -> FgStatus {
    guard(|| {
        let path = Path::new(text(path, "path")?);
        let (g, _) = match format {
            FgFormat::Movielens => load_movielens(path)?,
            FgFormat::EdgeList => load_edge_list(path)?,
            FgFormat::AdjacencyList => load_adjacency_list(path)?,
        };
        write_out(out, Box::into_raw(Box::new(FgGraph(g))), "out")
    })
}

/// # Safety
/// `graph` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_free(graph: *mut FgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn fg_graph_num_users(graph: *const FgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_users())
}

/// # Safety
/// `graph` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn fg_graph_num_items(graph: *const FgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_items())
}

/// # Safety
/// `graph` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn fg_graph_num_edges(graph: *const FgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Writes the degree of every user into `out` (length `num_users`).
///
/// # Safety
/// `graph` must be a live handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_user_degrees(graph: *const FgGraph, out: *mut usize, len: usize) -> FgStatus {
    guard(|| {
        let g = &graph.as_ref().ok_or_else(|| null("graph"))?.0;
        if len != g.num_users() {
            return Err(invalid(format!("buffer holds {len} degrees, graph has {} users", g.num_users())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let out = std::slice::from_raw_parts_mut(out, len);
        for (u, d) in out.iter_mut().enumerate() {
            *d = g.user_degree(u);
        }
        Ok(())
    })
}

/// Top-`k` precision, recall and NDCG of dot-product scores. Representations
/// are row-major (`num_users × dim`, `num_items × dim`); items in `known`
/// are excluded from each user's ranking; `test_users`/`test_items` hold
/// the held-out pairs.
///
/// # Safety
/// Every pointer must be valid for the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn fg_evaluate(
    user_repr: *const f64,
    num_users: usize,
    item_repr: *const f64,
    num_items: usize,
    dim: usize,
    known: *const FgGraph,
    test_users: *const u32,
    test_items: *const u32,
    n_test: usize,
    k: usize,
    out: *mut FgMetrics,
) -> FgStatus {
    guard(|| {
        let known = &known.as_ref().ok_or_else(|| null("known"))?.0;
        let u = DenseMatrix::from_vec(num_users, dim, slice(user_repr, num_users * dim, "user_repr")?.to_vec())?;
        let i = DenseMatrix::from_vec(num_items, dim, slice(item_repr, num_items * dim, "item_repr")?.to_vec())?;
        let test: Vec<Edge> = slice(test_users, n_test, "test_users")?
            .iter()
            .zip(slice(test_items, n_test, "test_items")?)
            .map(|(&u, &i)| Edge::new(u as usize, i as usize))
            .collect();
        let r = fedgdve::eval::evaluate(&u, &i, known, &test, k)?;
        write_out(
            out,
            FgMetrics {
                precision: r.precision,
                recall: r.recall,
                ndcg: r.ndcg,
                users: r.num_users(),
            },
            "out",
        )
    })
}

/// Weighted mean of `num_clients` parameter vectors of length `len`
/// (row-major in `values`), weights proportional to `weights`.
///
/// # Safety
/// `values` valid for `num_clients * len` reads, `weights` for
/// `num_clients`, `out` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fg_aggregate(
    values: *const f64,
    weights: *const f64,
    num_clients: usize,
    len: usize,
    out: *mut f64,
) -> FgStatus {
    guard(|| {
        let values = slice(values, num_clients * len, "values")?;
        let weights = slice(weights, num_clients, "weights")?;
        let updates = (0..num_clients)
            .map(|c| {
                let v = values[c * len..(c + 1) * len].to_vec();
                Ok((
                    SharedParams {
                        item_emb: DenseMatrix::from_vec(1, len, v)?,
                        layers: Vec::new(),
                    },
                    weights[c],
                ))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let mean = aggregate(&updates)?;
        if len > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            ptr::copy_nonoverlapping(mean.item_emb.as_slice().as_ptr(), out, len);
        }
        Ok(())
    })
}

/// Adjusted mutual information of two labelings of length `n`.
///
/// # Safety
/// `a` and `b` valid for `n` reads; `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn fg_adjusted_mutual_info(a: *const usize, b: *const usize, n: usize, out: *mut f64) -> FgStatus {
    guard(|| {
        let a = slice(a, n, "a")?;
        let b = slice(b, n, "b")?;
        write_out(out, adjusted_mutual_info(a, b), "out")
    })
}

/// Parses a flat TOML configuration; unknown keys and invalid values fail
/// with [`FgStatus::Config`].
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fg_config_from_toml(toml: *const c_char, out: *mut *mut FgConfig) -> FgStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_toml_str(text(toml, "toml")?, &[])?;
        write_out(out, Box::into_raw(Box::new(FgConfig(cfg))), "out")
    })
}

/// Overrides one key with a TOML value, e.g. `("clients", "20")`.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn fg_config_set(config: *mut FgConfig, key: *const c_char, value: *const c_char) -> FgStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        let assignment = format!("{}={}", text(key, "key")?, text(value, "value")?);
        let current = cfg.0.to_toml_string();
        cfg.0 = ExperimentConfig::from_toml_str(&current, &[assignment])?;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fg_config_free(config: *mut FgConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the configured experiment, writing its outputs under the
/// configured output directory, and reports the last round.
///
/// # Safety
/// `config` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fg_run_experiment(config: *const FgConfig, out: *mut FgRunSummary) -> FgStatus {
    guard(|| {
        let cfg = &config.as_ref().ok_or_else(|| null("config"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let outcome = run_experiment(cfg)?;
        let last = outcome
            .final_report()
            .ok_or_else(|| invalid("the run has no rounds"))?;
        write_out(
            out,
            FgRunSummary {
                rounds: outcome.reports.len(),
                precision: last.precision,
                recall: last.recall,
                ndcg: last.ndcg,
                selected_ratio: last.selected_ratio.unwrap_or(-1.0),
            },
            "out",
        )
    })
}
