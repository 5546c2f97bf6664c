//! Interaction-file loaders and the per-user holdout split.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{build_graph, Edge, IdMap, InteractionGraph};
use crate::numerics::Rng;

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// MovieLens `u.data`: tab-separated `user item rating timestamp`. Every rated
/// pair is an interaction; repeated pairs collapse.
pub fn load_movielens(path: &Path) -> Result<(InteractionGraph, IdMap)> {
    let reader = BufReader::new(File::open(path)?);
    let mut raw = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(parse_error(path, n + 1, format!("expected 4 tab-separated fields, got {}", fields.len())));
        }
        for (name, f) in [("user", fields[0]), ("item", fields[1])] {
            if f.trim().parse::<u64>().is_err() {
                return Err(parse_error(path, n + 1, format!("{name} id {f:?} is not an integer")));
            }
        }
        if fields[2].trim().parse::<f64>().is_err() {
            return Err(parse_error(path, n + 1, format!("rating {:?} is not a number", fields[2])));
        }
        raw.push((fields[0].trim().to_string(), fields[1].trim().to_string()));
    }
    build_graph(&raw, true)
}

/// Whitespace-separated `user item` pairs; `#` starts a comment. IDs may be
/// integers or arbitrary tokens, but one side may not mix the two.
pub fn load_edge_list(path: &Path) -> Result<(InteractionGraph, IdMap)> {
    let reader = BufReader::new(File::open(path)?);
    parse_edge_list(reader, path)
}

pub fn parse_edge_list<R: BufRead>(reader: R, path: &Path) -> Result<(InteractionGraph, IdMap)> {
    let mut raw = Vec::new();
    let mut numeric: [Option<bool>; 2] = [None, None];
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(user) = tokens.next() else { continue };
        let item = tokens
            .next()
            .ok_or_else(|| parse_error(path, n + 1, "expected `user item`"))?;
        for (side, tok) in [user, item].iter().enumerate() {
            let is_num = tok.parse::<u64>().is_ok();
            match numeric[side] {
                None => numeric[side] = Some(is_num),
                Some(prev) if prev != is_num => {
                    let name = if side == 0 { "user" } else { "item" };
                    return Err(parse_error(path, n + 1, format!("{name} id {tok:?} mixes numeric and textual ids")));
                }
                _ => {}
            }
        }
        raw.push((user.to_string(), item.to_string()));
    }
    if raw.is_empty() {
        return Ok((InteractionGraph::empty(0, 0), IdMap::default()));
    }
    build_graph(&raw, true)
}

/// One user per line followed by its items (`user item item ...`), the
/// layout Gowalla and Yelp2018 are usually distributed in. Lines with a user
/// but no items add nothing.
pub fn load_adjacency_list(path: &Path) -> Result<(InteractionGraph, IdMap)> {
    let reader = BufReader::new(File::open(path)?);
    parse_adjacency_list(reader, path)
}

pub fn parse_adjacency_list<R: BufRead>(reader: R, path: &Path) -> Result<(InteractionGraph, IdMap)> {
    let mut raw = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(user) = tokens.next() else { continue };
        for item in tokens {
            if item.parse::<u64>().is_err() {
                return Err(parse_error(path, n + 1, format!("item id {item:?} is not an integer")));
            }
            raw.push((user.to_string(), item.to_string()));
        }
    }
    if raw.is_empty() {
        return Ok((InteractionGraph::empty(0, 0), IdMap::default()));
    }
    build_graph(&raw, true)
}

/// Per-user disjoint train / validation / test edges.
#[derive(Clone, Debug)]
pub struct Holdout {
    pub train: InteractionGraph,
    pub valid: Vec<Edge>,
    pub test: Vec<Edge>,
}

impl Holdout {
    /// Train plus validation edges, the items excluded when ranking for test.
    pub fn known(&self) -> InteractionGraph {
        let mut edges = self.train.edges().to_vec();
        edges.extend_from_slice(&self.valid);
        InteractionGraph::new(self.train.num_users(), self.train.num_items(), edges)
            .expect("holdout parts are disjoint")
    }
}

/// Shuffles each user's edges and cuts them by the fractions. Users with at
/// least three edges get at least one validation and one test edge and keep
/// at least one for training; users with fewer keep everything in train.
pub fn split_holdout(
    graph: &InteractionGraph,
    train_frac: f64,
    valid_frac: f64,
    test_frac: f64,
    rng: &mut Rng,
) -> Result<Holdout> {
    let fracs = [train_frac, valid_frac, test_frac];
    if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split fractions {train_frac}/{valid_frac}/{test_frac} must lie in [0, 1] and sum to 1"
        )));
    }
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for u in 0..graph.num_users() {
        let mut edges = graph.user_edges(u).to_vec();
        let n = edges.len();
        if n < 3 {
            train.extend(edges);
            continue;
        }
        rng.shuffle(&mut edges);
        let mut nv = ((valid_frac * n as f64).round() as usize).max(usize::from(valid_frac > 0.0));
        let mut nt = ((test_frac * n as f64).round() as usize).max(usize::from(test_frac > 0.0));
        while nv + nt > n - 1 {
            if nv >= nt && nv > 0 {
                nv -= 1;
            } else {
                nt -= 1;
            }
        }
        let nr = n - nv - nt;
        train.extend_from_slice(&edges[..nr]);
        valid.extend_from_slice(&edges[nr..nr + nv]);
        test.extend_from_slice(&edges[nr + nv..]);
    }
    valid.sort_unstable();
    test.sort_unstable();
    Ok(Holdout {
        train: InteractionGraph::new(graph.num_users(), graph.num_items(), train)?,
        valid,
        test,
    })
}
