//! Immutable bipartite user-item interaction graphs.
//!
//! Users and items live in separate dense index spaces. Every graph in a run
//! shares one item catalog; user index spaces are private to each holder
//! (the global dataset or a client).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub user: u32,
    pub item: u32,
}

impl Edge {
    pub fn new(user: usize, item: usize) -> Self {
        Edge {
            user: user as u32,
            item: item as u32,
        }
    }
}

/// Bipartite graph with sorted edges and neighbour lists in both directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    num_users: usize,
    num_items: usize,
    /// Sorted by `(user, item)`.
    edges: Vec<Edge>,
    user_offsets: Vec<usize>,
    user_items: Vec<u32>,
    item_offsets: Vec<usize>,
    item_users: Vec<u32>,
}

impl InteractionGraph {
    pub fn empty(num_users: usize, num_items: usize) -> Self {
        InteractionGraph {
            num_users,
            num_items,
            edges: Vec::new(),
            user_offsets: vec![0; num_users + 1],
            user_items: Vec::new(),
            item_offsets: vec![0; num_items + 1],
            item_users: Vec::new(),
        }
    }

    /// Builds a graph, rejecting out-of-range indices and duplicate edges.
    pub fn new(num_users: usize, num_items: usize, mut edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            check_range("user", e.user as usize, num_users)?;
            check_range("item", e.item as usize, num_items)?;
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge {
                user: w[0].user as usize,
                item: w[0].item as usize,
            });
        }
        Ok(Self::from_sorted_unique(num_users, num_items, edges))
    }

    /// Like [`InteractionGraph::new`] but collapses repeated edges.
    pub fn new_dedup(num_users: usize, num_items: usize, mut edges: Vec<Edge>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        Self::new(num_users, num_items, edges)
    }

    fn from_sorted_unique(num_users: usize, num_items: usize, edges: Vec<Edge>) -> Self {
        let mut user_offsets = vec![0usize; num_users + 1];
        let mut item_offsets = vec![0usize; num_items + 1];
        for e in &edges {
            user_offsets[e.user as usize + 1] += 1;
            item_offsets[e.item as usize + 1] += 1;
        }
        for u in 0..num_users {
            user_offsets[u + 1] += user_offsets[u];
        }
        for i in 0..num_items {
            item_offsets[i + 1] += item_offsets[i];
        }
        let user_items = edges.iter().map(|e| e.item).collect();
        // Edges are user-sorted, so each item's user list comes out sorted.
        let mut cursor = item_offsets.clone();
        let mut item_users = vec![0u32; edges.len()];
        for e in &edges {
            let slot = &mut cursor[e.item as usize];
            item_users[*slot] = e.user;
            *slot += 1;
        }
        InteractionGraph {
            num_users,
            num_items,
            edges,
            user_offsets,
            user_items,
            item_offsets,
            item_users,
        }
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// All edges, sorted by `(user, item)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn user_items(&self, user: usize) -> &[u32] {
        &self.user_items[self.user_offsets[user]..self.user_offsets[user + 1]]
    }

    #[inline]
    pub fn item_users(&self, item: usize) -> &[u32] {
        &self.item_users[self.item_offsets[item]..self.item_offsets[item + 1]]
    }

    /// Edges of `user`, a contiguous slice of [`InteractionGraph::edges`].
    pub fn user_edges(&self, user: usize) -> &[Edge] {
        &self.edges[self.user_offsets[user]..self.user_offsets[user + 1]]
    }

    #[inline]
    pub fn user_degree(&self, user: usize) -> usize {
        self.user_offsets[user + 1] - self.user_offsets[user]
    }

    #[inline]
    pub fn item_degree(&self, item: usize) -> usize {
        self.item_offsets[item + 1] - self.item_offsets[item]
    }

    pub fn user_degrees(&self) -> Vec<usize> {
        (0..self.num_users).map(|u| self.user_degree(u)).collect()
    }

    pub fn item_degrees(&self) -> Vec<usize> {
        (0..self.num_items).map(|i| self.item_degree(i)).collect()
    }

    pub fn has_edge(&self, user: usize, item: usize) -> bool {
        user < self.num_users && self.user_items(user).binary_search(&(item as u32)).is_ok()
    }

    /// Re-checks every structural invariant; used by tests.
    pub fn validate(&self) -> Result<()> {
        for e in &self.edges {
            check_range("user", e.user as usize, self.num_users)?;
            check_range("item", e.item as usize, self.num_items)?;
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("edges not strictly sorted"));
        }
        let du: usize = self.user_degrees().iter().sum();
        let di: usize = self.item_degrees().iter().sum();
        if du != self.edges.len() || di != self.edges.len() {
            return Err(Error::invalid("degree sums disagree with edge count"));
        }
        let mut reverse: Vec<Edge> = (0..self.num_items)
            .flat_map(|i| self.item_users(i).iter().map(move |&u| Edge::new(u as usize, i)))
            .collect();
        reverse.sort_unstable();
        if reverse != self.edges {
            return Err(Error::invalid("forward and reverse adjacency differ"));
        }
        Ok(())
    }
}

fn check_range(side: &'static str, index: usize, size: usize) -> Result<()> {
    if index >= size {
        return Err(Error::IndexOutOfRange { side, index, size });
    }
    Ok(())
}

/// Bijection between raw external IDs and dense indices, per side.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    users: Vec<String>,
    items: Vec<String>,
    user_lookup: HashMap<String, u32>,
    item_lookup: HashMap<String, u32>,
}

impl IdMap {
    /// Dense indices follow ascending raw-ID order (numeric when every ID
    /// on that side parses as an integer, lexicographic otherwise).
    pub fn from_raw<'a>(
        users: impl IntoIterator<Item = &'a str>,
        items: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let users = sorted_unique(users);
        let items = sorted_unique(items);
        let user_lookup = users
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        let item_lookup = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        IdMap {
            users,
            items,
            user_lookup,
            item_lookup,
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn user_index(&self, raw: &str) -> Option<usize> {
        self.user_lookup.get(raw).map(|&i| i as usize)
    }

    pub fn item_index(&self, raw: &str) -> Option<usize> {
        self.item_lookup.get(raw).map(|&i| i as usize)
    }

    pub fn user_raw(&self, index: usize) -> &str {
        &self.users[index]
    }

    pub fn item_raw(&self, index: usize) -> &str {
        &self.items[index]
    }
}

fn sorted_unique<'a>(ids: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<&str> = ids.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    let numeric: Option<Vec<i64>> = v.iter().map(|s| s.parse::<i64>().ok()).collect();
    if let Some(nums) = numeric {
        let mut pairs: Vec<(i64, &str)> = nums.into_iter().zip(v).collect();
        pairs.sort_unstable();
        pairs.into_iter().map(|(_, s)| s.to_owned()).collect()
    } else {
        v.into_iter().map(str::to_owned).collect()
    }
}

/// Builds a dense graph from raw `(user, item)` ID pairs.
///
/// With `dedup` unset, a repeated pair is an error.
pub fn build_graph<U, I>(raw_edges: &[(U, I)], dedup: bool) -> Result<(InteractionGraph, IdMap)>
where
    U: AsRef<str>,
    I: AsRef<str>,
{
    let ids = IdMap::from_raw(
        raw_edges.iter().map(|(u, _)| u.as_ref()),
        raw_edges.iter().map(|(_, i)| i.as_ref()),
    );
    let edges: Vec<Edge> = raw_edges
        .iter()
        .map(|(u, i)| {
            Edge::new(
                ids.user_index(u.as_ref()).expect("mapped above"),
                ids.item_index(i.as_ref()).expect("mapped above"),
            )
        })
        .collect();
    let graph = if dedup {
        InteractionGraph::new_dedup(ids.num_users(), ids.num_items(), edges)?
    } else {
        InteractionGraph::new(ids.num_users(), ids.num_items(), edges)?
    };
    Ok((graph, ids))
}

/// Symmetric normalised adjacency over the combined node space
/// (users `0..P`, items `P..P+Q`), weight `1/sqrt(deg(u)·deg(i))` per edge.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency {
    num_users: usize,
    num_items: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
}

pub fn normalize(graph: &InteractionGraph) -> NormalizedAdjacency {
    let p = graph.num_users();
    let q = graph.num_items();
    let n = p + q;
    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::with_capacity(2 * graph.num_edges());
    let mut weights = Vec::with_capacity(2 * graph.num_edges());
    offsets.push(0);
    for u in 0..p {
        let du = graph.user_degree(u) as f64;
        for &i in graph.user_items(u) {
            let di = graph.item_degree(i as usize) as f64;
            neighbors.push((p + i as usize) as u32);
            weights.push(1.0 / (du * di).sqrt());
        }
        offsets.push(neighbors.len());
    }
    for i in 0..q {
        let di = graph.item_degree(i) as f64;
        for &u in graph.item_users(i) {
            let du = graph.user_degree(u as usize) as f64;
            neighbors.push(u);
            weights.push(1.0 / (du * di).sqrt());
        }
        offsets.push(neighbors.len());
    }
    NormalizedAdjacency {
        num_users: p,
        num_items: q,
        offsets,
        neighbors,
        weights,
    }
}

impl NormalizedAdjacency {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    /// Number of stored (directed) entries, twice the edge count.
    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, user: usize, item: usize) -> Option<f64> {
        if user >= self.num_users || item >= self.num_items {
            return None;
        }
        let target = (self.num_users + item) as u32;
        let (nbrs, ws) = self.row(user);
        nbrs.binary_search(&target).ok().map(|k| ws[k])
    }

    /// Neighbours and weights of combined node `node`.
    #[inline]
    pub fn row(&self, node: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[node]..self.offsets[node + 1];
        (&self.neighbors[r.clone()], &self.weights[r])
    }

    /// `out = Â · x` for a node-stacked matrix `x`. `Â` is symmetric, so this
    /// also serves as its own adjoint in backpropagation.
    pub fn spmm(&self, x: &DenseMatrix, out: &mut DenseMatrix) -> Result<()> {
        let n = self.num_nodes();
        if x.rows() != n || out.shape() != x.shape() {
            return Err(Error::shape(
                "spmm",
                format!("{n} nodes, x {:?}, out {:?}", x.shape(), out.shape()),
            ));
        }
        let d = x.cols();
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for node in 0..n {
            let (nbrs, ws) = self.row(node);
            let dst = &mut os[node * d..(node + 1) * d];
            dst.iter_mut().for_each(|v| *v = 0.0);
            for (&m, &w) in nbrs.iter().zip(ws) {
                let src = &xs[m as usize * d..(m as usize + 1) * d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
        Ok(())
    }
}

/// How a subgraph indexes its items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CatalogMode {
    /// Keep the parent's item indices (the default).
    #[default]
    Shared,
    /// Re-index only items that still have an edge.
    Compact,
}

/// Subgraph index → parent index, per side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgraphMap {
    pub users: Vec<u32>,
    /// `None` in shared-catalog mode (identity).
    pub items: Option<Vec<u32>>,
}

/// Induced subgraph on `users` in shared-catalog mode. Subgraph user `k` is
/// the `k`-th smallest selected parent user.
pub fn subgraph(graph: &InteractionGraph, users: &[usize]) -> Result<(InteractionGraph, SubgraphMap)> {
    subgraph_with(graph, users, CatalogMode::Shared)
}

pub fn subgraph_with(
    graph: &InteractionGraph,
    users: &[usize],
    mode: CatalogMode,
) -> Result<(InteractionGraph, SubgraphMap)> {
    let mut selected: Vec<usize> = users.to_vec();
    selected.sort_unstable();
    selected.dedup();
    for &u in &selected {
        check_range("user", u, graph.num_users())?;
    }
    let mut edges = Vec::new();
    for (k, &u) in selected.iter().enumerate() {
        edges.extend(graph.user_items(u).iter().map(|&i| Edge::new(k, i as usize)));
    }
    let user_map: Vec<u32> = selected.iter().map(|&u| u as u32).collect();
    match mode {
        CatalogMode::Shared => {
            let g = InteractionGraph::from_sorted_unique(selected.len(), graph.num_items(), edges);
            Ok((
                g,
                SubgraphMap {
                    users: user_map,
                    items: None,
                },
            ))
        }
        CatalogMode::Compact => {
            let mut items: Vec<u32> = edges.iter().map(|e| e.item).collect();
            items.sort_unstable();
            items.dedup();
            let mut remap = vec![u32::MAX; graph.num_items()];
            for (k, &i) in items.iter().enumerate() {
                remap[i as usize] = k as u32;
            }
            for e in &mut edges {
                e.item = remap[e.item as usize];
            }
            let g = InteractionGraph::new(selected.len(), items.len(), edges)?;
            Ok((
                g,
                SubgraphMap {
                    users: user_map,
                    items: Some(items),
                },
            ))
        }
    }
}

/// Result of augmenting a local graph with selected global edges.
#[derive(Clone, Debug)]
pub struct MergedGraph {
    pub graph: InteractionGraph,
    /// Global user index of each appended user, in merged-index order.
    pub global_users: Vec<u32>,
}

/// Union of `local` with `selected` global edges (indexed in the global
/// dataset's user space). Local users keep `0..P_local`; each distinct
/// selected global user is appended in ascending global-index order.
pub fn merge(local: &InteractionGraph, selected: &[Edge]) -> Result<MergedGraph> {
    let mut globals: Vec<u32> = selected.iter().map(|e| e.user).collect();
    globals.sort_unstable();
    globals.dedup();
    let offset = local.num_users();
    let mut edges = local.edges().to_vec();
    edges.reserve(selected.len());
    for e in selected {
        check_range("item", e.item as usize, local.num_items())?;
        let pos = globals.binary_search(&e.user).expect("collected above");
        edges.push(Edge::new(offset + pos, e.item as usize));
    }
    let graph = InteractionGraph::new_dedup(offset + globals.len(), local.num_items(), edges)?;
    Ok(MergedGraph {
        graph,
        global_users: globals,
    })
}

/// Like [`merge`], but reserves a row for every one of `num_global_users`
/// global users: global user `g` lands at `P_local + g` whether or not it has
/// a selected edge. Keeps model shapes fixed across changing selections.
pub fn merge_padded(
    local: &InteractionGraph,
    selected: &[Edge],
    num_global_users: usize,
) -> Result<InteractionGraph> {
    let offset = local.num_users();
    let mut edges = local.edges().to_vec();
    edges.reserve(selected.len());
    for e in selected {
        check_range("user", e.user as usize, num_global_users)?;
        check_range("item", e.item as usize, local.num_items())?;
        edges.push(Edge::new(offset + e.user as usize, e.item as usize));
    }
    InteractionGraph::new_dedup(offset + num_global_users, local.num_items(), edges)
}
