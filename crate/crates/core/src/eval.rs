//! Top-K ranking with exclusion of known items, and P@K / R@K / NDCG@K.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Edge, InteractionGraph};
use crate::numerics::{gemm, DenseMatrix};

/// Top-K items for one user, best first.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedList {
    pub user: usize,
    pub items: Vec<u32>,
    pub scores: Vec<f64>,
}

/// Orders by descending score, ties by ascending item index.
fn better(a: (u32, f64), b: (u32, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Top `k` of `scores` skipping the sorted `exclude` list.
pub fn top_k(scores: &[f64], exclude: &[u32], k: usize) -> Vec<(u32, f64)> {
    let mut cand: Vec<(u32, f64)> = Vec::with_capacity(scores.len().saturating_sub(exclude.len()));
    let mut ex = exclude.iter().peekable();
    for (i, &s) in scores.iter().enumerate() {
        while ex.peek().is_some_and(|&&e| (e as usize) < i) {
            ex.next();
        }
        if ex.peek().is_some_and(|&&e| e as usize == i) {
            continue;
        }
        cand.push((i as u32, s));
    }
    if k < cand.len() {
        cand.select_nth_unstable_by(k, |a, b| better(*a, *b));
        cand.truncate(k);
    }
    cand.sort_unstable_by(|a, b| better(*a, *b));
    cand
}

/// Ranks the catalog for `user` by `⟨user_repr, item_repr⟩`, skipping the
/// user's items in `train`.
pub fn rank_items(
    user_repr: &DenseMatrix,
    item_repr: &DenseMatrix,
    train: &InteractionGraph,
    user: usize,
    k: usize,
) -> RankedList {
    let u = user_repr.row(user);
    let scores: Vec<f64> = (0..item_repr.rows())
        .map(|i| crate::numerics::dot(u, item_repr.row(i)))
        .collect();
    let top = top_k(&scores, train.user_items(user), k);
    RankedList {
        user,
        items: top.iter().map(|t| t.0).collect(),
        scores: top.iter().map(|t| t.1).collect(),
    }
}

fn hits(ranked: &[u32], relevant: &[u32], k: usize) -> usize {
    ranked.iter().take(k).filter(|i| relevant.binary_search(i).is_ok()).count()
}

/// `hits / K`. `relevant` must be sorted.
pub fn precision_at_k(ranked: &[u32], relevant: &[u32], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hits(ranked, relevant, k) as f64 / k as f64
}

/// `hits / |relevant|`. `relevant` must be sorted and non-empty.
pub fn recall_at_k(ranked: &[u32], relevant: &[u32], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    hits(ranked, relevant, k) as f64 / relevant.len() as f64
}

/// Binary-gain NDCG with a `log2(p + 1)` discount over 1-based positions.
pub fn ndcg_at_k(ranked: &[u32], relevant: &[u32], k: usize) -> f64 {
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.binary_search(i).is_ok())
        .map(|(p, _)| 1.0 / ((p + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..k.min(relevant.len())).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
    if ideal == 0.0 {
        0.0
    } else {
        dcg / ideal
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserMetrics {
    pub user: usize,
    pub relevant: usize,
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
    pub users: Vec<UserMetrics>,
    /// Users with held-out edges that could not be ranked (no known items).
    pub skipped: usize,
}

impl EvalResult {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }
}

/// Groups held-out edges by user: `(user, sorted items)`.
pub fn group_by_user(edges: &[Edge]) -> Vec<(usize, Vec<u32>)> {
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(usize, Vec<u32>)> = Vec::new();
    for e in sorted {
        match out.last_mut() {
            Some((u, items)) if *u == e.user as usize => {
                if items.last() != Some(&e.item) {
                    items.push(e.item)
                }
            }
            _ => out.push((e.user as usize, vec![e.item])),
        }
    }
    out
}

const SCORE_BLOCK: usize = 256;

/// Mean P@K, R@K, NDCG@K over users with at least one held-out item.
///
/// `known` lists the items excluded from each user's ranking (at least its
/// training items); users without any known item are skipped.
pub fn evaluate(
    user_repr: &DenseMatrix,
    item_repr: &DenseMatrix,
    known: &InteractionGraph,
    held_out: &[Edge],
    k: usize,
) -> Result<EvalResult> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if user_repr.cols() != item_repr.cols() {
        return Err(Error::shape("evaluate", "user and item representation widths differ"));
    }
    let groups = group_by_user(held_out);
    for (u, items) in &groups {
        if *u >= user_repr.rows() || *u >= known.num_users() {
            return Err(Error::IndexOutOfRange {
                side: "user",
                index: *u,
                size: user_repr.rows().min(known.num_users()),
            });
        }
        if let Some(&i) = items.last() {
            if i as usize >= item_repr.rows() {
                return Err(Error::IndexOutOfRange {
                    side: "item",
                    index: i as usize,
                    size: item_repr.rows(),
                });
            }
        }
    }
    let (ranked, skipped): (Vec<_>, Vec<_>) = groups.into_iter().partition(|(u, _)| known.user_degree(*u) > 0);
    let users: Vec<UserMetrics> = ranked
        .par_chunks(SCORE_BLOCK)
        .flat_map_iter(|block| {
            let rows: Vec<usize> = block.iter().map(|(u, _)| *u).collect();
            let sub = user_repr.gather_rows(&rows);
            let mut scores = DenseMatrix::zeros(rows.len(), item_repr.rows());
            gemm(1.0, &sub, false, item_repr, true, 0.0, &mut scores).expect("shapes checked");
            block
                .iter()
                .enumerate()
                .map(|(r, (u, rel))| {
                    let top: Vec<u32> = top_k(scores.row(r), known.user_items(*u), k).iter().map(|t| t.0).collect();
                    UserMetrics {
                        user: *u,
                        relevant: rel.len(),
                        precision: precision_at_k(&top, rel, k),
                        recall: recall_at_k(&top, rel, k),
                        ndcg: ndcg_at_k(&top, rel, k),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    if users.is_empty() {
        return Err(Error::Empty("evaluable users"));
    }
    let n = users.len() as f64;
    Ok(EvalResult {
        k,
        precision: users.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: users.iter().map(|m| m.recall).sum::<f64>() / n,
        ndcg: users.iter().map(|m| m.ndcg).sum::<f64>() / n,
        users,
        skipped: skipped.len(),
    })
}
