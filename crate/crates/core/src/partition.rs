//! Global/client user partitioning and the AMI heterogeneity score.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{subgraph, InteractionGraph, SubgraphMap};
use crate::numerics::Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    #[default]
    Uniform,
    Dirichlet,
}

impl FromStr for PartitionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "iid" => Ok(PartitionMode::Uniform),
            "dirichlet" => Ok(PartitionMode::Dirichlet),
            other => Err(Error::invalid(format!("unknown partition mode {other:?}"))),
        }
    }
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionMode::Uniform => "uniform",
            PartitionMode::Dirichlet => "dirichlet",
        })
    }
}

/// Which holder each user belongs to. All index sets are sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPlan {
    pub num_users: usize,
    pub global_users: Vec<u32>,
    pub client_users: Vec<Vec<u32>>,
    pub seed: u64,
    pub mode: PartitionMode,
    pub concentration: f64,
}

/// The global dataset, client datasets and the plan that produced them.
/// Every graph uses the parent's item catalog.
#[derive(Clone, Debug)]
pub struct Partition {
    pub global: InteractionGraph,
    pub global_map: SubgraphMap,
    pub locals: Vec<InteractionGraph>,
    pub local_maps: Vec<SubgraphMap>,
    pub plan: PartitionPlan,
}

/// Where a user is assigned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assignment {
    Global,
    Client(usize),
    Unassigned,
}

impl PartitionPlan {
    pub fn num_clients(&self) -> usize {
        self.client_users.len()
    }

    pub fn assignments(&self) -> Vec<Assignment> {
        let mut out = vec![Assignment::Unassigned; self.num_users];
        for &u in &self.global_users {
            out[u as usize] = Assignment::Global;
        }
        for (k, users) in self.client_users.iter().enumerate() {
            for &u in users {
                out[u as usize] = Assignment::Client(k);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.client_users.is_empty() {
            return Err(Error::invalid("partition needs at least one client"));
        }
        let mut seen = vec![false; self.num_users];
        let all = self.global_users.iter().chain(self.client_users.iter().flatten());
        for &u in all {
            let u = u as usize;
            if u >= self.num_users {
                return Err(Error::IndexOutOfRange {
                    side: "user",
                    index: u,
                    size: self.num_users,
                });
            }
            if std::mem::replace(&mut seen[u], true) {
                return Err(Error::invalid(format!("user {u} assigned twice")));
            }
        }
        Ok(())
    }

    /// Text manifest: `#` header lines, then `user_index assignment` per user,
    /// where assignment is `global`, a client number, or `-`.
    pub fn write_manifest<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# users {}", self.num_users)?;
        writeln!(w, "# clients {}", self.num_clients())?;
        writeln!(w, "# seed {}", self.seed)?;
        writeln!(w, "# mode {}", self.mode)?;
        writeln!(w, "# concentration {}", self.concentration)?;
        for (u, a) in self.assignments().iter().enumerate() {
            match a {
                Assignment::Global => writeln!(w, "{u} global")?,
                Assignment::Client(k) => writeln!(w, "{u} {k}")?,
                Assignment::Unassigned => writeln!(w, "{u} -")?,
            }
        }
        Ok(())
    }

    pub fn read_manifest<R: BufRead>(r: R, path: &std::path::Path) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut num_users = None;
        let mut clients = None;
        let mut seed = 0;
        let mut mode = PartitionMode::Uniform;
        let mut concentration = 0.0;
        let mut rows = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let ln = n + 1;
            let mut parts = line.split_whitespace();
            let Some(first) = parts.next() else { continue };
            let second = parts.next().ok_or_else(|| perr(ln, "expected two fields".into()))?;
            if first == "#" {
                let value = parts.next().ok_or_else(|| perr(ln, format!("missing value for {second}")))?;
                let bad = |e: &dyn fmt::Display| perr(ln, format!("{second}: {e}"));
                match second {
                    "users" => num_users = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
                    "clients" => clients = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
                    "seed" => seed = value.parse().map_err(|e| bad(&e))?,
                    "mode" => mode = value.parse().map_err(|e| bad(&e))?,
                    "concentration" => concentration = value.parse().map_err(|e| bad(&e))?,
                    _ => {}
                }
                continue;
            }
            let user: usize = first.parse().map_err(|e| perr(ln, format!("user index: {e}")))?;
            let a = match second {
                "global" => Assignment::Global,
                "-" => Assignment::Unassigned,
                k => Assignment::Client(k.parse().map_err(|e| perr(ln, format!("assignment: {e}")))?),
            };
            rows.push((user, a));
        }
        let num_users = num_users.unwrap_or(rows.len());
        let k = match clients {
            Some(k) => k,
            None => rows
                .iter()
                .filter_map(|(_, a)| match a {
                    Assignment::Client(k) => Some(k + 1),
                    _ => None,
                })
                .max()
                .unwrap_or(0),
        };
        let mut plan = PartitionPlan {
            num_users,
            global_users: Vec::new(),
            client_users: vec![Vec::new(); k],
            seed,
            mode,
            concentration,
        };
        for (u, a) in rows {
            match a {
                Assignment::Global => plan.global_users.push(u as u32),
                Assignment::Client(c) if c < k => plan.client_users[c].push(u as u32),
                Assignment::Client(c) => return Err(Error::invalid(format!("client {c} exceeds declared count {k}"))),
                Assignment::Unassigned => {}
            }
        }
        plan.global_users.sort_unstable();
        for c in &mut plan.client_users {
            c.sort_unstable();
        }
        plan.validate()?;
        Ok(plan)
    }
}

/// Users grouped for assignment, with their degrees.
fn by_degree_desc(users: &mut [u32], degrees: &[usize]) {
    // stable: equal degrees keep their shuffled order
    users.sort_by(|a, b| degrees[*b as usize].cmp(&degrees[*a as usize]));
}

/// Rank-based decile of each value: `floor(10 · #{smaller values} / n)`.
/// Equal values share a decile.
pub fn degree_deciles(values: &[usize]) -> Vec<usize> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    values
        .iter()
        .map(|v| {
            let below = sorted.partition_point(|x| x < v);
            (10 * below / n.max(1)).min(9)
        })
        .collect()
}

/// Draws a plan: a shuffled greedy fill of the global pool to
/// `global_edge_frac · |E|` edges, then the remaining users split across
/// `num_clients` clients.
///
/// Uniform mode deals a degree-sorted shuffle serpentine-wise (0..K, K..0, ...),
/// which balances edge mass. Dirichlet mode buckets users by degree decile,
/// draws per-bucket client proportions from a symmetric Dirichlet, and deals
/// each bucket's users (heaviest first) to the client furthest below its
/// proportional share of the edges dealt so far.
pub fn plan_split(
    graph: &InteractionGraph,
    global_edge_frac: f64,
    num_clients: usize,
    mode: PartitionMode,
    concentration: f64,
    seed: u64,
) -> Result<PartitionPlan> {
    if !(0.0..1.0).contains(&global_edge_frac) {
        return Err(Error::invalid(format!("global edge fraction {global_edge_frac} not in [0, 1)")));
    }
    if num_clients == 0 {
        return Err(Error::invalid("at least one client is required"));
    }
    if mode == PartitionMode::Dirichlet && !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::invalid("Dirichlet concentration must be positive"));
    }
    let mut rng = Rng::new(seed).fork(crate::numerics::stream::PARTITION);
    let degrees = graph.user_degrees();
    let mut order: Vec<u32> = (0..graph.num_users() as u32).collect();
    rng.shuffle(&mut order);

    let target = global_edge_frac * graph.num_edges() as f64;
    let mut mass = 0usize;
    let mut taken = 0;
    while taken < order.len() && (mass as f64) < target {
        mass += degrees[order[taken] as usize];
        taken += 1;
    }
    let mut global_users = order[..taken].to_vec();
    let mut rest = order[taken..].to_vec();
    if rest.len() < num_clients {
        return Err(Error::invalid(format!(
            "{num_clients} clients but only {} users remain after the global split",
            rest.len()
        )));
    }

    let mut clients: Vec<Vec<u32>> = vec![Vec::new(); num_clients];
    match mode {
        PartitionMode::Uniform => {
            by_degree_desc(&mut rest, &degrees);
            for (pos, &u) in rest.iter().enumerate() {
                let round = pos / num_clients;
                let slot = pos % num_clients;
                let k = if round.is_multiple_of(2) { slot } else { num_clients - 1 - slot };
                clients[k].push(u);
            }
        }
        PartitionMode::Dirichlet => {
            let rest_deg: Vec<usize> = rest.iter().map(|&u| degrees[u as usize]).collect();
            let deciles = degree_deciles(&rest_deg);
            // at least one edge of mass per user so zero-degree users still deal
            let weight = |u: u32| degrees[u as usize].max(1) as f64;
            // cumulative targets and assignments, so rounding carries across buckets
            let mut target = vec![0.0; num_clients];
            let mut assigned = vec![0.0; num_clients];
            for bucket in (0..10).rev() {
                let mut members: Vec<u32> = rest
                    .iter()
                    .zip(&deciles)
                    .filter(|(_, &d)| d == bucket)
                    .map(|(&u, _)| u)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let mut props: Vec<f64> = (0..num_clients).map(|_| rng.gamma(concentration)).collect();
                let total: f64 = props.iter().sum();
                if total > 0.0 && total.is_finite() {
                    props.iter_mut().for_each(|p| *p /= total);
                } else {
                    props.fill(1.0 / num_clients as f64);
                }
                by_degree_desc(&mut members, &degrees);
                let bucket_mass: f64 = members.iter().map(|&u| weight(u)).sum();
                for (t, p) in target.iter_mut().zip(&props) {
                    *t += p * bucket_mass;
                }
                for &u in &members {
                    let k = (0..num_clients)
                        .max_by(|&a, &b| {
                            let da = target[a] - assigned[a];
                            let db = target[b] - assigned[b];
                            da.total_cmp(&db).then(b.cmp(&a))
                        })
                        .expect("at least one client");
                    assigned[k] += weight(u);
                    clients[k].push(u);
                }
            }
            // every client keeps at least one user
            for k in 0..num_clients {
                if clients[k].is_empty() {
                    let donor = (0..num_clients).max_by_key(|&c| (clients[c].len(), std::cmp::Reverse(c))).expect("non-empty");
                    let pos = (0..clients[donor].len())
                        .min_by_key(|&p| degrees[clients[donor][p] as usize])
                        .expect("donor has users");
                    let u = clients[donor].remove(pos);
                    clients[k].push(u);
                }
            }
        }
    }
    global_users.sort_unstable();
    for c in &mut clients {
        c.sort_unstable();
    }
    Ok(PartitionPlan {
        num_users: graph.num_users(),
        global_users,
        client_users: clients,
        seed,
        mode,
        concentration,
    })
}

/// Materialises a plan into user-compact, shared-catalog graphs.
pub fn apply_plan(graph: &InteractionGraph, plan: &PartitionPlan) -> Result<Partition> {
    if plan.num_users != graph.num_users() {
        return Err(Error::shape(
            "apply_plan",
            format!("plan covers {} users, graph has {}", plan.num_users, graph.num_users()),
        ));
    }
    plan.validate()?;
    let as_usize = |v: &[u32]| v.iter().map(|&u| u as usize).collect::<Vec<_>>();
    let (global, global_map) = subgraph(graph, &as_usize(&plan.global_users))?;
    let mut locals = Vec::with_capacity(plan.num_clients());
    let mut local_maps = Vec::with_capacity(plan.num_clients());
    for users in &plan.client_users {
        let (g, m) = subgraph(graph, &as_usize(users))?;
        locals.push(g);
        local_maps.push(m);
    }
    Ok(Partition {
        global,
        global_map,
        locals,
        local_maps,
        plan: plan.clone(),
    })
}

/// [`plan_split`] followed by [`apply_plan`].
pub fn global_local_split(
    graph: &InteractionGraph,
    global_edge_frac: f64,
    num_clients: usize,
    mode: PartitionMode,
    concentration: f64,
    seed: u64,
) -> Result<Partition> {
    let plan = plan_split(graph, global_edge_frac, num_clients, mode, concentration, seed)?;
    apply_plan(graph, &plan)
}

/// How the two labelings for the heterogeneity score are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeterogeneityLabels {
    /// A client user's degree decile over all client users versus its
    /// degree decile among its own client's users. High when every client
    /// mirrors the pooled degree structure.
    #[default]
    PooledVsWithinClient,
    /// Client assignment versus pooled degree decile.
    ClientVsDecile,
}

/// AMI between two labelings of the plan's client users.
pub fn heterogeneity_score(plan: &PartitionPlan, user_degrees: &[usize], labels: HeterogeneityLabels) -> Result<f64> {
    let mut users = Vec::new();
    let mut client_of = Vec::new();
    for (k, members) in plan.client_users.iter().enumerate() {
        for &u in members {
            let d = *user_degrees.get(u as usize).ok_or(Error::IndexOutOfRange {
                side: "user",
                index: u as usize,
                size: user_degrees.len(),
            })?;
            users.push(d);
            client_of.push(k);
        }
    }
    let pooled = degree_deciles(&users);
    let second = match labels {
        HeterogeneityLabels::ClientVsDecile => client_of,
        HeterogeneityLabels::PooledVsWithinClient => {
            let mut within = vec![0; users.len()];
            let mut at = 0;
            for members in &plan.client_users {
                let n = members.len();
                let dec = degree_deciles(&users[at..at + n]);
                within[at..at + n].copy_from_slice(&dec);
                at += n;
            }
            within
        }
    };
    Ok(adjusted_mutual_info(&pooled, &second))
}

fn relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut uniq: Vec<usize> = labels.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    (
        labels.iter().map(|l| uniq.binary_search(l).expect("present")).collect(),
        uniq.len(),
    )
}

/// Adjusted mutual information with the hypergeometric expected MI and the
/// arithmetic-mean normaliser. A single cluster on either side scores 0.
pub fn adjusted_mutual_info(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let (a, ra) = relabel(a);
    let (b, rb) = relabel(b);
    if ra <= 1 || rb <= 1 {
        return 0.0;
    }
    let mut table = vec![0usize; ra * rb];
    for (&x, &y) in a.iter().zip(&b) {
        table[x * rb + y] += 1;
    }
    let rows: Vec<usize> = (0..ra).map(|i| table[i * rb..(i + 1) * rb].iter().sum()).collect();
    let cols: Vec<usize> = (0..rb).map(|j| (0..ra).map(|i| table[i * rb + j]).sum()).collect();
    let nf = n as f64;
    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / nf;
                -p * p.ln()
            })
            .sum()
    };
    let (ha, hb) = (entropy(&rows), entropy(&cols));
    let mut mi = 0.0;
    for i in 0..ra {
        for j in 0..rb {
            let nij = table[i * rb + j];
            if nij > 0 {
                let v = nij as f64;
                mi += v / nf * (nf * v / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    let emi = expected_mutual_info(&rows, &cols, n);
    let denom = 0.5 * (ha + hb) - emi;
    if denom.abs() < f64::EPSILON {
        return if (mi - emi).abs() < f64::EPSILON { 1.0 } else { 0.0 };
    }
    (mi - emi) / denom
}

/// `E[MI]` under the hypergeometric model of random labelings with fixed marginals.
fn expected_mutual_info(rows: &[usize], cols: &[usize], n: usize) -> f64 {
    let mut lfact = vec![0.0; n + 1];
    for k in 1..=n {
        lfact[k] = lfact[k - 1] + (k as f64).ln();
    }
    let nf = n as f64;
    let mut emi = 0.0;
    for &ai in rows {
        for &bj in cols {
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            let fixed = lfact[ai] + lfact[bj] + lfact[n - ai] + lfact[n - bj] - lfact[n];
            for nij in lo..=hi {
                let v = nij as f64;
                let log_p = fixed - lfact[nij] - lfact[ai - nij] - lfact[bj - nij] - lfact[n + nij - ai - bj];
                emi += v / nf * (nf * v / (ai as f64 * bj as f64)).ln() * log_p.exp();
            }
        }
    }
    emi
}
