use std::fs::File;
use std::io::BufReader;

use crate::error::{Error, Result};
use crate::federation::ClientData;
use crate::graph::{subgraph, Edge, IdMap, InteractionGraph};
use crate::numerics::{stream, Rng};
use crate::partition::{plan_split, PartitionPlan};

use super::config::{DatasetFormat, ExperimentConfig};
use super::data::{load_adjacency_list, load_edge_list, load_movielens, split_holdout};

/// Everything a run trains and evaluates on, derived from one graph, one
/// plan and the seed.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub graph: InteractionGraph,
    pub plan: PartitionPlan,
    /// All edges of the global users.
    pub global: InteractionGraph,
    pub clients: Vec<ClientData>,
    /// The same data held in one place (parent user indices): global users
    /// with all their edges, client users with their training edges, and the
    /// clients' validation and test edges.
    pub pooled: ClientData,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<(InteractionGraph, IdMap)> {
    match cfg.format {
        DatasetFormat::Movielens => load_movielens(&cfg.dataset),
        DatasetFormat::EdgeList => load_edge_list(&cfg.dataset),
        DatasetFormat::AdjacencyList => load_adjacency_list(&cfg.dataset),
    }
}

/// The configured manifest if there is one, otherwise a fresh draw.
pub fn make_plan(graph: &InteractionGraph, cfg: &ExperimentConfig) -> Result<PartitionPlan> {
    let plan = match &cfg.manifest {
        Some(path) => PartitionPlan::read_manifest(BufReader::new(File::open(path)?), path)?,
        None => plan_split(graph, cfg.global_frac, cfg.clients, cfg.partition, cfg.concentration, cfg.seed)?,
    };
    if plan.num_users != graph.num_users() {
        return Err(Error::config(
            "manifest",
            format!("plan covers {} users, dataset has {}", plan.num_users, graph.num_users()),
        ));
    }
    if plan.num_clients() != cfg.clients {
        return Err(Error::config(
            "clients",
            format!("manifest has {} clients, config asks for {}", plan.num_clients(), cfg.clients),
        ));
    }
    Ok(plan)
}

/// Per-user holdout split of `graph`, then placement of users by `plan`.
pub fn prepare(graph: InteractionGraph, plan: PartitionPlan, cfg: &ExperimentConfig) -> Result<PreparedData> {
    plan.validate()?;
    let mut rng = Rng::new(cfg.seed).fork(stream::HOLDOUT);
    let holdout = split_holdout(&graph, cfg.split_train, cfg.split_valid, cfg.split_test, &mut rng)?;
    let to_usize = |v: &[u32]| v.iter().map(|&u| u as usize).collect::<Vec<_>>();
    let (global, _) = subgraph(&graph, &to_usize(&plan.global_users))?;

    // parent user -> (client, local index)
    let mut owner = vec![None; graph.num_users()];
    for (k, users) in plan.client_users.iter().enumerate() {
        for (local, &u) in users.iter().enumerate() {
            owner[u as usize] = Some((k, local));
        }
    }
    let remap = |edges: &[Edge], k: usize| -> Vec<Edge> {
        edges
            .iter()
            .filter_map(|e| match owner[e.user as usize] {
                Some((c, local)) if c == k => Some(Edge::new(local, e.item as usize)),
                _ => None,
            })
            .collect()
    };
    let mut clients = Vec::with_capacity(plan.num_clients());
    for (k, users) in plan.client_users.iter().enumerate() {
        let (train, _) = subgraph(&holdout.train, &to_usize(users))?;
        clients.push(ClientData {
            train,
            valid: remap(&holdout.valid, k),
            test: remap(&holdout.test, k),
        });
    }

    let mut pooled_train: Vec<Edge> = holdout
        .train
        .edges()
        .iter()
        .copied()
        .filter(|e| owner[e.user as usize].is_some())
        .collect();
    for &u in &plan.global_users {
        pooled_train.extend_from_slice(graph.user_edges(u as usize));
    }
    let is_client = |e: &&Edge| owner[e.user as usize].is_some();
    let pooled = ClientData {
        train: InteractionGraph::new_dedup(graph.num_users(), graph.num_items(), pooled_train)?,
        valid: holdout.valid.iter().filter(is_client).copied().collect(),
        test: holdout.test.iter().filter(is_client).copied().collect(),
    };
    Ok(PreparedData {
        graph,
        plan,
        global,
        clients,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PartitionMode;

    fn toy_graph(rng: &mut Rng) -> InteractionGraph {
        let mut edges = Vec::new();
        for u in 0..60 {
            for i in 0..40 {
                if rng.uniform() < 0.2 {
                    edges.push(Edge::new(u, i));
                }
            }
        }
        InteractionGraph::new(60, 40, edges).unwrap()
    }

    #[test]
    fn every_edge_lands_exactly_once() {
        let graph = toy_graph(&mut Rng::new(1));
        let cfg = ExperimentConfig {
            clients: 4,
            ..Default::default()
        };
        let plan = plan_split(&graph, 0.5, 4, PartitionMode::Uniform, 0.5, 3).unwrap();
        let data = prepare(graph.clone(), plan.clone(), &cfg).unwrap();
        let mut seen = Vec::new();
        for &u in &plan.global_users {
            seen.extend_from_slice(graph.user_edges(u as usize));
        }
        for (k, c) in data.clients.iter().enumerate() {
            let users = &plan.client_users[k];
            let back = |e: &Edge| Edge::new(users[e.user as usize] as usize, e.item as usize);
            seen.extend(c.train.edges().iter().map(back));
            seen.extend(c.valid.iter().map(back));
            seen.extend(c.test.iter().map(back));
        }
        seen.sort_unstable();
        assert_eq!(seen, graph.edges());
        // the pooled view holds the same edges
        let mut pooled = data.pooled.train.edges().to_vec();
        pooled.extend_from_slice(&data.pooled.valid);
        pooled.extend_from_slice(&data.pooled.test);
        pooled.sort_unstable();
        assert_eq!(pooled, graph.edges());
        assert_eq!(data.global.num_users(), plan.global_users.len());
    }

    #[test]
    fn manifest_must_match_the_dataset() {
        let graph = toy_graph(&mut Rng::new(2));
        let plan = plan_split(&graph, 0.3, 3, PartitionMode::Uniform, 0.5, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan.txt");
        plan.write_manifest(File::create(&path).unwrap()).unwrap();
        let cfg = ExperimentConfig {
            clients: 3,
            manifest: Some(path.clone()),
            ..Default::default()
        };
        assert_eq!(make_plan(&graph, &cfg).unwrap(), plan);
        let wrong = ExperimentConfig { clients: 4, ..cfg };
        assert!(make_plan(&graph, &wrong).is_err());
    }
}
