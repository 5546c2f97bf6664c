use fedgdve::federation::*;
use fedgdve::gcf::{train_epoch, GcfParams, StructureConfig, TrainConfig};
use fedgdve::gdve::GdveConfig;
use fedgdve::graph::{merge_padded, normalize, Edge, InteractionGraph};
use fedgdve::numerics::{stream, DenseMatrix, Rng};
use fedgdve::optim::{Optimizer, OptimizerKind};
use proptest::prelude::*;

const Q: usize = 12;

fn random_client(users: usize, rng: &mut Rng) -> ClientData {
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for u in 0..users {
        let mut items: Vec<usize> = (0..Q).collect();
        rng.shuffle(&mut items);
        for (j, &i) in items.iter().take(6).enumerate() {
            let e = Edge::new(u, i);
            match j {
                0 => valid.push(e),
                1 => test.push(e),
                _ => train.push(e),
            }
        }
    }
    ClientData {
        train: InteractionGraph::new(users, Q, train).unwrap(),
        valid,
        test,
    }
}

fn random_global(users: usize, rng: &mut Rng) -> InteractionGraph {
    let mut edges = Vec::new();
    for u in 0..users {
        for i in 0..Q {
            if rng.uniform() < 0.4 {
                edges.push(Edge::new(u, i));
            }
        }
    }
    InteractionGraph::new(users, Q, edges).unwrap()
}

fn cfg(method: Method, rounds: usize, epochs: usize) -> FederationConfig {
    let structure = StructureConfig {
        tau: 0.1,
        even_layers: vec![2],
        weight: 1.0,
    };
    FederationConfig {
        method,
        rounds,
        epochs_per_round: epochs,
        dim: 4,
        num_layers: 2,
        optimizer: OptimizerKind::Adam,
        lr: 0.01,
        batch_size: 16,
        lambda: 1e-4,
        structure: structure.clone(),
        eval_k: 5,
        seed: 11,
        gdve: GdveConfig {
            dim: 4,
            num_layers: 2,
            pretrain_epochs: 1,
            train: TrainConfig {
                batch_size: 16,
                lambda: 1e-4,
                structure: Some(structure),
            },
            optimizer: OptimizerKind::Adam,
            policy_optimizer: OptimizerKind::Sgd,
            lr: 0.01,
            policy_lr: 0.1,
            batch_users: 4,
            max_batches: 2,
            plateau_window: 0,
            plateau_tol: 1e-4,
            ema_decay: 0.9,
            reward_k: 5,
        },
        shared_encoder: false,
    }
}

fn setup(seed: u64, clients: usize) -> (InteractionGraph, Vec<ClientData>) {
    let mut rng = Rng::new(seed);
    let global = random_global(6, &mut rng);
    let data = (0..clients).map(|k| random_client(3 + k, &mut rng)).collect();
    (global, data)
}

fn strip_timing(mut reports: Vec<RoundReport>) -> Vec<RoundReport> {
    for r in &mut reports {
        r.seconds = 0.0;
    }
    reports
}

#[test]
fn single_client_without_global_data_is_plain_training() {
    let (_, mut clients) = setup(1, 1);
    let data = clients.remove(0);
    let global = InteractionGraph::empty(0, Q);
    let c = cfg(Method::Fedngcf, 3, 2);
    let mut fed = Federation::new(c.clone(), global.clone(), vec![data.clone()], None).unwrap();
    fed.run().unwrap();

    let root = Rng::new(c.seed);
    let server = GcfParams::init(0, Q, c.dim, c.num_layers, &mut root.fork(stream::SERVER));
    let mut init_rng = root.fork(stream::client(0)).fork(stream::INIT);
    let mut params = GcfParams::init(data.train.num_users(), Q, c.dim, c.num_layers, &mut init_rng);
    params.item_emb = server.item_emb.clone();
    params.layers = server.layers.clone();
    let graph = merge_padded(&data.train, &[], 0).unwrap();
    assert_eq!(graph, data.train);
    let adj = normalize(&graph);
    let mut opt = Optimizer::new(c.optimizer, c.lr);
    let mut rng = root.fork(stream::client(0)).fork(stream::TRAIN);
    let train_cfg = TrainConfig {
        batch_size: c.batch_size,
        lambda: c.lambda,
        structure: None,
    };
    for _ in 0..c.rounds * c.epochs_per_round {
        train_epoch(&mut params, &mut opt, &graph, &adj, &train_cfg, &mut rng).unwrap();
    }
    assert_eq!(fed.clients[0].params, params);
}

#[test]
fn zero_structure_weight_matches_bpr_only() {
    let (global, clients) = setup(2, 3);
    let mut with_sl = cfg(Method::FedgdveNoGdve, 2, 1);
    with_sl.structure.weight = 0.0;
    let plain = cfg(Method::Fedngcf, 2, 1);
    let a = Federation::new(with_sl, global.clone(), clients.clone(), None)
        .unwrap()
        .run()
        .unwrap();
    let b = Federation::new(plain, global, clients, None).unwrap().run().unwrap();
    let recalls = |r: &[RoundReport]| r.iter().map(|x| x.clients.iter().map(|c| c.recall).collect::<Vec<_>>()).collect::<Vec<_>>();
    assert_eq!(recalls(&a), recalls(&b));
}

#[test]
fn zero_epochs_upload_incoming_parameters() {
    let (global, clients) = setup(3, 2);
    let c = cfg(Method::Fedngcf, 1, 0);
    let mut fed = Federation::new(c.clone(), global.clone(), clients, None).unwrap();
    let before = fed.shared.clone();
    let (up, w, stats) = fed.clients[1].local_round(&before, &global, &c).unwrap();
    assert_eq!(up, before);
    assert_eq!(w, fed.clients[1].data.train.num_edges() as f64);
    assert!(stats.is_empty());
    fed.run_round().unwrap();
    assert_eq!(fed.shared, before);
}

#[test]
fn runs_are_deterministic() {
    let (global, clients) = setup(4, 3);
    let c = cfg(Method::Fedgdve, 2, 1);
    let run = || {
        let states = train_gdve_states(&global, &clients, &c).unwrap();
        strip_timing(Federation::new(c.clone(), global.clone(), clients.clone(), Some(states)).unwrap().run().unwrap())
    };
    let a = run();
    assert_eq!(a, run());
    assert!(a.iter().all(|r| r.selected_ratio.is_some()));
}

#[test]
fn user_tables_stay_private() {
    let (global, clients) = setup(5, 2);
    let c = cfg(Method::Fedngcf, 1, 1);
    let mut fed = Federation::new(c, global, clients, None).unwrap();
    fed.run_round().unwrap();
    assert_ne!(
        fed.clients[0].params.user_emb.rows(),
        fed.clients[1].params.user_emb.rows()
    );
    for client in &fed.clients {
        assert_eq!(client.params.item_emb, fed.shared.item_emb);
        assert_eq!(client.params.layers, fed.shared.layers);
    }
}

#[test]
fn gdve_methods_require_states() {
    let (global, clients) = setup(6, 2);
    assert!(Federation::new(cfg(Method::Fedgdve, 1, 1), global.clone(), clients.clone(), None).is_err());
    assert!(Federation::new(cfg(Method::CentralizedNgcf, 1, 1), global.clone(), clients.clone(), None).is_err());
    let states = train_gdve_states(&global, &clients, &cfg(Method::Fedgdve, 1, 1)).unwrap();
    assert!(Federation::new(cfg(Method::Fedngcf, 1, 1), global, clients, Some(states)).is_err());
}

fn shared(rows: usize, cols: usize, vals: Vec<f64>) -> SharedParams {
    SharedParams {
        item_emb: DenseMatrix::from_vec(rows, cols, vals).unwrap(),
        layers: Vec::new(),
    }
}

fn updates_strategy() -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    (1usize..6, 1usize..8).prop_flat_map(|(n, len)| {
        prop::collection::vec((prop::collection::vec(-5.0f64..5.0, len), 0.01f64..100.0), n)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn aggregate_is_a_convex_combination(updates in updates_strategy()) {
        let len = updates[0].0.len();
        let input: Vec<(SharedParams, f64)> =
            updates.iter().map(|(v, w)| (shared(1, len, v.clone()), *w)).collect();
        let out = aggregate(&input).unwrap();
        let total: f64 = updates.iter().map(|(_, w)| w).sum();
        for j in 0..len {
            let lo = updates.iter().map(|(v, _)| v[j]).fold(f64::INFINITY, f64::min);
            let hi = updates.iter().map(|(v, _)| v[j]).fold(f64::NEG_INFINITY, f64::max);
            let x = out.item_emb.get(0, j);
            prop_assert!(lo <= x && x <= hi);
            let mean: f64 = updates.iter().map(|(v, w)| v[j] * w).sum::<f64>() / total;
            prop_assert!((x - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        }
    }

    #[test]
    fn aggregate_ignores_client_order(updates in updates_strategy(), seed in 0u64..1000) {
        let len = updates[0].0.len();
        let input: Vec<(SharedParams, f64)> =
            updates.iter().map(|(v, w)| (shared(1, len, v.clone()), *w)).collect();
        let mut shuffled = input.clone();
        Rng::new(seed).shuffle(&mut shuffled);
        let a = aggregate(&input).unwrap();
        let b = aggregate(&shuffled).unwrap();
        for (x, y) in a.item_emb.as_slice().iter().zip(b.item_emb.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}
