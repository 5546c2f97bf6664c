use super::*;
use crate::gcf::{StructureConfig, LEAKY_SLOPE};
use crate::numerics::{grad_check, leaky_relu};
use crate::optim::ParamSet;

fn planted_global(rng: &mut Rng) -> InteractionGraph {
    // users 0..20 like items 0..15, users 20..40 like items 15..30
    let mut edges = Vec::new();
    for u in 0..40 {
        let block = if u < 20 { 0 } else { 15 };
        for i in block..block + 15 {
            if rng.uniform() < 0.5 {
                edges.push(Edge::new(u, i));
            }
        }
        edges.push(Edge::new(u, block + u % 15));
    }
    InteractionGraph::new_dedup(40, 30, edges).unwrap()
}

fn local_split(rng: &mut Rng) -> (InteractionGraph, Vec<Edge>) {
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for u in 0..8 {
        for i in 0..15 {
            let x = rng.uniform();
            if x < 0.3 {
                train.push(Edge::new(u, i));
            } else if x < 0.4 {
                valid.push(Edge::new(u, i));
            }
        }
        train.push(Edge::new(u, 14 - u));
        valid.push(Edge::new(u, u));
    }
    train.retain(|e| !valid.contains(e));
    (InteractionGraph::new_dedup(8, 30, train).unwrap(), valid)
}

fn small_cfg() -> GdveConfig {
    GdveConfig {
        dim: 8,
        num_layers: 2,
        pretrain_epochs: 3,
        train: TrainConfig {
            batch_size: 128,
            lambda: 1e-4,
            structure: Some(StructureConfig {
                tau: 0.2,
                even_layers: vec![2],
                weight: 0.1,
            }),
        },
        optimizer: OptimizerKind::Adam,
        policy_optimizer: OptimizerKind::Adam,
        lr: 0.01,
        policy_lr: 0.01,
        batch_users: 8,
        max_batches: 4,
        plateau_window: 0,
        plateau_tol: 1e-4,
        ema_decay: 0.9,
        reward_k: 10,
    }
}

struct Fixture {
    global: InteractionGraph,
    train: InteractionGraph,
    valid: Vec<Edge>,
}

impl Fixture {
    fn new(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let global = planted_global(&mut rng);
        let (train, valid) = local_split(&mut rng);
        Fixture { global, train, valid }
    }

    fn view(&self) -> ClientView<'_> {
        ClientView {
            local_train: &self.train,
            local_valid: &self.valid,
            global: &self.global,
        }
    }

    fn state(&self, cfg: &GdveConfig, seed: u64) -> GdveState {
        let mut rng = Rng::new(seed);
        let enc = pretrain_encoder(&self.global, cfg, &mut rng).unwrap();
        let enc = Arc::new(Encoder::new(enc, &self.global).unwrap());
        GdveState::new(enc, &self.view(), cfg, rng).unwrap()
    }
}

struct Toy {
    users: DenseMatrix,
    items: DenseMatrix,
    edges: Vec<Edge>,
    validity: Vec<f64>,
}

impl Toy {
    fn new(r: usize, n_edges: usize, rng: &mut Rng) -> Self {
        let users = DenseMatrix::from_fn(3, r, |_, _| rng.normal());
        let items = DenseMatrix::from_fn(4, r, |_, _| rng.normal());
        let edges = (0..n_edges).map(|k| Edge::new(k % 3, (k * 7 + 1) % 4)).collect();
        let validity = (0..n_edges).map(|_| rng.normal()).collect();
        Toy {
            users,
            items,
            edges,
            validity,
        }
    }

    fn inputs(&self) -> EstimatorInputs<'_> {
        EstimatorInputs {
            user_repr: &self.users,
            item_repr: &self.items,
            edges: &self.edges,
            validity: &self.validity,
        }
    }
}

#[test]
fn zero_estimator_gives_one_half() {
    let mut rng = Rng::new(1);
    let toy = Toy::new(4, 6, &mut rng);
    let probs = selection_probabilities(&ProbEstimatorParams::zeros(4), &toy.inputs()).unwrap();
    assert!(probs.iter().all(|&p| p == 0.5));
}

#[test]
fn probabilities_are_clamped() {
    let mut rng = Rng::new(2);
    let toy = Toy::new(4, 5, &mut rng);
    let mut params = ProbEstimatorParams::zeros(4);
    params.b5[0] = 100.0;
    let hi = selection_probabilities(&params, &toy.inputs()).unwrap();
    assert!(hi.iter().all(|&p| p == 1.0 - PROB_EPS));
    params.b5[0] = -100.0;
    let lo = selection_probabilities(&params, &toy.inputs()).unwrap();
    assert!(lo.iter().all(|&p| p == PROB_EPS));
}

#[test]
fn validity_input_reaches_the_output() {
    let mut rng = Rng::new(3);
    let mut toy = Toy::new(4, 5, &mut rng);
    let params = ProbEstimatorParams::init(4, &mut rng);
    let before = selection_probabilities(&params, &toy.inputs()).unwrap();
    toy.validity.iter_mut().for_each(|v| *v = 2.0 * *v + 1.0);
    let after = selection_probabilities(&params, &toy.inputs()).unwrap();
    assert!(before.iter().zip(&after).any(|(a, b)| (a - b).abs() > 1e-9));
}

#[test]
fn estimator_rejects_bad_inputs() {
    let mut rng = Rng::new(4);
    let toy = Toy::new(4, 5, &mut rng);
    assert!(selection_probabilities(&ProbEstimatorParams::zeros(3), &toy.inputs()).is_err());
    let short = EstimatorInputs {
        validity: &toy.validity[..2],
        ..toy.inputs()
    };
    assert!(selection_probabilities(&ProbEstimatorParams::zeros(4), &short).is_err());
}

#[test]
fn mask_frequencies() {
    let mut rng = Rng::new(5);
    let near_one = sample_mask(&vec![1.0 - PROB_EPS; 1000], &mut rng);
    assert!(near_one.iter().filter(|&&s| s).count() >= 995);
    let half = sample_mask(&vec![0.5; 10_000], &mut rng);
    let frac = half.iter().filter(|&&s| s).count() as f64 / 1e4;
    assert!((0.48..=0.52).contains(&frac), "{frac}");
    assert_eq!(sample_mask(&[0.3; 50], &mut Rng::new(9)), sample_mask(&[0.3; 50], &mut Rng::new(9)));
}

#[test]
fn mask_counts_pass_chi_square() {
    // per seed: 2000 draws at p = 0.3, statistic against Binomial expectations
    let mut stat = 0.0;
    for seed in 0..20 {
        let n = sample_mask(&vec![0.3; 2000], &mut Rng::new(100 + seed))
            .iter()
            .filter(|&&s| s)
            .count() as f64;
        let (e1, e0) = (600.0, 1400.0);
        stat += (n - e1).powi(2) / e1 + (2000.0 - n - e0).powi(2) / e0;
    }
    // 20 degrees of freedom; 99.9th percentile is about 45.3
    assert!(stat < 45.3, "{stat}");
}

#[test]
fn log_likelihood_gradient_matches_finite_differences() {
    for seed in 0..3 {
        let mut rng = Rng::new(10 + seed);
        let toy = Toy::new(3, 7, &mut rng);
        let mut params = ProbEstimatorParams::init(3, &mut rng);
        for b in [&mut params.b1, &mut params.b2, &mut params.b3, &mut params.b4] {
            b.iter_mut().for_each(|v| *v = 0.1 * rng.normal());
        }
        let mask: Vec<bool> = (0..7).map(|_| rng.bernoulli(0.5)).collect();
        let (_, grads) = mask_log_likelihood(&params, &toy.inputs(), &mask, 3).unwrap();
        let err = grad_check(
            |x| {
                let mut p = params.clone();
                p.assign_flat(x).unwrap();
                mask_log_likelihood(&p, &toy.inputs(), &mask, 3).unwrap().0
            },
            &grads.flatten(),
            &params.flatten(),
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn positive_reward_raises_the_selected_edge() {
    let mut rng = Rng::new(6);
    let toy = Toy::new(4, 1, &mut rng);
    let mut params = ProbEstimatorParams::zeros(4);
    let g = reinforce_gradient(&params, &toy.inputs(), &[true], 1, 0.5).unwrap();
    Optimizer::sgd(0.1).step(&mut params, &g).unwrap();
    let p = selection_probabilities(&params, &toy.inputs()).unwrap()[0];
    assert!(p > 0.5, "{p}");
}

fn all_masks(n: usize) -> Vec<Vec<bool>> {
    (0..1u32 << n).map(|bits| (0..n).map(|e| bits >> e & 1 == 1).collect()).collect()
}

fn mask_prob(probs: &[f64], mask: &[bool]) -> f64 {
    probs.iter().zip(mask).map(|(&p, &s)| if s { p } else { 1.0 - p }).product()
}

/// Arbitrary fixed reward of a mask.
fn toy_reward(mask: &[bool]) -> f64 {
    mask.iter().enumerate().map(|(e, &s)| if s { [0.7, -0.4, 0.25][e] } else { 0.1 }).sum::<f64>() - 0.2
}

#[test]
fn reinforce_is_unbiased_by_enumeration() {
    let mut rng = Rng::new(7);
    let toy = Toy::new(2, 3, &mut rng);
    let params = ProbEstimatorParams::init(2, &mut rng);
    let probs = selection_probabilities(&params, &toy.inputs()).unwrap();
    assert!(probs.iter().all(|&p| p > 0.01 && p < 0.99));
    // Σ_m P(m) · (−R(m) ∇ ln P(m)) is −∇E[R]
    let mut exact = vec![0.0; params.num_params()];
    for m in all_masks(3) {
        let g = reinforce_gradient(&params, &toy.inputs(), &m, 1, toy_reward(&m)).unwrap();
        let w = mask_prob(&probs, &m);
        for (a, b) in exact.iter_mut().zip(g.flatten()) {
            *a -= w * b;
        }
    }
    let expected = |flat: &[f64]| {
        let mut p = params.clone();
        p.assign_flat(flat).unwrap();
        let probs = selection_probabilities(&p, &toy.inputs()).unwrap();
        all_masks(3).iter().map(|m| mask_prob(&probs, m) * toy_reward(m)).sum::<f64>()
    };
    let point = params.flatten();
    let h = 1e-6;
    let mut x = point.clone();
    // the output layers plus a spread of earlier coordinates
    let n = point.len();
    let coords: Vec<usize> = (n - 61..n).chain((0..n - 61).step_by(37)).collect();
    for &c in &coords {
        x[c] = point[c] + h;
        let plus = expected(&x);
        x[c] = point[c] - h;
        let minus = expected(&x);
        x[c] = point[c];
        let fd = (plus - minus) / (2.0 * h);
        assert!((fd - exact[c]).abs() < 1e-8, "coord {c}: {fd} vs {}", exact[c]);
    }
    assert!(exact[n - 1].abs() > 1e-3);

    // Monte Carlo average within three standard errors
    let draws = 4000;
    let watch: Vec<usize> = (n - 6..n).collect();
    let mut sum = vec![0.0; watch.len()];
    let mut sq = vec![0.0; watch.len()];
    let mut mc_rng = Rng::new(77);
    for _ in 0..draws {
        let m = sample_mask(&probs, &mut mc_rng);
        let g = reinforce_gradient(&params, &toy.inputs(), &m, 1, toy_reward(&m)).unwrap().flatten();
        for (k, &c) in watch.iter().enumerate() {
            sum[k] -= g[c];
            sq[k] += g[c] * g[c];
        }
    }
    for (k, &c) in watch.iter().enumerate() {
        let mean = sum[k] / draws as f64;
        let var = sq[k] / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        assert!((mean - exact[c]).abs() <= 3.0 * se + 1e-12, "coord {c}: {mean} vs {}", exact[c]);
    }
}

#[test]
fn reward_and_baseline_arithmetic() {
    let (r, b) = reward(0.5, 0.0, 0.9);
    assert!((r - 0.5).abs() < 1e-15);
    assert!((b - 0.05).abs() < 1e-15);
    let (r, b) = reward(0.2, 0.3, 0.5);
    assert!((r + 0.1).abs() < 1e-15 && (b - 0.25).abs() < 1e-15);
}

#[test]
fn candidates_follow_batch_order() {
    let global = InteractionGraph::new(3, 3, vec![Edge::new(0, 1), Edge::new(2, 0), Edge::new(2, 2)]).unwrap();
    assert_eq!(
        candidate_edges(&global, &[2, 0]),
        vec![Edge::new(2, 0), Edge::new(2, 2), Edge::new(0, 1)]
    );
    assert!(candidate_edges(&global, &[1]).is_empty());
}

#[test]
fn validity_of_zero_model_is_zero() {
    let fx = Fixture::new(1);
    let valid = GcfParams::zeros(fx.train.num_users(), 30, 4, 2);
    let s = validity_scores(&valid, &fx.train, &fx.global, &[3, 25, 7]).unwrap();
    assert_eq!(s.shape(), (3, 30));
    assert!(s.as_slice().iter().all(|&v| v == 0.0));
    assert!(validity_scores(&valid, &fx.train, &fx.global, &[40]).is_err());
}

#[test]
fn validity_matches_one_layer_by_hand() {
    let fx = Fixture::new(2);
    let mut rng = Rng::new(3);
    let mut valid = GcfParams::init(fx.train.num_users(), 30, 5, 1, &mut rng);
    valid.layers[0].bias.iter_mut().for_each(|b| *b = 0.1 * rng.normal());
    let batch = [4usize, 33];
    let got = validity_scores(&valid, &fx.train, &fx.global, &batch).unwrap();

    // augmented adjacency built by hand
    let p = fx.train.num_users();
    let mut nbrs_u: Vec<Vec<usize>> = (0..p).map(|u| fx.train.user_items(u).iter().map(|&i| i as usize).collect()).collect();
    for &g in &batch {
        nbrs_u.push(fx.global.user_items(g).iter().map(|&i| i as usize).collect());
    }
    let mut deg_i = vec![0usize; 30];
    for list in &nbrs_u {
        for &i in list {
            deg_i[i] += 1;
        }
    }
    let d = 5;
    let layer = &valid.layers[0];
    let apply = |e: &[f64], s: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|j| {
                let mut z = layer.bias[j];
                for k in 0..d {
                    z += (e[k] + s[k]) * layer.w1.get(k, j) + e[k] * s[k] * layer.w2.get(k, j);
                }
                leaky_relu(z, LEAKY_SLOPE)
            })
            .collect()
    };
    let user0 = |u: usize| -> Vec<f64> {
        if u < p {
            valid.user_emb.row(u).to_vec()
        } else {
            vec![0.0; d]
        }
    };
    let item_repr: Vec<Vec<f64>> = (0..30)
        .map(|i| {
            let mut s = vec![0.0; d];
            for (u, list) in nbrs_u.iter().enumerate() {
                if list.contains(&i) {
                    let w = 1.0 / ((list.len() * deg_i[i]) as f64).sqrt();
                    for (sk, ek) in s.iter_mut().zip(user0(u)) {
                        *sk += w * ek;
                    }
                }
            }
            let e = valid.item_emb.row(i).to_vec();
            let mut out = e.clone();
            out.extend(apply(&e, &s));
            out
        })
        .collect();
    for (b, _) in batch.iter().enumerate() {
        let list = &nbrs_u[p + b];
        let mut s = vec![0.0; d];
        for &i in list {
            let w = 1.0 / ((list.len() * deg_i[i]) as f64).sqrt();
            for (sk, ek) in s.iter_mut().zip(valid.item_emb.row(i)) {
                *sk += w * ek;
            }
        }
        let mut repr = vec![0.0; d];
        repr.extend(apply(&vec![0.0; d], &s));
        for (i, ir) in item_repr.iter().enumerate() {
            let want: f64 = repr.iter().zip(ir).map(|(a, b)| a * b).sum();
            assert!((got.get(b, i) - want).abs() < 1e-12, "({b}, {i})");
        }
    }
}

#[test]
fn pretraining_is_deterministic_and_zero_epochs_is_init() {
    let fx = Fixture::new(3);
    let mut cfg = small_cfg();
    let a = pretrain_encoder(&fx.global, &cfg, &mut Rng::new(4)).unwrap();
    let b = pretrain_encoder(&fx.global, &cfg, &mut Rng::new(4)).unwrap();
    assert_eq!(a, b);
    cfg.pretrain_epochs = 0;
    let c = pretrain_encoder(&fx.global, &cfg, &mut Rng::new(4)).unwrap();
    assert_eq!(c, GcfParams::init(40, 30, cfg.dim, cfg.num_layers, &mut Rng::new(4)));
    assert!(pretrain_encoder(&InteractionGraph::empty(3, 3), &cfg, &mut Rng::new(4)).is_err());
}

#[test]
fn encoder_separates_planted_blocks() {
    let fx = Fixture::new(4);
    let mut cfg = small_cfg();
    cfg.pretrain_epochs = 30;
    cfg.train.batch_size = 64;
    let params = pretrain_encoder(&fx.global, &cfg, &mut Rng::new(5)).unwrap();
    let enc = Encoder::new(params, &fx.global).unwrap();
    let (mut within, mut cross) = (0.0, 0.0);
    for u in 0..40 {
        for i in 0..30 {
            let s = crate::gcf::score(enc.user_repr().row(u), enc.item_repr().row(i));
            if (u < 20) == (i < 15) {
                within += s;
            } else {
                cross += s;
            }
        }
    }
    assert!(within / 600.0 > cross / 600.0, "{within} vs {cross}");
}

#[test]
fn training_leaves_encoder_and_valid_predictor_frozen() {
    let fx = Fixture::new(5);
    let cfg = small_cfg();
    let mut state = fx.state(&cfg, 6);
    let enc = state.encoder.params().clone();
    let valid = state.valid.clone();
    let prob = state.prob.clone();
    assert_eq!(state.run_training(&fx.view(), &cfg).unwrap(), cfg.max_batches);
    assert_eq!(state.encoder.params(), &enc);
    assert_eq!(state.valid, valid);
    assert_ne!(state.prob, prob);
    assert_eq!(state.history.len(), cfg.max_batches);
}

#[test]
fn zero_batches_change_nothing() {
    let fx = Fixture::new(6);
    let mut cfg = small_cfg();
    cfg.max_batches = 0;
    let mut state = fx.state(&cfg, 7);
    let prob = state.prob.clone();
    let task = state.task.clone();
    assert_eq!(state.run_training(&fx.view(), &cfg).unwrap(), 0);
    assert_eq!(state.prob, prob);
    assert_eq!(state.task, task);
    assert_eq!(state.baseline, 0.0);
}

#[test]
fn plateau_stops_training() {
    let fx = Fixture::new(7);
    let mut cfg = small_cfg();
    cfg.max_batches = 50;
    cfg.plateau_window = 2;
    cfg.plateau_tol = 10.0;
    let mut state = fx.state(&cfg, 8);
    // nothing beats the first baseline by 10, so two more batches end it
    assert_eq!(state.run_training(&fx.view(), &cfg).unwrap(), 3);
    assert!(state.converged);
}

#[test]
fn empty_selection_without_structure_changes_nothing() {
    let fx = Fixture::new(8);
    let mut cfg = small_cfg();
    let mut rng = Rng::new(9);
    let valid = pretrain_valid_predictor(&fx.train, &cfg, &mut rng).unwrap();
    let enc = GcfParams::init(40, 30, cfg.dim, cfg.num_layers, &mut rng);
    let mut task = init_task_params(&valid, &enc).unwrap();
    let before = task.clone();
    let mut opt = Optimizer::adam(0.01);
    cfg.train.structure = None;
    let g = train_task_predictor(&mut task, &mut opt, &fx.view(), &[1, 2], &[], &cfg.train, &mut Rng::new(10)).unwrap();
    assert_eq!(task, before);
    assert_eq!(g.num_edges(), fx.train.num_edges());
    assert!(train_task_predictor(&mut task, &mut opt, &fx.view(), &[], &[], &cfg.train, &mut Rng::new(10)).is_err());
}

#[test]
fn task_step_matches_hand_assembled_objective() {
    // one SGD step equals params minus lr times the gradient of
    // (Σ BPR + structure·weight) / |B| + regularisation, assembled from the loss ops
    let fx = Fixture::new(12);
    let cfg = small_cfg();
    let mut rng = Rng::new(13);
    let valid = pretrain_valid_predictor(&fx.train, &cfg, &mut rng).unwrap();
    let enc = GcfParams::init(40, 30, cfg.dim, cfg.num_layers, &mut rng);
    let task = init_task_params(&valid, &enc).unwrap();
    let batch = [3usize, 21, 30];
    let selected: Vec<Edge> = candidate_edges(&fx.global, &batch).into_iter().step_by(2).collect();

    let mut stepped = task.clone();
    let mut opt = Optimizer::sgd(0.05);
    let graph =
        train_task_predictor(&mut stepped, &mut opt, &fx.view(), &batch, &selected, &cfg.train, &mut Rng::new(14))
            .unwrap();

    let p = fx.train.num_users();
    let mut neg_rng = Rng::new(14);
    let triples: Vec<crate::gcf::BprTriple> = selected
        .iter()
        .map(|e| {
            let row = p + e.user as usize;
            let n = crate::gcf::sample_negative(&graph, row, &mut neg_rng).unwrap();
            crate::gcf::BprTriple::new(row, e.item as usize, n)
        })
        .collect();
    let adj = normalize(&graph);
    let (_, bpr) = crate::gcf::bpr_loss_and_grad(&task, &adj, &triples, 0.0).unwrap();
    let rows: Vec<usize> = batch.iter().map(|&g| p + g).collect();
    let sc = cfg.train.structure.as_ref().unwrap();
    let (_, st) = crate::gcf::structure_loss_and_grad(&task, &adj, &rows, sc.tau, &sc.even_layers).unwrap();
    let mut reg = task.zeros_like();
    crate::gcf::regularization(&task, &triples, cfg.train.lambda, 1.0 / 3.0, &mut reg);
    let want: Vec<f64> = task
        .flatten()
        .iter()
        .zip(bpr.flatten())
        .zip(st.flatten())
        .zip(reg.flatten())
        .map(|(((x, b), s), r)| x - 0.05 * (b / 3.0 + sc.weight * s / 3.0 + r))
        .collect();
    for (a, b) in stepped.flatten().iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn zero_estimator_keeps_about_half() {
    let fx = Fixture::new(9);
    let cfg = small_cfg();
    let mut state = fx.state(&cfg, 10);
    state.prob = ProbEstimatorParams::zeros(state.prob.repr_width());
    let sel = state.select_augmentation(&fx.view(), &cfg, &mut Rng::new(11)).unwrap();
    assert!((sel.ratio - 0.5).abs() < 0.06, "{}", sel.ratio);
    assert_eq!(sel.mean_prob, 0.5);
    assert!(sel.edges.iter().all(|e| fx.global.has_edge(e.user as usize, e.item as usize)));
}

#[test]
fn state_needs_validation_edges() {
    let fx = Fixture::new(10);
    let cfg = small_cfg();
    let enc = pretrain_encoder(&fx.global, &cfg, &mut Rng::new(1)).unwrap();
    let enc = Arc::new(Encoder::new(enc, &fx.global).unwrap());
    let view = ClientView {
        local_valid: &[],
        ..fx.view()
    };
    assert!(GdveState::new(enc, &view, &cfg, Rng::new(2)).is_err());
}

#[test]
fn checkpoint_resumes_identically() {
    let fx = Fixture::new(11);
    let mut cfg = small_cfg();
    cfg.max_batches = 2;
    let mut state = fx.state(&cfg, 12);
    state.run_training(&fx.view(), &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gdve.json");
    GdveCheckpoint::from_state(&state).save(&path).unwrap();
    let mut restored = GdveCheckpoint::load(&path).unwrap().into_state(&fx.global).unwrap();
    assert_eq!(restored.prob, state.prob);
    assert_eq!(restored.baseline, state.baseline);
    let a = state.train_batch(&fx.view(), &cfg).unwrap();
    let b = restored.train_batch(&fx.view(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(restored.prob, state.prob);

    let mut ck = GdveCheckpoint::from_state(&state);
    ck.version = 99;
    assert!(ck.into_state(&fx.global).is_err());
    assert!(GdveCheckpoint::from_state(&state)
        .into_state(&InteractionGraph::empty(3, 30))
        .is_err());
}
