//! FedAvg over clients that train GCF models on locally augmented graphs.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::gcf::{propagate, train_epoch, EpochStats, GcfParams, LayerWeights, StructureConfig, TrainConfig};
use crate::gdve::{pretrain_encoder, ClientView, Encoder, GdveConfig, GdveState};
use crate::graph::{merge_padded, normalize, Edge, InteractionGraph, NormalizedAdjacency};
use crate::numerics::{stream, DenseMatrix, Rng};
use crate::optim::{Optimizer, OptimizerKind, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Local data plus the full global set, BPR only.
    Fedngcf,
    /// GDVE-selected global edges, BPR plus structure loss.
    Fedgdve,
    /// GDVE-selected global edges, BPR only.
    FedgdveNoSl,
    /// Full global set, BPR plus structure loss.
    FedgdveNoGdve,
    /// One model trained on all data in one place.
    CentralizedNgcf,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Fedngcf,
        Method::Fedgdve,
        Method::FedgdveNoSl,
        Method::FedgdveNoGdve,
        Method::CentralizedNgcf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fedngcf => "fedngcf",
            Method::Fedgdve => "fedgdve",
            Method::FedgdveNoSl => "fedgdve_no_sl",
            Method::FedgdveNoGdve => "fedgdve_no_gdve",
            Method::CentralizedNgcf => "centralized_ngcf",
        }
    }

    pub fn uses_gdve(self) -> bool {
        matches!(self, Method::Fedgdve | Method::FedgdveNoSl)
    }

    pub fn uses_structure_loss(self) -> bool {
        matches!(self, Method::Fedgdve | Method::FedgdveNoGdve)
    }

    pub fn is_federated(self) -> bool {
        self != Method::CentralizedNgcf
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// What a client uploads: the item table and propagation weights. User rows
/// never leave the client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedParams {
    pub item_emb: DenseMatrix,
    pub layers: Vec<LayerWeights>,
}

impl SharedParams {
    pub fn from_params(params: &GcfParams) -> Self {
        SharedParams {
            item_emb: params.item_emb.clone(),
            layers: params.layers.clone(),
        }
    }

    /// Overwrites the shared blocks of `params`.
    pub fn install(&self, params: &mut GcfParams) -> Result<()> {
        if params.item_emb.shape() != self.item_emb.shape() || params.layers.len() != self.layers.len() {
            return Err(Error::shape("SharedParams::install", "model layout differs"));
        }
        params.item_emb.clone_from(&self.item_emb);
        params.layers.clone_from(&self.layers);
        params.check_shapes()
    }
}

impl ParamSet for SharedParams {
    fn blocks(&self) -> Vec<&[f64]> {
        let mut out = vec![self.item_emb.as_slice()];
        for l in &self.layers {
            out.push(l.w1.as_slice());
            out.push(l.w2.as_slice());
            out.push(&l.bias);
        }
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.item_emb.as_mut_slice()];
        for l in &mut self.layers {
            out.push(l.w1.as_mut_slice());
            out.push(l.w2.as_mut_slice());
            out.push(&mut l.bias);
        }
        out
    }
}

/// Weighted element-wise mean `Σ w_k p_k / Σ w_k`.
pub fn aggregate(updates: &[(SharedParams, f64)]) -> Result<SharedParams> {
    let (first, _) = updates.first().ok_or(Error::Empty("aggregation updates"))?;
    let total: f64 = updates.iter().map(|(_, w)| *w).sum();
    if updates.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("aggregation weights must be finite and non-negative"));
    }
    if !(total > 0.0) {
        return Err(Error::invalid("aggregation weights sum to zero"));
    }
    let layout: Vec<usize> = first.blocks().iter().map(|b| b.len()).collect();
    for (p, _) in updates {
        let other: Vec<usize> = p.blocks().iter().map(|b| b.len()).collect();
        if other != layout || p.item_emb.shape() != first.item_emb.shape() {
            return Err(Error::shape("aggregate", "client updates differ in layout"));
        }
    }
    let mut out = first.clone();
    let coeffs: Vec<f64> = updates.iter().map(|(_, w)| w / total).collect();
    let inputs: Vec<Vec<&[f64]>> = updates.iter().map(|(p, _)| p.blocks()).collect();
    for (b, dst) in out.blocks_mut().into_iter().enumerate() {
        for (j, v) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (c, blocks) in coeffs.iter().zip(&inputs) {
                let x = blocks[b][j];
                acc += c * x;
                lo = lo.min(x);
                hi = hi.max(x);
            }
            // rounding must not leave the hull of the inputs
            *v = acc.clamp(lo, hi);
        }
    }
    Ok(out)
}

/// A client's private data, all in local user indices over the shared catalog.
#[derive(Clone, Debug)]
pub struct ClientData {
    pub train: InteractionGraph,
    pub valid: Vec<Edge>,
    pub test: Vec<Edge>,
}

impl ClientData {
    /// Training plus validation edges, excluded from test rankings.
    pub fn known(&self) -> InteractionGraph {
        let mut edges = self.train.edges().to_vec();
        edges.extend_from_slice(&self.valid);
        InteractionGraph::new_dedup(self.train.num_users(), self.train.num_items(), edges)
            .expect("validation edges lie in the training graph's range")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FederationConfig {
    pub method: Method,
    pub rounds: usize,
    pub epochs_per_round: usize,
    pub dim: usize,
    pub num_layers: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub batch_size: usize,
    pub lambda: f64,
    pub structure: StructureConfig,
    pub eval_k: usize,
    pub seed: u64,
    pub gdve: GdveConfig,
    /// All clients reuse one encoder pre-trained on the global graph.
    pub shared_encoder: bool,
}

impl FederationConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            lambda: self.lambda,
            structure: self.method.uses_structure_loss().then(|| self.structure.clone()),
        }
    }
}

/// One client's live state.
#[derive(Debug)]
pub struct ClientState {
    pub id: usize,
    pub data: ClientData,
    pub known: InteractionGraph,
    /// User rows `0..P_local` are the client's users, then one per global user.
    pub params: GcfParams,
    pub optimizer: Optimizer,
    pub gdve: Option<GdveState>,
    pub rng: Rng,
    pub selection: Option<Vec<Edge>>,
    pub selected_ratio: Option<f64>,
    round_graph: Option<(InteractionGraph, NormalizedAdjacency)>,
}

impl ClientState {
    /// FedAvg weight: the number of local training edges.
    pub fn weight(&self) -> f64 {
        self.data.train.num_edges() as f64
    }

    fn build_graph(&mut self, global: &InteractionGraph, method: Method) -> Result<()> {
        if self.round_graph.is_some() && !method.uses_gdve() {
            return Ok(());
        }
        let graph = round_graph(&self.data, global, method, self.selection.as_deref())?;
        let adj = normalize(&graph);
        self.round_graph = Some((graph, adj));
        Ok(())
    }

    /// Installs `shared`, trains on this round's graph, returns the upload.
    pub fn local_round(
        &mut self,
        shared: &SharedParams,
        global: &InteractionGraph,
        cfg: &FederationConfig,
    ) -> Result<(SharedParams, f64, Vec<EpochStats>)> {
        shared.install(&mut self.params)?;
        self.build_graph(global, cfg.method)?;
        let (graph, adj) = self.round_graph.as_ref().expect("built above");
        let train_cfg = cfg.train_config();
        let mut stats = Vec::with_capacity(cfg.epochs_per_round);
        for _ in 0..cfg.epochs_per_round {
            stats.push(train_epoch(&mut self.params, &mut self.optimizer, graph, adj, &train_cfg, &mut self.rng)?);
        }
        Ok((SharedParams::from_params(&self.params), self.weight(), stats))
    }

    /// Test metrics of the current model over this round's graph.
    pub fn evaluate(&self, k: usize) -> Result<ClientReport> {
        let (_, adj) = self
            .round_graph
            .as_ref()
            .ok_or_else(|| Error::invalid("client has not trained yet"))?;
        let mut report = evaluate_client(&self.params, adj, &self.known, &self.data.test, k)?;
        report.client = self.id;
        report.selected_ratio = self.selected_ratio;
        Ok(report)
    }
}

/// The graph a client trains on in a round: its training edges plus the full
/// global set or its current selection, global user `g` at row `P_local + g`.
pub fn round_graph(
    data: &ClientData,
    global: &InteractionGraph,
    method: Method,
    selection: Option<&[Edge]>,
) -> Result<InteractionGraph> {
    match method {
        Method::Fedngcf | Method::FedgdveNoGdve => merge_padded(&data.train, global.edges(), global.num_users()),
        Method::Fedgdve | Method::FedgdveNoSl => merge_padded(&data.train, selection.unwrap_or(&[]), global.num_users()),
        Method::CentralizedNgcf => Err(Error::invalid("centralized training has no clients")),
    }
}

/// Test metrics of `params` propagated over `adj`. A client without test
/// edges reports zeros with zero weight.
pub fn evaluate_client(
    params: &GcfParams,
    adj: &NormalizedAdjacency,
    known: &InteractionGraph,
    test: &[Edge],
    k: usize,
) -> Result<ClientReport> {
    let mut report = ClientReport {
        client: 0,
        precision: 0.0,
        recall: 0.0,
        ndcg: 0.0,
        test_users: 0,
        test_edges: 0,
        selected_ratio: None,
        train_loss: None,
    };
    if test.is_empty() {
        return Ok(report);
    }
    let fwd = propagate(params, adj)?;
    let (users, items) = fwd.embeddings.final_representation();
    let res = evaluate(&users, &items, known, test, k)?;
    report.precision = res.precision;
    report.recall = res.recall;
    report.ndcg = res.ndcg;
    report.test_users = res.num_users();
    report.test_edges = test.len();
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClientReport {
    pub client: usize,
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
    pub test_users: usize,
    pub test_edges: usize,
    pub selected_ratio: Option<f64>,
    pub train_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub clients: Vec<ClientReport>,
    /// Test-edge-weighted means over clients.
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
    pub selected_ratio: Option<f64>,
    pub seconds: f64,
}

impl RoundReport {
    pub fn from_clients(round: usize, clients: Vec<ClientReport>, seconds: f64) -> Self {
        let total: f64 = clients.iter().map(|c| c.test_edges as f64).sum();
        let wmean = |f: &dyn Fn(&ClientReport) -> f64| {
            if total == 0.0 {
                0.0
            } else {
                clients.iter().map(|c| c.test_edges as f64 * f(c)).sum::<f64>() / total
            }
        };
        let ratios: Vec<f64> = clients.iter().filter_map(|c| c.selected_ratio).collect();
        RoundReport {
            round,
            precision: wmean(&|c| c.precision),
            recall: wmean(&|c| c.recall),
            ndcg: wmean(&|c| c.ndcg),
            selected_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            clients,
            seconds,
        }
    }
}

/// Per-client estimators ready for selection. Each client pre-trains its own
/// encoder on the global graph unless `cfg.shared_encoder` is set.
pub fn train_gdve_states(
    global: &InteractionGraph,
    clients: &[ClientData],
    cfg: &FederationConfig,
) -> Result<Vec<GdveState>> {
    if global.is_empty() {
        return Err(Error::Empty("global graph (GDVE needs global data)"));
    }
    let root = Rng::new(cfg.seed);
    let shared = if cfg.shared_encoder {
        let mut rng = root.fork(stream::GDVE);
        let params = pretrain_encoder(global, &cfg.gdve, &mut rng)?;
        Some(Arc::new(Encoder::new(params, global)?))
    } else {
        None
    };
    clients
        .par_iter()
        .enumerate()
        .map(|(k, data)| {
            let mut rng = root.fork(stream::client(k)).fork(stream::GDVE);
            let encoder = match &shared {
                Some(e) => Arc::clone(e),
                None => {
                    let params = pretrain_encoder(global, &cfg.gdve, &mut rng)?;
                    Arc::new(Encoder::new(params, global)?)
                }
            };
            let view = ClientView {
                local_train: &data.train,
                local_valid: &data.valid,
                global,
            };
            let mut state = GdveState::new(encoder, &view, &cfg.gdve, rng)?;
            let batches = state.run_training(&view, &cfg.gdve)?;
            info!(
                "client {k}: GDVE trained for {batches} batches (converged: {}, baseline {:.4})",
                state.converged, state.baseline
            );
            Ok(state)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Client {
            round: 0,
            client: usize::MAX,
            source: Box::new(e),
        })
}

/// Server plus clients.
#[derive(Debug)]
pub struct Federation {
    pub cfg: FederationConfig,
    pub global: InteractionGraph,
    pub clients: Vec<ClientState>,
    pub shared: SharedParams,
    pub round: usize,
}

impl Federation {
    /// Initialises the server model and every client. GDVE methods need
    /// `gdve` states (one per client); their encoders seed the global user rows.
    pub fn new(
        cfg: FederationConfig,
        global: InteractionGraph,
        clients: Vec<ClientData>,
        gdve: Option<Vec<GdveState>>,
    ) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::Empty("clients"));
        }
        if !cfg.method.is_federated() {
            return Err(Error::invalid("centralized training does not federate"));
        }
        let q = global.num_items();
        if clients.iter().any(|c| c.train.num_items() != q) {
            return Err(Error::shape("Federation::new", "clients do not share the global catalog"));
        }
        let root = Rng::new(cfg.seed);
        let mut server_rng = root.fork(stream::SERVER);
        let server = GcfParams::init(0, q, cfg.dim, cfg.num_layers, &mut server_rng);
        let shared = SharedParams::from_params(&server);

        let mut gdve: Vec<Option<GdveState>> = match gdve {
            Some(states) if cfg.method.uses_gdve() => {
                if states.len() != clients.len() {
                    return Err(Error::invalid("one GDVE state per client is required"));
                }
                states.into_iter().map(Some).collect()
            }
            Some(_) => return Err(Error::invalid(format!("{} does not use GDVE", cfg.method))),
            None if cfg.method.uses_gdve() => {
                if global.is_empty() {
                    clients.iter().map(|_| None).collect()
                } else {
                    return Err(Error::invalid("GDVE method started without GDVE states"));
                }
            }
            None => clients.iter().map(|_| None).collect(),
        };

        let g = global.num_users();
        let mut states = Vec::with_capacity(clients.len());
        for (k, data) in clients.into_iter().enumerate() {
            let crng = root.fork(stream::client(k));
            let mut init_rng = crng.fork(stream::INIT);
            let p = data.train.num_users();
            let mut params = GcfParams::init(p + g, q, cfg.dim, cfg.num_layers, &mut init_rng);
            shared.install(&mut params)?;
            let state = gdve[k].take();
            if let Some(s) = &state {
                let enc = &s.encoder.params().user_emb;
                if enc.cols() != cfg.dim {
                    return Err(Error::shape("Federation::new", "encoder width differs from model width"));
                }
                for u in 0..g {
                    params.user_emb.row_mut(p + u).copy_from_slice(enc.row(u));
                }
            }
            states.push(ClientState {
                id: k,
                known: data.known(),
                data,
                params,
                optimizer: Optimizer::new(cfg.optimizer, cfg.lr),
                gdve: state,
                rng: crng.fork(stream::TRAIN),
                selection: None,
                selected_ratio: None,
                round_graph: None,
            });
        }
        Ok(Federation {
            cfg,
            global,
            clients: states,
            shared,
            round: 0,
        })
    }

    /// Refresh selections, train every client, aggregate, redistribute, evaluate.
    pub fn run_round(&mut self) -> Result<RoundReport> {
        let start = Instant::now();
        self.round += 1;
        let round = self.round;
        let cfg = &self.cfg;
        let global = &self.global;
        let shared = &self.shared;
        let results: Vec<(SharedParams, f64, Vec<EpochStats>)> = self
            .clients
            .par_iter_mut()
            .map(|client| {
                let id = client.id;
                let wrap = |e: Error| Error::Client {
                    round,
                    client: id,
                    source: Box::new(e),
                };
                if cfg.method.uses_gdve() {
                    let mut mask_rng = Rng::new(cfg.seed)
                        .fork(stream::client(client.id))
                        .fork(stream::MASKS)
                        .fork(round as u64);
                    match client.gdve.as_mut() {
                        Some(state) => {
                            let view = ClientView {
                                local_train: &client.data.train,
                                local_valid: &client.data.valid,
                                global,
                            };
                            let sel = state.select_augmentation(&view, &cfg.gdve, &mut mask_rng).map_err(wrap)?;
                            client.selected_ratio = Some(sel.ratio);
                            client.selection = Some(sel.edges);
                        }
                        None => {
                            client.selected_ratio = Some(0.0);
                            client.selection = Some(Vec::new());
                        }
                    }
                }
                client.local_round(shared, global, cfg).map_err(wrap)
            })
            .collect::<Result<_>>()?;
        let losses: Vec<Option<f64>> = results
            .iter()
            .map(|(_, _, s)| s.last().map(|e| e.mean_bpr))
            .collect();
        let updates: Vec<(SharedParams, f64)> = results.into_iter().map(|(p, w, _)| (p, w)).collect();
        self.shared = aggregate(&updates)?;
        let shared = &self.shared;
        let k = self.cfg.eval_k;
        let reports: Vec<ClientReport> = self
            .clients
            .par_iter_mut()
            .zip(losses)
            .map(|(client, loss)| {
                shared.install(&mut client.params)?;
                let mut r = client.evaluate(k).map_err(|e| Error::Client {
                    round,
                    client: client.id,
                    source: Box::new(e),
                })?;
                r.train_loss = loss;
                Ok(r)
            })
            .collect::<Result<_>>()?;
        let report = RoundReport::from_clients(round, reports, start.elapsed().as_secs_f64());
        info!(
            "{} round {round}: R@{k} {:.4} N@{k} {:.4} ({:.1}s)",
            self.cfg.method, report.recall, report.ndcg, report.seconds
        );
        Ok(report)
    }

    pub fn run(&mut self) -> Result<Vec<RoundReport>> {
        (0..self.cfg.rounds).map(|_| self.run_round()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shared_from(vals: &[f64]) -> SharedParams {
        SharedParams {
            item_emb: DenseMatrix::from_vec(1, vals.len(), vals.to_vec()).unwrap(),
            layers: Vec::new(),
        }
    }

    #[test]
    fn aggregate_examples() {
        let a = shared_from(&[1.0, 3.0]);
        let b = shared_from(&[4.0, 0.0]);
        let out = aggregate(&[(a.clone(), 2.0), (b.clone(), 1.0)]).unwrap();
        assert_eq!(out.item_emb.as_slice(), &[2.0, 2.0]);
        assert_eq!(aggregate(&[(a.clone(), 5.0)]).unwrap(), a);
        assert!(aggregate(&[]).is_err());
        assert!(aggregate(&[(a.clone(), 0.0)]).is_err());
        assert!(aggregate(&[(a, 1.0), (shared_from(&[1.0]), 1.0)]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("fedavg".parse::<Method>().is_err());
    }
}
