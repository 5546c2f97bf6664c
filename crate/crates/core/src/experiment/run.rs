use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::{
    evaluate_client, round_graph, train_gdve_states, ClientData, Federation, Method, RoundReport, SharedParams,
};
use crate::gcf::{train_epoch, GcfParams};
use crate::gdve::GdveState;
use crate::graph::{normalize, Edge};
use crate::numerics::{stream, DenseMatrix, Rng};
use crate::optim::Optimizer;

use super::config::ExperimentConfig;
use super::prepare::{load_dataset, make_plan, prepare, PreparedData};
use super::report::{DatasetStats, MetricsWriter, RunMetadata};

const MODEL_CHECKPOINT_VERSION: u32 = 1;

/// Final model of a run: the shared blocks, every private user table and
/// the last augmentation of each client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub version: u32,
    pub method: Method,
    pub rounds: usize,
    pub shared: SharedParams,
    /// One per client; a single pooled table for centralized runs.
    pub user_tables: Vec<DenseMatrix>,
    pub selections: Vec<Option<Vec<Edge>>>,
}

impl ModelCheckpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: ModelCheckpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if ck.version != MODEL_CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported model checkpoint version {}", ck.version)));
        }
        Ok(ck)
    }

    fn params(&self, table: usize) -> GcfParams {
        GcfParams {
            user_emb: self.user_tables[table].clone(),
            item_emb: self.shared.item_emb.clone(),
            layers: self.shared.layers.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub run_id: String,
    pub method: Method,
    pub reports: Vec<RoundReport>,
    pub gdve_batches: Vec<(usize, bool)>,
    pub checkpoint: ModelCheckpoint,
}

impl RunOutcome {
    pub fn final_report(&self) -> Option<&RoundReport> {
        self.reports.last()
    }
}

/// One model on the pooled data, evaluated every `epochs_per_round` epochs.
pub fn run_centralized(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    on_round: &mut dyn FnMut(&RoundReport) -> Result<()>,
) -> Result<RunOutcome> {
    let pooled = &data.pooled;
    let root = Rng::new(cfg.seed);
    let mut params = GcfParams::init(
        pooled.train.num_users(),
        pooled.train.num_items(),
        cfg.dim,
        cfg.layers,
        &mut root.fork(stream::INIT),
    );
    let mut rng = root.fork(stream::TRAIN);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr);
    let adj = normalize(&pooled.train);
    let known = pooled.known();
    let train_cfg = crate::gcf::TrainConfig {
        batch_size: cfg.batch_size,
        lambda: cfg.lambda,
        structure: None,
    };
    let mut reports = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        let start = Instant::now();
        let mut loss = None;
        for _ in 0..cfg.epochs_per_round {
            loss = Some(train_epoch(&mut params, &mut opt, &pooled.train, &adj, &train_cfg, &mut rng)?.mean_bpr);
        }
        let mut r = evaluate_client(&params, &adj, &known, &pooled.test, cfg.eval_k)?;
        r.train_loss = loss;
        let report = RoundReport::from_clients(round, vec![r], start.elapsed().as_secs_f64());
        info!("centralized round {round}: R@{} {:.4}", cfg.eval_k, report.recall);
        on_round(&report)?;
        reports.push(report);
    }
    Ok(RunOutcome {
        run_id: cfg.run_id(),
        method: Method::CentralizedNgcf,
        reports,
        gdve_batches: Vec::new(),
        checkpoint: ModelCheckpoint {
            version: MODEL_CHECKPOINT_VERSION,
            method: Method::CentralizedNgcf,
            rounds: cfg.rounds,
            shared: SharedParams::from_params(&params),
            user_tables: vec![params.user_emb],
            selections: vec![None],
        },
    })
}

/// Runs `cfg.method` on prepared data. GDVE methods train their estimators
/// first unless trained `gdve` states are passed in.
pub fn run_method(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    gdve: Option<Vec<GdveState>>,
    on_round: &mut dyn FnMut(&RoundReport) -> Result<()>,
) -> Result<RunOutcome> {
    if cfg.method == Method::CentralizedNgcf {
        return run_centralized(cfg, data, on_round);
    }
    let fcfg = cfg.federation_config();
    let gdve = match gdve {
        Some(states) => Some(states),
        None if cfg.method.uses_gdve() => Some(train_gdve_states(&data.global, &data.clients, &fcfg)?),
        None => None,
    };
    let gdve_batches = gdve
        .as_ref()
        .map(|s| s.iter().map(|g| (g.batches_run, g.converged)).collect())
        .unwrap_or_default();
    let mut fed = Federation::new(fcfg, data.global.clone(), data.clients.clone(), gdve)?;
    let mut reports = Vec::with_capacity(cfg.rounds);
    for _ in 0..cfg.rounds {
        let report = fed.run_round()?;
        on_round(&report)?;
        reports.push(report);
    }
    let checkpoint = ModelCheckpoint {
        version: MODEL_CHECKPOINT_VERSION,
        method: cfg.method,
        rounds: cfg.rounds,
        shared: fed.shared.clone(),
        user_tables: fed.clients.iter().map(|c| c.params.user_emb.clone()).collect(),
        selections: fed.clients.iter().map(|c| c.selection.clone()).collect(),
    };
    Ok(RunOutcome {
        run_id: cfg.run_id(),
        method: cfg.method,
        reports,
        gdve_batches,
        checkpoint,
    })
}

fn dataset_stats(data: &PreparedData) -> DatasetStats {
    DatasetStats {
        users: data.graph.num_users(),
        items: data.graph.num_items(),
        edges: data.graph.num_edges(),
        global_users: data.global.num_users(),
        global_edges: data.global.num_edges(),
        client_users: data.clients.iter().map(|c| c.train.num_users()).collect(),
        client_train_edges: data.clients.iter().map(|c| c.train.num_edges()).collect(),
    }
}

/// Load, split, partition, train and report. Writes `partition.txt`,
/// `metrics.csv`, `run.json` and (optionally) `model.json` into
/// `output_dir/<run id>/`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = cfg.output_dir.join(cfg.run_id());
    fs::create_dir_all(&dir)?;
    let (graph, _) = load_dataset(cfg)?;
    info!(
        "{}: {} users, {} items, {} edges",
        cfg.dataset.display(),
        graph.num_users(),
        graph.num_items(),
        graph.num_edges()
    );
    let plan = make_plan(&graph, cfg)?;
    plan.write_manifest(BufWriter::new(File::create(dir.join("partition.txt"))?))?;
    let data = prepare(graph, plan, cfg)?;

    let mut metrics = MetricsWriter::create(&dir.join("metrics.csv"), cfg)?;
    let k = cfg.eval_k;
    let outcome = run_method(cfg, &data, None, &mut |r| {
        metrics.write_round(r, k, start.elapsed().as_secs_f64())
    })?;
    if let Some(last) = outcome.final_report() {
        metrics.write_summary(last, k, start.elapsed().as_secs_f64())?;
    }
    RunMetadata {
        run_id: outcome.run_id.clone(),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        deviations: RunMetadata::deviations(cfg),
        dataset: dataset_stats(&data),
        gdve_batches: outcome.gdve_batches.clone(),
        seconds: start.elapsed().as_secs_f64(),
    }
    .write(&dir.join("run.json"))?;
    if cfg.save_checkpoint {
        outcome.checkpoint.save(&dir.join("model.json"))?;
    }
    Ok(outcome)
}

/// Re-evaluates a saved model on the test split the config reproduces.
pub fn evaluate_checkpoint(path: &Path, cfg: &ExperimentConfig) -> Result<RoundReport> {
    let ck = ModelCheckpoint::load(path)?;
    if ck.method != cfg.method {
        return Err(Error::config(
            "method",
            format!("checkpoint holds a {} model, config says {}", ck.method, cfg.method),
        ));
    }
    let (graph, _) = load_dataset(cfg)?;
    let plan = make_plan(&graph, cfg)?;
    let data = prepare(graph, plan, cfg)?;
    let eval_one = |params: &GcfParams, train: &crate::graph::InteractionGraph, holder: &ClientData| {
        evaluate_client(params, &normalize(train), &holder.known(), &holder.test, cfg.eval_k)
    };
    let clients = if ck.method == Method::CentralizedNgcf {
        vec![eval_one(&ck.params(0), &data.pooled.train, &data.pooled)?]
    } else {
        if ck.user_tables.len() != data.clients.len() {
            return Err(Error::Checkpoint("client count differs from the config".into()));
        }
        data.clients
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let g = round_graph(c, &data.global, ck.method, ck.selections[k].as_deref())?;
                let params = ck.params(k);
                if params.num_users() != g.num_users() {
                    return Err(Error::Checkpoint(format!("client {k}: user table does not fit its data")));
                }
                let mut r = eval_one(&params, &g, c)?;
                r.client = k;
                Ok(r)
            })
            .collect::<Result<_>>()?
    };
    Ok(RoundReport::from_clients(ck.rounds, clients, 0.0))
}
