use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::federation::RoundReport;

use super::config::ExperimentConfig;

pub const CSV_HEADER: &str = "run_id,method,seed,round,scope,metric,value,seconds";

/// Append-only metrics rows, one per (round, scope, metric).
pub struct MetricsWriter<W: Write> {
    out: W,
    run_id: String,
    method: String,
    seed: u64,
    record_timing: bool,
}

impl MetricsWriter<BufWriter<File>> {
    pub fn create(path: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), cfg)
    }
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W, cfg: &ExperimentConfig) -> Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(MetricsWriter {
            out,
            run_id: cfg.run_id(),
            method: cfg.method.to_string(),
            seed: cfg.seed,
            record_timing: cfg.record_timing,
        })
    }

    fn row(&mut self, round: usize, scope: &str, metric: &str, value: f64, seconds: f64) -> Result<()> {
        let seconds = if self.record_timing { seconds } else { 0.0 };
        writeln!(
            self.out,
            "{},{},{},{round},{scope},{metric},{value},{seconds:.3}",
            self.run_id, self.method, self.seed
        )?;
        Ok(())
    }

    fn block(&mut self, report: &RoundReport, scope: &str, k: usize, elapsed: f64) -> Result<()> {
        self.row(report.round, scope, &format!("precision@{k}"), report.precision, elapsed)?;
        self.row(report.round, scope, &format!("recall@{k}"), report.recall, elapsed)?;
        self.row(report.round, scope, &format!("ndcg@{k}"), report.ndcg, elapsed)?;
        if let Some(r) = report.selected_ratio {
            self.row(report.round, scope, "selected_ratio", r, elapsed)?;
        }
        Ok(())
    }

    /// Aggregate and per-client rows of one round; `elapsed` is the time
    /// since the run started.
    pub fn write_round(&mut self, report: &RoundReport, k: usize, elapsed: f64) -> Result<()> {
        self.block(report, "aggregate", k, elapsed)?;
        if report.clients.len() > 1 {
            for c in &report.clients {
                let scope = format!("client:{}", c.client);
                self.row(report.round, &scope, &format!("precision@{k}"), c.precision, elapsed)?;
                self.row(report.round, &scope, &format!("recall@{k}"), c.recall, elapsed)?;
                self.row(report.round, &scope, &format!("ndcg@{k}"), c.ndcg, elapsed)?;
                if let Some(r) = c.selected_ratio {
                    self.row(report.round, &scope, "selected_ratio", r, elapsed)?;
                }
                if let Some(l) = c.train_loss {
                    self.row(report.round, &scope, "train_bpr", l, elapsed)?;
                }
            }
        }
        self.out.flush()?;
        Ok(())
    }

    /// Final metrics repeated under scope `summary`.
    pub fn write_summary(&mut self, last: &RoundReport, k: usize, elapsed: f64) -> Result<()> {
        self.block(last, "summary", k, elapsed)?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub edges: usize,
    pub global_users: usize,
    pub global_edges: usize,
    pub client_users: Vec<usize>,
    pub client_train_edges: Vec<usize>,
}

/// Departures from the reference protocol that a run relies on.
#[derive(Clone, Debug, Serialize)]
pub struct DeviationFlags {
    /// One encoder pre-trained for all clients instead of one per client.
    pub shared_encoder: bool,
    /// Optimizer other than plain SGD.
    pub adaptive_optimizer: bool,
    /// GDVE samples only observed global edges.
    pub observed_edge_candidates: bool,
    /// Heterogeneity labels are pooled vs within-client degree deciles.
    pub pooled_decile_heterogeneity: bool,
    /// Partition read from a manifest file.
    pub manifest_placement: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub run_id: String,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub deviations: DeviationFlags,
    pub dataset: DatasetStats,
    /// GDVE batches run per client, and whether the plateau rule stopped it.
    pub gdve_batches: Vec<(usize, bool)>,
    pub seconds: f64,
}

impl RunMetadata {
    pub fn deviations(cfg: &ExperimentConfig) -> DeviationFlags {
        DeviationFlags {
            shared_encoder: cfg.method.uses_gdve() && cfg.shared_encoder,
            adaptive_optimizer: cfg.optimizer != crate::optim::OptimizerKind::Sgd,
            observed_edge_candidates: cfg.method.uses_gdve(),
            pooled_decile_heterogeneity: true,
            manifest_placement: cfg.manifest.is_some(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::federation::ClientReport;

    #[test]
    fn header_and_rows() {
        let cfg = ExperimentConfig {
            record_timing: false,
            ..Default::default()
        };
        let mut w = MetricsWriter::new(Vec::new(), &cfg).unwrap();
        let client = |c, r| ClientReport {
            client: c,
            precision: 0.1,
            recall: r,
            ndcg: 0.2,
            test_users: 3,
            test_edges: 4,
            selected_ratio: None,
            train_loss: Some(0.5),
        };
        let report = RoundReport::from_clients(1, vec![client(0, 0.25), client(1, 0.75)], 3.0);
        w.write_round(&report, 100, 3.0).unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[2], "fedgdve-k10-uniform-s0,fedgdve,0,1,aggregate,recall@100,0.5,0.000");
        assert!(lines.iter().any(|l| l.contains(",client:1,recall@100,0.75,")));
        assert_eq!(lines.len(), 1 + 3 + 2 * 4);
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 8));
    }
}
