//! CSV and JSON-lines writers for run artefacts.
//!
//! | file | header |
//! |------|--------|
//! | report | `run_id,status,mode,loss_kind,theta,update_mode,window_s,seed,target,k,n_eval,rmse,train_time_s,instance_pred_time_ms,eval_time_s,error` |
//! | traces | `target,window_start,rmse,mode` |
//! | weights | `target,neighbor,r,weight,selected` |
//! | scores | `sensor,window_start,score` |
//! | fpds | `sensor,window_start,p1..pB` |
//!
//! Report rows with target `*` hold the mean over targets.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use owam_core::autoencoder::OutlierScoreSeries;
use owam_core::correlation::CorrelationWeightMap;
use owam_core::fpd::{fpd_stream, FpdConfig};
use owam_core::{Dataset, SensorId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{EvalReport, Event, RunConfig};

/// Target label of the across-target mean row.
pub const MEAN_ROW: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run_id: String,
    pub status: String,
    pub mode: String,
    pub loss_kind: String,
    pub theta: f64,
    pub update_mode: String,
    pub window_s: Option<i64>,
    pub seed: u64,
    pub target: String,
    pub k: Option<usize>,
    pub n_eval: Option<usize>,
    pub rmse: Option<f64>,
    pub train_time_s: Option<f64>,
    pub instance_pred_time_ms: Option<f64>,
    pub eval_time_s: Option<f64>,
    pub error: String,
}

impl ReportRow {
    fn base(run_id: &str, cfg: &RunConfig, target: &str) -> Self {
        Self {
            run_id: run_id.to_owned(),
            status: "ok".into(),
            mode: cfg.mode.to_string(),
            loss_kind: cfg.loss_kind.to_string(),
            theta: cfg.theta,
            update_mode: cfg.update_mode.to_string(),
            window_s: cfg.window,
            seed: cfg.seed,
            target: target.to_owned(),
            k: None,
            n_eval: None,
            rmse: None,
            train_time_s: None,
            instance_pred_time_ms: None,
            eval_time_s: None,
            error: String::new(),
        }
    }

    /// A run that failed before producing a report.
    pub fn failed(run_id: &str, cfg: &RunConfig, error: &str) -> Self {
        Self {
            status: "failed".into(),
            error: error.to_owned(),
            ..Self::base(run_id, cfg, MEAN_ROW)
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn clear_timings(&mut self) {
        self.train_time_s = None;
        self.instance_pred_time_ms = None;
        self.eval_time_s = None;
    }
}

/// One row per target followed by the mean row.
pub fn report_rows(run_id: &str, cfg: &RunConfig, report: &EvalReport) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = report
        .targets
        .iter()
        .map(|t| ReportRow {
            k: Some(t.k),
            n_eval: Some(t.n_eval),
            rmse: Some(t.rmse),
            train_time_s: Some(t.train_time_s),
            instance_pred_time_ms: Some(t.instance_pred_time_ms),
            eval_time_s: Some(t.eval_time_s),
            ..ReportRow::base(run_id, cfg, t.target.as_str())
        })
        .collect();
    rows.push(ReportRow {
        n_eval: Some(report.targets.iter().map(|t| t.n_eval).sum()),
        rmse: Some(report.rmse),
        train_time_s: Some(report.train_time_s),
        instance_pred_time_ms: Some(report.instance_pred_time_ms),
        eval_time_s: Some(report.eval_time_s),
        ..ReportRow::base(run_id, cfg, MEAN_ROW)
    });
    rows
}

/// Writes the report table; without `timings` the wall-clock columns are
/// left empty so that repeated runs produce identical bytes.
pub fn write_report<W: Write>(rows: &[ReportRow], writer: W, timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        if timings {
            w.serialize(row)?;
        } else {
            let mut row = row.clone();
            row.clear_timings();
            w.serialize(&row)?;
        }
    }
    if rows.is_empty() {
        w.write_record([
            "run_id",
            "status",
            "mode",
            "loss_kind",
            "theta",
            "update_mode",
            "window_s",
            "seed",
            "target",
            "k",
            "n_eval",
            "rmse",
            "train_time_s",
            "instance_pred_time_ms",
            "eval_time_s",
            "error",
        ])?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))
}

pub fn read_report<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_traces<W: Write>(report: &EvalReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["target", "window_start", "rmse", "mode"])?;
    for t in &report.targets {
        for win in &t.windows {
            w.write_record([
                t.target.as_str(),
                &win.window_start.to_string(),
                &win.rmse.to_string(),
                report.update_mode.as_str(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<traces>", e))
}

pub fn write_weights<W: Write>(maps: &[CorrelationWeightMap], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["target", "neighbor", "r", "weight", "selected"])?;
    for m in maps {
        for e in &m.entries {
            w.write_record([
                m.target.as_str(),
                e.neighbor.as_str(),
                &e.r.to_string(),
                &e.weight.to_string(),
                if e.selected { "true" } else { "false" },
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<weights>", e))
}

pub fn write_scores<W: Write>(
    scores: &BTreeMap<SensorId, OutlierScoreSeries>,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["sensor", "window_start", "score"])?;
    for s in scores.values() {
        for (t, v) in &s.scores {
            w.write_record([s.sensor.as_str(), &t.to_string(), &v.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<scores>", e))
}

pub fn write_fpds<W: Write>(dataset: &Dataset, cfg: &FpdConfig, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["sensor".to_owned(), "window_start".to_owned()];
    header.extend((1..=cfg.bins()).map(|i| format!("p{i}")));
    w.write_record(&header)?;
    for s in dataset.series() {
        for f in fpd_stream(s, cfg)? {
            let mut row = vec![f.sensor.to_string(), f.window_start.to_string()];
            row.extend(f.probs.iter().map(|p| p.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<fpds>", e))
}

pub fn write_events<W: Write>(events: &[Event], mut writer: W) -> Result<()> {
    for e in events {
        let line = serde_json::to_string(e).expect("events serialise");
        writeln!(writer, "{line}").map_err(|e| Error::io("<events>", e))?;
    }
    writer.flush().map_err(|e| Error::io("<events>", e))
}

pub fn read_events<R: Read>(reader: R) -> Result<Vec<Event>> {
    let text = std::io::read_to_string(reader).map_err(|e| Error::io("<events>", e))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: "<events>".into(),
                line: i as u64 + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
