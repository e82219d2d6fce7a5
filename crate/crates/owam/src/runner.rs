//! Run directories, benches and parameter sweeps.
//!
//! A run directory holds `config.toml` (a complete snapshot, seed included),
//! `report.csv`, `traces.csv`, `events.jsonl`, `weights.csv`,
//! `checkpoints/<target>.lstm` and optionally `scores.csv` and `fpds.csv`.
//! Sweep cell `i` runs with seed `base seed + i` on the dataset of the base
//! config, so serial and parallel execution give the same files.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use owam_core::Dataset;
use rayon::prelude::*;

use crate::config::{ConfigFile, Seconds};
use crate::error::{Error, Result};
use crate::output::{
    read_report, report_rows, write_events, write_fpds, write_report, write_scores, write_traces,
    write_weights, ReportRow,
};
use crate::pipeline::{run_config, EvalReport, RunConfig};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes every artefact of one finished run into `dir`.
pub fn write_run_dir(
    dir: &Path,
    run_id: &str,
    file: &ConfigFile,
    cfg: &RunConfig,
    dataset: &Dataset,
    report: &EvalReport,
) -> Result<Vec<ReportRow>> {
    mkdir(dir)?;
    let snapshot = dir.join("config.toml");
    fs::write(&snapshot, file.to_toml()).map_err(|e| Error::io(&snapshot, e))?;
    let rows = report_rows(run_id, cfg, report);
    write_report(&rows, create(&dir.join("report.csv"))?, file.output.timings)?;
    write_traces(report, create(&dir.join("traces.csv"))?)?;
    write_events(&report.events, create(&dir.join("events.jsonl"))?)?;
    write_weights(&report.weight_maps, create(&dir.join("weights.csv"))?)?;
    if file.output.checkpoints {
        let ck = dir.join("checkpoints");
        mkdir(&ck)?;
        for (target, text) in &report.checkpoints {
            let path = ck.join(format!("{target}.lstm"));
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    if file.output.dump_scores {
        if let Some(scores) = &report.scores {
            write_scores(scores, create(&dir.join("scores.csv"))?)?;
        }
    }
    if file.output.dump_fpds {
        write_fpds(dataset, &cfg.fpd, create(&dir.join("fpds.csv"))?)?;
    }
    Ok(rows)
}

/// Loads the dataset, runs, and writes the run directory `file.output.dir`.
pub fn run_file(file: &ConfigFile, run_id: &str) -> Result<(EvalReport, Vec<ReportRow>)> {
    let cfg = file.run_config()?;
    let dataset = file.load_dataset()?.dataset;
    let report = run_config(&dataset, &cfg)?;
    let rows = write_run_dir(&file.output.dir, run_id, file, &cfg, &dataset, &report)?;
    Ok((report, rows))
}

/// One bench cell's outcome.
#[derive(Debug)]
pub struct BenchResult {
    pub run_id: String,
    pub config: RunConfig,
    pub outcome: Result<EvalReport>,
}

/// Runs every config on `dataset` in parallel; failures become failed rows.
pub fn bench(dataset: &Dataset, cells: &[(String, RunConfig)]) -> Vec<BenchResult> {
    cells
        .par_iter()
        .map(|(run_id, config)| BenchResult {
            run_id: run_id.clone(),
            config: config.clone(),
            outcome: run_config(dataset, config),
        })
        .collect()
}

pub fn bench_rows(results: &[BenchResult]) -> Vec<ReportRow> {
    results
        .iter()
        .flat_map(|r| match &r.outcome {
            Ok(report) => report_rows(&r.run_id, &r.config, report),
            Err(e) => vec![ReportRow::failed(&r.run_id, &r.config, &e.to_string())],
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Theta,
    LossKind,
    WindowT,
    UpdateMode,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Theta => "theta",
            Self::LossKind => "loss_kind",
            Self::WindowT => "window_T",
            Self::UpdateMode => "update_mode",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Self::Theta),
            "loss_kind" => Ok(Self::LossKind),
            "window_T" | "window" => Ok(Self::WindowT),
            "update_mode" => Ok(Self::UpdateMode),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?}; expected theta, loss_kind, window_T or update_mode"
            ))),
        }
    }
}

/// One swept parameter and its values, written `name=v1,v2,...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<String>,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep spec {s:?} must look like name=v1,v2")))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_owned()).collect();
        if values.iter().any(String::is_empty) {
            return Err(Error::Config(format!(
                "sweep spec {s:?} has an empty value"
            )));
        }
        Ok(Self {
            param: name.trim().parse()?,
            values,
        })
    }
}

fn apply(file: &mut ConfigFile, param: SweepParam, value: &str) -> Result<()> {
    let bad = |m: String| Error::Config(format!("sweep {}={value}: {m}", param.as_str()));
    let run = &mut file.run;
    match param {
        SweepParam::Theta => run.theta = value.parse().map_err(|_| bad("not a number".into()))?,
        SweepParam::LossKind => {
            value
                .parse::<owam_core::loss::LossKind>()
                .map_err(|e| bad(format!("{e}")))?;
            run.loss_kind = value.to_owned();
        }
        SweepParam::WindowT => run.window = Some(value.parse::<Seconds>().map_err(bad)?),
        SweepParam::UpdateMode => run.update_mode = value.parse().map_err(bad)?,
    }
    Ok(())
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub run_id: String,
    /// `(parameter, value)` per axis.
    pub point: Vec<(SweepParam, String)>,
    pub file: ConfigFile,
}

/// The cross product of `axes` over `base`, first axis slowest. Cell `i`
/// gets seed `base.run.seed + i`; a synthetic dataset keeps the base seed.
pub fn expand(base: &ConfigFile, axes: &[SweepAxis]) -> Result<Vec<SweepCell>> {
    if axes.is_empty() {
        return Err(Error::Config("a sweep needs at least one parameter".into()));
    }
    let mut base = base.clone();
    if let Some(s) = base.dataset.synthetic.as_mut() {
        s.seed.get_or_insert(base.run.seed);
    }
    let mut points: Vec<Vec<(SweepParam, String)>> = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.param, v.clone()));
                    q
                })
            })
            .collect();
    }
    points
        .into_iter()
        .enumerate()
        .map(|(i, point)| {
            let mut file = base.clone();
            file.run.seed = base.run.seed.wrapping_add(i as u64);
            for (param, value) in &point {
                apply(&mut file, *param, value)?;
            }
            file.output.dir = base.output.dir.join(format!("cell{i:03}"));
            Ok(SweepCell {
                run_id: format!("cell{i:03}"),
                point,
                file,
            })
        })
        .collect()
}

/// Runs all cells on the base dataset and writes each cell's run directory
/// plus `sweep.csv` (report rows) and `sweep_long.csv` (plot-ready) under
/// `base.output.dir`.
pub fn run_sweep(base: &ConfigFile, axes: &[SweepAxis]) -> Result<Vec<ReportRow>> {
    let cells = expand(base, axes)?;
    let dataset = cells[0].file.load_dataset()?.dataset;
    let configs = cells
        .iter()
        .map(|c| Ok((c.run_id.clone(), c.file.run_config()?)))
        .collect::<Result<Vec<_>>>()?;
    let results = bench(&dataset, &configs);
    let mut rows = Vec::new();
    for (cell, result) in cells.iter().zip(&results) {
        match &result.outcome {
            Ok(report) => rows.extend(write_run_dir(
                &cell.file.output.dir,
                &cell.run_id,
                &cell.file,
                &result.config,
                &dataset,
                report,
            )?),
            Err(e) => rows.push(ReportRow::failed(
                &cell.run_id,
                &result.config,
                &e.to_string(),
            )),
        }
    }
    let dir = &base.output.dir;
    mkdir(dir)?;
    write_report(&rows, create(&dir.join("sweep.csv"))?, base.output.timings)?;
    write_long(
        &cells,
        &rows,
        create(&dir.join("sweep_long.csv"))?,
        base.output.timings,
    )?;
    Ok(rows)
}

/// `run_id,<param>...,target,metric,value` with one row per metric.
pub fn write_long<W: std::io::Write>(
    cells: &[SweepCell],
    rows: &[ReportRow],
    writer: W,
    timings: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["run_id".to_owned()];
    if let Some(c) = cells.first() {
        header.extend(c.point.iter().map(|(p, _)| p.as_str().to_owned()));
    }
    header.extend(["target", "metric", "value"].map(String::from));
    w.write_record(&header)?;
    for row in rows.iter().filter(|r| r.is_ok()) {
        let Some(cell) = cells.iter().find(|c| c.run_id == row.run_id) else {
            continue;
        };
        let mut metrics = vec![("rmse", row.rmse)];
        if timings {
            metrics.extend([
                ("train_time_s", row.train_time_s),
                ("instance_pred_time_ms", row.instance_pred_time_ms),
                ("eval_time_s", row.eval_time_s),
            ]);
        }
        for (name, value) in metrics {
            let Some(v) = value else { continue };
            let mut rec = vec![row.run_id.clone()];
            rec.extend(cell.point.iter().map(|(_, v)| v.clone()));
            rec.extend([row.target.clone(), name.to_owned(), v.to_string()]);
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("<sweep>", e))
}

/// Runs several config files, each on its own dataset, and writes
/// `bench.csv` into `out`.
pub fn run_bench(files: &[ConfigFile], out: &Path) -> Result<Vec<ReportRow>> {
    let results: Vec<BenchResult> = files
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let run_id = format!("run{i:03}");
            let loaded = f
                .run_config()
                .and_then(|cfg| Ok((cfg, f.load_dataset()?.dataset)));
            match loaded {
                Ok((cfg, ds)) => BenchResult {
                    run_id,
                    outcome: run_config(&ds, &cfg),
                    config: cfg,
                },
                Err(e) => BenchResult {
                    run_id,
                    config: crate::pipeline::RunConfig::new(f.run.seed),
                    outcome: Err(e),
                },
            }
        })
        .collect();
    let rows = bench_rows(&results);
    mkdir(out)?;
    let timings = files.iter().all(|f| f.output.timings);
    write_report(&rows, create(&out.join("bench.csv"))?, timings)?;
    Ok(rows)
}

/// Reads a report table written by [`write_report`].
pub fn load_report(path: &Path) -> Result<Vec<ReportRow>> {
    read_report(File::open(path).map_err(|e| Error::io(path, e))?)
}
