#![allow(dead_code)]

use std::path::{Path, PathBuf};

use owam::config::{ConfigFile, SyntheticSection};
use owam::pipeline::RunConfig;
use owam_core::lstm::LstmConfig;
use owam_core::synth::generate_synthetic;
use owam_core::synth::scenario::{planted_correlation, PlantedParams};
use owam_core::{Dataset, SensorId};

/// Planted scenario shrunk to `n_sensors` sensors and `n_days` days.
pub fn planted(seed: u64, n_sensors: usize, n_days: usize) -> Dataset {
    let p = PlantedParams {
        n_sensors,
        n_days,
        n_planted: 2,
        n_decoys: 1,
        ..PlantedParams::default()
    };
    generate_synthetic(&planted_correlation(seed, &p).unwrap().config).unwrap()
}

pub fn tiny_lstm() -> LstmConfig {
    LstmConfig {
        hidden: 6,
        batch: 64,
        lr: 5e-3,
        max_epochs: 3,
        ..LstmConfig::default()
    }
}

pub fn small_run(seed: u64, targets: &[&str]) -> RunConfig {
    let mut cfg = RunConfig::new(seed);
    cfg.theta = 0.5;
    cfg.targets = targets.iter().map(|t| SensorId::new(*t).unwrap()).collect();
    cfg.lstm = tiny_lstm();
    cfg
}

/// A config file over a small synthetic dataset writing into `dir`.
pub fn small_file(seed: u64, dir: &Path) -> ConfigFile {
    let mut f = ConfigFile::example(seed);
    f.dataset.synthetic = Some(SyntheticSection {
        n_sensors: 6,
        n_days: 3,
        n_planted: 2,
        n_decoys: 1,
        ..SyntheticSection::default()
    });
    f.run.targets = vec!["s000".into(), "s003".into()];
    f.run.theta = 0.5;
    f.lstm.hidden = 6;
    f.lstm.batch = 64;
    f.lstm.max_epochs = 3;
    f.output.dir = dir.to_path_buf();
    f.output.timings = false;
    f
}

pub fn write_file(dir: &Path, name: &str, file: &ConfigFile) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, file.to_toml()).unwrap();
    path
}
