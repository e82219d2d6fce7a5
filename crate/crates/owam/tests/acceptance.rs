//! Acceptance criteria 1 to 10. Each test prints one `criterion N PASS|FAIL`
//! line; every tolerance and budget is a named constant below.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use owam::config::ConfigFile;
use owam::io::{load_csv, save_csv, LoadOptions};
use owam::output::{read_report, write_report};
use owam::pipeline::{
    check_prequential, derive_seed, run_offline, run_online, EventKind, RunConfig, RunMode,
    UpdateMode,
};
use owam::runner::{run_file, run_sweep, SweepAxis};
use owam_core::autoencoder::{process_stream, AeParams, DetectorConfig, OutlierScoreSeries};
use owam_core::correlation::{compute_weights, neighbor_count, History, SelectorConfig};
use owam_core::fpd::{fpd_range, fpd_stream, FpdConfig};
use owam_core::loss::{loss, LossKind};
use owam_core::lstm::{LstmConfig, LstmParams};
use owam_core::metrics::{mean, std_dev};
use owam_core::series::split_index;
use owam_core::synth::scenario::{
    planted_correlation, regime_shift, PlantedParams, RegimeShiftParams,
};
use owam_core::synth::{generate_synthetic, SynthConfig};
use owam_core::{Dataset, SensorId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EMD_PAIRS: usize = 1000;
const EMD_TOL: f64 = 1e-9;
const EMD_BUDGET: Duration = Duration::from_secs(5);

const FD_STEP: f64 = 1e-6;
const FD_MAX_REL: f64 = 1e-4;
/// Components smaller than this are compared on an absolute scale.
const FD_FLOOR: f64 = 1e-5;
const FD_CONFIGS: u64 = 20;
const FD_BUDGET: Duration = Duration::from_secs(30);

const RECOVERY_SEEDS: u64 = 10;
const RECOVERY_MIN_HITS: usize = 4;
const RECOVERY_MIN_SEEDS: usize = 9;
const RECOVERY_BUDGET: Duration = Duration::from_secs(120);

const DRIFT_SEEDS: u64 = 5;
const DRIFT_MIN_WINS: usize = 4;

const METR_LA_ENV: &str = "OWAM_METR_LA";
const METR_LA_BUDGET: Duration = Duration::from_secs(30 * 60);

fn verdict(n: u32, ok: bool, detail: &str) {
    println!(
        "criterion {n} {}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Minimum-cost transport on a line with unit spacing: move supply from the
/// left-most bin with surplus to the left-most bin with deficit, greedily.
fn line_transport(a: &[f64], b: &[f64]) -> f64 {
    let (mut supply, mut demand) = (a.to_vec(), b.to_vec());
    let (mut i, mut j, mut cost) = (0, 0, 0.0);
    while i < supply.len() && j < demand.len() {
        let moved = supply[i].min(demand[j]);
        cost += moved * (i as f64 - j as f64).abs();
        supply[i] -= moved;
        demand[j] -= moved;
        if supply[i] <= demand[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    cost
}

#[test]
fn criterion_01_emd_matches_line_transport() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..EMD_PAIRS {
        let (a, b) = (simplex(&mut rng, 12), simplex(&mut rng, 12));
        worst = worst.max((loss(LossKind::Emd, &a, &b).unwrap() - line_transport(&a, &b)).abs());
    }
    let took = start.elapsed();
    verdict(
        1,
        worst <= EMD_TOL && took < EMD_BUDGET,
        &format!("{EMD_PAIRS} pairs, max |emd - oracle| = {worst:.2e} (tol {EMD_TOL:e}), {took:.2?} (budget {EMD_BUDGET:?})"),
    );
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR)
}

/// Signs of the CDF differences; a sign change between perturbations means
/// a kink was crossed.
fn kink_signs(d: &[f64], r: &[f64]) -> Vec<i8> {
    let mut acc = 0.0;
    d.iter()
        .zip(r)
        .take(d.len() - 1)
        .map(|(x, y)| {
            acc += x - y;
            (acc > 0.0) as i8 - (acc < 0.0) as i8
        })
        .collect()
}

fn ae_worst(kind: LossKind, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
    let bins = rng.random_range(4..=12);
    let mut p = AeParams::new(bins, seed).unwrap();
    let flat: Vec<f64> = p
        .to_flat()
        .iter()
        .map(|w| 4.0 * w + rng.random_range(-0.3..0.3))
        .collect();
    p.set_flat(&flat).unwrap();
    let d = simplex(&mut rng, bins);
    let (_, grad) = p.loss_and_gradient(&d, kind).unwrap();
    let base = kink_signs(&d, &p.forward(&d).unwrap());
    let mut q = p.clone();
    let (mut worst, mut skipped) = (0.0f64, 0);
    for i in 0..flat.len() {
        let mut at = |delta: f64| {
            let mut f = flat.clone();
            f[i] += delta;
            q.set_flat(&f).unwrap();
            let r = q.forward(&d).unwrap();
            (loss(kind, &d, &r).unwrap(), kink_signs(&d, &r))
        };
        let ((lp, sp), (lm, sm)) = (at(FD_STEP), at(-FD_STEP));
        if kind == LossKind::Emd && (sp != base || sm != base || base.contains(&0)) {
            skipped += 1;
            continue;
        }
        worst = worst.max(rel_err(grad[i], (lp - lm) / (2.0 * FD_STEP)));
    }
    (worst, skipped)
}

fn lstm_worst(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(8000 + seed);
    let (input, hidden, n) = (
        rng.random_range(1..=4),
        rng.random_range(2..=5),
        rng.random_range(2..=4),
    );
    let mut p = LstmParams::new(input, hidden, seed).unwrap();
    let flat: Vec<f64> = p
        .to_flat()
        .iter()
        .map(|w| 3.0 * w + rng.random_range(-0.1..0.1))
        .collect();
    p.set_flat(&flat).unwrap();
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..12 * input)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let (_, grad) = p.batch_loss_and_gradient(&refs, &ys).unwrap();
    let mut q = p.clone();
    let mut worst = 0.0f64;
    for i in 0..flat.len() {
        let mut at = |delta: f64| {
            let mut f = flat.clone();
            f[i] += delta;
            q.set_flat(&f).unwrap();
            q.batch_loss_and_gradient(&refs, &ys).unwrap().0
        };
        worst = worst.max(rel_err(
            grad[i],
            (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP),
        ));
    }
    worst
}

#[test]
fn criterion_02_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut worst = BTreeMap::new();
    let mut skipped = 0;
    for seed in 0..FD_CONFIGS {
        for kind in [LossKind::Rmse, LossKind::Emd] {
            let (w, s) = ae_worst(kind, seed);
            skipped += s;
            let e = worst.entry(format!("ae-{kind}")).or_insert(0.0f64);
            *e = e.max(w);
        }
        let e = worst.entry("lstm".to_owned()).or_insert(0.0f64);
        *e = e.max(lstm_worst(seed));
    }
    let took = start.elapsed();
    let ok = worst.values().all(|w| *w < FD_MAX_REL) && took < FD_BUDGET;
    let detail: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.2e}")).collect();
    verdict(
        2,
        ok,
        &format!(
            "{FD_CONFIGS} configs each, max rel err {} (tol {FD_MAX_REL:e}), {skipped} EMD kink params skipped, {took:.2?} (budget {FD_BUDGET:?})",
            detail.join(", ")
        ),
    );
}

#[test]
fn criterion_03_theta_worked_example() {
    let ks = [0.05, 0.0, 1.0].map(|t| neighbor_count(t, 207).unwrap());
    verdict(
        3,
        ks == [10, 0, 206],
        &format!(
            "N=207: theta 0.05 -> {}, 0 -> {}, 1 -> {}",
            ks[0], ks[1], ks[2]
        ),
    );
}

/// Outlier scores of every sensor from FPD windows inside steps `..upto`.
fn scores(
    ds: &Dataset,
    kind: LossKind,
    seed: u64,
    upto: usize,
) -> BTreeMap<SensorId, OutlierScoreSeries> {
    let cfg = DetectorConfig {
        kind,
        ..DetectorConfig::default()
    };
    ds.series()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let fpds = fpd_range(s, &FpdConfig::default(), 0, upto).unwrap();
            (
                s.id().clone(),
                process_stream(&fpds, cfg, derive_seed(seed, 1, i)).unwrap(),
            )
        })
        .collect()
}

#[test]
fn criterion_04_planted_correlation_recovery() {
    let start = Instant::now();
    let mut good = 0;
    let mut hits = Vec::new();
    for seed in 0..RECOVERY_SEEDS {
        let sc = planted_correlation(seed, &PlantedParams::default()).unwrap();
        let ds = generate_synthetic(&sc.config).unwrap();
        let split = split_index(ds.n_steps(), 0.8).unwrap();
        let all = scores(&ds, LossKind::Emd, seed, split);
        let top5 = SelectorConfig::with_theta(5.0 / ds.n_sensors() as f64);
        let map = compute_weights(&all, &sc.target, &top5).unwrap();
        let h = map
            .selected_ids()
            .iter()
            .filter(|id| sc.planted.contains(id))
            .count();
        hits.push(h);
        good += usize::from(h >= RECOVERY_MIN_HITS);
    }
    let took = start.elapsed();
    verdict(
        4,
        good >= RECOVERY_MIN_SEEDS && took < RECOVERY_BUDGET,
        &format!(
            "planted in top 5 per seed {hits:?}; {good}/{RECOVERY_SEEDS} seeds with >= {RECOVERY_MIN_HITS} (need {RECOVERY_MIN_SEEDS}), {took:.2?} (budget {RECOVERY_BUDGET:?})"
        ),
    );
}

fn experiment_lstm() -> LstmConfig {
    LstmConfig {
        hidden: 32,
        max_epochs: 30,
        ..LstmConfig::default()
    }
}

#[test]
fn criterion_05_theta_u_shape() {
    let sc = planted_correlation(0, &PlantedParams::default()).unwrap();
    let ds = generate_synthetic(&sc.config).unwrap();
    let rmse_at = |theta: f64| {
        let mut cfg = RunConfig::new(0);
        cfg.theta = theta;
        cfg.targets = vec![sc.target.clone()];
        cfg.lstm = experiment_lstm();
        run_offline(&ds, &cfg).unwrap().rmse
    };
    let (at0, at1) = (rmse_at(0.0), rmse_at(1.0));
    let mids: Vec<(f64, f64)> = [0.1, 0.25, 0.5].iter().map(|&t| (t, rmse_at(t))).collect();
    let best = mids.iter().copied().fold(
        (f64::NAN, f64::INFINITY),
        |a, b| if b.1 < a.1 { b } else { a },
    );
    verdict(
        5,
        best.1 < at0 && best.1 < at1,
        &format!(
            "offline rmse theta 0: {at0:.3}, {}, theta 1: {at1:.3}; best intermediate theta {} ({:.3})",
            mids.iter().map(|(t, r)| format!("theta {t}: {r:.3}")).collect::<Vec<_>>().join(", "),
            best.0,
            best.1
        ),
    );
}

#[test]
fn criterion_06_emd_scores_vary_more_than_rmse() {
    let p = PlantedParams {
        n_planted: 0,
        n_decoys: 0,
        rate: 0.1,
        ..PlantedParams::default()
    };
    let ds = generate_synthetic(&planted_correlation(11, &p).unwrap().config).unwrap();
    let cv = |kind| {
        let v: Vec<f64> = scores(&ds, kind, 11, ds.n_steps())
            .values()
            .flat_map(|s| s.values())
            .collect();
        std_dev(&v) / mean(&v)
    };
    let (emd, rmse) = (cv(LossKind::Emd), cv(LossKind::Rmse));
    verdict(
        6,
        emd > rmse,
        &format!("coefficient of variation emd {emd:.3} > rmse {rmse:.3} (10% anomalous hours)"),
    );
}

#[test]
fn criterion_07_prequential_purity() {
    let ds = common::planted(4, 8, 5);
    let split = split_index(ds.n_steps(), 0.5).unwrap();
    let window_steps = (ds.n_steps() - split) / 30;
    let mut lines = Vec::new();
    let mut ok = true;
    for mode in [
        UpdateMode::OwamDynamic,
        UpdateMode::StaticIncremental,
        UpdateMode::NoUpdate,
    ] {
        let mut cfg = common::small_run(4, &["s000", "s005"]);
        cfg.mode = RunMode::Online;
        cfg.update_mode = mode;
        cfg.window = Some(window_steps as i64 * ds.sample_interval());
        let report = run_online(&ds, &cfg).unwrap();
        let evals = report
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Evaluate)
            .count();
        let muts = report
            .events
            .iter()
            .filter(|e| e.kind.is_mutation() && e.window.is_some())
            .count();
        let check = check_prequential(&report.events);
        ok &= check.is_ok() && evals == 30 * cfg.targets.len();
        lines.push(format!(
            "{mode}: {evals} evaluations, {muts} window mutations, {}",
            match check {
                Ok(()) => "all after their evaluation".to_owned(),
                Err(e) => e,
            }
        ));
    }
    verdict(
        7,
        ok,
        &format!("30 windows x 2 targets; {}", lines.join("; ")),
    );
}

#[test]
fn criterion_08_drift_adaptation() {
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..DRIFT_SEEDS {
        let sc = regime_shift(seed, &RegimeShiftParams::default()).unwrap();
        let ds = generate_synthetic(&sc.config).unwrap();
        let rmse = |mode| {
            let mut cfg = RunConfig::new(seed);
            cfg.mode = RunMode::Online;
            cfg.update_mode = mode;
            cfg.window = Some(86_400);
            cfg.theta = 0.25;
            cfg.history = History::Sliding(48);
            cfg.targets = vec![sc.target.clone()];
            cfg.lstm = LstmConfig {
                update_epochs: 5,
                ..experiment_lstm()
            };
            run_online(&ds, &cfg).unwrap().rmse
        };
        let (none, stat, dyn_) = (
            rmse(UpdateMode::NoUpdate),
            rmse(UpdateMode::StaticIncremental),
            rmse(UpdateMode::OwamDynamic),
        );
        let win = dyn_ < none && dyn_ <= stat;
        wins += usize::from(win);
        lines.push(format!(
            "seed {seed}: dynamic {dyn_:.2} static {stat:.2} none {none:.2}"
        ));
    }
    verdict(
        8,
        wins >= DRIFT_MIN_WINS,
        &format!("{wins}/{DRIFT_SEEDS} seeds (need {DRIFT_MIN_WINS}) with dynamic < no_update and <= static; {}", lines.join("; ")),
    );
}

fn report_bytes(dir: &Path) -> Vec<u8> {
    std::fs::read(dir.join("report.csv")).unwrap()
}

/// Report rows with the wall-clock columns blanked.
fn masked(bytes: &[u8]) -> Vec<u8> {
    let mut rows = read_report(bytes).unwrap();
    for r in &mut rows {
        r.train_time_s = None;
        r.instance_pred_time_ms = None;
        r.eval_time_s = None;
    }
    let mut out = Vec::new();
    write_report(&rows, &mut out, true).unwrap();
    out
}

#[test]
fn criterion_09_byte_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let run_twice = |timings: bool| {
        let out: Vec<Vec<u8>> = ["a", "b"]
            .iter()
            .map(|d| {
                let mut f = common::small_file(9, &tmp.path().join(format!("{d}-{timings}")));
                f.output.timings = timings;
                run_file(&f, "run").unwrap();
                report_bytes(&f.output.dir)
            })
            .collect();
        (out[0].clone(), out[1].clone())
    };
    let (a, b) = run_twice(false);
    let plain = a == b;
    let (a, b) = run_twice(true);
    let timed = masked(&a) == masked(&b);

    let axes: Vec<SweepAxis> = vec![
        "theta=0,0.5,1".parse().unwrap(),
        "loss_kind=emd,rmse".parse().unwrap(),
    ];
    let sweep = |threads: usize, name: &str| {
        let f: ConfigFile = common::small_file(9, &tmp.path().join(name));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_sweep(&f, &axes)).unwrap();
        std::fs::read(f.output.dir.join("sweep.csv")).unwrap()
    };
    let serial = sweep(1, "serial");
    let parallel = sweep(4, "parallel");
    let swept = serial == parallel;
    verdict(
        9,
        plain && timed && swept,
        &format!(
            "repeat run byte-identical: {plain}; with timings, identical outside the timing columns: {timed}; 6-cell sweep on 1 vs 4 threads byte-identical: {swept}"
        ),
    );
}

fn offline_pair(ds: &Dataset, lstm: LstmConfig) -> (f64, f64, Vec<SensorId>, usize) {
    let mut cfg = RunConfig::new(10);
    cfg.theta = 0.05;
    cfg.lstm = lstm;
    cfg.targets = cfg.resolve_targets(ds).unwrap();
    let owam = run_offline(ds, &cfg).unwrap();
    let k = owam.targets[0].k;
    cfg.theta = 0.0;
    let base = run_offline(ds, &cfg).unwrap();
    (owam.rmse, base.rmse, cfg.targets, k)
}

#[test]
fn criterion_10_metr_la_format_run() {
    match std::env::var_os(METR_LA_ENV) {
        Some(path) => {
            let start = Instant::now();
            let ds = load_csv(Path::new(&path), &LoadOptions::default())
                .unwrap()
                .dataset;
            let (owam, base, targets, k) = offline_pair(&ds, LstmConfig::default());
            let took = start.elapsed();
            verdict(
                10,
                owam <= base && took < METR_LA_BUDGET,
                &format!(
                    "{} sensors x {} steps, targets {targets:?}, k = {k}: owam rmse {owam:.3} <= baseline {base:.3}, {took:.2?} (budget {METR_LA_BUDGET:?})",
                    ds.n_sensors(),
                    ds.n_steps()
                ),
            );
        }
        None => {
            // No real file: exercise the same path on a synthetic 207-sensor CSV.
            let tmp = tempfile::tempdir().unwrap();
            let mut sc = SynthConfig::new(207, 3 * 288, 10);
            sc.noise_sigma = 5.0;
            let csv = tmp.path().join("metr-la-like.csv");
            save_csv(&generate_synthetic(&sc).unwrap(), &csv).unwrap();
            let ds = load_csv(&csv, &LoadOptions::default()).unwrap().dataset;
            let (owam, base, targets, k) = offline_pair(&ds, common::tiny_lstm());
            let ok = ds.n_sensors() == 207
                && k == 10
                && targets.len() == 5
                && owam.is_finite()
                && base.is_finite();
            println!(
                "criterion 10 SKIPPED: set {METR_LA_ENV} to a METR-LA-format CSV; synthetic 207-sensor CSV ran end to end (k = {k}, owam rmse {owam:.3}, baseline {base:.3})"
            );
            assert!(ok);
        }
    }
}

#[test]
fn fpd_stream_is_consistent_with_ranges() {
    // Guard for the scorer used by criteria 4 and 6.
    let ds = common::planted(2, 4, 1);
    let s = &ds.series()[0];
    assert_eq!(
        fpd_stream(s, &FpdConfig::default()).unwrap(),
        fpd_range(s, &FpdConfig::default(), 0, ds.n_steps()).unwrap()
    );
}
