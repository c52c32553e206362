//! End-to-end stages over a [`RunConfig`]: collect, train, offline and
//! online evaluation. Every stage reads and writes only the configured
//! directories, and every file carries the config hash and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::harness::{
    self, dataset_samples, eval_offline, eval_online, split, EvalReport, OnlineEntry, OnlineMode, Split, Trajectory,
};
use crate::learning::{checkpoint, train, ModelParams, Role, TrainReport};
use crate::world::write_pgm;

pub const MANIFEST: &str = "manifest.txt";
pub const SPLIT_FILE: &str = "split.txt";
pub const TRAINING_LOG: &str = "training.txt";

/// Depth maps are dumped once per this many frames.
pub const DEPTH_DUMP_EVERY: usize = 20;

pub fn model_path(cfg: &RunConfig, role: Role) -> PathBuf {
    cfg.paths.model_dir.join(format!("{}.model", role.as_str()))
}

fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn header(cfg: &RunConfig) -> String {
    cfg.provenance().iter().map(|p| format!("# {p}\n")).collect()
}

/// Runs the collection rollouts and writes one CSV + binary pair per
/// trajectory plus a manifest listing them in order.
pub fn collect_dataset(cfg: &RunConfig, objects: &[&str], dump_depth: bool) -> Result<Vec<Trajectory>> {
    let dir = &cfg.paths.data_dir;
    std::fs::create_dir_all(dir)?;
    let every = dump_depth.then_some(DEPTH_DUMP_EVERY);
    let runs = harness::collect_with_snapshots(objects, &cfg.world, &cfg.gains, &cfg.harness, cfg.seed, every)?;
    let prov = cfg.provenance();
    let mut manifest = header(cfg);
    let mut out = Vec::with_capacity(runs.len());
    for (traj, snaps) in runs {
        traj.save(dir, &prov)?;
        let _ = writeln!(manifest, "{}", traj.stem());
        if !snaps.is_empty() {
            let depth_dir = dir.join("depth");
            std::fs::create_dir_all(&depth_dir)?;
            for s in &snaps {
                for (side, map) in [("L", &s.left), ("R", &s.right)] {
                    let name = format!("{}_{:05}_{side}.pgm", traj.stem(), s.frame);
                    write_pgm(map, &depth_dir.join(name), &prov)?;
                }
            }
        }
        out.push(traj);
    }
    std::fs::write(dir.join(MANIFEST), manifest)?;
    Ok(out)
}

/// Loads every trajectory listed in the data directory's manifest.
pub fn load_dataset(dir: &Path) -> Result<Vec<Trajectory>> {
    let manifest = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&manifest).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::DatasetNotFound(manifest.clone()),
        _ => Error::Io(e),
    })?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|stem| Trajectory::load(&dir.join(format!("{}.csv", stem.trim()))))
        .collect()
}

pub struct TrainOutcome {
    pub split: Split,
    pub n: TrainReport,
    pub pi: TrainReport,
}

fn stems(ts: &[Trajectory]) -> String {
    ts.iter().map(|t| t.stem()).collect::<Vec<_>>().join(" ")
}

/// Splits the collected dataset, trains N and pi on the training part and
/// writes both checkpoints, the split and the loss history.
pub fn train_models(cfg: &RunConfig) -> Result<TrainOutcome> {
    let dataset = load_dataset(&cfg.paths.data_dir)?;
    let split = split(&dataset, cfg.seed)?;
    let omega_max = cfg.gains.omega_max;
    let mut tc = cfg.training.clone();
    let mut reports = Vec::with_capacity(2);
    for (i, role) in [Role::N, Role::Pi].into_iter().enumerate() {
        tc.seed = mix(cfg.seed, 100 + i as u64);
        let mut samples = dataset_samples(&split.train, role, omega_max);
        if tc.half_turn_augment {
            samples = harness::with_half_turns(samples);
        }
        reports.push(train(&samples, &tc, role)?);
    }
    let pi = reports.pop().expect("two reports");
    let n = reports.pop().expect("two reports");
    std::fs::create_dir_all(&cfg.paths.model_dir)?;
    let prov = cfg.provenance();
    for r in [&n, &pi] {
        checkpoint::save(&r.model, &model_path(cfg, r.model.role()), &prov)?;
    }
    let mut s = header(cfg);
    let _ = writeln!(s, "train: {}", stems(&split.train));
    let _ = writeln!(s, "test: {}", stems(&split.test));
    std::fs::write(cfg.paths.model_dir.join(SPLIT_FILE), s)?;
    let mut log = header(cfg);
    for r in [&n, &pi] {
        let _ = writeln!(log, "[{}]", r.model.role().as_str());
        let _ = writeln!(log, "samples: {}", r.samples_used);
        let _ = writeln!(log, "initial_loss: {:e}", r.initial_loss);
        for (e, l) in r.epoch_losses.iter().enumerate() {
            let _ = writeln!(log, "epoch_{:03}: {l:e}", e + 1);
        }
    }
    std::fs::write(cfg.paths.model_dir.join(TRAINING_LOG), log)?;
    Ok(TrainOutcome { split, n, pi })
}

/// Loads a checkpoint and checks its role.
pub fn load_model(cfg: &RunConfig, role: Role) -> Result<ModelParams> {
    let m = checkpoint::load(&model_path(cfg, role))?;
    if m.role() != role {
        return Err(Error::Model(format!("expected a {} model, found {}", role.as_str(), m.role().as_str())));
    }
    Ok(m)
}

/// Replays the held-out trajectories with and without N.
pub fn offline_report(cfg: &RunConfig) -> Result<EvalReport> {
    let dataset = load_dataset(&cfg.paths.data_dir)?;
    let split = split(&dataset, cfg.seed)?;
    let n = load_model(cfg, Role::N)?;
    let offline = eval_offline(&n, &split.test, cfg.world.dt, cfg.gains.omega_max)?;
    Ok(EvalReport { provenance: cfg.provenance(), offline, online: Vec::new() })
}

/// Online tracking for every `(object, mode)` pair. Both modes of one object
/// share the same noise seed. Trajectories go to `<report_dir>/online`.
pub fn online_report(cfg: &RunConfig, objects: &[&str], modes: &[OnlineMode]) -> Result<EvalReport> {
    let models = if modes.contains(&OnlineMode::Ours) {
        Some((load_model(cfg, Role::N)?, load_model(cfg, Role::Pi)?))
    } else {
        None
    };
    let jobs: Vec<(usize, &str, OnlineMode)> = objects
        .iter()
        .enumerate()
        .flat_map(|(i, o)| modes.iter().map(move |m| (i, *o, *m)))
        .collect();
    let refs = models.as_ref().map(|(n, pi)| (n, pi));
    let results: Vec<(OnlineEntry, Trajectory)> = jobs
        .par_iter()
        .map(|&(i, o, m)| eval_online(refs, o, m, mix(cfg.seed, 1000 + i as u64), &cfg.world, &cfg.gains, &cfg.harness))
        .collect::<Result<_>>()?;
    let dir = cfg.paths.report_dir.join("online");
    std::fs::create_dir_all(&dir)?;
    let prov = cfg.provenance();
    let mut online = Vec::with_capacity(results.len());
    for (entry, traj) in results {
        traj.save(&dir, &prov)?;
        online.push(entry);
    }
    Ok(EvalReport { provenance: prov, offline: Vec::new(), online })
}

/// Writes `<name>.txt` and `<name>.json` into the report directory.
pub fn write_report(cfg: &RunConfig, report: &EvalReport, name: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(&cfg.paths.report_dir)?;
    let txt = cfg.paths.report_dir.join(format!("{name}.txt"));
    let json = cfg.paths.report_dir.join(format!("{name}.json"));
    std::fs::write(&txt, report.to_text())?;
    std::fs::write(&json, report.to_json())?;
    Ok((txt, json))
}

/// Epoch cap and online horizon (periods) of [`demo_config`].
pub const DEMO_EPOCHS: usize = 30;
pub const DEMO_PERIODS: f64 = 1.0;

/// `cfg` with a shorter training schedule and a one-period online horizon.
pub fn demo_config(cfg: &RunConfig) -> RunConfig {
    let mut out = cfg.clone();
    out.training.epochs = out.training.epochs.min(DEMO_EPOCHS);
    out.harness.periods = out.harness.periods.min(DEMO_PERIODS);
    out
}

/// Collect, train, offline and online evaluation on the whole library; the
/// combined report is written as `report`.
pub fn run_all(cfg: &RunConfig, dump_depth: bool) -> Result<EvalReport> {
    let ids = harness::all_object_ids();
    collect_dataset(cfg, &ids, dump_depth)?;
    train_models(cfg)?;
    let offline = offline_report(cfg)?;
    let online = online_report(cfg, &ids, &[OnlineMode::OpenLoop, OnlineMode::Ours])?;
    let report = EvalReport { provenance: cfg.provenance(), offline: offline.offline, online: online.online };
    write_report(cfg, &report, "report")?;
    Ok(report)
}
