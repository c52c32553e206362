//! `dtactive`: collect, train and evaluate the tactile rolling pipeline.
//!
//! Settings come from defaults, then `--config <file>`, then flags.
//! Exit codes: 0 success, 1 runtime failure, 2 usage or flag error.
//! Failures print one line, `error: <message>`, to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtactive::config::{parse_config, Paths, RunConfig};
use dtactive::dexterity;
use dtactive::harness::{self, EvalReport, OnlineMode};
use dtactive::pipeline;

#[derive(Parser, Debug)]
#[command(name = "dtactive", version, about = "Tactile active-surface gripper: rolling manipulation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grasp-analysis closed forms and the minimum graspable radius.
    Dexterity(Common),
    /// Constant-rate collection rollouts.
    Collect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        objects: Objects,
        /// Also write every 20th pair of depth maps as 16-bit PGM.
        #[arg(long)]
        dump_depth: bool,
    },
    /// Train the rectification and policy networks on collected data.
    Train(Common),
    /// Replay held-out trajectories with and without rectification.
    EvalOffline(Common),
    /// Closed-loop sinusoid tracking.
    EvalOnline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        objects: Objects,
        /// open-loop, ours or oracle; repeatable. Default: open-loop and ours.
        #[arg(long = "mode", value_parser = parse_mode)]
        modes: Vec<OnlineMode>,
        #[command(flatten)]
        profile: Profile,
    },
    /// Collect, train, offline and online evaluation on every object.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump_depth: bool,
        #[command(flatten)]
        profile: Profile,
    },
    /// `run` with a shortened training schedule and online horizon.
    Demo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump_depth: bool,
        #[command(flatten)]
        profile: Profile,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root: data, models and reports go to <dir>/{data,models,reports}.
    #[arg(long = "out", value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Objects {
    /// Library object id; repeatable. Default: all twelve.
    #[arg(long = "object", value_name = "ID")]
    ids: Vec<String>,
}

#[derive(Args, Debug)]
struct Profile {
    /// Sinusoid amplitude, degrees.
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    /// Sinusoid period, seconds.
    #[arg(long, allow_negative_numbers = true)]
    period: Option<f64>,
}

fn parse_mode(s: &str) -> Result<OnlineMode, String> {
    OnlineMode::parse(s).map_err(|_| format!("unknown mode {s:?} (expected open-loop, ours or oracle)"))
}

/// Error with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl From<dtactive::Error> for Failure {
    fn from(e: dtactive::Error) -> Self {
        Failure { code: 1, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

/// Defaults, then the file, then flags. A bad file is a runtime failure; a
/// flag that makes the config invalid is a usage error.
fn load_config(common: &Common, profile: Option<&Profile>) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.paths = Paths::under(out);
    }
    if let Some(p) = profile {
        if let Some(a) = p.amplitude {
            cfg.harness.amplitude_deg = a;
        }
        if let Some(t) = p.period {
            cfg.harness.period = t;
        }
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn object_ids(objects: &Objects) -> Result<Vec<&str>, Failure> {
    if objects.ids.is_empty() {
        return Ok(harness::all_object_ids());
    }
    let all = harness::all_object_ids();
    objects
        .ids
        .iter()
        .map(|id| {
            all.iter()
                .find(|a| **a == id.as_str())
                .copied()
                .ok_or_else(|| usage(format!("unknown object {id:?} (expected one of {})", all.join(", "))))
        })
        .collect()
}

fn print_report(report: &EvalReport, files: (PathBuf, PathBuf)) {
    print!("{}", report.to_text());
    println!("report: {}", files.0.display());
    println!("summary: {}", files.1.display());
}

fn dexterity_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let rows = dexterity::summary_table(&cfg.dexterity)?;
    println!("{:<44} {:>12}  {}", "quantity", "value", "unit");
    for r in &rows {
        println!("{:<44} {:>12.6}  {}", r.name, r.value, r.unit);
    }
    std::fs::create_dir_all(&cfg.paths.report_dir).map_err(dtactive::Error::from)?;
    let path = cfg.paths.report_dir.join("dexterity.json");
    std::fs::write(&path, dexterity::table_json(&rows, &cfg.provenance())).map_err(dtactive::Error::from)?;
    println!("record: {}", path.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Dexterity(common) => dexterity_cmd(&load_config(&common, None)?),
        Command::Collect { common, objects, dump_depth } => {
            let cfg = load_config(&common, None)?;
            let ids = object_ids(&objects)?;
            let trajs = pipeline::collect_dataset(&cfg, &ids, dump_depth)?;
            for t in &trajs {
                println!("{} {} frames={} status={}", t.object, t.profile, t.frames.len(), t.status.as_str());
            }
            println!("frames: {}", harness::frame_count(&trajs));
            println!("data: {}", cfg.paths.data_dir.display());
            Ok(())
        }
        Command::Train(common) => {
            let cfg = load_config(&common, None)?;
            let out = pipeline::train_models(&cfg)?;
            for r in [&out.n, &out.pi] {
                let last = r.epoch_losses.last().copied().unwrap_or(f64::NAN);
                println!(
                    "{}: samples={} initial_loss={:e} final_loss={:e}",
                    r.model.role().as_str(),
                    r.samples_used,
                    r.initial_loss,
                    last
                );
            }
            println!("models: {}", cfg.paths.model_dir.display());
            Ok(())
        }
        Command::EvalOffline(common) => {
            let cfg = load_config(&common, None)?;
            let report = pipeline::offline_report(&cfg)?;
            let files = pipeline::write_report(&cfg, &report, "offline")?;
            print_report(&report, files);
            Ok(())
        }
        Command::EvalOnline { common, objects, modes, profile } => {
            let cfg = load_config(&common, Some(&profile))?;
            let ids = object_ids(&objects)?;
            let modes = if modes.is_empty() { vec![OnlineMode::OpenLoop, OnlineMode::Ours] } else { modes };
            let report = pipeline::online_report(&cfg, &ids, &modes)?;
            let files = pipeline::write_report(&cfg, &report, "online")?;
            print_report(&report, files);
            Ok(())
        }
        Command::Run { common, dump_depth, profile } => {
            let cfg = load_config(&common, Some(&profile))?;
            let report = pipeline::run_all(&cfg, dump_depth)?;
            print!("{}", report.to_text());
            println!("reports: {}", cfg.paths.report_dir.display());
            Ok(())
        }
        Command::Demo { common, dump_depth, profile } => {
            let cfg = pipeline::demo_config(&load_config(&common, Some(&profile))?);
            let report = pipeline::run_all(&cfg, dump_depth)?;
            print!("{}", report.to_text());
            println!("reports: {}", cfg.paths.report_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}
