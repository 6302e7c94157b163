use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use faultlab::campaign::report::{self, EVENTS_FILE};
use faultlab::campaign::run::base_frame;
use faultlab::campaign::{
    emit_reports, filter_experiments, generate_campaign, load_events, per_scenario_counts, run_campaign,
    CampaignConfig, Experiment,
};
use faultlab::campaign::generate::derive_seed;
use faultlab::fault::{FaultModel, FaultTarget};
use faultlab::plant::ScenarioId;
use faultlab::vision::perturb;

#[derive(Parser)]
#[command(name = "faultlab", version, about = "Fault-injection campaigns for an ACC + LKAS driving agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Selection {
    /// Campaign configuration (TOML); built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override the campaign seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Only these scenarios (comma separated, e.g. S1,S3).
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<ScenarioId>,
    /// Only these fault targets (comma separated, e.g. RadarJam,CarSteer).
    #[arg(long, value_delimiter = ',')]
    target: Vec<FaultTarget>,
}

#[derive(Subcommand)]
enum Command {
    /// Expand the fault library into the experiment list.
    Generate {
        #[command(flatten)]
        sel: Selection,
        /// Also write experiments.jsonl here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Execute the campaign and write events, summary and aggregate tables.
    Run {
        #[command(flatten)]
        sel: Selection,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Worker threads.
        #[arg(short, long, default_value_t = 1)]
        workers: usize,
        /// Write the perturbed frame of every image-effect experiment as raw
        /// 8-bit files under <out>/frames.
        #[arg(long)]
        export_frames: bool,
    },
    /// Rebuild summary and aggregate tables from an event log.
    Report {
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare guided against random injection from an event log.
    Compare {
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_config(sel: &Selection) -> Result<CampaignConfig> {
    let mut cfg = match &sel.config {
        Some(path) => CampaignConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => CampaignConfig::default(),
    };
    if let Some(seed) = sel.seed {
        cfg.campaign.seed = seed;
    }
    Ok(cfg)
}

fn select(cfg: &CampaignConfig, sel: &Selection) -> Result<Vec<Experiment>> {
    let all = generate_campaign(cfg)?;
    let scenarios = (!sel.scenario.is_empty()).then_some(sel.scenario.as_slice());
    let targets = (!sel.target.is_empty()).then_some(sel.target.as_slice());
    Ok(filter_experiments(all, scenarios, targets))
}

fn print_counts(exps: &[Experiment]) {
    println!("experiments: {}", exps.len());
    for (s, n) in per_scenario_counts(exps) {
        println!("  {s}: {n}");
    }
}

fn export_frames(cfg: &CampaignConfig, exps: &[Experiment], out: &Path) -> Result<usize> {
    let dir = out.join("frames");
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let clean = base_frame(cfg);
    clean.save_raw(&dir.join("clean.raw"))?;
    let mut n = 0;
    for e in exps {
        if let FaultModel::VisionImageEffect { effect } = &e.fault.model {
            perturb(&clean, effect, derive_seed(e.seed, 1)).save_raw(&dir.join(format!("exp-{:05}.raw", e.id)))?;
            n += 1;
        }
    }
    Ok(n)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { sel, out } => {
            let cfg = load_config(&sel)?;
            let exps = select(&cfg, &sel)?;
            print_counts(&exps);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let mut text = String::from("# faultlab-experiments v1\n");
                for e in &exps {
                    text.push_str(&serde_json::to_string(e)?);
                    text.push('\n');
                }
                let path = dir.join("experiments.jsonl");
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
        }
        Command::Run { sel, out, workers, export_frames: frames } => {
            if workers == 0 {
                bail!("--workers must be at least 1");
            }
            let cfg = load_config(&sel)?;
            let exps = select(&cfg, &sel)?;
            print_counts(&exps);
            let start = Instant::now();
            let logs = run_campaign(&cfg, &exps, workers)?;
            let records: Vec<_> = logs.into_iter().map(|l| l.record).collect();
            let paths = emit_reports(&records, &out)?;
            println!("ran {} experiments in {:.1}s", records.len(), start.elapsed().as_secs_f64());
            println!("wrote {}, {}, {}", paths.events.display(), paths.summary.display(), paths.aggregate.display());
            if frames {
                println!("exported {} frames", export_frames(&cfg, &exps, &out)?);
            }
        }
        Command::Report { out } => {
            let records = load_events(&out.join(EVENTS_FILE))?;
            let paths = emit_reports(&records, &out)?;
            print!("{}", std::fs::read_to_string(&paths.aggregate)?);
        }
        Command::Compare { out } => {
            let records = load_events(&out.join(EVENTS_FILE))?;
            let cmp = report::comparison(&records);
            let path = report::write_comparison(&cmp, &out)?;
            print!("{}", report::comparison_csv(&cmp));
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
