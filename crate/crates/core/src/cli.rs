//! Command-line driver for the pipeline stages.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::distill::step_accuracy;
use crate::eval::{emit_curve, evaluate, format_table, save_reports};
use crate::pipeline;
use crate::policy::{Actor, Conditioning, OracleActor, Policy};
use crate::reward::{reward_total, GroundTruth, RewardConfig};
use crate::scenario::{emit_scenarios, load_scenarios};
use crate::sim::{generate_world, save_records, TaskId, World};

#[derive(Debug, Parser)]
#[command(name = "gui-reasoner", version, about = "Train and evaluate GUI agents in a simulated screen world")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a world and write it as JSON.
    Synth {
        #[arg(long, default_value = "world.json")]
        out: PathBuf,
    },
    /// Find bottleneck steps, run the teacher, filter, write the SFT set.
    Distill {
        #[arg(long, default_value = "world.json")]
        world: PathBuf,
        /// Base policy.
        #[arg(long, default_value = "base.json")]
        policy: PathBuf,
        #[arg(long, default_value = "sft.jsonl")]
        out: PathBuf,
        /// Also write the per-step bottleneck verdicts.
        #[arg(long)]
        bottlenecks: Option<PathBuf>,
    },
    /// Behavior cloning: the base policy, or reasoning SFT with `--sft`.
    Pretrain {
        #[arg(long, default_value = "world.json")]
        world: PathBuf,
        /// SFT dataset from `distill`.
        #[arg(long, requires = "init")]
        sft: Option<PathBuf>,
        /// Starting policy for SFT.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value = "base.json")]
        out: PathBuf,
    },
    /// Find prone-to-error steps and write recovery scenarios.
    Forge {
        #[arg(long, default_value = "world.json")]
        world: PathBuf,
        #[arg(long, default_value = "sft_policy.json")]
        policy: PathBuf,
        #[arg(long, default_value = "scenarios.jsonl")]
        out: PathBuf,
        /// Also write the per-step success estimates.
        #[arg(long)]
        prone: Option<PathBuf>,
    },
    /// Stage-2 RL over the mixed pools.
    Train {
        #[arg(long, default_value = "world.json")]
        world: PathBuf,
        #[arg(long, default_value = "sft_policy.json")]
        policy: PathBuf,
        /// Scenario records from `forge`.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, default_value = "policy.json")]
        out: PathBuf,
        #[arg(long, default_value = "train_log.jsonl")]
        log: PathBuf,
        /// Reward curve as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Teacher-forced Type / Grounding / SR.
    Eval {
        #[arg(long, default_value = "world.json")]
        world: PathBuf,
        #[arg(long, conflicts_with = "oracle")]
        policy: Option<PathBuf>,
        /// Evaluate the reference actor instead of a policy.
        #[arg(long)]
        oracle: bool,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = TaskSet::Holdout)]
        tasks: TaskSet,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Score `{raw, ground_truth, config?}` JSON lines.
    Score {
        /// Input file; standard input when omitted or `-`.
        input: Option<PathBuf>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Low,
    High,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Conditioning> {
        match self {
            ModeArg::Low => vec![Conditioning::Low],
            ModeArg::High => vec![Conditioning::High],
            ModeArg::Both => vec![Conditioning::Low, Conditioning::High],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskSet {
    Train,
    Holdout,
    All,
}

/// One line of `score` input.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub raw: String,
    pub ground_truth: GroundTruth,
    #[serde(default)]
    pub config: Option<RewardConfig>,
}

impl Common {
    fn load(&self) -> anyhow::Result<Config> {
        let mut cfg = Config::load_or_default(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

fn load_world(path: &Path) -> anyhow::Result<World> {
    World::load(path).with_context(|| format!("reading world {}", path.display()))
}

fn load_policy(path: &Path, cfg: &Config) -> anyhow::Result<Policy> {
    let mut p = Policy::load(path).with_context(|| format!("reading policy {}", path.display()))?;
    p.max_candidates = cfg.max_candidates;
    Ok(p)
}

fn tasks(world: &World, cfg: &Config, set: TaskSet) -> Vec<TaskId> {
    let (train, held) = world.split_tasks(cfg.eval.holdout_fraction);
    match set {
        TaskSet::Train => train,
        TaskSet::Holdout => held,
        TaskSet::All => world.tasks.iter().map(|t| t.id).collect(),
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let common = cli.common;
    match cli.command {
        Command::Synth { out } => {
            let cfg = common.load()?;
            let world = generate_world(cfg.seed, cfg.world)?;
            world.save(&out)?;
            println!(
                "world: {} screens, {} tasks, {} steps -> {}",
                world.screens.len(),
                world.tasks.len(),
                world.step_refs().len(),
                out.display()
            );
        }
        Command::Distill { world, policy, out, bottlenecks } => {
            let cfg = common.load()?;
            let world = load_world(&world)?;
            let base = load_policy(&policy, &cfg)?;
            let train = tasks(&world, &cfg, TaskSet::Train);
            let d = pipeline::distill(&base, &world, &train, &cfg)?;
            save_records(&out, &d.accepted)?;
            if let Some(p) = bottlenecks {
                save_records(p, &d.bottlenecks)?;
            }
            let bn = d.bottleneck_steps();
            println!(
                "steps {} bottlenecks {} teacher samples {} accepted {} -> {}",
                d.bottlenecks.len(),
                bn.len(),
                d.samples.len(),
                d.accepted.len(),
                out.display()
            );
            println!("base high-level accuracy on bottlenecks {:.1}", 100.0 * step_accuracy(&base, &world, &bn, Conditioning::High)?);
        }
        Command::Pretrain { world, sft, init, out } => {
            let cfg = common.load()?;
            let world = load_world(&world)?;
            let train = tasks(&world, &cfg, TaskSet::Train);
            let policy = match (sft, init) {
                (Some(sft), Some(init)) => {
                    let base = load_policy(&init, &cfg)?;
                    let records = crate::distill::load_sft_dataset(&sft)
                        .with_context(|| format!("reading SFT set {}", sft.display()))?;
                    pipeline::reasoning_sft(&base, &world, &records, &cfg)?
                }
                (None, None) => pipeline::pretrain_base(&world, &train, &cfg)?,
                (None, Some(_)) => bail!("--init is only used together with --sft"),
                (Some(_), None) => bail!("--sft needs --init"),
            };
            policy.save(&out)?;
            println!("policy -> {}", out.display());
        }
        Command::Forge { world, policy, out, prone } => {
            let cfg = common.load()?;
            let world = load_world(&world)?;
            let policy = load_policy(&policy, &cfg)?;
            let train = tasks(&world, &cfg, TaskSet::Train);
            let f = pipeline::forge(&policy, &world, &train, &cfg)?;
            let n = emit_scenarios(&world, &f.forged.scenarios, &out)?;
            if let Some(p) = prone {
                save_records(p, &f.prone)?;
            }
            println!(
                "steps {} prone {} scenarios {} skipped {} -> {}",
                pipeline::step_refs(&world, &train).len(),
                f.prone.len(),
                n,
                f.forged.skipped.len(),
                out.display()
            );
        }
        Command::Train { world, policy, scenarios, out, log, curve } => {
            let cfg = common.load()?;
            let world = load_world(&world)?;
            let policy = load_policy(&policy, &cfg)?;
            let scenarios = match scenarios {
                Some(p) => load_scenarios(&p).with_context(|| format!("reading scenarios {}", p.display()))?,
                None => Vec::new(),
            };
            let train = tasks(&world, &cfg, TaskSet::Train);
            let (trained, train_log) = pipeline::stage2(&policy, &world, &train, &scenarios, &cfg)?;
            trained.save(&out)?;
            train_log.save(&log)?;
            if let Some(c) = curve {
                emit_curve(&train_log, c)?;
            }
            let ma = train_log.moving_average(50);
            if let (Some(first), Some(last)) = (ma.get(49.min(ma.len().saturating_sub(1))), ma.last()) {
                println!("reward moving average: step 50 {first:.3}, final {last:.3}");
            }
            println!("policy -> {}, log -> {}", out.display(), log.display());
        }
        Command::Eval { world, policy, oracle, mode, tasks: set, out } => {
            let cfg = common.load()?;
            let world = load_world(&world)?;
            let actor: Box<dyn Actor> = match (oracle, policy) {
                (true, _) => Box::new(OracleActor),
                (false, Some(p)) => Box::new(load_policy(&p, &cfg)?),
                (false, None) => bail!("give --policy or --oracle"),
            };
            let ids = tasks(&world, &cfg, set);
            let reports = mode
                .modes()
                .into_iter()
                .map(|m| evaluate(actor.as_ref(), &world, &ids, m))
                .collect::<crate::Result<Vec<_>>>()?;
            print!("{}", format_table(&reports));
            save_reports(&reports, &out)?;
        }
        Command::Score { input, out } => {
            let cfg = common.load()?;
            let reader: Box<dyn BufRead> = match input {
                Some(p) if p.as_os_str() != "-" => {
                    Box::new(BufReader::new(File::open(&p).with_context(|| format!("opening {}", p.display()))?))
                }
                _ => Box::new(BufReader::new(io::stdin())),
            };
            let mut writer: Box<dyn Write> = match out {
                Some(p) => Box::new(BufWriter::new(File::create(&p)?)),
                None => Box::new(BufWriter::new(io::stdout())),
            };
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let req: ScoreRequest =
                    serde_json::from_str(&line).with_context(|| format!("line {}: bad score request", i + 1))?;
                let rc = req.config.unwrap_or(cfg.reward);
                rc.validate().with_context(|| format!("line {}", i + 1))?;
                req.ground_truth.validate().with_context(|| format!("line {}", i + 1))?;
                let b = reward_total(&req.raw, &req.ground_truth, &rc);
                serde_json::to_writer(&mut writer, &b)?;
                writer.write_all(b"\n")?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}
