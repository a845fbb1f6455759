//! Command-line subcommands. Each one reads files, runs core routines and
//! writes CSV or `key = value` text.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use uavnet_core::eval::{
    brute_force_placement, passive_baseline, rollout_with, smooth_curve, transition_gain, ActorController, EpisodeTrace,
    GainReport,
};
use uavnet_core::{AssociationMap, UavEnv};

use crate::checkpoint::Checkpoint;
use crate::config::ScenarioFile;
use crate::export;
use crate::training::train;

#[derive(Debug, Parser)]
#[command(name = "uavnet", version, about = "Train and evaluate UAV fleet regulation agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an agent on a scenario file.
    Train(TrainArgs),
    /// Greedy rollout of a checkpoint.
    Eval(EvalArgs),
    /// Transition gain of a proactive agent over the passive baseline.
    Compare(CompareArgs),
    /// Best static placement on a grid.
    Oracle(OracleArgs),
    /// Smoothed reward curve from a training log directory.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides `apc.workers`.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Episodes per worker; overrides `apc.episodes`.
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, alias = "checkpoint-dir")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reset seed; defaults to `eval.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub psr: PathBuf,
    #[arg(long)]
    pub pre: PathBuf,
    #[arg(long)]
    pub post: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory for the CSV; printed after the report when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Defaults to the scenario's fleet size.
    #[arg(long)]
    pub uavs: Option<usize>,
    /// Grid spacing in area units; defaults to `eval.grid_step`.
    #[arg(long)]
    pub grid: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Directory holding `episodes.csv`.
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => train_cmd(&a, stdout),
        Command::Eval(a) => eval_cmd(&a, stdout),
        Command::Compare(a) => compare_cmd(&a, stdout),
        Command::Oracle(a) => oracle_cmd(&a, stdout),
        Command::Curves(a) => curves_cmd(&a, stdout),
    }
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn train_cmd(a: &TrainArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut file = ScenarioFile::load(&a.scenario)?;
    if let Some(k) = a.workers {
        anyhow::ensure!(k >= 1, "--workers must be at least 1");
        file.apc.workers = k;
    }
    if let Some(n) = a.episodes {
        file.apc.episodes = n;
    }
    if let Some(s) = a.seed {
        file.apc.seed = s;
    }
    create_dir(&a.out)?;
    std::fs::write(a.out.join("scenario.toml"), file.to_toml()?)?;
    let result = train(&file)?;
    let name = &file.scenario.name;
    let best = result.best();
    result.checkpoint(best, name).save(&a.out.join("best.ckpt"))?;
    result.final_checkpoint(name).save(&a.out.join("final.ckpt"))?;
    export::write_episodes(&a.out.join("episodes.csv"), &result.outcome.episodes)?;
    export::write_training_log(&a.out.join("training_log.csv"), &result.outcome.updates)?;
    let rewards = result.rewards();
    let window = file.apc.smoothing_window.max(1);
    export::write_curve(&a.out.join("curve.csv"), &rewards, &smooth_curve(&rewards, window))?;
    writeln!(out, "episodes = {}", result.outcome.episodes.len())?;
    writeln!(out, "updates = {}", result.outcome.agent.updates())?;
    writeln!(out, "worker_failures = {}", result.outcome.failures.len())?;
    writeln!(out, "best_episode = {}", best.episode)?;
    writeln!(out, "best_smoothed_reward = {}", best.smoothed)?;
    writeln!(out, "best_steady_score = {}", best.score)?;
    Ok(())
}

/// Greedy rollout of `ckpt` on `scenario` with the association map of
/// every step.
pub fn evaluate(
    file: &ScenarioFile,
    ckpt: &Checkpoint,
    seed: u64,
) -> anyhow::Result<(EpisodeTrace, Vec<(usize, AssociationMap)>)> {
    let mut env = UavEnv::new(file.scenario.clone())?;
    env.reset(seed);
    let mut c = ActorController::full_fleet(ckpt.policy.clone(), &env)
        .context("checkpoint does not match the scenario's fleet")?;
    let mut maps = Vec::new();
    let trace = rollout_with(&mut env, &mut c, "checkpoint", &mut |e: &UavEnv| {
        if let Some(m) = e.last_association() {
            maps.push((e.t() - 1, m.clone()));
        }
    })?;
    Ok((trace, maps))
}

pub fn eval_cmd(a: &EvalArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let file = ScenarioFile::load(&a.scenario)?;
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let seed = a.seed.unwrap_or(file.eval.seed);
    let (trace, maps) = evaluate(&file, &ckpt, seed)?;
    create_dir(&a.out)?;
    let mode = UavEnv::new(file.scenario.clone())?.layout().mode;
    export::write_trajectory(&a.out.join("trajectory.csv"), &[(0, &trace)], mode)?;
    export::write_associations(&a.out.join("associations.csv"), &maps)?;
    let served: Vec<String> = trace.served().iter().map(|v| v.to_string()).collect();
    writeln!(out, "steps = {}", trace.len())?;
    writeln!(out, "boundary_terminated = {}", trace.boundary_terminated)?;
    writeln!(out, "served = {}", served.join(" "))?;
    writeln!(out, "accumulated_score = {}", trace.scores().iter().sum::<f64>())?;
    writeln!(out, "steady_score = {}", trace.steady_state_score(file.eval.steady_steps))?;
    Ok(())
}

/// PSR trace, passive baseline trace and their gain report.
pub fn compare(
    file: &ScenarioFile,
    psr: &Checkpoint,
    pre: &Checkpoint,
    post: &Checkpoint,
    seed: u64,
) -> anyhow::Result<(EpisodeTrace, EpisodeTrace, GainReport)> {
    let Some(event) = file.scenario.lineup_events.first() else {
        bail!("scenario {} has no lineup change to compare across", file.scenario.name);
    };
    let env = UavEnv::new(file.scenario.clone())?;
    let mut c = ActorController::full_fleet(psr.policy.clone(), &env).context("PSR checkpoint does not match the scenario")?;
    let p = uavnet_core::eval::run_policy(&file.scenario, &mut c, seed, "psr")?;
    let b = passive_baseline(&file.scenario, &pre.policy, &post.policy, seed)?;
    let report = transition_gain(&p, &b, event)?;
    Ok((p, b, report))
}

pub fn compare_cmd(a: &CompareArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let file = ScenarioFile::load(&a.scenario)?;
    let (psr, pre, post) = (Checkpoint::load(&a.psr)?, Checkpoint::load(&a.pre)?, Checkpoint::load(&a.post)?);
    let (p, b, report) = compare(&file, &psr, &pre, &post, a.seed.unwrap_or(file.eval.seed))?;
    write!(out, "{}", export::gain_report_text(&report))?;
    match &a.out {
        Some(dir) => {
            create_dir(dir)?;
            export::write_comparison(&dir.join("comparison.csv"), &p, &b, &report)?;
        }
        None => {
            writeln!(out)?;
            export::comparison_csv(out, &p, &b, &report)?;
        }
    }
    Ok(())
}

pub fn oracle_cmd(a: &OracleArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let file = ScenarioFile::load(&a.scenario)?;
    let env = UavEnv::new(file.scenario.clone())?;
    let n = a.uavs.unwrap_or(file.scenario.fleet.count);
    let grid = a.grid.unwrap_or(file.eval.grid_step);
    let r = brute_force_placement(env.radio(), &file.scenario.area, env.users(), n, grid, file.scenario.constants.beta)?;
    writeln!(out, "uavs = {n}")?;
    writeln!(out, "grid = {grid}")?;
    writeln!(out, "exhaustive = {}", r.exhaustive)?;
    writeln!(out, "served = {}", r.served)?;
    writeln!(out, "score = {}", r.score)?;
    for (i, p) in r.positions.iter().enumerate() {
        writeln!(out, "uav{i} = {} {}", p.x, p.y)?;
    }
    Ok(())
}

pub fn curves_cmd(a: &CurvesArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let rows = export::read_episodes(&a.log.join("episodes.csv"))?;
    let raw: Vec<f64> = rows.iter().map(|r| r.reward).collect();
    let smoothed = smooth_curve(&raw, a.window);
    match &a.out {
        Some(path) => export::write_curve(path, &raw, &smoothed),
        None => {
            writeln!(out, "index,reward,smoothed")?;
            for (i, (r, s)) in raw.iter().zip(&smoothed).enumerate() {
                writeln!(out, "{i},{r},{s}")?;
            }
            Ok(())
        }
    }
}
