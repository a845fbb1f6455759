//! CSV and plain-text outputs. Every file has a header row; floats are
//! written with Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use uavnet_core::eval::{EpisodeTrace, GainReport};
use uavnet_core::{AssociationMap, StateMode};

use crate::apc::{EpisodeRecord, UpdateRecord};

fn writer(path: &Path) -> anyhow::Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// One row per (episode, step, UAV). The level column is the battery in
/// quit mode and the altitude in join mode.
pub fn write_trajectory(path: &Path, episodes: &[(usize, &EpisodeTrace)], mode: StateMode) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    let level = match mode {
        StateMode::Quit => "energy",
        StateMode::Join => "altitude_m",
    };
    w.write_record(["episode", "step", "uav", "x", "y", level, "status", "served", "reward"])?;
    for (episode, trace) in episodes {
        for s in &trace.steps {
            for u in 0..s.positions.len() {
                let lv = match mode {
                    StateMode::Quit => s.energies[u],
                    StateMode::Join => s.altitudes[u],
                };
                w.write_record([
                    episode.to_string(),
                    s.t.to_string(),
                    u.to_string(),
                    s.positions[u].x.to_string(),
                    s.positions[u].y.to_string(),
                    lv.to_string(),
                    s.statuses[u].as_str().to_string(),
                    s.served.to_string(),
                    s.reward.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct AssociationRow {
    step: usize,
    user: usize,
    /// Empty when the user is not served.
    uav: Option<usize>,
    rbs: u32,
    served: bool,
}

/// Per-step association rows `(step, user, uav, rbs, served)`.
pub fn write_associations(path: &Path, steps: &[(usize, AssociationMap)]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    for (step, map) in steps {
        for (user, link) in map.users.iter().enumerate() {
            w.serialize(AssociationRow { step: *step, user, uav: link.uav, rbs: link.rbs, served: link.served() })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct UpdateRow {
    update: u64,
    critic_loss: f64,
    actor_grad_norm: f64,
    noise_variance: f64,
}

pub fn write_training_log(path: &Path, updates: &[UpdateRecord]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    for u in updates {
        w.serialize(UpdateRow {
            update: u.index,
            critic_loss: u.critic_loss,
            actor_grad_norm: u.actor_grad_norm,
            noise_variance: u.noise_variance,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Episode log row; also the input format of the `curves` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub index: usize,
    pub worker: usize,
    pub episode: usize,
    pub steps: usize,
    pub reward: f64,
    pub smoothed: f64,
    pub updates: u64,
}

pub fn write_episodes(path: &Path, episodes: &[EpisodeRecord]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    for e in episodes {
        w.serialize(EpisodeRow {
            index: e.index,
            worker: e.worker,
            episode: e.episode,
            steps: e.steps,
            reward: e.reward,
            smoothed: e.smoothed,
            updates: e.updates_so_far,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_episodes(path: &Path) -> anyhow::Result<Vec<EpisodeRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = r.deserialize().collect::<Result<Vec<EpisodeRow>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct CurveRow {
    index: usize,
    reward: f64,
    smoothed: f64,
}

pub fn write_curve(path: &Path, raw: &[f64], smoothed: &[f64]) -> anyhow::Result<()> {
    anyhow::ensure!(raw.len() == smoothed.len(), "curve lengths differ");
    let mut w = writer(path)?;
    for (index, (reward, smoothed)) in raw.iter().zip(smoothed).enumerate() {
        w.serialize(CurveRow { index, reward: *reward, smoothed: *smoothed })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct StepRow {
    step: usize,
    psr_served: usize,
    baseline_served: usize,
    psr_score: f64,
    baseline_score: f64,
    in_window: bool,
}

/// Step-by-step comparison of two traces with the report's window marked.
pub fn write_comparison(path: &Path, psr: &EpisodeTrace, base: &EpisodeTrace, report: &GainReport) -> anyhow::Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    comparison_csv(f, psr, base, report)
}

pub fn comparison_csv<W: std::io::Write>(
    out: W,
    psr: &EpisodeTrace,
    base: &EpisodeTrace,
    report: &GainReport,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (k, (p, b)) in psr.steps.iter().zip(&base.steps).enumerate() {
        let step = k + 1;
        w.serialize(StepRow {
            step,
            psr_served: p.served,
            baseline_served: b.served,
            psr_score: p.score,
            baseline_score: b.score,
            in_window: (report.window.0..=report.window.1).contains(&step),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `key = value` lines, one per report field.
pub fn gain_report_text(r: &GainReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "window_start = {}", r.window.0);
    let _ = writeln!(s, "window_end = {}", r.window.1);
    let _ = writeln!(s, "psr_change_step = {}", r.psr_change_step);
    let _ = writeln!(s, "baseline_change_step = {}", r.baseline_change_step);
    let _ = writeln!(s, "psr_accumulated = {}", r.psr_accumulated);
    let _ = writeln!(s, "baseline_accumulated = {}", r.baseline_accumulated);
    let _ = writeln!(s, "gain_percent = {}", r.gain_percent);
    let _ = writeln!(s, "psr_min_served = {}", r.psr_min_served);
    let _ = writeln!(s, "baseline_min_served = {}", r.baseline_min_served);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use uavnet_core::eval::TraceStep;
    use uavnet_core::{Point, UavStatus};

    fn trace() -> EpisodeTrace {
        let step = |t: usize, served: usize| TraceStep {
            t,
            positions: vec![Point::new(1.0, 2.0), Point::new(3.0, 4.0)],
            altitudes: vec![300.0, 300.0],
            energies: vec![500.0, 400.5],
            statuses: vec![UavStatus::Active, UavStatus::Quit],
            served,
            score: (served * served) as f64,
            reward: 0.25,
        };
        EpisodeTrace { scenario: "s".into(), policy: "p".into(), steps: vec![step(1, 3), step(2, 4)], boundary_terminated: false }
    }

    #[test]
    fn trajectory_has_a_row_per_uav_and_step() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = trace();
        write_trajectory(&path, &[(0, &t)], StateMode::Quit).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "episode,step,uav,x,y,energy,status,served,reward");
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert_eq!(lines[4], "0,2,1,3,4,400.5,quit,4,0.25");
    }

    #[test]
    fn episode_log_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let recs: Vec<EpisodeRecord> = (0..3)
            .map(|i| EpisodeRecord {
                index: i,
                worker: i % 2,
                episode: i / 2,
                steps: 20,
                reward: 0.1 * i as f64,
                smoothed: 0.05 * i as f64,
                updates_so_far: 7 * i as u64,
            })
            .collect();
        write_episodes(&path, &recs).unwrap();
        let rows = read_episodes(&path).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].reward.to_bits(), (0.1f64 * 2.0).to_bits());
        assert_eq!(rows[1].updates, 7);
    }
}
