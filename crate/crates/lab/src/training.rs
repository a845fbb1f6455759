//! Training runs: agent construction, host/worker orchestration, candidate
//! snapshots and best-checkpoint selection by greedy evaluation.

use uavnet_core::ddpg::fleet_action_bounds;
use uavnet_core::eval::{run_policy, ActorController, EpisodeTrace};
use uavnet_core::{derive_seed, rng_from_seed, Agent, DdpgConfig, Policy, Scenario, UavEnv};

use crate::apc::{run_apc, EpisodeRecord, HostOutcome};
use crate::checkpoint::Checkpoint;
use crate::config::ScenarioFile;

/// Agent whose networks match `scenario`'s state and action layout.
pub fn build_agent(scenario: &Scenario, rl: &DdpgConfig, seed: u64) -> anyhow::Result<Agent> {
    let env = UavEnv::new(scenario.clone())?;
    let bounds = fleet_action_bounds(scenario.fleet.count, env.d_max());
    Ok(Agent::new(rl.clone(), &env.state_bounds(), bounds, &mut rng_from_seed(derive_seed(seed, 0xA6E27)))?)
}

/// Greedy rollout of `policy` over the whole fleet.
pub fn greedy_trace(scenario: &Scenario, policy: &Policy, seed: u64) -> anyhow::Result<EpisodeTrace> {
    let env = UavEnv::new(scenario.clone())?;
    let mut c = ActorController::full_fleet(policy.clone(), &env)?;
    Ok(run_policy(scenario, &mut c, seed, "greedy")?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub episode: usize,
    pub smoothed: f64,
    pub policy: Policy,
    /// Greedy steady-state score; filled in after training.
    pub score: f64,
}

#[derive(Debug)]
pub struct TrainingResult {
    pub outcome: HostOutcome,
    pub candidates: Vec<Candidate>,
    pub best: usize,
}

impl TrainingResult {
    pub fn best(&self) -> &Candidate {
        &self.candidates[self.best]
    }

    pub fn checkpoint(&self, c: &Candidate, scenario: &str) -> Checkpoint {
        Checkpoint { policy: c.policy.clone(), episode: c.episode, smoothed_reward: c.smoothed, scenario: scenario.to_string() }
    }

    pub fn final_checkpoint(&self, scenario: &str) -> Checkpoint {
        let last = self.outcome.episodes.last();
        Checkpoint {
            policy: self.outcome.agent.policy(),
            episode: last.map(|e| e.index).unwrap_or(0),
            smoothed_reward: last.map(|e| e.smoothed).unwrap_or(0.0),
            scenario: scenario.to_string(),
        }
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.outcome.episodes.iter().map(|e| e.reward).collect()
    }
}

/// Trains on `file` and keeps snapshots taken at new best smoothed rewards
/// and every `apc.checkpoint_every` episodes; the best snapshot is the one
/// with the highest greedy steady-state score (later wins ties).
pub fn train(file: &ScenarioFile) -> anyhow::Result<TrainingResult> {
    let agent = build_agent(&file.scenario, &file.rl, file.apc.seed)?;
    let window = file.apc.smoothing_window.max(1);
    let every = file.apc.checkpoint_every;
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut best_smoothed = f64::NEG_INFINITY;
    let mut last_best_at: Option<usize> = None;
    let mut observer = |agent: &Agent, rec: &EpisodeRecord| {
        let n = rec.index + 1;
        if n >= window.min(file.apc.episodes * file.apc.workers) && rec.smoothed > best_smoothed {
            best_smoothed = rec.smoothed;
            let c = Candidate { episode: rec.index, smoothed: rec.smoothed, policy: agent.policy(), score: 0.0 };
            // consecutive improvements within a short span overwrite each other
            match last_best_at {
                Some(i) if rec.index - candidates[i].episode < (window / 5).max(1) => candidates[i] = c,
                _ => {
                    candidates.push(c);
                    last_best_at = Some(candidates.len() - 1);
                }
            }
        }
        if every > 0 && n.is_multiple_of(every) {
            candidates.push(Candidate { episode: rec.index, smoothed: rec.smoothed, policy: agent.policy(), score: 0.0 });
        }
    };
    let outcome = run_apc(&file.scenario, agent, &file.apc, &mut observer)?;
    let last = outcome.episodes.last().cloned();
    candidates.push(Candidate {
        episode: last.as_ref().map(|e| e.index).unwrap_or(0),
        smoothed: last.as_ref().map(|e| e.smoothed).unwrap_or(0.0),
        policy: outcome.agent.policy(),
        score: 0.0,
    });
    candidates.sort_by_key(|c| c.episode);
    let mut best = 0;
    for c in candidates.iter_mut() {
        let trace = greedy_trace(&file.scenario, &c.policy, file.eval.seed)?;
        // a rollout that flies out of the area has no steady state
        c.score = if trace.boundary_terminated { 0.0 } else { trace.steady_state_score(file.eval.steady_steps) };
    }
    for (i, c) in candidates.iter().enumerate() {
        if c.score >= candidates[best].score {
            best = i;
        }
    }
    Ok(TrainingResult { outcome, candidates, best })
}
