//! Host/worker training: workers roll out episodes on private environment
//! copies and upload them whole; the host stores experience, replies with the
//! current actor and trains the unified networks.

use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TryRecvError};

use serde::{Deserialize, Serialize};
use uavnet_core::ddpg::UpdateStats;
use uavnet_core::{derive_seed, rng_from_seed, Agent, NoiseState, Policy, ReplayBuffer, Scenario, Transition, UavEnv};

/// When the host runs training iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cadence {
    /// A fixed number of updates per received transition, run right after
    /// each reply. Reproducible with one worker.
    Lockstep,
    /// Train whenever no message is waiting. Depends on thread timing.
    Continuous,
}

/// Order in which the host handles worker events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// As they arrive.
    Arrival,
    /// Strictly cycling through the live workers. Workers still run
    /// concurrently, but the host's sequence of updates no longer depends
    /// on thread timing.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApcConfig {
    pub workers: usize,
    /// Episodes per worker.
    pub episodes: usize,
    pub seed: u64,
    pub cadence: Cadence,
    pub ordering: Ordering,
    /// Lockstep only.
    pub updates_per_transition: f64,
    pub smoothing_window: usize,
    /// Keep a candidate snapshot every this many episodes (0 disables).
    pub checkpoint_every: usize,
}

impl Default for ApcConfig {
    fn default() -> Self {
        Self {
            workers: 4,
            episodes: 2500,
            seed: 0,
            cadence: Cadence::Lockstep,
            ordering: Ordering::Arrival,
            updates_per_transition: 1.0,
            smoothing_window: 100,
            checkpoint_every: 0,
        }
    }
}

/// One finished episode uploaded by a worker.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerMessage {
    pub worker: usize,
    pub episode: usize,
    pub transitions: Vec<Transition>,
    /// Exploration variance at the end of the episode.
    pub noise_variance: f64,
}

impl WorkerMessage {
    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}

#[derive(Debug)]
pub enum WorkerEvent {
    Episode(WorkerMessage),
    Finished { worker: usize },
    Failed { worker: usize, error: String },
}

impl WorkerEvent {
    pub fn worker(&self) -> usize {
        match self {
            WorkerEvent::Episode(m) => m.worker,
            WorkerEvent::Finished { worker } | WorkerEvent::Failed { worker, .. } => *worker,
        }
    }
}

/// Per-episode progress seen by the host, in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub index: usize,
    pub worker: usize,
    pub episode: usize,
    pub steps: usize,
    pub reward: f64,
    pub smoothed: f64,
    pub updates_so_far: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    pub index: u64,
    pub critic_loss: f64,
    pub actor_grad_norm: f64,
    pub noise_variance: f64,
}

#[derive(Debug)]
pub struct HostOutcome {
    pub agent: Agent,
    pub buffer: ReplayBuffer,
    pub episodes: Vec<EpisodeRecord>,
    pub updates: Vec<UpdateRecord>,
    pub messages: usize,
    pub failures: Vec<(usize, String)>,
}

/// Reset seed of `episode` on `worker`.
pub fn reset_seed(base: u64, worker: usize, episode: usize) -> u64 {
    derive_seed(derive_seed(base, worker as u64 + 1), episode as u64)
}

/// Runs `episodes` noisy episodes, uploading each and waiting for fresh
/// actor parameters before the next.
#[allow(clippy::too_many_arguments)]
pub fn worker_loop(
    worker: usize,
    mut env: UavEnv,
    mut policy: Policy,
    mut noise: NoiseState,
    episodes: usize,
    seed: u64,
    tx: &SyncSender<WorkerEvent>,
    rx: &Receiver<Policy>,
) -> Result<(), String> {
    let mut rng = rng_from_seed(derive_seed(seed, 0x5EED_0000 + worker as u64));
    for episode in 0..episodes {
        let mut state = env.reset(reset_seed(seed, worker, episode));
        let mut transitions = Vec::new();
        loop {
            let action = policy.explore(&state, &mut noise, &mut rng).map_err(|e| e.to_string())?;
            let out = env.step(&action).map_err(|e| e.to_string())?;
            let terminal = out.terminal;
            transitions.push(Transition {
                state,
                action,
                reward: out.reward,
                next_state: out.state.clone(),
                terminal,
            });
            state = out.state;
            if terminal {
                break;
            }
        }
        let msg = WorkerMessage { worker, episode, transitions, noise_variance: noise.variance() };
        if tx.send(WorkerEvent::Episode(msg)).is_err() {
            return Ok(());
        }
        match rx.recv() {
            Ok(p) => policy = p,
            Err(_) => return Ok(()),
        }
    }
    Ok(())
}

/// Host side: collects episodes from `cfg.workers` workers, replies with the
/// actor and trains `agent`. `observer` runs after each stored episode.
pub fn run_apc(
    scenario: &Scenario,
    mut agent: Agent,
    cfg: &ApcConfig,
    observer: &mut dyn FnMut(&Agent, &EpisodeRecord),
) -> anyhow::Result<HostOutcome> {
    let template = UavEnv::new(scenario.clone())?;
    let bounds = agent.actor.bounds.clone();
    let k = cfg.workers.max(1);
    let mut host_rng = rng_from_seed(derive_seed(cfg.seed, 0x4057));
    let mut buffer = ReplayBuffer::new();
    let mut episodes = Vec::new();
    let mut updates = Vec::new();
    let mut failures = Vec::new();
    let mut messages = 0usize;
    let mut rewards: Vec<f64> = Vec::new();
    let mut window_sum = 0.0;
    let mut carry = 0.0;
    let mut last_variance = agent.config.noise_variance;
    let window = cfg.smoothing_window.max(1);

    std::thread::scope(|scope| -> anyhow::Result<()> {
        // both channel ends live in this closure so an early error unblocks the workers
        let (ev_tx, ev_rx) = sync_channel::<WorkerEvent>(2 * k);
        let mut replies: Vec<SyncSender<Policy>> = Vec::with_capacity(k);
        for w in 0..k {
            let (ptx, prx) = sync_channel::<Policy>(1);
            replies.push(ptx);
            let tx = ev_tx.clone();
            let env = template.clone();
            let policy = agent.policy();
            let noise = NoiseState::for_bounds(&agent.config, &bounds);
            let (n, seed) = (cfg.episodes, cfg.seed);
            scope.spawn(move || {
                let res = catch_unwind(AssertUnwindSafe(|| worker_loop(w, env, policy, noise, n, seed, &tx, &prx)));
                let ev = match res {
                    Ok(Ok(())) => WorkerEvent::Finished { worker: w },
                    Ok(Err(e)) => WorkerEvent::Failed { worker: w, error: e },
                    Err(p) => WorkerEvent::Failed {
                        worker: w,
                        error: p
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "worker panicked".into()),
                    },
                };
                let _ = tx.send(ev);
            });
        }
        drop(ev_tx);

        let mut train = |agent: &mut Agent, buffer: &ReplayBuffer, variance: f64| -> anyhow::Result<bool> {
            match agent.train_step(buffer, &mut host_rng)? {
                Some(UpdateStats { critic_loss, actor_grad_norm }) => {
                    updates.push(UpdateRecord { index: agent.updates(), critic_loss, actor_grad_norm, noise_variance: variance });
                    Ok(true)
                }
                None => Ok(false),
            }
        };

        let mut pending: Vec<VecDeque<WorkerEvent>> = (0..k).map(|_| VecDeque::new()).collect();
        let mut alive = vec![true; k];
        let mut turn = 0usize;
        let mut active = k;
        while active > 0 {
            let ev = if cfg.cadence == Cadence::Continuous && buffer.len() >= agent.config.batch_size {
                match ev_rx.try_recv() {
                    Ok(ev) => ev,
                    Err(TryRecvError::Empty) => {
                        train(&mut agent, &buffer, last_variance)?;
                        continue;
                    }
                    Err(TryRecvError::Disconnected) => break,
                }
            } else {
                match ev_rx.recv() {
                    Ok(ev) => ev,
                    Err(_) => break,
                }
            };
            let ready: Vec<WorkerEvent> = match cfg.ordering {
                Ordering::Arrival => vec![ev],
                Ordering::RoundRobin => {
                    pending[ev.worker()].push_back(ev);
                    let mut out = Vec::new();
                    while alive.iter().any(|a| *a) {
                        while !alive[turn] {
                            turn = (turn + 1) % k;
                        }
                        let Some(e) = pending[turn].pop_front() else { break };
                        if !matches!(e, WorkerEvent::Episode(_)) {
                            alive[turn] = false;
                        }
                        out.push(e);
                        turn = (turn + 1) % k;
                    }
                    out
                }
            };
            for ev in ready {
                match ev {
                    WorkerEvent::Episode(msg) => {
                        messages += 1;
                        let steps = msg.transitions.len();
                        let reward = msg.total_reward();
                        last_variance = msg.noise_variance;
                        buffer.extend(msg.transitions);
                        // a worker that has gone away no longer needs parameters
                        let _ = replies[msg.worker].send(agent.policy());
                        if cfg.cadence == Cadence::Lockstep {
                            carry += cfg.updates_per_transition * steps as f64;
                            let n = carry.floor();
                            carry -= n;
                            for _ in 0..n as u64 {
                                if !train(&mut agent, &buffer, last_variance)? {
                                    break;
                                }
                            }
                        }
                        rewards.push(reward);
                        window_sum += reward;
                        if rewards.len() > window {
                            window_sum -= rewards[rewards.len() - 1 - window];
                        }
                        let rec = EpisodeRecord {
                            index: episodes.len(),
                            worker: msg.worker,
                            episode: msg.episode,
                            steps,
                            reward,
                            smoothed: window_sum / rewards.len().min(window) as f64,
                            updates_so_far: agent.updates(),
                        };
                        log::info!(
                            "worker {} episode {} reward {:.4} smoothed {:.4}",
                            rec.worker,
                            rec.episode,
                            rec.reward,
                            rec.smoothed
                        );
                        observer(&agent, &rec);
                        episodes.push(rec);
                    }
                    WorkerEvent::Finished { .. } => active -= 1,
                    WorkerEvent::Failed { worker, error } => {
                        log::warn!("worker {worker} failed: {error}");
                        failures.push((worker, error));
                        active -= 1;
                    }
                }
            }
        }
        Ok(())
    })?;

    Ok(HostOutcome { agent, buffer, episodes, updates, messages, failures })
}
