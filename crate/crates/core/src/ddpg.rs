//! DDPG agent: replay buffer, decaying Gaussian exploration, critic and actor
//! updates against target networks, soft target tracking.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::neural::{ActionBound, ActorNet, Adam, CriticNet, NeuralError, Normalizer, Workspace};
use crate::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdpgError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("buffer holds {have} transitions, batch needs {need}")]
    UndersizedBuffer { have: usize, need: usize },
    #[error("empty batch")]
    EmptyBatch,
}

/// Learning hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct DdpgConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub l2: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub noise_variance: f64,
    pub noise_decay: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            tau: 0.001,
            batch_size: 512,
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            l2: 1e-4,
            actor_hidden: vec![400, 300],
            critic_hidden: vec![400, 300],
            noise_variance: 0.6,
            noise_decay: 0.9995,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Append-only experience store.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
}

impl ReplayBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.items.push(t);
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = Transition>) {
        self.items.extend(ts);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn as_slice(&self) -> &[Transition] {
        &self.items
    }

    /// Indices of a uniform sample without replacement.
    pub fn sample_indices(&self, n: usize, rng: &mut Rng) -> Result<Vec<usize>, DdpgError> {
        if self.items.len() < n {
            return Err(DdpgError::UndersizedBuffer { have: self.items.len(), need: n });
        }
        Ok(rand::seq::index::sample(rng, self.items.len(), n).into_vec())
    }

    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<&Transition>, DdpgError> {
        Ok(self.sample_indices(n, rng)?.into_iter().map(|i| &self.items[i]).collect())
    }
}

/// Action bounds of a fleet: headings in `[0, 2pi)`, then distances in `[0, d_max]`.
pub fn fleet_action_bounds(uavs: usize, d_max: f64) -> Vec<ActionBound> {
    let mut b = vec![ActionBound::half_open(0.0, TAU); uavs];
    b.extend(core::iter::repeat_n(ActionBound::closed(0.0, d_max), uavs));
    b
}

/// Zero-mean Gaussian exploration with variance `v0 * decay^steps`; channel
/// `k` is additionally scaled by `scales[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseState {
    pub initial_variance: f64,
    pub decay: f64,
    pub steps: u64,
    pub scales: Vec<f64>,
}

impl NoiseState {
    pub fn new(initial_variance: f64, decay: f64, scales: Vec<f64>) -> Self {
        Self { initial_variance, decay, steps: 0, scales }
    }

    /// Scales equal to half of each channel's range.
    pub fn for_bounds(config: &DdpgConfig, bounds: &[ActionBound]) -> Self {
        Self::new(config.noise_variance, config.noise_decay, bounds.iter().map(|b| 0.5 * (b.high - b.low)).collect())
    }

    pub fn variance(&self) -> f64 {
        self.initial_variance * libm::pow(self.decay, self.steps as f64)
    }

    /// Perturbs `action` in place, clips it and advances the decay clock.
    pub fn perturb(&mut self, action: &mut [f64], bounds: &[ActionBound], rng: &mut Rng) {
        let sd = libm::sqrt(self.variance());
        for (k, a) in action.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            if sd > 0.0 {
                *a += sd * self.scales[k] * z;
            }
            *a = bounds[k].clip(*a);
        }
        self.steps += 1;
    }
}

/// Greedy actor with its state normalization; what workers and evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actor: ActorNet,
    pub normalizer: Normalizer,
}

impl Policy {
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.actor.act(&self.normalizer.normalize(state))
    }

    /// `mu(S) + noise`, clipped to the action bounds.
    pub fn explore(&self, state: &[f64], noise: &mut NoiseState, rng: &mut Rng) -> Result<Vec<f64>, NeuralError> {
        let mut a = self.act(state)?;
        noise.perturb(&mut a, &self.actor.bounds, rng);
        Ok(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub config: DdpgConfig,
    pub actor: ActorNet,
    pub critic: CriticNet,
    pub target_actor: ActorNet,
    pub target_critic: CriticNet,
    pub state_norm: Normalizer,
    actor_opt: Adam,
    critic_opt: Adam,
    target_queries: u64,
    updates: u64,
}

impl Agent {
    pub fn new(
        config: DdpgConfig,
        state_bounds: &[(f64, f64)],
        action_bounds: Vec<ActionBound>,
        rng: &mut Rng,
    ) -> Result<Self, DdpgError> {
        let sd = state_bounds.len();
        let ab: Vec<(f64, f64)> = action_bounds.iter().map(|b| (b.low, b.high)).collect();
        let actor = ActorNet::new(sd, &config.actor_hidden, action_bounds, rng)?;
        let critic = CriticNet::new(sd, &config.critic_hidden, &ab, rng)?;
        let actor_opt = Adam::new(&actor.mlp, config.actor_lr, config.l2);
        let critic_opt = Adam::new(&critic.mlp, config.critic_lr, config.l2);
        Ok(Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            state_norm: Normalizer::new(state_bounds),
            actor_opt,
            critic_opt,
            config,
            target_queries: 0,
            updates: 0,
        })
    }

    /// Number of target-network evaluations made for labels so far.
    pub fn target_queries(&self) -> u64 {
        self.target_queries
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn policy(&self) -> Policy {
        Policy { actor: self.actor.clone(), normalizer: self.state_norm.clone() }
    }

    /// Label `r` for terminal transitions, `r + gamma Q'(S', mu'(S'))` otherwise.
    pub fn label(&mut self, t: &Transition) -> Result<f64, DdpgError> {
        if t.terminal {
            return Ok(t.reward);
        }
        self.target_queries += 1;
        let s = self.state_norm.normalize(&t.next_state);
        let mut ws = Workspace::default();
        let a = self.target_actor.forward(&s, &mut ws)?;
        let q = self.target_critic.forward(&s, &a, &mut ws)?;
        Ok(t.reward + self.config.gamma * q)
    }

    /// Mean squared Bellman error on `batch` (no update).
    pub fn critic_loss(&mut self, batch: &[&Transition]) -> Result<f64, DdpgError> {
        if batch.is_empty() {
            return Err(DdpgError::EmptyBatch);
        }
        let mut ws = Workspace::default();
        let mut sum = 0.0;
        for t in batch {
            let y = self.label(t)?;
            let q = self.critic.forward(&self.state_norm.normalize(&t.state), &t.action, &mut ws)?;
            sum += (q - y) * (q - y);
        }
        Ok(sum / batch.len() as f64)
    }

    /// One optimizer step on the critic; returns the pre-step batch loss.
    pub fn critic_update(&mut self, batch: &[&Transition]) -> Result<f64, DdpgError> {
        if batch.is_empty() {
            return Err(DdpgError::EmptyBatch);
        }
        let labels = batch.iter().map(|t| self.label(t)).collect::<Result<Vec<_>, _>>()?;
        let n = batch.len() as f64;
        let mut grad = vec![0.0; self.critic.mlp.param_count()];
        let mut ws = Workspace::default();
        let mut s = Vec::new();
        let mut loss = 0.0;
        for (t, y) in batch.iter().zip(&labels) {
            self.state_norm.normalize_into(&t.state, &mut s);
            let q = self.critic.forward(&s, &t.action, &mut ws)?;
            loss += (q - y) * (q - y);
            self.critic.backward(&mut ws, 2.0 * (q - y) / n, Some(&mut grad), None)?;
        }
        self.critic_opt.step(self.critic.mlp.params_mut(), &grad)?;
        Ok(loss / n)
    }

    /// Gradient of `-mean Q(S, mu(S))` with respect to the actor parameters.
    pub fn actor_gradient(&self, batch: &[&Transition]) -> Result<Vec<f64>, DdpgError> {
        if batch.is_empty() {
            return Err(DdpgError::EmptyBatch);
        }
        let n = batch.len() as f64;
        let mut grad = vec![0.0; self.actor.mlp.param_count()];
        let mut ws_a = Workspace::default();
        let mut ws_c = Workspace::default();
        let mut ga = vec![0.0; self.actor.action_dim()];
        let mut s = Vec::new();
        for t in batch {
            self.state_norm.normalize_into(&t.state, &mut s);
            let a = self.actor.forward(&s, &mut ws_a)?;
            self.critic.forward(&s, &a, &mut ws_c)?;
            self.critic.backward(&mut ws_c, -1.0 / n, None, Some(&mut ga))?;
            self.actor.backward(&mut ws_a, &ga, Some(&mut grad), None)?;
        }
        Ok(grad)
    }

    /// One ascent step on `mean Q(S, mu(S))`; returns the gradient norm.
    pub fn actor_update(&mut self, batch: &[&Transition]) -> Result<f64, DdpgError> {
        let grad = self.actor_gradient(batch)?;
        let norm = libm::sqrt(grad.iter().map(|g| g * g).sum());
        self.actor_opt.step(self.actor.mlp.params_mut(), &grad)?;
        Ok(norm)
    }

    pub fn soft_update(&mut self) -> Result<(), DdpgError> {
        let tau = self.config.tau;
        self.target_actor.mlp.soft_update_from(&self.actor.mlp, tau)?;
        self.target_critic.mlp.soft_update_from(&self.critic.mlp, tau)?;
        Ok(())
    }

    /// Sample, critic update, actor update, soft update. `None` while the
    /// buffer is smaller than one batch.
    pub fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<Option<UpdateStats>, DdpgError> {
        if buffer.len() < self.config.batch_size {
            return Ok(None);
        }
        let batch = buffer.sample(self.config.batch_size, rng)?;
        let critic_loss = self.critic_update(&batch)?;
        let actor_grad_norm = self.actor_update(&batch)?;
        self.soft_update()?;
        self.updates += 1;
        Ok(Some(UpdateStats { critic_loss, actor_grad_norm }))
    }
}
