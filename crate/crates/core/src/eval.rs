//! Greedy rollouts, the passive-reaction baseline, transition-gain metrics,
//! the brute-force placement oracle and curve smoothing.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::ddpg::Policy;
use crate::env::{decode_action, EnvError, StateLayout, StateMode, UavAction, UavEnv, UavStatus};
use crate::neural::NeuralError;
use crate::radio::{us_score_of_count, LinkTable, RadioModel};
use crate::scenario::{AreaSpec, LineupEvent, Point, Scenario};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("policy expects {expected} state components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exhaustive search over {combinations} placements refused (limit {limit})")]
    Intractable { combinations: u128, limit: u128 },
    #[error("window [{start}, {end}] outside the trace of {len} steps")]
    WindowOutOfRange { start: usize, end: usize, len: usize },
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
}

/// Chooses every UAV's action for the current step.
pub trait Controller {
    fn actions(&mut self, env: &UavEnv) -> Result<Vec<UavAction>, EvalError>;
}

/// Keeps every UAV in place.
#[derive(Debug, Clone, Copy, Default)]
pub struct HoldController;

impl Controller for HoldController {
    fn actions(&mut self, env: &UavEnv) -> Result<Vec<UavAction>, EvalError> {
        Ok(vec![UavAction::HOLD; env.fleet().len()])
    }
}

/// Greedy actor driving the UAVs in `uavs`; the others hold.
#[derive(Debug, Clone)]
pub struct ActorController {
    pub policy: Policy,
    pub uavs: Vec<usize>,
    pub layout: StateLayout,
}

impl ActorController {
    pub fn new(policy: Policy, uavs: Vec<usize>, mode: StateMode, with_time: bool) -> Result<Self, EvalError> {
        let layout = StateLayout { uavs: uavs.len(), mode, with_time };
        if policy.normalizer.len() != layout.len() || policy.actor.state_dim() != layout.len() {
            return Err(EvalError::DimensionMismatch { expected: policy.actor.state_dim(), got: layout.len() });
        }
        if policy.actor.action_dim() != layout.action_len() {
            return Err(EvalError::DimensionMismatch { expected: policy.actor.action_dim(), got: layout.action_len() });
        }
        Ok(Self { policy, uavs, layout })
    }

    /// Controller for the whole fleet of `env`.
    pub fn full_fleet(policy: Policy, env: &UavEnv) -> Result<Self, EvalError> {
        let l = env.layout();
        Self::new(policy, (0..l.uavs).collect(), l.mode, l.with_time)
    }
}

impl Controller for ActorController {
    fn actions(&mut self, env: &UavEnv) -> Result<Vec<UavAction>, EvalError> {
        let s = self.layout.encode_subset(env.fleet(), env.t(), &self.uavs);
        let raw = self.policy.act(&s)?;
        let sub = decode_action(&raw, self.uavs.len(), env.d_max())?;
        let mut out = vec![UavAction::HOLD; env.fleet().len()];
        for (k, &i) in self.uavs.iter().enumerate() {
            out[i] = sub[k];
        }
        Ok(out)
    }
}

/// Fleet snapshot after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub positions: Vec<Point>,
    pub altitudes: Vec<f64>,
    pub energies: Vec<f64>,
    pub statuses: Vec<UavStatus>,
    pub served: usize,
    pub score: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub scenario: String,
    pub policy: String,
    pub steps: Vec<TraceStep>,
    pub boundary_terminated: bool,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn served(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.served).collect()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.score).collect()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    /// Sum of scores over steps `start..=end` (1-based).
    pub fn accumulated(&self, start: usize, end: usize) -> Result<f64, EvalError> {
        if start == 0 || start > end || end > self.steps.len() {
            return Err(EvalError::WindowOutOfRange { start, end, len: self.steps.len() });
        }
        Ok(self.steps[start - 1..end].iter().map(|s| s.score).sum())
    }

    /// Mean score of the last `k` steps.
    pub fn steady_state_score(&self, k: usize) -> f64 {
        let k = k.min(self.steps.len()).max(1);
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps[self.steps.len() - k..].iter().map(|s| s.score).sum::<f64>() / k as f64
    }

    /// First step whose reward no longer counts `uav` because it quit, or
    /// first step whose reward counts a joining `uav`.
    pub fn change_step(&self, event: &LineupEvent) -> Option<usize> {
        match event {
            LineupEvent::Quit { uav } => self
                .steps
                .iter()
                .position(|s| s.statuses[*uav] == UavStatus::Quit)
                .map(|k| k + 2)
                .filter(|t| *t <= self.steps.len()),
            LineupEvent::Join { uav, .. } => self
                .steps
                .iter()
                .position(|s| s.statuses[*uav] == UavStatus::Active)
                .map(|k| k + 2)
                .filter(|t| *t <= self.steps.len()),
        }
    }
}

/// Runs one episode of `scenario` under `controller`.
pub fn run_policy(
    scenario: &Scenario,
    controller: &mut dyn Controller,
    seed: u64,
    policy_name: &str,
) -> Result<EpisodeTrace, EvalError> {
    let mut env = UavEnv::new(scenario.clone())?;
    env.reset(seed);
    rollout(&mut env, controller, policy_name)
}

/// Rolls `env` from its current state until terminal.
pub fn rollout(env: &mut UavEnv, controller: &mut dyn Controller, policy_name: &str) -> Result<EpisodeTrace, EvalError> {
    rollout_with(env, controller, policy_name, &mut |_| {})
}

/// [`rollout`] that calls `on_step` with the environment after every step.
pub fn rollout_with(
    env: &mut UavEnv,
    controller: &mut dyn Controller,
    policy_name: &str,
    on_step: &mut dyn FnMut(&UavEnv),
) -> Result<EpisodeTrace, EvalError> {
    let mut steps = Vec::new();
    let mut boundary = false;
    while !env.is_done() {
        let t = env.t();
        let actions = controller.actions(env)?;
        let out = env.step_actions(&actions)?;
        boundary |= out.boundary_hit;
        let f = env.fleet();
        steps.push(TraceStep {
            t,
            positions: f.positions(),
            altitudes: f.uavs.iter().map(|u| u.altitude_m).collect(),
            energies: f.battery.levels.clone(),
            statuses: f.uavs.iter().map(|u| u.status).collect(),
            served: out.served,
            score: out.score,
            reward: out.reward,
        });
        on_step(env);
    }
    Ok(EpisodeTrace { scenario: env.scenario().name.clone(), policy: String::from(policy_name), steps, boundary_terminated: boundary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Pre,
    Post,
}

/// Passive reaction: no relocation before the lineup change is observed.
pub struct PassiveController {
    pre: ActorController,
    post: ActorController,
    event: Option<LineupEvent>,
    phase: Phase,
}

impl PassiveController {
    /// `pre` drives the pre-change fleet, `post` the post-change fleet.
    pub fn new(scenario: &Scenario, pre: Policy, post: Policy) -> Result<Self, EvalError> {
        let n = scenario.fleet.count;
        let with_time = scenario.with_time();
        let event = scenario.lineup_events.first().cloned();
        let (pre, post) = match &event {
            None => {
                let all: Vec<usize> = (0..n).collect();
                let mode = StateMode::Quit;
                (ActorController::new(pre, all.clone(), mode, with_time)?, ActorController::new(post, all, mode, with_time)?)
            }
            Some(LineupEvent::Quit { uav }) => {
                let all: Vec<usize> = (0..n).collect();
                let rest: Vec<usize> = all.iter().copied().filter(|i| i != uav).collect();
                (
                    ActorController::new(pre, all, StateMode::Quit, with_time)?,
                    ActorController::new(post, rest, StateMode::Quit, with_time)?,
                )
            }
            Some(LineupEvent::Join { uav, .. }) => {
                let all: Vec<usize> = (0..n).collect();
                let rest: Vec<usize> = all.iter().copied().filter(|i| i != uav).collect();
                (
                    ActorController::new(pre, rest, StateMode::Join, with_time)?,
                    ActorController::new(post, all, StateMode::Join, with_time)?,
                )
            }
        };
        Ok(Self { pre, post, event, phase: Phase::Pre })
    }
}

impl Controller for PassiveController {
    fn actions(&mut self, env: &UavEnv) -> Result<Vec<UavAction>, EvalError> {
        let fleet = env.fleet();
        match (&self.event, self.phase) {
            (None, _) => self.pre.actions(env),
            (Some(LineupEvent::Quit { uav }), Phase::Pre) => {
                if fleet.uavs[*uav].status == UavStatus::Quit {
                    self.phase = Phase::Post;
                    Ok(vec![UavAction::HOLD; fleet.len()])
                } else {
                    self.pre.actions(env)
                }
            }
            (Some(LineupEvent::Join { uav, .. }), Phase::Pre) => {
                if fleet.uavs[*uav].status == UavStatus::Active {
                    self.phase = Phase::Post;
                    self.post.actions(env)
                } else {
                    Ok(vec![UavAction::HOLD; fleet.len()])
                }
            }
            (Some(_), Phase::Post) => self.post.actions(env),
        }
    }
}

/// Baseline trace: quit case runs `pre` until the quit is observed, holds
/// one step, then runs `post` on the remaining UAVs; join case holds the
/// existing UAVs while the joiner climbs, then runs `post` on the full fleet.
pub fn passive_baseline(scenario: &Scenario, pre: &Policy, post: &Policy, seed: u64) -> Result<EpisodeTrace, EvalError> {
    let mut c = PassiveController::new(scenario, pre.clone(), post.clone())?;
    run_policy(scenario, &mut c, seed, "passive")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub window: (usize, usize),
    pub psr_change_step: usize,
    pub baseline_change_step: usize,
    pub psr_accumulated: f64,
    pub baseline_accumulated: f64,
    pub gain_percent: f64,
    /// Lowest served count from the change step to the window end.
    pub psr_min_served: usize,
    pub baseline_min_served: usize,
}

/// Served count the trace settles to after `from`: the value of the first
/// run of three equal counts, or the last count.
pub fn steady_served(served: &[usize], from: usize) -> (usize, usize) {
    let start = from.max(1);
    for t in start..=served.len().saturating_sub(2) {
        let v = served[t - 1];
        if served[t] == v && served[t + 1] == v {
            return (v, t);
        }
    }
    (served.last().copied().unwrap_or(0), served.len())
}

/// `[first step where the fleets differ, first step after the change where
/// both traces are within one served user of their settled count]`.
pub fn transition_window(psr: &EpisodeTrace, base: &EpisodeTrace, change_step: usize) -> Result<(usize, usize), EvalError> {
    let len = psr.len().min(base.len());
    if change_step == 0 || change_step > len {
        return Err(EvalError::WindowOutOfRange { start: change_step, end: change_step, len });
    }
    let start = (0..len)
        .find(|&k| psr.steps[k].positions != base.steps[k].positions)
        .map(|k| k + 1)
        .unwrap_or(change_step)
        .min(change_step);
    let settle = |trace: &EpisodeTrace| {
        let served = &trace.served()[..len];
        let (v, run_start) = steady_served(served, change_step);
        let mut t = run_start;
        while t > change_step && served[t - 2].abs_diff(v) <= 1 {
            t -= 1;
        }
        t
    };
    let end = settle(psr).max(settle(base)).max(change_step).min(len);
    Ok((start, end))
}

pub fn transition_gain(
    psr: &EpisodeTrace,
    base: &EpisodeTrace,
    event: &LineupEvent,
) -> Result<GainReport, EvalError> {
    let psr_change = psr.change_step(event).ok_or(EvalError::Invalid("lineup change not reached in PSR trace"))?;
    let base_change = base.change_step(event).ok_or(EvalError::Invalid("lineup change not reached in baseline trace"))?;
    let change = psr_change.min(base_change);
    let (a, b) = transition_window(psr, base, change)?;
    let b = b.max(psr_change.max(base_change)).min(psr.len().min(base.len()));
    let p = psr.accumulated(a, b)?;
    let q = base.accumulated(a, b)?;
    let min_from = |tr: &EpisodeTrace, from: usize| tr.steps[from - 1..b.max(from)].iter().map(|s| s.served).min().unwrap_or(0);
    Ok(GainReport {
        window: (a, b),
        psr_change_step: psr_change,
        baseline_change_step: base_change,
        psr_accumulated: p,
        baseline_accumulated: q,
        gain_percent: gain_percent(p, q),
        psr_min_served: min_from(psr, psr_change),
        baseline_min_served: min_from(base, base_change),
    })
}

pub fn gain_percent(psr: f64, base: f64) -> f64 {
    if base == 0.0 {
        if psr == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (psr - base) / base * 100.0
    }
}

/// Trailing moving average; the first `window - 1` points average the
/// available prefix.
pub fn smooth_curve(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= w {
            sum -= values[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    pub positions: Vec<Point>,
    pub served: usize,
    pub score: f64,
    /// True when every combination was enumerated.
    pub exhaustive: bool,
}

/// Upper bound on enumerated combinations.
pub const EXHAUSTIVE_LIMIT: u128 = 20_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

pub fn grid_points(area: &AreaSpec, step: f64) -> Vec<Point> {
    let n = libm::floor(area.side / step + 1e-9) as usize;
    let mut pts = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            pts.push(Point::new(i as f64 * step, j as f64 * step));
        }
    }
    pts
}

struct PlacementSearch<'a> {
    radio: &'a RadioModel,
    users: usize,
    /// `received[p * users + u]` from a UAV at candidate `p`.
    received: Vec<f64>,
    beta: f64,
    table: LinkTable,
}

impl PlacementSearch<'_> {
    fn served(&mut self, combo: &[usize]) -> usize {
        let n = combo.len();
        self.table.transmitters.clear();
        self.table.transmitters.extend(0..n);
        self.table.received.clear();
        self.table.received.resize(self.users * n, 0.0);
        for (j, &p) in combo.iter().enumerate() {
            for u in 0..self.users {
                self.table.received[u * n + j] = self.received[p * self.users + u];
            }
        }
        self.radio.allocate(&self.table, n).served_count()
    }
}

/// Best static placement of `n_uavs` on a grid of spacing `grid_step` for
/// the given users. Exhaustive for up to three UAVs, greedy plus coordinate
/// descent beyond.
pub fn brute_force_placement(
    radio: &RadioModel,
    area: &AreaSpec,
    users: &[Point],
    n_uavs: usize,
    grid_step: f64,
    beta: f64,
) -> Result<PlacementResult, EvalError> {
    if !(grid_step > 0.0) {
        return Err(EvalError::Invalid("grid step must be positive"));
    }
    if n_uavs == 0 || users.is_empty() {
        return Ok(PlacementResult {
            positions: vec![area.center(); n_uavs],
            served: 0,
            score: 0.0,
            exhaustive: true,
        });
    }
    let grid = grid_points(area, grid_step);
    // a UAV covering nobody neither serves nor interferes
    let mut cands = Vec::new();
    let mut received = Vec::new();
    for p in &grid {
        let row: Vec<f64> = users.iter().map(|u| radio.received(*u, *p).unwrap_or(0.0)).collect();
        if row.iter().any(|r| *r > 0.0) {
            cands.push(*p);
            received.extend(row);
        }
    }
    let mut search = PlacementSearch {
        radio,
        users: users.len(),
        received,
        beta,
        table: LinkTable { users: users.len(), transmitters: Vec::new(), received: Vec::new() },
    };
    let k = n_uavs.min(cands.len());
    let fill = |mut pos: Vec<Point>| {
        pos.resize(n_uavs, area.center());
        pos
    };
    if k == 0 {
        return Ok(PlacementResult { positions: fill(Vec::new()), served: 0, score: 0.0, exhaustive: true });
    }
    let combos = binomial(cands.len(), k);
    if n_uavs <= 3 {
        if combos > EXHAUSTIVE_LIMIT {
            return Err(EvalError::Intractable { combinations: combos, limit: EXHAUSTIVE_LIMIT });
        }
        let mut best = (0usize, vec![0usize; k]);
        let mut idx: Vec<usize> = (0..k).collect();
        let mut first = true;
        loop {
            let s = search.served(&idx);
            if first || s > best.0 {
                best = (s, idx.clone());
                first = false;
            }
            // next combination in lexicographic order
            let mut i = k;
            loop {
                if i == 0 {
                    let positions = fill(best.1.iter().map(|&c| cands[c]).collect());
                    return Ok(PlacementResult {
                        positions,
                        served: best.0,
                        score: us_score_of_count(best.0, search.beta),
                        exhaustive: true,
                    });
                }
                i -= 1;
                if idx[i] < cands.len() - k + i {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
    // greedy construction
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = (0usize, usize::MAX);
        for c in 0..cands.len() {
            if chosen.contains(&c) {
                continue;
            }
            chosen.push(c);
            let s = search.served(&chosen);
            chosen.pop();
            if best.1 == usize::MAX || s > best.0 {
                best = (s, c);
            }
        }
        chosen.push(best.1);
    }
    // coordinate descent
    let mut current = search.served(&chosen);
    loop {
        let mut improved = false;
        for i in 0..k {
            for c in 0..cands.len() {
                if chosen.contains(&c) {
                    continue;
                }
                let old = chosen[i];
                chosen[i] = c;
                let s = search.served(&chosen);
                if s > current {
                    current = s;
                    improved = true;
                } else {
                    chosen[i] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(PlacementResult {
        positions: fill(chosen.iter().map(|&c| cands[c]).collect()),
        served: current,
        score: us_score_of_count(current, beta),
        exhaustive: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{FleetSpec, Horizon, HotspotTrace, Placement, UserDistributionSpec};

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth_curve(&[2.0; 5], 3), vec![2.0; 5]);
        let v = [1.0, 5.0, 2.0];
        assert_eq!(smooth_curve(&v, 1), v.to_vec());
        let step: Vec<f64> = (1..=200).map(|i| if i >= 101 { 1.0 } else { 0.0 }).collect();
        let s = smooth_curve(&step, 100);
        assert!((s[149] - 0.5).abs() < 1e-12);
        assert_eq!(smooth_curve(&[1.0, 3.0], 100), vec![1.0, 2.0]);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(625, 3), 40_495_000);
        assert_eq!(binomial(3, 4), 0);
    }

    fn radio() -> (RadioModel, AreaSpec) {
        let c = crate::scenario::PhysicalConstants::default();
        let area = AreaSpec::default();
        (RadioModel::new(&c, &area), area)
    }

    #[test]
    fn oracle_no_users() {
        let (r, a) = radio();
        let res = brute_force_placement(&r, &a, &[], 2, 1.0, 2.0).unwrap();
        assert_eq!(res.score, 0.0);
    }

    #[test]
    fn oracle_single_disk_caps_at_rb_budget() {
        let (r, a) = radio();
        let users: Vec<Point> = (0..30).map(|i| Point::new(5.0 + 0.01 * (i % 6) as f64, 5.0 + 0.01 * (i / 6) as f64)).collect();
        let res = brute_force_placement(&r, &a, &users, 1, 0.5, 2.0).unwrap();
        assert_eq!(res.served, 25);
    }

    #[test]
    fn oracle_splits_two_clusters() {
        let (r, a) = radio();
        let mut users = Vec::new();
        for i in 0..20 {
            let d = 0.02 * i as f64;
            users.push(Point::new(2.0 + d, 2.0));
            users.push(Point::new(8.0 - d, 8.0));
        }
        let res = brute_force_placement(&r, &a, &users, 2, 0.5, 2.0).unwrap();
        assert_eq!(res.served, 40);
        let near = |c: Point| res.positions.iter().any(|p| p.distance(c) < 1.8);
        assert!(near(Point::new(2.2, 2.0)) && near(Point::new(7.8, 8.0)));
    }

    #[test]
    fn oracle_refuses_intractable() {
        let (r, a) = radio();
        let users: Vec<Point> = (0..10).map(|i| Point::new(i as f64, i as f64)).collect();
        assert!(matches!(brute_force_placement(&r, &a, &users, 3, 0.1, 2.0), Err(EvalError::Intractable { .. })));
    }

    fn static_scenario() -> Scenario {
        Scenario {
            users: UserDistributionSpec {
                count: 30,
                hotspot_fraction: 0.8,
                hotspots: vec![HotspotTrace::fixed(Point::new(3.0, 3.0), 0.5)],
                uniform_remainder: true,
            },
            fleet: FleetSpec {
                count: 2,
                placement: Placement::Explicit { positions: vec![Point::new(3.0, 3.0), Point::new(7.0, 7.0)] },
                initial_energy: 1000.0,
                initial_energy_per_uav: None,
                reset_jitter: 0.0,
            },
            horizon: Horizon { steps: 12, segments: 1 },
            ..Scenario::default()
        }
    }

    #[test]
    fn hold_policy_on_static_users_is_constant() {
        let tr = run_policy(&static_scenario(), &mut HoldController, 0, "hold").unwrap();
        assert_eq!(tr.len(), 12);
        let s = tr.served();
        assert!(s.iter().all(|v| *v == s[0]));
        let n_u = 30f64;
        let acc: f64 = tr.scores().iter().sum();
        let rew: f64 = tr.rewards().iter().sum();
        assert!((acc - n_u * n_u * rew).abs() < 1e-9);
    }

    #[test]
    fn identical_traces_give_zero_gain() {
        let mut sc = static_scenario();
        sc.fleet.initial_energy_per_uav = Some(vec![185.0, 1000.0]);
        sc.lineup_events.push(LineupEvent::Quit { uav: 0 });
        let tr = run_policy(&sc, &mut HoldController, 0, "hold").unwrap();
        let rep = transition_gain(&tr, &tr, &LineupEvent::Quit { uav: 0 }).unwrap();
        assert_eq!(rep.gain_percent, 0.0);
        assert_eq!(rep.psr_change_step, 5);
    }

    #[test]
    fn steady_detection() {
        assert_eq!(steady_served(&[5, 3, 4, 4, 4, 4], 1), (4, 3));
        assert_eq!(steady_served(&[1, 2, 3], 1), (3, 3));
    }
}
