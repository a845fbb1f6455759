//! The episodic environment: fleet state, state/action encodings, the step
//! transition with quit/join handling, reward and terminal detection.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::Rng as _;
use thiserror::Error;

use crate::energy::{slot_energy, BatteryLedger, EnergyError};
use crate::radio::{us_score_of_count, AssociationMap, RadioModel, Transmitter};
use crate::rng_from_seed;
use crate::scenario::{generate_population, LineupEvent, Point, Scenario, ScenarioError, UserPopulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("step called after the episode terminated")]
    EpisodeOver,
    #[error("vector length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("action contains a non-finite value")]
    NonFiniteAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavStatus {
    Active,
    Quit,
    PreTakeoff,
    Elevating,
}

impl UavStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            UavStatus::Active => "active",
            UavStatus::Quit => "quit",
            UavStatus::PreTakeoff => "pre_takeoff",
            UavStatus::Elevating => "elevating",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState {
    pub position: Point,
    pub altitude_m: f64,
    pub status: UavStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetState {
    pub uavs: Vec<UavState>,
    pub battery: BatteryLedger,
}

impl FleetState {
    pub fn len(&self) -> usize {
        self.uavs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uavs.is_empty()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.uavs.iter().map(|u| u.position).collect()
    }

    /// UAVs currently serving: active and at serving altitude.
    pub fn transmitters(&self) -> Vec<Transmitter> {
        self.uavs
            .iter()
            .enumerate()
            .filter(|(_, u)| u.status == UavStatus::Active)
            .map(|(i, u)| Transmitter { uav: i, position: u.position })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateMode {
    /// Third block carries battery residuals.
    Quit,
    /// Third block carries altitudes.
    Join,
}

/// Layout of the flat state vector `[x.., y.., E.. | H.., (t)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub uavs: usize,
    pub mode: StateMode,
    pub with_time: bool,
}

/// Unpacked state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedState {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Battery or altitude, depending on the mode.
    pub levels: Vec<f64>,
    pub t: Option<f64>,
}

impl StateLayout {
    pub fn for_scenario(s: &Scenario) -> Self {
        Self {
            uavs: s.fleet.count,
            mode: if s.has_join() { StateMode::Join } else { StateMode::Quit },
            with_time: s.with_time(),
        }
    }

    pub fn len(&self) -> usize {
        3 * self.uavs + usize::from(self.with_time)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn action_len(&self) -> usize {
        2 * self.uavs
    }

    /// Encodes the UAVs listed in `subset` (fleet indices) in that order.
    pub fn encode_subset(&self, fleet: &FleetState, t: usize, subset: &[usize]) -> Vec<f64> {
        debug_assert_eq!(subset.len(), self.uavs);
        let mut s = Vec::with_capacity(self.len());
        s.extend(subset.iter().map(|&i| fleet.uavs[i].position.x));
        s.extend(subset.iter().map(|&i| fleet.uavs[i].position.y));
        match self.mode {
            StateMode::Quit => s.extend(subset.iter().map(|&i| fleet.battery.level(i))),
            StateMode::Join => s.extend(subset.iter().map(|&i| fleet.uavs[i].altitude_m)),
        }
        if self.with_time {
            s.push(t as f64);
        }
        s
    }

    pub fn encode(&self, fleet: &FleetState, t: usize) -> Vec<f64> {
        let all: Vec<usize> = (0..fleet.len()).collect();
        self.encode_subset(fleet, t, &all)
    }

    pub fn decode(&self, state: &[f64]) -> Result<DecodedState, EnvError> {
        if state.len() != self.len() {
            return Err(EnvError::LengthMismatch { expected: self.len(), got: state.len() });
        }
        let n = self.uavs;
        Ok(DecodedState {
            xs: state[..n].to_vec(),
            ys: state[n..2 * n].to_vec(),
            levels: state[2 * n..3 * n].to_vec(),
            t: self.with_time.then(|| state[3 * n]),
        })
    }
}

/// Per-UAV move: heading in radians and distance in area units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavAction {
    pub heading: f64,
    pub distance: f64,
}

impl UavAction {
    pub const HOLD: UavAction = UavAction { heading: 0.0, distance: 0.0 };
}

/// Largest representable heading below a full turn.
pub fn max_heading() -> f64 {
    TAU.next_down()
}

/// Packs per-UAV actions as `[headings.., distances..]`.
pub fn encode_action(actions: &[UavAction]) -> Vec<f64> {
    actions.iter().map(|a| a.heading).chain(actions.iter().map(|a| a.distance)).collect()
}

/// Unpacks `[headings.., distances..]`, clipping headings to `[0, 2pi)` and
/// distances to `[0, d_max]`.
pub fn decode_action(raw: &[f64], uavs: usize, d_max: f64) -> Result<Vec<UavAction>, EnvError> {
    if raw.len() != 2 * uavs {
        return Err(EnvError::LengthMismatch { expected: 2 * uavs, got: raw.len() });
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(EnvError::NonFiniteAction);
    }
    Ok((0..uavs)
        .map(|i| UavAction {
            heading: raw[i].clamp(0.0, max_heading()),
            distance: raw[uavs + i].clamp(0.0, d_max),
        })
        .collect())
}

/// Reward of one slot: `(served / N_u)^beta` over the given transmitters.
pub fn reward(
    radio: &RadioModel,
    users: &[Point],
    txs: &[Transmitter],
    fleet_size: usize,
    beta: f64,
) -> (f64, AssociationMap) {
    let assoc = radio.associate(users, txs, fleet_size);
    let r = if users.is_empty() {
        0.0
    } else {
        libm::pow(assoc.served_count() as f64 / users.len() as f64, beta)
    };
    (r, assoc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
    pub served: usize,
    /// `served^beta`.
    pub score: f64,
    /// Some UAV tried to leave the area and its move was cancelled.
    pub boundary_hit: bool,
}

#[derive(Debug, Clone)]
pub struct UavEnv {
    scenario: Scenario,
    radio: RadioModel,
    population: UserPopulation,
    layout: StateLayout,
    d_max: f64,
    fleet: FleetState,
    t: usize,
    done: bool,
    users: Vec<Point>,
    users_segment: usize,
    last_association: Option<AssociationMap>,
}

impl UavEnv {
    pub fn new(scenario: Scenario) -> Result<Self, EnvError> {
        scenario.validate()?;
        let population = generate_population(&scenario.users, &scenario.area, scenario.user_seed)?;
        let radio = RadioModel::new(&scenario.constants, &scenario.area);
        let layout = StateLayout::for_scenario(&scenario);
        let d_max = scenario.constants.d_max_m / scenario.area.unit_length;
        let users = population.positions.clone();
        let mut env = Self {
            fleet: FleetState { uavs: Vec::new(), battery: BatteryLedger::new(Vec::new(), 0.0) },
            scenario,
            radio,
            population,
            layout,
            d_max,
            t: 1,
            done: false,
            users,
            users_segment: 1,
            last_association: None,
        };
        env.reset(0);
        Ok(env)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn radio(&self) -> &RadioModel {
        &self.radio
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn fleet(&self) -> &FleetState {
        &self.fleet
    }

    /// Current step index, starting at 1.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// User positions for the current step.
    pub fn users(&self) -> &[Point] {
        &self.users
    }

    pub fn population(&self) -> &UserPopulation {
        &self.population
    }

    pub fn last_association(&self) -> Option<&AssociationMap> {
        self.last_association.as_ref()
    }

    pub fn state(&self) -> Vec<f64> {
        self.layout.encode(&self.fleet, self.t)
    }

    /// Per-component `(min, max)` of the state vector for `subset`.
    pub fn state_bounds_for(&self, subset: &[usize]) -> Vec<(f64, f64)> {
        let s = &self.scenario;
        let side = s.area.side;
        let mut b = Vec::with_capacity(3 * subset.len() + 1);
        b.extend(subset.iter().map(|_| (0.0, side)));
        b.extend(subset.iter().map(|_| (0.0, side)));
        match self.layout.mode {
            StateMode::Quit => b.extend(
                subset
                    .iter()
                    .map(|&i| (s.constants.quit_threshold, s.fleet.initial_energy_of(i).max(s.constants.quit_threshold))),
            ),
            StateMode::Join => {
                let floor = s
                    .lineup_events
                    .iter()
                    .filter_map(|e| match e {
                        LineupEvent::Join { start_altitude_m, .. } => Some(*start_altitude_m),
                        LineupEvent::Quit { .. } => None,
                    })
                    .fold(s.constants.serving_altitude_m, f64::min);
                b.extend(subset.iter().map(|_| (floor, s.constants.serving_altitude_m)));
            }
        }
        if self.layout.with_time {
            b.push((1.0, s.horizon.steps as f64));
        }
        b
    }

    pub fn state_bounds(&self) -> Vec<(f64, f64)> {
        let all: Vec<usize> = (0..self.scenario.fleet.count).collect();
        self.state_bounds_for(&all)
    }

    /// `(low, high)` of each action channel: headings then distances.
    pub fn action_bounds_for(&self, uavs: usize) -> Vec<(f64, f64)> {
        let mut b = alloc::vec![(0.0, TAU); uavs];
        b.extend(core::iter::repeat_n((0.0, self.d_max), uavs));
        b
    }

    pub fn action_bounds(&self) -> Vec<(f64, f64)> {
        self.action_bounds_for(self.scenario.fleet.count)
    }

    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let s = &self.scenario;
        let mut positions = s.fleet.placement.positions(s.fleet.count).unwrap_or_default();
        if s.fleet.reset_jitter > 0.0 {
            let mut rng = rng_from_seed(seed);
            let j = s.fleet.reset_jitter;
            for p in positions.iter_mut() {
                let dx = rng.random_range(-j..=j);
                let dy = rng.random_range(-j..=j);
                *p = s.area.clamp(p.offset(dx, dy));
            }
        }
        let energies: Vec<f64> = (0..s.fleet.count).map(|i| s.fleet.initial_energy_of(i)).collect();
        let battery = BatteryLedger::new(energies, s.constants.quit_threshold);
        let uavs = positions
            .iter()
            .enumerate()
            .map(|(i, p)| match s.join_event(i) {
                Some(LineupEvent::Join { takeoff_point, start_altitude_m, .. }) => UavState {
                    position: *takeoff_point,
                    altitude_m: *start_altitude_m,
                    status: UavStatus::PreTakeoff,
                },
                _ => UavState {
                    position: *p,
                    altitude_m: s.constants.serving_altitude_m,
                    status: if battery.has_quit(i) { UavStatus::Quit } else { UavStatus::Active },
                },
            })
            .collect();
        self.fleet = FleetState { uavs, battery };
        self.t = 1;
        self.done = false;
        self.refresh_users();
        self.last_association = None;
        self.state()
    }

    fn refresh_users(&mut self) {
        let s = &self.scenario;
        let seg = s.horizon.segment_of(self.t.min(s.horizon.steps)).unwrap_or(1);
        if seg != self.users_segment || self.t == 1 {
            if let Ok(u) = self.population.at(&s.users, &s.area, &s.horizon, self.t.min(s.horizon.steps)) {
                self.users = u;
            }
            self.users_segment = seg;
        }
    }

    pub fn step(&mut self, raw_action: &[f64]) -> Result<StepOutcome, EnvError> {
        let actions = decode_action(raw_action, self.scenario.fleet.count, self.d_max)?;
        self.step_actions(&actions)
    }

    pub fn step_actions(&mut self, actions: &[UavAction]) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let n = self.fleet.len();
        if actions.len() != n {
            return Err(EnvError::LengthMismatch { expected: n, got: actions.len() });
        }
        let consts = &self.scenario.constants;
        let area = self.scenario.area;
        let unit = area.unit_length;
        let serving_alt = consts.serving_altitude_m;
        let climb = consts.elevation_step_m();
        // eligibility for this slot's reward is decided by the status at the start of the slot
        let eligible: Vec<bool> = self.fleet.uavs.iter().map(|u| u.status == UavStatus::Active).collect();
        let mut boundary_hit = false;

        for (i, &a) in actions.iter().enumerate().take(n) {
            let d = a.distance.clamp(0.0, self.d_max);
            let mut uav = self.fleet.uavs[i];
            if uav.status == UavStatus::PreTakeoff {
                let takeoff = match self.scenario.join_event(i) {
                    Some(LineupEvent::Join { takeoff_step, .. }) => *takeoff_step,
                    _ => 1,
                };
                if self.t < takeoff {
                    continue;
                }
                uav.status = UavStatus::Elevating;
            }
            if uav.status == UavStatus::Quit {
                continue;
            }
            let target = uav.position.offset(d * libm::cos(a.heading), d * libm::sin(a.heading));
            let moved = if area.contains(target) {
                uav.position = target;
                d
            } else {
                boundary_hit = true;
                0.0
            };
            match uav.status {
                UavStatus::Elevating => {
                    uav.altitude_m = (uav.altitude_m + climb).min(serving_alt);
                    if uav.altitude_m >= serving_alt {
                        uav.status = UavStatus::Active;
                    }
                }
                UavStatus::Active => {
                    let e = slot_energy((moved * unit).min(consts.d_max_m), consts)?;
                    if self.fleet.battery.apply_drain(i, e)? {
                        uav.status = UavStatus::Quit;
                    }
                }
                UavStatus::Quit | UavStatus::PreTakeoff => {}
            }
            self.fleet.uavs[i] = uav;
        }

        let txs: Vec<Transmitter> = self
            .fleet
            .uavs
            .iter()
            .enumerate()
            .filter(|(i, _)| eligible[*i])
            .map(|(i, u)| Transmitter { uav: i, position: u.position })
            .collect();
        let (r, assoc) = reward(&self.radio, &self.users, &txs, n, consts.beta);
        let served = assoc.served_count();
        let score = us_score_of_count(served, consts.beta);
        self.last_association = Some(assoc);

        let terminal = boundary_hit || self.t >= self.scenario.horizon.steps;
        self.done = terminal;
        self.t += 1;
        if !terminal {
            self.refresh_users();
        }
        Ok(StepOutcome { state: self.state(), reward: r, terminal, served, score, boundary_hit })
    }
}
