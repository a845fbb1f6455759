//! Static world description and the scripted dynamics (user distribution
//! schedule, lineup events) that environments are built from.
//!
//! Horizontal coordinates are expressed in area units (100 m by default);
//! altitudes and radio distances are in meters.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng_from_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("time step {t} outside horizon 1..={horizon}")]
    StepOutOfRange { t: usize, horizon: usize },
}

fn config_err(msg: &str) -> ScenarioError {
    ScenarioError::Config(String::from(msg))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn offset(self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }
}

/// Square target area.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct AreaSpec {
    /// Side length in units.
    pub side: f64,
    /// Length of one unit in meters.
    pub unit_length: f64,
}

impl Default for AreaSpec {
    fn default() -> Self {
        Self { side: 10.0, unit_length: 100.0 }
    }
}

impl AreaSpec {
    pub fn side_length_m(&self) -> f64 {
        self.side * self.unit_length
    }

    pub fn center(&self) -> Point {
        Point::new(self.side / 2.0, self.side / 2.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.side && p.y <= self.side
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.side), p.y.clamp(0.0, self.side))
    }
}

/// How a dB path loss turns into a linear channel gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum GainConvention {
    /// `10^(-PL/20)`, the amplitude form.
    #[default]
    Amplitude,
    /// `10^(-PL/10)`, the power form.
    Power,
}

/// Physical and radio constants. Defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct PhysicalConstants {
    pub serving_altitude_m: f64,
    pub aperture_deg: f64,
    pub level_speed_kmh: f64,
    pub elevation_speed_kmh: f64,
    pub weight_n: f64,
    pub air_density: f64,
    pub rotor_area_m2: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub rb_bandwidth_hz: f64,
    pub tx_psd_dbm_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub user_rate_bps: f64,
    pub excess_loss_db: f64,
    pub gain_convention: GainConvention,
    pub slot_s: f64,
    pub move_time_s: f64,
    pub d_max_m: f64,
    pub beta: f64,
    /// Battery level (unit·s) at or below which a UAV quits.
    pub quit_threshold: f64,
    /// Watts per power unit.
    pub power_unit_w: f64,
    /// Transmission energy per slot, unit·s.
    pub tx_energy: f64,
    /// Operational energy per second of slot, unit·s/s.
    pub op_energy_rate: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            serving_altitude_m: 300.0,
            aperture_deg: 60.0,
            level_speed_kmh: 40.0,
            elevation_speed_kmh: 14.4,
            weight_n: 4.0 * 9.8,
            air_density: 1.225,
            rotor_area_m2: 0.18,
            carrier_hz: 2.0e9,
            bandwidth_hz: 4.5e6,
            rb_bandwidth_hz: 180.0e3,
            tx_psd_dbm_hz: -49.5,
            noise_psd_dbm_hz: -174.0,
            user_rate_bps: 250.0e3,
            excess_loss_db: 1.0,
            gain_convention: GainConvention::Amplitude,
            slot_s: 10.0,
            move_time_s: 9.0,
            d_max_m: 100.0,
            beta: 2.0,
            quit_threshold: 150.0,
            power_unit_w: 9.428,
            tx_energy: 0.0,
            op_energy_rate: 0.0,
        }
    }
}

impl PhysicalConstants {
    pub fn aperture_rad(&self) -> f64 {
        self.aperture_deg * PI / 180.0
    }

    pub fn level_speed_mps(&self) -> f64 {
        self.level_speed_kmh / 3.6
    }

    /// Altitude gained per slot while elevating.
    pub fn elevation_step_m(&self) -> f64 {
        self.elevation_speed_kmh / 3.6 * self.slot_s
    }

    /// Resource blocks available per UAV.
    pub fn rbs_per_uav(&self) -> u32 {
        libm::floor(self.bandwidth_hz / self.rb_bandwidth_hz + 1e-9) as u32
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = [
            self.serving_altitude_m,
            self.aperture_deg,
            self.level_speed_kmh,
            self.elevation_speed_kmh,
            self.weight_n,
            self.air_density,
            self.rotor_area_m2,
            self.carrier_hz,
            self.bandwidth_hz,
            self.rb_bandwidth_hz,
            self.user_rate_bps,
            self.slot_s,
            self.move_time_s,
            self.d_max_m,
            self.beta,
            self.power_unit_w,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(config_err("physical constants must be finite and positive"));
        }
        if self.aperture_deg >= 180.0 {
            return Err(config_err("aperture angle must be below 180 degrees"));
        }
        if self.move_time_s > self.slot_s {
            return Err(config_err("move time exceeds slot duration"));
        }
        if self.d_max_m > self.level_speed_mps() * self.move_time_s + 1e-9 {
            return Err(config_err("d_max exceeds the distance reachable within the move time"));
        }
        if self.tx_energy < 0.0 || self.op_energy_rate < 0.0 || self.quit_threshold < 0.0 {
            return Err(config_err("energy terms must be non-negative"));
        }
        Ok(())
    }
}

/// Hotspot center fixed at `center` from segment `segment` onwards.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Waypoint {
    pub segment: usize,
    pub center: Point,
}

/// Piecewise-constant path of one hotspot center, plus the scatter of its
/// users.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HotspotTrace {
    pub start: Point,
    #[cfg_attr(feature = "serde", serde(default))]
    pub waypoints: Vec<Waypoint>,
    #[cfg_attr(feature = "serde", serde(default = "default_spread"))]
    pub spread: f64,
    /// Relative share of the hotspot users attached to this hotspot.
    #[cfg_attr(feature = "serde", serde(default = "default_weight"))]
    pub weight: f64,
}

#[cfg(feature = "serde")]
fn default_spread() -> f64 {
    0.7
}

#[cfg(feature = "serde")]
fn default_weight() -> f64 {
    1.0
}

impl HotspotTrace {
    pub fn fixed(center: Point, spread: f64) -> Self {
        Self { start: center, waypoints: Vec::new(), spread, weight: 1.0 }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// Disperse-gather-disperse trace: `snapshots` evenly spaced centers on
    /// the segment from `corner` to the point `stop_distance` away from
    /// `gather_center` (snapshot 1 is the corner, the last one the stop
    /// point). `order[k]` is the snapshot used during segment `k + 1`.
    pub fn disperse_gather(
        corner: Point,
        gather_center: Point,
        stop_distance: f64,
        snapshots: usize,
        order: &[usize],
        spread: f64,
    ) -> Result<Self, ScenarioError> {
        if snapshots < 2 {
            return Err(config_err("a moving trace needs at least two snapshots"));
        }
        let dist = corner.distance(gather_center);
        if dist <= stop_distance {
            return Err(config_err("hotspot corner already within stop distance of the center"));
        }
        let frac = (dist - stop_distance) / dist;
        let stop = corner.offset(
            (gather_center.x - corner.x) * frac,
            (gather_center.y - corner.y) * frac,
        );
        let snapshot = |k: usize| {
            let s = (k - 1) as f64 / (snapshots - 1) as f64;
            corner.offset((stop.x - corner.x) * s, (stop.y - corner.y) * s)
        };
        let first = *order.first().ok_or_else(|| config_err("empty snapshot order"))?;
        if order.iter().any(|&k| k == 0 || k > snapshots) {
            return Err(config_err("snapshot order refers to an unknown snapshot"));
        }
        let waypoints = order
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &k)| Waypoint { segment: i + 1, center: snapshot(k) })
            .collect();
        Ok(Self { start: snapshot(first), waypoints, spread, weight: 1.0 })
    }

    pub fn is_static(&self) -> bool {
        self.waypoints.iter().all(|w| w.center == self.start)
    }

    /// Center during (1-based) `segment`.
    pub fn center_in_segment(&self, segment: usize) -> Point {
        self.waypoints
            .iter()
            .filter(|w| w.segment <= segment)
            .max_by_key(|w| w.segment)
            .map_or(self.start, |w| w.center)
    }
}

/// Time horizon and its division into user-distribution segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct Horizon {
    /// Steps per episode (`N_T`).
    pub steps: usize,
    pub segments: usize,
}

impl Default for Horizon {
    fn default() -> Self {
        Self { steps: 100, segments: 10 }
    }
}

impl Horizon {
    /// 1-based segment holding step `t`.
    pub fn segment_of(&self, t: usize) -> Result<usize, ScenarioError> {
        if t == 0 || t > self.steps {
            return Err(ScenarioError::StepOutOfRange { t, horizon: self.steps });
        }
        Ok((t - 1) * self.segments / self.steps + 1)
    }
}

/// Center of a hotspot at step `t`.
pub fn hotspot_center_at(
    trace: &HotspotTrace,
    t: usize,
    horizon: &Horizon,
) -> Result<Point, ScenarioError> {
    Ok(trace.center_in_segment(horizon.segment_of(t)?))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct UserDistributionSpec {
    pub count: usize,
    pub hotspot_fraction: f64,
    pub hotspots: Vec<HotspotTrace>,
    /// When false, the users not claimed by `hotspot_fraction` are spread
    /// over the hotspots as well instead of uniformly over the area.
    pub uniform_remainder: bool,
}

/// Four static corner-ish hotspots on the 10 x 10 reference area.
impl Default for UserDistributionSpec {
    fn default() -> Self {
        reference_static_users()
    }
}

impl UserDistributionSpec {
    pub fn validate(&self, area: &AreaSpec) -> Result<(), ScenarioError> {
        if !(0.0..=1.0).contains(&self.hotspot_fraction) {
            return Err(config_err("hotspot_fraction must lie in [0, 1]"));
        }
        if self.hotspots.is_empty() && (self.hotspot_fraction > 0.0 || !self.uniform_remainder) {
            return Err(config_err("hotspot users requested but no hotspots configured"));
        }
        for h in &self.hotspots {
            if !(h.spread >= 0.0 && h.spread.is_finite()) || !(h.weight > 0.0) {
                return Err(config_err("hotspot spread must be >= 0 and weight > 0"));
            }
            let mut centers = core::iter::once(h.start).chain(h.waypoints.iter().map(|w| w.center));
            if !centers.all(|c| area.contains(c)) {
                return Err(config_err("hotspot center outside the area"));
            }
        }
        Ok(())
    }

    pub fn is_static(&self) -> bool {
        self.hotspots.iter().all(HotspotTrace::is_static)
    }

    /// Users attached to each hotspot; sums to `round(fraction * count)`
    /// (or to `count` without a uniform remainder).
    pub fn hotspot_counts(&self) -> Vec<usize> {
        if self.hotspots.is_empty() {
            return Vec::new();
        }
        let total = if self.uniform_remainder {
            libm::round(self.hotspot_fraction * self.count as f64) as usize
        } else {
            self.count
        };
        let weight_sum: f64 = self.hotspots.iter().map(|h| h.weight).sum();
        let exact: Vec<f64> =
            self.hotspots.iter().map(|h| total as f64 * h.weight / weight_sum).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| libm::floor(*e) as usize).collect();
        let mut missing = total - counts.iter().sum::<usize>();
        // largest remainder, ties to the lower index
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - counts[a] as f64;
            let rb = exact[b] - counts[b] as f64;
            rb.partial_cmp(&ra).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        for i in order {
            if missing == 0 {
                break;
            }
            counts[i] += 1;
            missing -= 1;
        }
        counts
    }
}

/// User positions at the first step together with each user's hotspot.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPopulation {
    pub positions: Vec<Point>,
    pub hotspot: Vec<Option<usize>>,
}

impl UserPopulation {
    /// Positions at step `t`: hotspot users are translated with their
    /// center, uniform users stay put.
    pub fn at(
        &self,
        spec: &UserDistributionSpec,
        area: &AreaSpec,
        horizon: &Horizon,
        t: usize,
    ) -> Result<Vec<Point>, ScenarioError> {
        let segment = horizon.segment_of(t)?;
        let shifts: Vec<(f64, f64)> = spec
            .hotspots
            .iter()
            .map(|h| {
                let now = h.center_in_segment(segment);
                let first = h.center_in_segment(1);
                (now.x - first.x, now.y - first.y)
            })
            .collect();
        Ok(self
            .positions
            .iter()
            .zip(&self.hotspot)
            .map(|(p, h)| match h {
                Some(k) => area.clamp(p.offset(shifts[*k].0, shifts[*k].1)),
                None => *p,
            })
            .collect())
    }
}

const MAX_RESAMPLES: usize = 64;

pub fn generate_population(
    spec: &UserDistributionSpec,
    area: &AreaSpec,
    seed: u64,
) -> Result<UserPopulation, ScenarioError> {
    spec.validate(area)?;
    let mut rng = rng_from_seed(seed);
    let mut positions = Vec::with_capacity(spec.count);
    let mut hotspot = Vec::with_capacity(spec.count);
    for (k, (h, n)) in spec.hotspots.iter().zip(spec.hotspot_counts()).enumerate() {
        let center = h.center_in_segment(1);
        for _ in 0..n {
            let mut p = center;
            for _ in 0..MAX_RESAMPLES {
                let dx: f64 = StandardNormal.sample(&mut rng);
                let dy: f64 = StandardNormal.sample(&mut rng);
                p = center.offset(h.spread * dx, h.spread * dy);
                if area.contains(p) {
                    break;
                }
            }
            positions.push(area.clamp(p));
            hotspot.push(Some(k));
        }
    }
    while positions.len() < spec.count {
        let x = rng.random::<f64>() * area.side;
        let y = rng.random::<f64>() * area.side;
        positions.push(Point::new(x, y));
        hotspot.push(None);
    }
    Ok(UserPopulation { positions, hotspot })
}

/// Ground positions of all users at the first step.
pub fn generate_users(
    spec: &UserDistributionSpec,
    area: &AreaSpec,
    seed: u64,
) -> Result<Vec<Point>, ScenarioError> {
    generate_population(spec, area, seed).map(|p| p.positions)
}

/// Ground positions of all users at step `t`.
pub fn snapshot_at(
    spec: &UserDistributionSpec,
    area: &AreaSpec,
    horizon: &Horizon,
    t: usize,
    seed: u64,
) -> Result<Vec<Point>, ScenarioError> {
    generate_population(spec, area, seed)?.at(spec, area, horizon, t)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(tag = "kind", rename_all = "snake_case"))]
pub enum LineupEvent {
    /// Battery-triggered; the UAV's initial energy decides when it fires.
    Quit { uav: usize },
    Join {
        uav: usize,
        takeoff_step: usize,
        takeoff_point: Point,
        #[cfg_attr(feature = "serde", serde(default))]
        start_altitude_m: f64,
    },
}

impl LineupEvent {
    pub fn uav(&self) -> usize {
        match self {
            LineupEvent::Quit { uav } | LineupEvent::Join { uav, .. } => *uav,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(tag = "kind", rename_all = "snake_case"))]
pub enum Placement {
    /// Evenly spaced points on a circle; the first one at angle `phase`.
    Circle { center: Point, radius: f64, #[cfg_attr(feature = "serde", serde(default))] phase: f64 },
    Explicit { positions: Vec<Point> },
}

impl Placement {
    pub fn positions(&self, count: usize) -> Result<Vec<Point>, ScenarioError> {
        match self {
            Placement::Circle { center, radius, phase } => Ok((0..count)
                .map(|i| {
                    let a = phase + 2.0 * PI * i as f64 / count as f64;
                    center.offset(radius * libm::cos(a), radius * libm::sin(a))
                })
                .collect()),
            Placement::Explicit { positions } => {
                if positions.len() != count {
                    return Err(config_err("explicit placement length differs from fleet size"));
                }
                Ok(positions.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct FleetSpec {
    pub count: usize,
    pub placement: Placement,
    /// Initial battery (unit·s) of every UAV unless overridden.
    pub initial_energy: f64,
    /// Per-UAV initial battery; overrides `initial_energy` when present.
    pub initial_energy_per_uav: Option<Vec<f64>>,
    /// Uniform jitter (units) added to initial positions on reset.
    pub reset_jitter: f64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        Self {
            count: 5,
            placement: Placement::Circle { center: Point::new(5.0, 5.0), radius: 1.0, phase: 0.0 },
            initial_energy: 10_000.0,
            initial_energy_per_uav: None,
            reset_jitter: 0.0,
        }
    }
}

impl FleetSpec {
    pub fn initial_energy_of(&self, uav: usize) -> f64 {
        self.initial_energy_per_uav
            .as_ref()
            .and_then(|v| v.get(uav).copied())
            .unwrap_or(self.initial_energy)
    }
}

/// Everything an environment instance is built from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct Scenario {
    pub name: String,
    pub area: AreaSpec,
    pub constants: PhysicalConstants,
    pub users: UserDistributionSpec,
    /// Seed of the user snapshot; fixed per scenario.
    pub user_seed: u64,
    pub fleet: FleetSpec,
    pub lineup_events: Vec<LineupEvent>,
    pub horizon: Horizon,
    /// Append the step index to the state. Defaults to "users move".
    pub time_in_state: Option<bool>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: String::from("reference"),
            area: AreaSpec::default(),
            constants: PhysicalConstants::default(),
            users: UserDistributionSpec::default(),
            user_seed: 1,
            fleet: FleetSpec::default(),
            lineup_events: Vec::new(),
            horizon: Horizon::default(),
            time_in_state: None,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.area.side > 0.0 && self.area.unit_length > 0.0) {
            return Err(config_err("area side and unit length must be positive"));
        }
        self.constants.validate()?;
        self.users.validate(&self.area)?;
        if self.fleet.count == 0 {
            return Err(config_err("fleet must contain at least one UAV"));
        }
        if self.horizon.steps == 0 || self.horizon.segments == 0 || self.horizon.segments > self.horizon.steps {
            return Err(config_err("horizon needs steps >= segments >= 1"));
        }
        if let Some(v) = &self.fleet.initial_energy_per_uav {
            if v.len() != self.fleet.count {
                return Err(config_err("initial_energy_per_uav length differs from fleet size"));
            }
        }
        self.fleet.placement.positions(self.fleet.count)?;
        let mut joins = 0;
        for ev in &self.lineup_events {
            if ev.uav() >= self.fleet.count {
                return Err(config_err("lineup event refers to an unknown UAV"));
            }
            if let LineupEvent::Join { takeoff_step, takeoff_point, start_altitude_m, .. } = ev {
                joins += 1;
                if *takeoff_step == 0 || *takeoff_step > self.horizon.steps {
                    return Err(config_err("join takeoff step outside the horizon"));
                }
                if !self.area.contains(*takeoff_point) {
                    return Err(config_err("join takeoff point outside the area"));
                }
                if !(0.0..self.constants.serving_altitude_m).contains(start_altitude_m) {
                    return Err(config_err("join start altitude must be below serving altitude"));
                }
            }
        }
        if joins > 0 && joins != self.lineup_events.len() {
            return Err(config_err("quit and join events cannot be mixed in one scenario"));
        }
        Ok(())
    }

    pub fn join_event(&self, uav: usize) -> Option<&LineupEvent> {
        self.lineup_events
            .iter()
            .find(|e| matches!(e, LineupEvent::Join { uav: u, .. } if *u == uav))
    }

    pub fn has_join(&self) -> bool {
        self.lineup_events.iter().any(|e| matches!(e, LineupEvent::Join { .. }))
    }

    pub fn with_time(&self) -> bool {
        self.time_in_state.unwrap_or(!self.users.is_static())
    }

    /// Same scenario with the fleet starting at `positions`.
    pub fn starting_at(&self, positions: Vec<Point>) -> Self {
        let mut s = self.clone();
        s.fleet.placement = Placement::Explicit { positions };
        s
    }
}

/// Corner-to-center schedule used by the reference dynamic scenario.
pub const REFERENCE_SNAPSHOT_ORDER: [usize; 10] = [1, 2, 3, 4, 4, 4, 4, 3, 2, 1];

/// Four hotspots that start near the corners of the area, gather to
/// `stop_distance` from its center and disperse again.
pub fn reference_moving_hotspots(
    area: &AreaSpec,
    corner_inset: f64,
    stop_distance: f64,
    spread: f64,
) -> Result<Vec<HotspotTrace>, ScenarioError> {
    let lo = corner_inset;
    let hi = area.side - corner_inset;
    let corners = [Point::new(lo, lo), Point::new(hi, lo), Point::new(hi, hi), Point::new(lo, hi)];
    corners
        .iter()
        .map(|c| {
            HotspotTrace::disperse_gather(*c, area.center(), stop_distance, 4, &REFERENCE_SNAPSHOT_ORDER, spread)
        })
        .collect()
}

/// Reference user distribution: four fixed hotspots plus uniform users.
pub fn reference_static_users() -> UserDistributionSpec {
    UserDistributionSpec {
        count: 100,
        hotspot_fraction: 0.8,
        hotspots: vec![
            HotspotTrace::fixed(Point::new(2.0, 2.5), 0.7),
            HotspotTrace::fixed(Point::new(7.5, 2.0), 0.7),
            HotspotTrace::fixed(Point::new(7.0, 7.5), 0.7),
            HotspotTrace::fixed(Point::new(2.5, 7.0), 0.7),
        ],
        uniform_remainder: true,
    }
}
