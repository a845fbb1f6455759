//! Coverage disks, path loss, SINR, user association with LTE resource
//! blocks, and the user-satisfaction score of one time slot.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::scenario::{AreaSpec, GainConvention, PhysicalConstants, Point};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("user is outside the coverage disk of UAV {0}")]
    NotCovered(usize),
    #[error("no transmitter with UAV index {0}")]
    UnknownUav(usize),
}

/// Ground radius covered by a UAV at altitude `altitude` with aperture
/// angle `aperture_rad`.
pub fn coverage_radius(altitude: f64, aperture_rad: f64) -> f64 {
    altitude * libm::tan(aperture_rad / 2.0)
}

/// Free-space path loss plus excess loss, in dB.
pub fn path_loss_db(distance_m: f64, carrier_hz: f64, excess_db: f64) -> Result<f64, RadioError> {
    if !(distance_m > 0.0) {
        return Err(RadioError::NonPositiveDistance(distance_m));
    }
    Ok(20.0 * libm::log10(4.0 * core::f64::consts::PI * carrier_hz * distance_m / SPEED_OF_LIGHT) + excess_db)
}

pub fn channel_gain(path_loss_db: f64, convention: GainConvention) -> f64 {
    match convention {
        GainConvention::Amplitude => libm::pow(10.0, -path_loss_db / 20.0),
        GainConvention::Power => libm::pow(10.0, -path_loss_db / 10.0),
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    libm::pow(10.0, dbm / 10.0)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * libm::log10(ratio)
}

/// Link quantities between one UAV and one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub gain: f64,
    pub sinr: f64,
}

/// A UAV that is currently able to serve (active and at serving altitude).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmitter {
    pub uav: usize,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLink {
    pub uav: Option<usize>,
    pub rbs: u32,
    /// SINR on the serving link (0 when unserved).
    pub sinr: f64,
}

impl UserLink {
    pub fn served(&self) -> bool {
        self.uav.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMap {
    pub users: Vec<UserLink>,
    /// Remaining resource blocks, indexed by fleet UAV index.
    pub remaining_rbs: Vec<u32>,
}

impl AssociationMap {
    pub fn empty(users: usize, fleet_size: usize, rbs: u32) -> Self {
        Self {
            users: vec![UserLink { uav: None, rbs: 0, sinr: 0.0 }; users],
            remaining_rbs: vec![rbs; fleet_size],
        }
    }

    pub fn served_count(&self) -> usize {
        self.users.iter().filter(|u| u.served()).count()
    }

    /// Resource blocks allocated by fleet UAV `uav`.
    pub fn allocated_rbs(&self, uav: usize) -> u32 {
        self.users.iter().filter(|u| u.uav == Some(uav)).map(|u| u.rbs).sum()
    }
}

/// `SC = (served)^beta`.
pub fn us_score(assoc: &AssociationMap, beta: f64) -> f64 {
    us_score_of_count(assoc.served_count(), beta)
}

pub fn us_score_of_count(served: usize, beta: f64) -> f64 {
    libm::pow(served as f64, beta)
}

/// Received power (linear, mW/Hz) of every transmitter at every user,
/// zero where the user lies outside the transmitter's disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    pub users: usize,
    pub transmitters: Vec<usize>,
    /// Row-major `users x transmitters`.
    pub received: Vec<f64>,
}

impl LinkTable {
    pub fn row(&self, user: usize) -> &[f64] {
        let n = self.transmitters.len();
        &self.received[user * n..(user + 1) * n]
    }
}

/// Pre-evaluated radio constants for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioModel {
    pub altitude_m: f64,
    pub radius_m: f64,
    pub unit_m: f64,
    pub carrier_hz: f64,
    pub excess_db: f64,
    pub convention: GainConvention,
    pub tx_psd: f64,
    pub noise_psd: f64,
    pub rb_hz: f64,
    pub rbs_per_uav: u32,
    pub user_rate_bps: f64,
}

impl RadioModel {
    pub fn new(constants: &PhysicalConstants, area: &AreaSpec) -> Self {
        Self {
            altitude_m: constants.serving_altitude_m,
            radius_m: coverage_radius(constants.serving_altitude_m, constants.aperture_rad()),
            unit_m: area.unit_length,
            carrier_hz: constants.carrier_hz,
            excess_db: constants.excess_loss_db,
            convention: constants.gain_convention,
            tx_psd: dbm_to_mw(constants.tx_psd_dbm_hz),
            noise_psd: dbm_to_mw(constants.noise_psd_dbm_hz),
            rb_hz: constants.rb_bandwidth_hz,
            rbs_per_uav: constants.rbs_per_uav(),
            user_rate_bps: constants.user_rate_bps,
        }
    }

    /// Coverage radius in area units.
    pub fn radius_units(&self) -> f64 {
        self.radius_m / self.unit_m
    }

    pub fn horizontal_m(&self, user: Point, uav: Point) -> f64 {
        user.distance(uav) * self.unit_m
    }

    pub fn covers(&self, user: Point, uav: Point) -> bool {
        self.horizontal_m(user, uav) <= self.radius_m
    }

    pub fn distance_3d_m(&self, user: Point, uav: Point) -> f64 {
        libm::hypot(self.horizontal_m(user, uav), self.altitude_m)
    }

    /// `P_t * G` at `user` from a UAV at `uav`, or `None` outside the disk.
    pub fn received(&self, user: Point, uav: Point) -> Option<f64> {
        if !self.covers(user, uav) {
            return None;
        }
        let pl = path_loss_db(self.distance_3d_m(user, uav), self.carrier_hz, self.excess_db).ok()?;
        Some(self.tx_psd * channel_gain(pl, self.convention))
    }

    pub fn link_table(&self, users: &[Point], txs: &[Transmitter]) -> LinkTable {
        let mut received = Vec::with_capacity(users.len() * txs.len());
        for u in users {
            for tx in txs {
                received.push(self.received(*u, tx.position).unwrap_or(0.0));
            }
        }
        LinkTable { users: users.len(), transmitters: txs.iter().map(|t| t.uav).collect(), received }
    }

    /// SINR of `user` served by fleet UAV `serving`; interference comes from
    /// every other transmitter whose disk contains the user.
    pub fn sinr(&self, user: Point, serving: usize, txs: &[Transmitter]) -> Result<f64, RadioError> {
        let server = txs.iter().find(|t| t.uav == serving).ok_or(RadioError::UnknownUav(serving))?;
        let signal = self.received(user, server.position).ok_or(RadioError::NotCovered(serving))?;
        let interference: f64 = txs
            .iter()
            .filter(|t| t.uav != serving)
            .filter_map(|t| self.received(user, t.position))
            .sum();
        Ok(signal / (self.noise_psd + interference))
    }

    pub fn link_budget(&self, user: Point, serving: usize, txs: &[Transmitter]) -> Result<LinkBudget, RadioError> {
        let sinr = self.sinr(user, serving, txs)?;
        let server = txs.iter().find(|t| t.uav == serving).ok_or(RadioError::UnknownUav(serving))?;
        let distance_m = self.distance_3d_m(user, server.position);
        let path_loss_db = path_loss_db(distance_m, self.carrier_hz, self.excess_db)?;
        Ok(LinkBudget { distance_m, path_loss_db, gain: channel_gain(path_loss_db, self.convention), sinr })
    }

    /// Smallest number of resource blocks meeting the rate requirement, or
    /// `None` if the SINR supports no positive rate.
    pub fn rbs_needed(&self, sinr: f64) -> Option<u32> {
        let per_rb = self.rb_hz * libm::log2(1.0 + sinr);
        if !(per_rb > 0.0) {
            return None;
        }
        let n = libm::ceil(self.user_rate_bps / per_rb);
        (n <= u32::MAX as f64).then_some(n as u32)
    }

    pub fn associate(&self, users: &[Point], txs: &[Transmitter], fleet_size: usize) -> AssociationMap {
        self.allocate(&self.link_table(users, txs), fleet_size)
    }

    /// Greedy association: users in descending order of their best SINR
    /// (ties by index) each take the highest-SINR covering UAV that still has
    /// enough resource blocks.
    pub fn allocate(&self, table: &LinkTable, fleet_size: usize) -> AssociationMap {
        let n_tx = table.transmitters.len();
        let mut map = AssociationMap::empty(table.users, fleet_size, self.rbs_per_uav);
        if n_tx == 0 {
            return map;
        }
        let mut sinrs = vec![0.0; table.users * n_tx];
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(table.users);
        for u in 0..table.users {
            let row = table.row(u);
            let mut b = f64::NEG_INFINITY;
            for (j, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    let interference: f64 =
                        row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, q)| q).sum();
                    let s = p / (self.noise_psd + interference);
                    sinrs[u * n_tx + j] = s;
                    b = b.max(s);
                }
            }
            if b > f64::NEG_INFINITY {
                best.push((u, b));
            }
        }
        best.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
        let mut candidates: Vec<usize> = Vec::with_capacity(n_tx);
        for (u, _) in best {
            candidates.clear();
            candidates.extend((0..n_tx).filter(|&j| table.row(u)[j] > 0.0));
            let s = &sinrs[u * n_tx..(u + 1) * n_tx];
            candidates.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
            for &j in &candidates {
                let uav = table.transmitters[j];
                if let Some(need) = self.rbs_needed(s[j]) {
                    if need <= map.remaining_rbs[uav] {
                        map.remaining_rbs[uav] -= need;
                        map.users[u] = UserLink { uav: Some(uav), rbs: need, sinr: s[j] };
                        break;
                    }
                }
            }
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::GainConvention;

    fn model() -> RadioModel {
        RadioModel::new(&PhysicalConstants::default(), &AreaSpec::default())
    }

    #[test]
    fn coverage_radius_values() {
        let r = coverage_radius(300.0, 60f64.to_radians());
        assert!((r - 173.205).abs() < 1e-3);
        assert!(coverage_radius(300.0, 1e-9) < 1e-6);
        assert!((coverage_radius(3.0, 60f64.to_radians()) - 1.732).abs() < 1e-3);
    }

    #[test]
    fn path_loss_values() {
        assert!((path_loss_db(300.0, 2e9, 1.0).unwrap() - 89.01).abs() < 0.01);
        assert!((path_loss_db(100.0, 2e9, 1.0).unwrap() - 79.46).abs() < 0.01);
        let d = path_loss_db(600.0, 2e9, 1.0).unwrap() - path_loss_db(300.0, 2e9, 1.0).unwrap();
        assert!((d - 6.0206).abs() < 1e-4);
        assert_eq!(path_loss_db(0.0, 2e9, 1.0), Err(RadioError::NonPositiveDistance(0.0)));
    }

    #[test]
    fn single_uav_overhead_sinr() {
        let m = model();
        let p = Point::new(5.0, 5.0);
        let txs = [Transmitter { uav: 0, position: p }];
        let s = m.sinr(p, 0, &txs).unwrap();
        // 124.5 dB psd ratio minus 44.505 dB amplitude attenuation
        assert!((to_db(s) - 79.995).abs() < 0.01, "{}", to_db(s));
    }

    #[test]
    fn power_convention_squares_attenuation() {
        let c = PhysicalConstants { gain_convention: GainConvention::Power, ..Default::default() };
        let m = RadioModel::new(&c, &AreaSpec::default());
        let p = Point::new(5.0, 5.0);
        let s = m.sinr(p, 0, &[Transmitter { uav: 0, position: p }]).unwrap();
        assert!((to_db(s) - (124.5 - 89.01)).abs() < 0.01);
    }

    #[test]
    fn symmetric_interferer_gives_zero_db() {
        let m = model();
        let user = Point::new(5.0, 5.0);
        let txs = [
            Transmitter { uav: 0, position: Point::new(4.5, 5.0) },
            Transmitter { uav: 1, position: Point::new(5.5, 5.0) },
        ];
        let s = m.sinr(user, 0, &txs).unwrap();
        assert!(to_db(s).abs() < 1e-6);
    }

    #[test]
    fn outside_disk_is_not_covered() {
        let m = model();
        let txs = [Transmitter { uav: 0, position: Point::new(0.0, 0.0) }];
        assert_eq!(m.sinr(Point::new(5.0, 5.0), 0, &txs), Err(RadioError::NotCovered(0)));
        let a = m.associate(&[Point::new(5.0, 5.0)], &txs, 1);
        assert!(!a.users[0].served());
    }

    #[test]
    fn rb_budget_caps_served_users() {
        let m = model();
        let users: Vec<Point> = (0..30).map(|i| Point::new(5.0 + 0.01 * i as f64, 5.0)).collect();
        let txs = [Transmitter { uav: 0, position: Point::new(5.0, 5.0) }];
        let a = m.associate(&users, &txs, 1);
        assert!(a.users.iter().all(|u| u.rbs <= 1));
        assert_eq!(a.served_count(), 25);
        assert_eq!(a.remaining_rbs[0], 0);
    }

    #[test]
    fn empty_fleet_serves_nobody() {
        let m = model();
        let a = m.associate(&[Point::new(1.0, 1.0), Point::new(2.0, 2.0)], &[], 3);
        assert_eq!(a.served_count(), 0);
        assert_eq!(us_score(&a, 2.0), 0.0);
    }

    #[test]
    fn us_score_values() {
        assert_eq!(us_score_of_count(100, 2.0), 10000.0);
        assert_eq!(us_score_of_count(80, 2.0), 6400.0);
        assert_eq!(us_score_of_count(0, 2.0), 0.0);
    }

    #[test]
    fn served_iff_rate_met_over_distance_grid() {
        // one UAV, one user: served exactly when W_rb*log2(1+SINR) >= R_u
        // holds for some RB count within the budget
        let m = model();
        let uav = Point::new(5.0, 5.0);
        for i in 0..=200 {
            let d_units = 1.8 * i as f64 / 200.0;
            let user = Point::new(5.0 + d_units, 5.0);
            let txs = [Transmitter { uav: 0, position: uav }];
            let a = m.associate(&[user], &txs, 1);
            let expected = if m.covers(user, uav) {
                let s = m.sinr(user, 0, &txs).unwrap();
                25.0 * 180e3 * libm::log2(1.0 + s) >= 250e3
            } else {
                false
            };
            assert_eq!(a.users[0].served(), expected, "d = {d_units}");
            if let Some(link) = a.users[0].uav.map(|_| a.users[0]) {
                assert!(link.rbs as f64 * 180e3 * libm::log2(1.0 + link.sinr) >= 250e3);
            }
        }
    }
}
