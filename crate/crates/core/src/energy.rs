//! Rotor power model, per-slot energy and the battery ledger that triggers
//! quits. Energies are in unit·s, where one power unit is the hover power.

use alloc::vec::Vec;

use thiserror::Error;

use crate::scenario::PhysicalConstants;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("move of {distance_m} m exceeds the {max_m} m reachable in one slot")]
    InfeasibleMove { distance_m: f64, max_m: f64 },
    #[error("UAV {0} has already quit")]
    AlreadyQuit(usize),
    #[error("no UAV with index {0}")]
    UnknownUav(usize),
}

/// Induced hover velocity `sqrt(W / (2 rho A))`.
pub fn hover_induced_velocity(c: &PhysicalConstants) -> f64 {
    libm::sqrt(c.weight_n / (2.0 * c.air_density * c.rotor_area_m2))
}

/// Level-flight power at speed `v` (m/s), in the raw units of the rotor
/// model; at `v = 0` it equals the hover induced velocity.
pub fn level_power(v: f64, c: &PhysicalConstants) -> f64 {
    let vh = hover_induced_velocity(c);
    let k = c.weight_n / (core::f64::consts::SQRT_2 * c.air_density * c.rotor_area_m2);
    let v2 = v * v;
    k / libm::sqrt(v2 + libm::sqrt(v2 * v2 + 4.0 * vh * vh * vh * vh))
}

/// Energy (unit·s) of one slot: fly `distance_m` at level speed, hover for
/// the rest of the slot, plus transmission and operational terms.
pub fn slot_energy(distance_m: f64, c: &PhysicalConstants) -> Result<f64, EnergyError> {
    let v = c.level_speed_mps();
    let max_m = v * c.move_time_s;
    if distance_m > max_m + 1e-9 || distance_m < 0.0 {
        return Err(EnergyError::InfeasibleMove { distance_m, max_m });
    }
    let t_fly = (distance_m / v).min(c.slot_s);
    let flight = level_power(v, c) * t_fly + level_power(0.0, c) * (c.slot_s - t_fly);
    Ok(flight / c.power_unit_w + c.tx_energy + c.op_energy_rate * c.slot_s)
}

/// Battery residuals of a fleet; a UAV whose level drops to the threshold
/// is marked quit and never drained again.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryLedger {
    pub levels: Vec<f64>,
    pub initial: Vec<f64>,
    pub threshold: f64,
    pub quit: Vec<bool>,
}

impl BatteryLedger {
    pub fn new(initial: Vec<f64>, threshold: f64) -> Self {
        let quit = initial.iter().map(|e| *e <= threshold).collect();
        Self { levels: initial.clone(), initial, threshold, quit }
    }

    pub fn level(&self, uav: usize) -> f64 {
        self.levels[uav]
    }

    pub fn has_quit(&self, uav: usize) -> bool {
        self.quit[uav]
    }

    /// Drains `energy` from `uav`; returns whether this drain made it quit.
    pub fn apply_drain(&mut self, uav: usize, energy: f64) -> Result<bool, EnergyError> {
        let level = self.levels.get_mut(uav).ok_or(EnergyError::UnknownUav(uav))?;
        if self.quit[uav] {
            return Err(EnergyError::AlreadyQuit(uav));
        }
        *level -= energy;
        if *level <= self.threshold {
            self.quit[uav] = true;
        }
        Ok(self.quit[uav])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn hover_power_is_one_power_unit() {
        assert!((level_power(0.0, &c()) - 9.428).abs() < 1e-3);
        assert!((hover_induced_velocity(&c()) - 9.428).abs() < 1e-3);
    }

    #[test]
    fn level_power_at_cruise_speed() {
        let p = level_power(40.0 / 3.6, &c());
        assert!((p - 6.819).abs() < 2e-3, "{p}");
        assert!((p / 9.428 - 0.723).abs() < 1e-3);
    }

    #[test]
    fn slot_energy_values() {
        assert!((slot_energy(0.0, &c()).unwrap() - 10.0).abs() < 1e-3);
        assert!((slot_energy(100.0, &c()).unwrap() - 7.51).abs() < 0.01);
        assert!(matches!(slot_energy(101.0, &c()), Err(EnergyError::InfeasibleMove { .. })));
    }

    #[test]
    fn operational_energy_is_proportional_to_slot() {
        let mut k = c();
        k.op_energy_rate = 0.2;
        k.tx_energy = 0.5;
        let base = slot_energy(50.0, &c()).unwrap();
        assert!((slot_energy(50.0, &k).unwrap() - base - 2.5).abs() < 1e-12);
    }

    #[test]
    fn drain_and_quit() {
        let mut ledger = BatteryLedger::new(alloc::vec![160.0, 155.0, 160.0], 150.0);
        assert!(!ledger.apply_drain(0, 7.51).unwrap());
        assert!((ledger.level(0) - 152.49).abs() < 1e-12);
        assert!(ledger.apply_drain(1, 10.0).unwrap());
        assert_eq!(ledger.level(1), 145.0);
        assert!(ledger.apply_drain(2, 10.0).unwrap(), "exactly at threshold quits");
        assert_eq!(ledger.apply_drain(1, 1.0), Err(EnergyError::AlreadyQuit(1)));
        assert_eq!(ledger.level(1), 145.0);
        assert_eq!(ledger.apply_drain(7, 1.0), Err(EnergyError::UnknownUav(7)));
    }

    proptest! {
        #[test]
        fn flight_is_cheaper_than_hover(v in 0.01f64..50.0) {
            prop_assert!(level_power(v, &c()) < level_power(0.0, &c()));
        }

        #[test]
        fn slot_energy_strictly_decreasing(a in 0.0f64..100.0, b in 0.0f64..100.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(slot_energy(lo, &c()).unwrap() > slot_energy(hi, &c()).unwrap());
        }

        #[test]
        fn ledger_conserves_energy(drains in proptest::collection::vec(0.0f64..10.0, 1..40)) {
            let mut ledger = BatteryLedger::new(alloc::vec![1000.0], 150.0);
            let mut applied = 0.0;
            for d in drains {
                if ledger.has_quit(0) { break; }
                ledger.apply_drain(0, d).unwrap();
                applied += d;
            }
            prop_assert!((1000.0 - ledger.level(0) - applied).abs() < 1e-9);
        }
    }
}
