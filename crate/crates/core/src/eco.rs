//! Lifecycle CO2 of the structure, the solar cells and the batteries.

use serde::{Deserialize, Serialize};

use crate::energy::MdaState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcoConfig {
    /// Solar cells, kgCO2 per W of installed power.
    pub pv_co2_kg_per_w: f64,
    /// Batteries, kgCO2 per Wh of capacity.
    pub battery_co2_kg_per_wh: f64,
}

impl EcoConfig {
    pub fn reference() -> Self {
        Self {
            pv_co2_kg_per_w: 1.0,
            battery_co2_kg_per_wh: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pv_co2_kg_per_w >= 0.0 && self.battery_co2_kg_per_wh >= 0.0) {
            return Err(Error::InvalidInput("CO2 factors must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Co2Breakdown<T> {
    pub structure: T,
    pub pv: T,
    pub battery: T,
    pub total: T,
}

impl<T: Scalar> Co2Breakdown<T> {
    pub fn new(structure: T, pv: T, battery: T) -> Self {
        Self {
            structure,
            pv,
            battery,
            total: structure + pv + battery,
        }
    }

    pub fn to_f64(&self) -> Co2Breakdown<f64> {
        Co2Breakdown {
            structure: self.structure.value(),
            pv: self.pv.value(),
            battery: self.battery.value(),
            total: self.total.value(),
        }
    }
}

/// Spar and skin mass times each material's CO2 per kilogram.
pub fn co2_structure<T: Scalar>(m_spar: T, m_skin: T, spar_co2_per_kg: T, skin_co2_per_kg: T) -> T {
    m_spar * spar_co2_per_kg + m_skin * skin_co2_per_kg
}

pub fn co2_pv<T: Scalar>(p_needed: T, cfg: &EcoConfig) -> T {
    p_needed * T::lit(cfg.pv_co2_kg_per_w)
}

pub fn co2_battery<T: Scalar>(p_needed: T, night_duration_h: f64, cfg: &EcoConfig) -> T {
    p_needed * T::lit(night_duration_h * cfg.battery_co2_kg_per_wh)
}

pub fn co2_total<T: Scalar>(state: &MdaState<T>, night_duration_h: f64, cfg: &EcoConfig) -> Co2Breakdown<T> {
    let m = &state.structural_masses;
    Co2Breakdown::new(
        co2_structure(
            m.spar,
            m.skin,
            state.spar_material.co2_per_kg,
            state.skin_material.co2_per_kg,
        ),
        co2_pv(state.power.needed, cfg),
        co2_battery(state.power.needed, night_duration_h, cfg),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_examples() {
        assert_eq!(co2_structure(0.0, 0.0, 44.9, 6.18), 0.0);
        let v: f64 = co2_structure(10.0, 20.0, 44.9, 6.18);
        assert!((v - 572.6).abs() < 1e-9);
        let swapped: f64 = co2_structure(15.0, 15.0, 6.18, 44.9);
        assert!((swapped - co2_structure(15.0, 15.0, 44.9, 6.18)).abs() < 1e-12);
    }

    #[test]
    fn pv_and_battery_examples() {
        let cfg = EcoConfig {
            pv_co2_kg_per_w: 2.0,
            battery_co2_kg_per_wh: 0.1,
        };
        assert_eq!(co2_pv(0.0, &cfg), 0.0);
        assert!((co2_pv::<f64>(2700.0, &cfg) - 5400.0).abs() < 1e-9);
        assert!((co2_pv::<f64>(5400.0, &cfg) - 2.0 * co2_pv::<f64>(2700.0, &cfg)).abs() < 1e-9);
        assert_eq!(co2_battery::<f64>(0.0, 13.0, &cfg), 0.0);
        assert!((co2_battery::<f64>(1000.0, 13.0, &cfg) - 1300.0).abs() < 1e-9);
        assert!((co2_battery::<f64>(1000.0, 26.0, &cfg) - 2600.0).abs() < 1e-9);
    }

    #[test]
    fn breakdown_is_additive() {
        let b = Co2Breakdown::<f64>::new(572.6, 5400.0, 1300.0);
        assert!((b.total - 7272.6).abs() < 1e-9);
        assert_eq!(Co2Breakdown::new(0.0, 0.0, 0.0).total, 0.0);
    }
}
