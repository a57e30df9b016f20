//! Training emissions from hardware, wall-clock time and grid intensity.
//!
//! `co2 = gpu_count × hours × device_power × pue × intensity`, in
//! kW × h × kg/kWh = kg.

use num_traits::Float;

use crate::error::{Error, Result};

/// kg CO2-eq per kWh; twelve-month French grid average.
pub const DEFAULT_INTENSITY_KG_PER_KWH: f64 = 0.034;

/// Per-device draw in kW. Values are backed out of published
/// GPU-hour/emission pairs at 0.034 kg/kWh.
const DEVICE_POWER_KW: &[(&str, f64)] = &[("V100", 0.300), ("A100", 0.250)];

pub fn known_devices() -> impl Iterator<Item = &'static str> {
    DEVICE_POWER_KW.iter().map(|(name, _)| *name)
}

/// Draw of a known device in kW; unknown devices need an explicit power.
pub fn default_power<T: Float>(device: &str) -> Result<T> {
    DEVICE_POWER_KW
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(device.trim()))
        .map(|(_, kw)| T::from(*kw).expect("power constant fits any float"))
        .ok_or_else(|| {
            Error::config(format!(
                "no default power for device '{device}'; pass the power draw explicitly (known: {})",
                known_devices().collect::<Vec<_>>().join(", ")
            ))
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRun<T> {
    pub gpu_count: u32,
    pub hours: T,
    /// kW per device.
    pub gpu_power: T,
    /// kg CO2-eq per kWh.
    pub intensity: T,
    /// Datacenter overhead multiplier.
    pub pue: T,
}

impl<T: Float> TrainingRun<T> {
    /// Default intensity, PUE of 1.
    pub fn new(gpu_count: u32, hours: T, gpu_power: T) -> Self {
        TrainingRun {
            gpu_count,
            hours,
            gpu_power,
            intensity: T::from(DEFAULT_INTENSITY_KG_PER_KWH).expect("constant fits any float"),
            pue: T::one(),
        }
    }

    pub fn with_intensity(mut self, intensity: T) -> Self {
        self.intensity = intensity;
        self
    }

    pub fn with_pue(mut self, pue: T) -> Self {
        self.pue = pue;
        self
    }

    pub fn gpu_hours(&self) -> T {
        T::from(self.gpu_count).expect("u32 fits any float") * self.hours
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionEstimate<T> {
    pub gpu_hours: T,
    pub energy_kwh: T,
    pub co2_kg: T,
}

pub fn estimate_emissions<T: Float>(run: &TrainingRun<T>) -> Result<EmissionEstimate<T>> {
    if run.gpu_count == 0 {
        return Err(Error::invalid("GPU count must be positive"));
    }
    for (name, v) in [("hours", run.hours), ("power", run.gpu_power), ("intensity", run.intensity), ("PUE", run.pue)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::invalid(format!(
                "{name} must be a positive finite number, got {}",
                v.to_f64().unwrap_or(f64::NAN)
            )));
        }
    }
    let gpu_hours = run.gpu_hours();
    let energy_kwh = gpu_hours * run.gpu_power * run.pue;
    Ok(EmissionEstimate { gpu_hours, energy_kwh, co2_kg: energy_kwh * run.intensity })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_lookup() {
        assert_eq!(default_power::<f64>("V100").unwrap(), 0.300);
        assert_eq!(default_power::<f64>("a100").unwrap(), 0.250);
        assert!(matches!(default_power::<f64>("H100"), Err(Error::Config(_))));
    }

    #[test]
    fn rows() {
        let e = estimate_emissions(&TrainingRun::new(128, 20.0, 0.300)).unwrap();
        assert_eq!(e.gpu_hours, 2560.0);
        assert!((e.co2_kg - 26.112).abs() < 1e-9);
        let e = estimate_emissions(&TrainingRun::new(48, 20.0, 0.250)).unwrap();
        assert!((e.co2_kg - 8.16).abs() < 1e-9);
        let e = estimate_emissions(&TrainingRun::new(2, 39.0, 0.300)).unwrap();
        assert!((e.co2_kg - 0.7956).abs() < 1e-9);
    }

    #[test]
    fn single_precision_works() {
        let e = estimate_emissions(&TrainingRun::<f32>::new(48, 20.0, 0.25)).unwrap();
        assert!((e.co2_kg - 8.16).abs() < 1e-4);
    }

    #[test]
    fn pue_scales_energy() {
        let base = estimate_emissions(&TrainingRun::new(2, 10.0, 0.3)).unwrap();
        let pue = estimate_emissions(&TrainingRun::new(2, 10.0, 0.3).with_pue(1.5)).unwrap();
        assert!((pue.energy_kwh - 1.5 * base.energy_kwh).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(estimate_emissions(&TrainingRun::new(0, 1.0, 0.3)).is_err());
        assert!(estimate_emissions(&TrainingRun::new(1, -1.0, 0.3)).is_err());
        assert!(estimate_emissions(&TrainingRun::new(1, 1.0, 0.0)).is_err());
        assert!(estimate_emissions(&TrainingRun::new(1, 1.0, 0.3).with_intensity(f64::NAN)).is_err());
    }
}
