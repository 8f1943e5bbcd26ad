//! Renewable supply: instantaneous PV power from either an analytic
//! clear-sky intensity curve or an ingested normalized-intensity timeseries.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::scenario::TimeSeries;
use crate::{Error, Result};

/// Photovoltaic plant parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvParams {
    /// Nameplate peak power in watts.
    pub peak_power_w: f64,
    /// Conversion efficiency in (0, 1].
    pub efficiency: f64,
}

impl PvParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.peak_power_w.is_finite() && self.peak_power_w > 0.0) {
            return Err(Error::validation("pv.peak_power_w", "must be finite and > 0"));
        }
        if !(self.efficiency.is_finite() && self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::validation("pv.efficiency", "must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Where sunlight intensity comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeatherSource {
    /// Analytic half-sine intensity over a fixed daylight window, repeating
    /// every day.
    ClearSky { day_length_s: u32, sunrise_second: u32 },
    /// Measured normalized intensity in [0, 1]; held between samples, zero
    /// outside the recorded span.
    Measured { series: TimeSeries },
}

impl WeatherSource {
    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            WeatherSource::ClearSky { day_length_s, sunrise_second } => {
                if *day_length_s == 0 {
                    return Err(Error::validation("weather.day_length_s", "must be > 0"));
                }
                if *sunrise_second >= 86_400 {
                    return Err(Error::validation("weather.sunrise_second", "must be < 86400"));
                }
                Ok(())
            }
            WeatherSource::Measured { series } => {
                for (i, &(_, v)) in series.samples.iter().enumerate() {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::validation(
                            format!("weather.samples[{i}]"),
                            format!("intensity {v} outside [0, 1]"),
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Clear-sky sunlight intensity `sin(π·t/t_max)` for `t` seconds after
/// sunrise; zero outside the daylight window.
pub fn clearsky_intensity(since_sunrise_s: f64, day_length_s: f64) -> f64 {
    debug_assert!(day_length_s > 0.0);
    if since_sunrise_s < 0.0 || since_sunrise_s > day_length_s {
        return 0.0;
    }
    (PI * since_sunrise_s / day_length_s).sin().max(0.0)
}

/// PV output for a normalized intensity: `intensity × peak × efficiency`.
pub fn pv_power(intensity: f64, pv: &PvParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&intensity));
    intensity * pv.peak_power_w * pv.efficiency
}

/// Instantaneous renewable power at absolute second `t`.
///
/// `second_of_day` must equal `t % 86400`; it is passed in because the engine
/// already has it.
pub fn supply_at(source: &WeatherSource, pv: &PvParams, t: u64, second_of_day: u32) -> f64 {
    let intensity = match source {
        WeatherSource::ClearSky { day_length_s, sunrise_second } => clearsky_intensity(
            second_of_day as f64 - *sunrise_second as f64,
            *day_length_s as f64,
        ),
        WeatherSource::Measured { series } => series.value_at(t).unwrap_or(0.0),
    };
    pv_power(intensity, pv)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PV: PvParams = PvParams { peak_power_w: 3300.0, efficiency: 1.0 };

    #[test]
    fn clearsky_midday_peak_and_edges() {
        assert_eq!(clearsky_intensity(14_400.0, 28_800.0), 1.0);
        assert!(clearsky_intensity(0.0, 28_800.0).abs() < 1e-12);
        assert!(clearsky_intensity(28_800.0, 28_800.0).abs() < 1e-12);
        // Quarter day: sin(π/4) = √2/2.
        let quarter = clearsky_intensity(7_200.0, 28_800.0);
        assert!((quarter - 0.5f64.sqrt()).abs() < 1e-12, "{quarter}");
        assert_eq!(clearsky_intensity(-1.0, 28_800.0), 0.0);
        assert_eq!(clearsky_intensity(28_801.0, 28_800.0), 0.0);
    }

    #[test]
    fn pv_power_scaling() {
        assert_eq!(pv_power(1.0, &PV), 3300.0);
        assert_eq!(pv_power(0.0, &PV), 0.0);
        let derated = PvParams { peak_power_w: 3300.0, efficiency: 0.9 };
        assert!((pv_power(0.5, &derated) - 1485.0).abs() < 1e-12);
    }

    #[test]
    fn clearsky_supply_at_noon() {
        let weather = WeatherSource::ClearSky { day_length_s: 28_800, sunrise_second: 28_800 };
        // Solar noon for this window is 12:00.
        let p = supply_at(&weather, &PV, 43_200, 43_200);
        assert!((p - 3300.0).abs() < 1e-9);
    }

    #[test]
    fn clearsky_symmetric_about_noon() {
        let weather = WeatherSource::ClearSky { day_length_s: 28_800, sunrise_second: 28_800 };
        let noon = 43_200u32;
        for delta in [1u32, 60, 600, 3600, 14_399] {
            let before = supply_at(&weather, &PV, (noon - delta) as u64, noon - delta);
            let after = supply_at(&weather, &PV, (noon + delta) as u64, noon + delta);
            assert!((before - after).abs() < 1e-9, "delta {delta}: {before} vs {after}");
        }
    }

    #[test]
    fn measured_hold_and_gaps() {
        let series = TimeSeries::new(vec![(900, 0.5), (1800, 0.25)], 900).unwrap();
        let weather = WeatherSource::Measured { series };
        // Before the first sample: no data, zero output.
        assert_eq!(supply_at(&weather, &PV, 0, 0), 0.0);
        // Between samples: previous sample held.
        assert_eq!(supply_at(&weather, &PV, 1000, 1000), 0.5 * 3300.0);
        // Past the span: zero again.
        assert_eq!(supply_at(&weather, &PV, 2700, 2700), 0.0);
    }

    #[test]
    fn output_bounded_by_peak() {
        let weather = WeatherSource::ClearSky { day_length_s: 28_800, sunrise_second: 28_800 };
        let cap = PV.peak_power_w * PV.efficiency;
        for sod in (0..86_400u32).step_by(97) {
            let p = supply_at(&weather, &PV, sod as u64, sod);
            assert!((0.0..=cap).contains(&p));
        }
    }
}
