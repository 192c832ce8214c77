//! Seeded synthetic sensor data with a diurnal cycle.
//!
//! Per step, at local solar time τ (hours):
//!
//! * solar profile `s(τ) = sin(2π(τ − 6)/24)` between 06:00 and 18:00, exactly 0 at night
//! * irradiance `= max(0, s)·peak·(1 − cloud_noise·u)`, `u ~ U[0, 1)`
//! * ambient `= base + swing·sin(2π(τ − 9)/24) + N(0, ambient_noise_c·noise_scale)`; the
//!   shifted sine peaks mid-afternoon, lagging the sun
//! * humidity `= clamp(85 − 45·sun + N(0, humidity_noise_pct·noise_scale), 20, 100)` where
//!   `sun` is the irradiance as a fraction of the clear-sky peak
//! * wind: AR(1) around `wind_mean_ms`, innovations scaled so the stationary
//!   standard deviation is `wind_std_ms·noise_scale`, reported clamped at 0
//! * current: evening-peaking load profile plus noise, clamped at 0
//!
//! Cable temperature and DLR then come from the thermal model. The draw order
//! within a step is fixed (cloud, ambient, humidity, wind, load), so a given
//! `(config, conductor)` pair always yields the same series bit for bit.

use std::f64::consts::TAU;

use chrono::{Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::{Measurement, TimeSeries};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::thermal::{solve_ampacity, solve_conductor_temp, ConductorSpec, WeatherPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub days: u32,
    pub seed: u64,
    pub step_minutes: u32,
    pub base_ambient_c: f64,
    pub ambient_swing_c: f64,
    /// Standard deviation of the per-step ambient fluctuation, °C.
    pub ambient_noise_c: f64,
    /// Standard deviation of the per-step humidity fluctuation, %.
    pub humidity_noise_pct: f64,
    pub irradiance_peak_wm2: f64,
    pub cloud_noise: f64,
    pub wind_mean_ms: f64,
    pub wind_ar_coeff: f64,
    pub wind_std_ms: f64,
    pub load_base_a: f64,
    pub load_swing_a: f64,
    pub noise_scale: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            days: 30,
            seed: 42,
            step_minutes: 15,
            base_ambient_c: 27.0,
            ambient_swing_c: 5.0,
            ambient_noise_c: 1.0,
            humidity_noise_pct: 1.0,
            irradiance_peak_wm2: 950.0,
            cloud_noise: 0.2,
            wind_mean_ms: 2.5,
            wind_ar_coeff: 0.97,
            wind_std_ms: 0.6,
            load_base_a: 60.0,
            load_swing_a: 25.0,
            noise_scale: 1.0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("generator config: {msg}")));
        if self.days < 1 {
            return bad("days must be >= 1".into());
        }
        if self.step_minutes == 0 || 1440 % self.step_minutes != 0 {
            return bad(format!("step of {} min does not divide a day", self.step_minutes));
        }
        if !(0.0..=1.0).contains(&self.cloud_noise) {
            return bad(format!("cloud_noise {} outside [0, 1]", self.cloud_noise));
        }
        if !(0.0..=1.0).contains(&self.noise_scale) {
            return bad(format!("noise_scale {} outside [0, 1]", self.noise_scale));
        }
        if !(0.0..1.0).contains(&self.wind_ar_coeff) {
            return bad(format!("wind_ar_coeff {} outside [0, 1)", self.wind_ar_coeff));
        }
        if self.irradiance_peak_wm2 < 0.0
            || self.wind_mean_ms < 0.0
            || self.wind_std_ms < 0.0
            || self.ambient_noise_c < 0.0
            || self.humidity_noise_pct < 0.0
        {
            return bad("irradiance peak, wind, and noise parameters must be >= 0".into());
        }
        let all = [
            self.base_ambient_c,
            self.ambient_swing_c,
            self.ambient_noise_c,
            self.humidity_noise_pct,
            self.irradiance_peak_wm2,
            self.wind_mean_ms,
            self.wind_std_ms,
            self.load_base_a,
            self.load_swing_a,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter".into());
        }
        Ok(())
    }

    pub fn steps_per_day(&self) -> usize {
        (1440 / self.step_minutes) as usize
    }
}

/// Sun elevation proxy at `hour` of day: positive between 06:00 and 18:00,
/// exactly 0 otherwise.
pub fn solar_profile(hour: f64) -> f64 {
    let h = hour.rem_euclid(24.0);
    if h <= 6.0 || h >= 18.0 {
        return 0.0;
    }
    (TAU * (h - 6.0) / 24.0).sin()
}

/// Generates `days · 1440 / step_minutes` records starting at
/// 2024-01-01T00:00:00Z.
pub fn generate(cfg: &GenConfig, spec: &ConductorSpec) -> Result<TimeSeries> {
    cfg.validate()?;
    spec.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let epoch = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let steps = cfg.days as usize * cfg.steps_per_day();
    let step_h = f64::from(cfg.step_minutes) / 60.0;
    let ns = cfg.noise_scale;
    let innovation = cfg.wind_std_ms * ns * (1.0 - cfg.wind_ar_coeff * cfg.wind_ar_coeff).sqrt();

    let mut wind_state = cfg.wind_mean_ms;
    let mut records = Vec::with_capacity(steps);
    for idx in 0..steps {
        let hour = (idx % cfg.steps_per_day()) as f64 * step_h;
        let profile = solar_profile(hour);
        let sun = profile.max(0.0) * (1.0 - cfg.cloud_noise * rng.next_f64());
        let irradiance = sun * cfg.irradiance_peak_wm2;

        let ambient = cfg.base_ambient_c
            + cfg.ambient_swing_c * (TAU * (hour - 9.0) / 24.0).sin()
            + cfg.ambient_noise_c * ns * rng.normal();
        let humidity = (85.0 - 45.0 * sun + cfg.humidity_noise_pct * ns * rng.normal()).clamp(20.0, 100.0);

        wind_state = cfg.wind_mean_ms
            + cfg.wind_ar_coeff * (wind_state - cfg.wind_mean_ms)
            + innovation * rng.normal();
        let wind = wind_state.max(0.0);

        // Evening peak around 19:00.
        let load = cfg.load_base_a
            + cfg.load_swing_a * (TAU * (hour - 13.0) / 24.0).sin()
            + 2.0 * ns * rng.normal();
        let current = load.max(0.0);

        let weather = WeatherPoint {
            ambient_temp_c: ambient,
            wind_speed_ms: wind,
            humidity_pct: humidity,
            irradiance_wm2: irradiance,
        };
        let wrap = |e: Error| Error::Timestep {
            index: idx,
            source: Box::new(e),
        };
        let cable_temp = solve_conductor_temp(spec, &weather, current).map_err(wrap)?;
        let dlr = solve_ampacity(spec, &weather).map_err(wrap)?;

        records.push(Measurement {
            timestamp: epoch + Duration::minutes(i64::from(cfg.step_minutes) * idx as i64),
            ambient_temp_c: ambient,
            cable_temp_c: cable_temp,
            wind_speed_ms: wind,
            humidity_pct: humidity,
            irradiance_wm2: irradiance,
            current_a: current,
            dlr_a: dlr,
        });
    }
    TimeSeries::new(records)
}
