//! Steady-state conductor heat balance.
//!
//! Per metre of conductor, Joule heating plus solar gain equals convective plus
//! radiative cooling:
//!
//! ```text
//! I²·R(T_c) + q_sun = q_conv + q_rad
//! q_conv = (λ_nat + λ_forced·√V)·(T_c − T_a)
//! q_rad  = π·D·ε·σ·((T_c + 273.15)⁴ − (T_a + 273.15)⁴)
//! q_sun  = α_s·D·G
//! R(T)   = R_ref·(1 + α·(T − T_ref)),  floored at 0.1·R_ref
//! ```
//!
//! Ampacity is the current that puts the conductor exactly at its thermal
//! limit; the inverse problem (conductor temperature for a given current) is
//! solved by bisection. Humidity is carried on [`WeatherPoint`] for the
//! forecasting features but never enters the balance.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stefan-Boltzmann constant, W/(m²·K⁴).
pub const STEFAN_BOLTZMANN: f64 = 5.670374419e-8;
pub const ABSOLUTE_ZERO_C: f64 = -273.15;

/// Bisection stops once |residual| drops below this (W/m).
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const MAX_BISECTION_ITERS: usize = 200;

/// Search bracket for [`solve_conductor_temp`], relative to ambient.
const BRACKET_BELOW_AMBIENT_C: f64 = 5.0;
const BRACKET_ABOVE_AMBIENT_C: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductorSpec {
    pub diameter_m: f64,
    /// AC resistance per metre at `ref_temp_c`.
    pub resistance_ref_ohm_per_m: f64,
    pub ref_temp_c: f64,
    pub alpha_per_c: f64,
    pub emissivity: f64,
    /// Solar absorptivity.
    pub absorptivity: f64,
    pub max_conductor_temp_c: f64,
    /// Natural-convection coefficient, W/(m·K).
    pub lambda_nat: f64,
    /// Forced-convection coefficient, W/(m·K·(m/s)^0.5).
    pub lambda_forced: f64,
}

impl Default for ConductorSpec {
    /// A ~35 mm² ACSR distribution conductor.
    fn default() -> Self {
        Self {
            diameter_m: 0.0075,
            resistance_ref_ohm_per_m: 8.5e-4,
            ref_temp_c: 20.0,
            alpha_per_c: 0.00403,
            emissivity: 0.8,
            absorptivity: 0.8,
            max_conductor_temp_c: 75.0,
            lambda_nat: 0.25,
            lambda_forced: 0.35,
        }
    }
}

const SPEC_KEYS: [&str; 9] = [
    "diameter_m",
    "resistance_ref_ohm_per_m",
    "ref_temp_c",
    "alpha_per_c",
    "emissivity",
    "absorptivity",
    "max_conductor_temp_c",
    "lambda_nat",
    "lambda_forced",
];

impl ConductorSpec {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.diameter_m,
            self.resistance_ref_ohm_per_m,
            self.ref_temp_c,
            self.alpha_per_c,
            self.emissivity,
            self.absorptivity,
            self.max_conductor_temp_c,
            self.lambda_nat,
            self.lambda_forced,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "conductor spec has a non-finite field: {self:?}"
            )));
        }
        let bad = |msg: &str| Err(Error::InvalidInput(format!("conductor spec: {msg}")));
        if self.diameter_m <= 0.0 {
            return bad("diameter_m must be > 0");
        }
        if self.resistance_ref_ohm_per_m <= 0.0 {
            return bad("resistance_ref_ohm_per_m must be > 0");
        }
        if !(0.0..=1.0).contains(&self.emissivity) {
            return bad("emissivity must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.absorptivity) {
            return bad("absorptivity must lie in [0, 1]");
        }
        if self.max_conductor_temp_c <= ABSOLUTE_ZERO_C {
            return bad("max_conductor_temp_c must be above absolute zero");
        }
        if self.lambda_nat <= 0.0 || self.lambda_forced < 0.0 {
            return bad("lambda_nat must be > 0 and lambda_forced >= 0");
        }
        Ok(())
    }

    /// Parses a flat `key=value` document. Blank lines and `#` comments are
    /// ignored; keys that are absent keep their defaults.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line_no = idx as u64 + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            let key = key.trim();
            if !SPEC_KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown conductor key `{key}`"),
                });
            }
            let v: f64 = value.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("`{}` is not a number", value.trim()),
            })?;
            if values.insert(key.to_string(), v).is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        let mut spec = Self::default();
        for (key, v) in values {
            let slot = match key.as_str() {
                "diameter_m" => &mut spec.diameter_m,
                "resistance_ref_ohm_per_m" => &mut spec.resistance_ref_ohm_per_m,
                "ref_temp_c" => &mut spec.ref_temp_c,
                "alpha_per_c" => &mut spec.alpha_per_c,
                "emissivity" => &mut spec.emissivity,
                "absorptivity" => &mut spec.absorptivity,
                "max_conductor_temp_c" => &mut spec.max_conductor_temp_c,
                "lambda_nat" => &mut spec.lambda_nat,
                "lambda_forced" => &mut spec.lambda_forced,
                _ => unreachable!(),
            };
            *slot = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_kv(&text)
    }

    pub fn to_kv(&self) -> String {
        format!(
            "diameter_m={}\nresistance_ref_ohm_per_m={}\nref_temp_c={}\nalpha_per_c={}\n\
             emissivity={}\nabsorptivity={}\nmax_conductor_temp_c={}\nlambda_nat={}\nlambda_forced={}\n",
            self.diameter_m,
            self.resistance_ref_ohm_per_m,
            self.ref_temp_c,
            self.alpha_per_c,
            self.emissivity,
            self.absorptivity,
            self.max_conductor_temp_c,
            self.lambda_nat,
            self.lambda_forced,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherPoint {
    pub ambient_temp_c: f64,
    pub wind_speed_ms: f64,
    pub humidity_pct: f64,
    pub irradiance_wm2: f64,
}

impl WeatherPoint {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.ambient_temp_c,
            self.wind_speed_ms,
            self.humidity_pct,
            self.irradiance_wm2,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput(format!("non-finite weather: {self:?}")));
        }
        if self.ambient_temp_c <= ABSOLUTE_ZERO_C {
            return Err(Error::InvalidInput(format!(
                "ambient temperature {} °C is below absolute zero",
                self.ambient_temp_c
            )));
        }
        if self.wind_speed_ms < 0.0 {
            return Err(Error::InvalidInput(format!(
                "wind speed must be >= 0, got {}",
                self.wind_speed_ms
            )));
        }
        if self.irradiance_wm2 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "irradiance must be >= 0, got {}",
                self.irradiance_wm2
            )));
        }
        if !(0.0..=100.0).contains(&self.humidity_pct) {
            return Err(Error::InvalidInput(format!(
                "humidity must lie in [0, 100], got {}",
                self.humidity_pct
            )));
        }
        Ok(())
    }
}

/// Per-metre heat flows at a given conductor temperature, W/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatLosses {
    pub q_conv: f64,
    pub q_rad: f64,
    pub q_sun: f64,
}

impl HeatLosses {
    /// Cooling minus solar heating.
    pub fn net_cooling(&self) -> f64 {
        self.q_conv + self.q_rad - self.q_sun
    }
}

/// AC resistance per metre at `t_c`, floored at 10% of the reference value.
pub fn resistance_at(spec: &ConductorSpec, t_c: f64) -> Result<f64> {
    if !(t_c > ABSOLUTE_ZERO_C) {
        return Err(Error::InvalidInput(format!(
            "conductor temperature {t_c} °C is not above absolute zero"
        )));
    }
    Ok(resistance_unchecked(spec, t_c))
}

fn resistance_unchecked(spec: &ConductorSpec, t_c: f64) -> f64 {
    let r = spec.resistance_ref_ohm_per_m * (1.0 + spec.alpha_per_c * (t_c - spec.ref_temp_c));
    r.max(0.1 * spec.resistance_ref_ohm_per_m)
}

pub fn heat_losses(spec: &ConductorSpec, w: &WeatherPoint, t_cond_c: f64) -> HeatLosses {
    let dt = t_cond_c - w.ambient_temp_c;
    let q_conv = (spec.lambda_nat + spec.lambda_forced * w.wind_speed_ms.sqrt()) * dt;
    let tc_k = t_cond_c - ABSOLUTE_ZERO_C;
    let ta_k = w.ambient_temp_c - ABSOLUTE_ZERO_C;
    let q_rad = std::f64::consts::PI
        * spec.diameter_m
        * spec.emissivity
        * STEFAN_BOLTZMANN
        * (tc_k.powi(4) - ta_k.powi(4));
    let q_sun = spec.absorptivity * spec.diameter_m * w.irradiance_wm2;
    HeatLosses {
        q_conv,
        q_rad,
        q_sun,
    }
}

/// Heat-balance residual `I²R(T) + q_sun − q_conv − q_rad`, W/m.
pub fn balance_residual(spec: &ConductorSpec, w: &WeatherPoint, t_cond_c: f64, current_a: f64) -> f64 {
    let losses = heat_losses(spec, w, t_cond_c);
    current_a * current_a * resistance_unchecked(spec, t_cond_c) + losses.q_sun
        - losses.q_conv
        - losses.q_rad
}

/// Steady-state ampacity: the current that holds the conductor at
/// `max_conductor_temp_c`. Returns 0 when solar gain alone exceeds cooling.
pub fn solve_ampacity(spec: &ConductorSpec, w: &WeatherPoint) -> Result<f64> {
    spec.validate()?;
    w.validate()?;
    let t_max = spec.max_conductor_temp_c;
    let net = heat_losses(spec, w, t_max).net_cooling();
    if net <= 0.0 {
        return Ok(0.0);
    }
    Ok((net / resistance_unchecked(spec, t_max)).sqrt())
}

/// Conductor temperature carrying `current_a` in the given weather.
///
/// Bisection on `[T_a − 5, T_a + 250]`. Net cooling minus heating is strictly
/// increasing in temperature there for physical inputs, so the root is unique.
pub fn solve_conductor_temp(spec: &ConductorSpec, w: &WeatherPoint, current_a: f64) -> Result<f64> {
    spec.validate()?;
    w.validate()?;
    if !(current_a >= 0.0) || !current_a.is_finite() {
        return Err(Error::InvalidInput(format!(
            "current must be finite and >= 0, got {current_a}"
        )));
    }
    // g(T) = cooling - heating; negative below the root.
    let g = |t: f64| -balance_residual(spec, w, t, current_a);
    let lo = (w.ambient_temp_c - BRACKET_BELOW_AMBIENT_C).max(ABSOLUTE_ZERO_C + 1e-9);
    let hi = w.ambient_temp_c + BRACKET_ABOVE_AMBIENT_C;
    bisect(g, lo, hi, RESIDUAL_TOL, MAX_BISECTION_ITERS).map_err(|e| match e {
        Error::Bracket {
            lo,
            hi,
            f_lo,
            f_hi,
            ..
        } => Error::Bracket {
            what: format!("conductor temperature (current {current_a} A, weather {w:?})"),
            lo,
            hi,
            f_lo,
            f_hi,
        },
        other => other,
    })
}

/// Root of `f` on `[lo, hi]` by bisection. Stops when |f(mid)| < `tol`, the
/// bracket can no longer be split, or after `max_iter` halvings.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.abs() < tol {
        return Ok(lo);
    }
    if f_hi.abs() < tol {
        return Ok(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || (f_lo < 0.0) == (f_hi < 0.0) {
        return Err(Error::Bracket {
            what: "bisection".into(),
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid.abs() < tol {
            break;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}
