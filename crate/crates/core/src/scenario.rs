//! Scenario configuration: tariffs, grid plans, SLA catalog, appliance fleet,
//! PV sizing, weather source, and simulation window.
//!
//! Scenarios are stored as a single TOML file (see `scenarios/reference.toml`
//! and the schema section of the README). External timeseries referenced from
//! the file are resolved relative to the scenario file and inlined at load
//! time, so a loaded [`ScenarioConfig`] is self-contained and can be
//! re-serialized to an equivalent file with [`ScenarioConfig::to_toml_string`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::loads::{ApplianceSpec, OperationState, UsageModel};
use crate::supply::{PvParams, WeatherSource};
use crate::{Error, Result, SECONDS_PER_DAY};

/// A day-of-time price schedule in €/kWh.
///
/// Bands are `(start_second_of_day, end_second_of_day, price)` half-open
/// intervals that partition `[0, 86400)` with no gaps or overlaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffSchedule {
    pub bands: Vec<(u32, u32, f64)>,
}

impl TariffSchedule {
    /// Flat schedule with a single all-day price.
    pub fn flat(price: f64) -> Self {
        Self { bands: vec![(0, SECONDS_PER_DAY as u32, price)] }
    }

    /// Price of the unique band containing `second_of_day`.
    ///
    /// Total on `[0, 86400)` once the partition invariant has been validated.
    pub fn price_at(&self, second_of_day: u32) -> f64 {
        debug_assert!(second_of_day < SECONDS_PER_DAY as u32);
        for &(start, end, price) in &self.bands {
            if second_of_day >= start && second_of_day < end {
                return price;
            }
        }
        // Unreachable for validated schedules; fall back to the last band.
        self.bands.last().map(|b| b.2).unwrap_or(0.0)
    }

    fn validate(&self, field: &str) -> Result<()> {
        validate_bands(&self.bands, field, "price")
    }
}

/// Grid power available from the main grid over the day, in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPlan {
    pub bands: Vec<(u32, u32, f64)>,
}

impl GridPlan {
    /// Constant plan providing `watts` all day.
    pub fn constant(watts: f64) -> Self {
        Self { bands: vec![(0, SECONDS_PER_DAY as u32, watts)] }
    }

    /// Grid power of the band containing `second_of_day`.
    pub fn power_at(&self, second_of_day: u32) -> f64 {
        debug_assert!(second_of_day < SECONDS_PER_DAY as u32);
        for &(start, end, watts) in &self.bands {
            if second_of_day >= start && second_of_day < end {
                return watts;
            }
        }
        self.bands.last().map(|b| b.2).unwrap_or(0.0)
    }

    fn validate(&self) -> Result<()> {
        validate_bands(&self.bands, "plan", "power")
    }
}

fn validate_bands(bands: &[(u32, u32, f64)], field: &str, value_name: &str) -> Result<()> {
    if bands.is_empty() {
        return Err(Error::validation(field, "no bands; expected a partition of [0, 86400)"));
    }
    let mut expected_start = 0u32;
    for (i, &(start, end, value)) in bands.iter().enumerate() {
        let band_field = format!("{field}.bands[{i}]");
        if start != expected_start {
            return Err(Error::validation(
                band_field,
                format!("band starts at {start}, expected {expected_start} (gap or overlap)"),
            ));
        }
        if end <= start {
            return Err(Error::validation(band_field, format!("band end {end} not after start {start}")));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::validation(band_field, format!("{value_name} {value} must be finite and >= 0")));
        }
        expected_start = end;
    }
    if expected_start != SECONDS_PER_DAY as u32 {
        return Err(Error::validation(
            format!("{field}.bands[{}]", bands.len() - 1),
            format!("band ends at {expected_start}, expected 86400"),
        ));
    }
    Ok(())
}

/// The grid energy tariff (`get`, price to draw from the main grid) and the
/// feed-in tariff (`fit`, price paid for energy injected back).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tariffs {
    pub get: TariffSchedule,
    pub fit: TariffSchedule,
}

/// The provisioning durations the broker offers, in seconds.
///
/// Strictly increasing; the first entry is always the unitary agreement of
/// one second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaCatalog {
    pub durations: Vec<u32>,
}

impl SlaCatalog {
    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.durations.is_empty() {
            return Err(Error::validation("catalog.durations", "catalog must not be empty"));
        }
        if self.durations[0] != 1 {
            return Err(Error::validation(
                "catalog.durations[0]",
                format!("first duration is {}, expected the unitary agreement 1", self.durations[0]),
            ));
        }
        for w in self.durations.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::validation(
                    "catalog.durations",
                    format!("durations must be strictly increasing, got {} after {}", w[1], w[0]),
                ));
            }
        }
        Ok(())
    }
}

/// A sampled timeseries with a fixed nominal resolution.
///
/// Timestamps are seconds since the scenario start date's midnight and must
/// be strictly increasing. Values are held between samples (zero-order hold):
/// `value_at(t)` returns the last sample at or before `t` while `t` lies in
/// `[first, last + resolution)`, and `None` outside that span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub samples: Vec<(u64, f64)>,
    pub resolution_s: u32,
}

impl TimeSeries {
    pub fn new(samples: Vec<(u64, f64)>, resolution_s: u32) -> Result<Self> {
        let ts = Self { samples, resolution_s };
        ts.validate("timeseries")?;
        Ok(ts)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Zero-order-hold lookup; `None` before the first sample or at/after
    /// `last + resolution`.
    pub fn value_at(&self, t: u64) -> Option<f64> {
        let first = self.samples.first()?.0;
        let last = self.samples.last()?.0;
        if t < first || t >= last + self.resolution_s as u64 {
            return None;
        }
        let idx = self.samples.partition_point(|&(ts, _)| ts <= t);
        Some(self.samples[idx - 1].1)
    }

    fn validate(&self, field: &str) -> Result<()> {
        if self.resolution_s == 0 {
            return Err(Error::validation(format!("{field}.resolution_s"), "resolution must be >= 1"));
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::validation(
                    format!("{field}.samples[{}]", i + 1),
                    format!("timestamps must be strictly increasing, got {} after {}", w[1].0, w[0].0),
                ));
            }
        }
        for (i, &(_, v)) in self.samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation(
                    format!("{field}.samples[{i}]"),
                    format!("value {v} is not finite"),
                ));
            }
        }
        Ok(())
    }
}

/// Calendar anchor of simulated second zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStart {
    /// ISO date `YYYY-MM-DD`.
    pub date: String,
    /// Second of that day at which the simulation begins.
    pub second: u32,
}

impl SimStart {
    /// 1-based ordinal day of the year of `date`.
    pub fn ordinal_day(&self) -> Result<u32> {
        ordinal_day(&self.date)
    }
}

fn ordinal_day(date: &str) -> Result<u32> {
    let bad = || Error::validation("sim_start.date", format!("expected YYYY-MM-DD, got {date:?}"));
    let mut parts = date.split('-');
    let year: i32 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let month: u32 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let day: u32 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() || !(1..=12).contains(&month) {
        return Err(bad());
    }
    let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    let lengths = [31, if leap { 29 } else { 28 }, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    if day == 0 || day > lengths[(month - 1) as usize] {
        return Err(bad());
    }
    let preceding: u32 = lengths[..(month - 1) as usize].iter().sum();
    Ok(preceding + day)
}

/// Knobs of the rule-based pricing policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PricingParams {
    /// Reference marginal unit added to committed power when quoting the
    /// supply cost, in watts. Keeps the posted price vector bid-independent.
    pub reference_increment_w: f64,
    /// Ceiling on the pessimistic duration surcharge, in €/kWh.
    pub pessimistic_cap: f64,
}

impl Default for PricingParams {
    fn default() -> Self {
        Self { reference_increment_w: 1000.0, pessimistic_cap: 10.0 }
    }
}

/// Normalization constants for the neural broker's input/output encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormParams {
    /// Power normalizer in watts; inputs are clamped to [0, 1] after division.
    pub power_norm_w: f64,
    /// Price scale in €/kWh; also the upper bound of decoded output prices.
    pub price_norm: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        Self { power_norm_w: 6000.0, price_norm: 1.0 }
    }
}

/// A fully validated simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub tariffs: Tariffs,
    pub plan: GridPlan,
    pub catalog: SlaCatalog,
    pub appliances: Vec<ApplianceSpec>,
    pub pv: PvParams,
    pub weather: WeatherSource,
    pub sim_start: SimStart,
    pub sim_length: u64,
    pub seed: u64,
    pub pricing: PricingParams,
    pub norms: NormParams,
}

impl ScenarioConfig {
    /// Check every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        self.tariffs.get.validate("tariffs.get")?;
        self.tariffs.fit.validate("tariffs.fit")?;
        self.plan.validate()?;
        self.catalog.validate()?;
        self.pv.validate()?;
        self.weather.validate()?;
        if self.sim_length == 0 {
            return Err(Error::validation("sim_length", "must be >= 1"));
        }
        if self.sim_start.second >= SECONDS_PER_DAY as u32 {
            return Err(Error::validation("sim_start.second", "must be < 86400"));
        }
        self.sim_start.ordinal_day()?;
        if !(self.pricing.reference_increment_w.is_finite() && self.pricing.reference_increment_w >= 0.0) {
            return Err(Error::validation("pricing.reference_increment_w", "must be finite and >= 0"));
        }
        if !(self.pricing.pessimistic_cap.is_finite() && self.pricing.pessimistic_cap >= 0.0) {
            return Err(Error::validation("pricing.pessimistic_cap", "must be finite and >= 0"));
        }
        if !(self.norms.power_norm_w.is_finite() && self.norms.power_norm_w > 0.0) {
            return Err(Error::validation("norms.power_norm_w", "must be finite and > 0"));
        }
        if !(self.norms.price_norm.is_finite() && self.norms.price_norm > 0.0) {
            return Err(Error::validation("norms.price_norm", "must be finite and > 0"));
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, app) in self.appliances.iter().enumerate() {
            app.validate(&format!("appliances[{i}]"))?;
            if !names.insert(app.name.clone()) {
                return Err(Error::validation(
                    format!("appliances[{i}].name"),
                    format!("duplicate appliance name {:?}", app.name),
                ));
            }
        }
        Ok(())
    }

    /// Serialize to the canonical TOML form (external series inlined).
    pub fn to_toml_string(&self) -> String {
        let raw = RawScenario::from_config(self);
        toml::to_string(&raw).expect("scenario serialization cannot fail")
    }

    /// Parse a scenario from TOML text; `base_dir` anchors relative CSV paths.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text)
            .map_err(|e| Error::parse(base_dir.join("<scenario>"), e.to_string()))?;
        raw.into_config(base_dir)
    }

    /// FNV-1a hash of the canonical serialized form; used in run manifests.
    pub fn content_hash(&self) -> u64 {
        fnv1a(self.to_toml_string().as_bytes())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Load and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawScenario =
        toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    raw.into_config(base)
}

/// Parse a two-column `epoch_second,value` CSV into a [`TimeSeries`].
///
/// No header by default; pass `header = true` to skip one leading line.
/// An empty file yields an empty (valid) series.
pub fn parse_timeseries(path: &Path, resolution_s: u32, header: bool) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if header && lineno == 0 {
            continue;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (ts_str, val_str) = line.split_once(',').ok_or_else(|| {
            Error::parse(path, format!("line {}: expected `epoch_second,value`", lineno + 1))
        })?;
        let ts: u64 = ts_str.trim().parse().map_err(|_| {
            Error::parse(path, format!("line {}: bad epoch second {ts_str:?}", lineno + 1))
        })?;
        let value: f64 = val_str.trim().parse().map_err(|_| {
            Error::parse(path, format!("line {}: bad value {val_str:?}", lineno + 1))
        })?;
        samples.push((ts, value));
    }
    TimeSeries::new(samples, resolution_s).map_err(|e| match e {
        Error::Validation { field, message } => {
            Error::parse(path, format!("{field}: {message}"))
        }
        other => other,
    })
}

/// Parse an event-trace CSV: one epoch second per line.
pub fn parse_event_trace(path: &Path) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let t: u64 = line.parse().map_err(|_| {
            Error::parse(path, format!("line {}: bad epoch second {line:?}", lineno + 1))
        })?;
        events.push(t);
    }
    Ok(events)
}

// ---------------------------------------------------------------------------
// TOML file schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawScenario {
    seed: u64,
    sim_length: u64,
    sim_start: SimStart,
    tariffs: Tariffs,
    plan: GridPlan,
    catalog: SlaCatalog,
    pv: PvParams,
    weather: RawWeather,
    #[serde(default)]
    pricing: PricingParams,
    #[serde(default)]
    norms: NormParams,
    #[serde(default)]
    appliances: Vec<RawAppliance>,
}

#[derive(Serialize, Deserialize)]
struct RawWeather {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    day_length_s: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sunrise_second: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resolution_s: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    csv: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    header: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<(u64, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct RawAppliance {
    name: String,
    #[serde(with = "psi_format")]
    psi: f64,
    states: Vec<OperationState>,
    usage: RawUsage,
}

#[derive(Serialize, Deserialize)]
struct RawUsage {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    willingness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    recovery_seconds: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    starts_per_day: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    events: Option<Vec<u64>>,
}

/// Price sensitivity ψ: a number, or the string `"inflexible"` for an
/// unconstrained (infinite) sensitivity.
mod psi_format {
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() {
            ser.serialize_str("inflexible")
        } else {
            ser.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum PsiRepr {
            Number(f64),
            Text(String),
        }
        match PsiRepr::deserialize(de)? {
            PsiRepr::Number(v) => Ok(v),
            PsiRepr::Text(s) if s == "inflexible" => Ok(f64::INFINITY),
            PsiRepr::Text(s) => Err(D::Error::custom(format!(
                "psi must be a number or \"inflexible\", got {s:?}"
            ))),
        }
    }
}

impl RawScenario {
    fn from_config(cfg: &ScenarioConfig) -> Self {
        let weather = match &cfg.weather {
            WeatherSource::ClearSky { day_length_s, sunrise_second } => RawWeather {
                kind: "clear_sky".into(),
                day_length_s: Some(*day_length_s),
                sunrise_second: Some(*sunrise_second),
                resolution_s: None,
                csv: None,
                header: false,
                samples: None,
            },
            WeatherSource::Measured { series } => RawWeather {
                kind: "measured".into(),
                day_length_s: None,
                sunrise_second: None,
                resolution_s: Some(series.resolution_s),
                csv: None,
                header: false,
                samples: Some(series.samples.clone()),
            },
        };
        let appliances = cfg
            .appliances
            .iter()
            .map(|app| RawAppliance {
                name: app.name.clone(),
                psi: app.psi,
                states: app.states.clone(),
                usage: match &app.usage {
                    UsageModel::Probabilistic {
                        willingness,
                        decay,
                        recovery_seconds,
                        starts_per_day,
                    } => RawUsage {
                        kind: "probabilistic".into(),
                        willingness: Some(*willingness),
                        decay: Some(*decay),
                        recovery_seconds: Some(*recovery_seconds),
                        starts_per_day: Some(*starts_per_day),
                        csv: None,
                        events: None,
                    },
                    UsageModel::EventTrace { events } => RawUsage {
                        kind: "trace".into(),
                        willingness: None,
                        decay: None,
                        recovery_seconds: None,
                        starts_per_day: None,
                        csv: None,
                        events: Some(events.clone()),
                    },
                },
            })
            .collect();
        RawScenario {
            seed: cfg.seed,
            sim_length: cfg.sim_length,
            sim_start: cfg.sim_start.clone(),
            tariffs: cfg.tariffs.clone(),
            plan: cfg.plan.clone(),
            catalog: cfg.catalog.clone(),
            pv: cfg.pv.clone(),
            weather,
            pricing: cfg.pricing.clone(),
            norms: cfg.norms.clone(),
            appliances,
        }
    }

    fn into_config(self, base_dir: &Path) -> Result<ScenarioConfig> {
        let weather = match self.weather.kind.as_str() {
            "clear_sky" => WeatherSource::ClearSky {
                day_length_s: self.weather.day_length_s.ok_or_else(|| {
                    Error::validation("weather.day_length_s", "required for clear_sky weather")
                })?,
                sunrise_second: self.weather.sunrise_second.ok_or_else(|| {
                    Error::validation("weather.sunrise_second", "required for clear_sky weather")
                })?,
            },
            "measured" => {
                let resolution = self.weather.resolution_s.ok_or_else(|| {
                    Error::validation("weather.resolution_s", "required for measured weather")
                })?;
                let mut series = match (&self.weather.csv, self.weather.samples) {
                    (Some(csv), None) => {
                        parse_timeseries(&resolve(base_dir, csv), resolution, self.weather.header)?
                    }
                    (None, Some(samples)) => TimeSeries::new(samples, resolution)
                        .map_err(|e| rename_field(e, "weather"))?,
                    (Some(_), Some(_)) => {
                        return Err(Error::validation(
                            "weather",
                            "give either csv or samples, not both",
                        ))
                    }
                    (None, None) => {
                        return Err(Error::validation(
                            "weather",
                            "measured weather needs csv or samples",
                        ))
                    }
                };
                // Normalized intensity: clamp into [0, 1] as documented.
                for (_, v) in &mut series.samples {
                    *v = v.clamp(0.0, 1.0);
                }
                WeatherSource::Measured { series }
            }
            other => {
                return Err(Error::validation(
                    "weather.kind",
                    format!("unknown weather kind {other:?}, expected clear_sky or measured"),
                ))
            }
        };

        let mut appliances = Vec::with_capacity(self.appliances.len());
        for (i, raw) in self.appliances.into_iter().enumerate() {
            let field = format!("appliances[{i}]");
            let usage = match raw.usage.kind.as_str() {
                "probabilistic" => UsageModel::Probabilistic {
                    willingness: raw.usage.willingness.unwrap_or(1.0),
                    decay: raw.usage.decay.unwrap_or(1.0),
                    recovery_seconds: raw.usage.recovery_seconds.unwrap_or(3600),
                    starts_per_day: raw.usage.starts_per_day.unwrap_or(1.0),
                },
                "trace" => {
                    let events = match (&raw.usage.csv, raw.usage.events) {
                        (Some(csv), None) => parse_event_trace(&resolve(base_dir, csv))?,
                        (None, Some(events)) => events,
                        (Some(_), Some(_)) => {
                            return Err(Error::validation(
                                format!("{field}.usage"),
                                "give either csv or events, not both",
                            ))
                        }
                        (None, None) => Vec::new(),
                    };
                    UsageModel::EventTrace { events }
                }
                other => {
                    return Err(Error::validation(
                        format!("{field}.usage.kind"),
                        format!("unknown usage kind {other:?}, expected probabilistic or trace"),
                    ))
                }
            };
            appliances.push(ApplianceSpec {
                name: raw.name,
                psi: raw.psi,
                states: raw.states,
                usage,
            });
        }

        let cfg = ScenarioConfig {
            tariffs: self.tariffs,
            plan: self.plan,
            catalog: self.catalog,
            appliances,
            pv: self.pv,
            weather,
            sim_start: self.sim_start,
            sim_length: self.sim_length,
            seed: self.seed,
            pricing: self.pricing,
            norms: self.norms,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn rename_field(err: Error, prefix: &str) -> Error {
    match err {
        Error::Validation { field, message } => {
            Error::validation(format!("{prefix}.{field}"), message)
        }
        other => other,
    }
}

// ---------------------------------------------------------------------------
// Built-in reference scenario
// ---------------------------------------------------------------------------

/// Programmatic builders for the reference household scenario: a six-appliance
/// fleet, Italian-style time-of-use tariffs, a 3.3 kWp PV plant, and the five
/// grid provisioning plans.
pub mod builtin {
    use super::*;

    /// Grid plans indexed 0–4: 0 kW (island), 1.5 kW, banded 3 kW day / 1 kW
    /// night, 3 kW flat, 6 kW flat.
    pub fn plan(index: usize) -> GridPlan {
        match index {
            0 => GridPlan::constant(0.0),
            1 => GridPlan::constant(1500.0),
            2 => GridPlan {
                bands: vec![(0, 21_600, 1000.0), (21_600, 64_800, 3000.0), (64_800, 86_400, 1000.0)],
            },
            3 => GridPlan::constant(3000.0),
            4 => GridPlan::constant(6000.0),
            other => panic!("no builtin plan {other}, expected 0..=4"),
        }
    }

    /// Time-of-use grid energy tariff: 0.29 €/kWh from 6 a.m. to 9 p.m.,
    /// 0.15 €/kWh otherwise.
    pub fn italian_get() -> TariffSchedule {
        TariffSchedule {
            bands: vec![(0, 21_600, 0.15), (21_600, 75_600, 0.29), (75_600, 86_400, 0.15)],
        }
    }

    /// Feed-in tariff: 0.04 €/kWh from 6 a.m. to 9 p.m., 0.02 €/kWh otherwise.
    pub fn italian_fit() -> TariffSchedule {
        TariffSchedule {
            bands: vec![(0, 21_600, 0.02), (21_600, 75_600, 0.04), (75_600, 86_400, 0.02)],
        }
    }

    /// Broker catalog: the unitary agreement plus 10 s to 1800 s durations.
    pub fn catalog() -> SlaCatalog {
        SlaCatalog { durations: vec![1, 10, 30, 60, 120, 600, 1800] }
    }

    /// Clear-sky winter day: 8 h of light starting at 08:00.
    pub fn winter_clear_sky() -> WeatherSource {
        WeatherSource::ClearSky { day_length_s: 28_800, sunrise_second: 28_800 }
    }

    /// Clear-sky summer day: 16 h of light starting at 05:00.
    pub fn summer_clear_sky() -> WeatherSource {
        WeatherSource::ClearSky { day_length_s: 57_600, sunrise_second: 18_000 }
    }

    fn state(power_w: f64, duration_s: u64, delay: u64, severity: f64) -> OperationState {
        OperationState { power_w, duration_s, start_delay_max_s: delay, interruption_severity: severity }
    }

    fn probabilistic(willingness: f64, decay: f64, recovery: u32, starts: f64) -> UsageModel {
        UsageModel::Probabilistic {
            willingness,
            decay,
            recovery_seconds: recovery,
            starts_per_day: starts,
        }
    }

    /// The six-appliance household fleet. Every load uses ψ = 0.9 €/kWh, the
    /// worst-case congestion setting in which all loads trade aggressively.
    pub fn household_fleet() -> Vec<ApplianceSpec> {
        vec![
            ApplianceSpec {
                name: "television".into(),
                psi: 0.9,
                states: vec![state(180.0, 3600, 900, 1.0)],
                usage: probabilistic(1.0, 1.0, 1, 2.0),
            },
            ApplianceSpec {
                name: "dishwasher".into(),
                psi: 0.9,
                states: vec![
                    state(2100.0, 300, 14_400, 2.0),
                    state(100.0, 120, 120, 2.0),
                    state(300.0, 60, 120, 2.0),
                    state(100.0, 120, 120, 2.0),
                    state(2100.0, 300, 120, 2.0),
                ],
                usage: probabilistic(1.0, 1.0, 1, 1.2),
            },
            ApplianceSpec {
                name: "tumble_dryer".into(),
                psi: 0.9,
                states: (0..10)
                    .map(|i| state(2500.0, 120, if i == 0 { 14_400 } else { 120 }, 2.0))
                    .collect(),
                usage: probabilistic(1.0, 1.0, 1, 1.0),
            },
            ApplianceSpec {
                name: "washing_machine".into(),
                psi: 0.9,
                states: vec![
                    state(2100.0, 120, 14_400, 3.0),
                    state(300.0, 300, 120, 3.0),
                    state(200.0, 120, 120, 3.0),
                    state(600.0, 300, 120, 3.0),
                    state(200.0, 60, 120, 3.0),
                ],
                usage: probabilistic(1.0, 1.0, 1, 1.2),
            },
            ApplianceSpec {
                name: "fridge".into(),
                psi: 0.9,
                states: vec![state(200.0, 30, 600, 5.0), state(160.0, 600, 60, 5.0)],
                usage: probabilistic(0.8, 0.5, 1800, 20.0),
            },
            ApplianceSpec {
                name: "coffee_machine".into(),
                psi: 0.9,
                states: vec![state(2000.0, 60, 300, 1.0)],
                usage: probabilistic(1.0, 1.0, 1, 2.5),
            },
        ]
    }

    /// One winter day of the reference household on grid plan 3.
    pub fn reference() -> ScenarioConfig {
        reference_with(3, winter_clear_sky())
    }

    /// Reference household with an explicit grid plan and weather source.
    pub fn reference_with(plan_index: usize, weather: WeatherSource) -> ScenarioConfig {
        let cfg = ScenarioConfig {
            tariffs: Tariffs { get: italian_get(), fit: italian_fit() },
            plan: plan(plan_index),
            catalog: catalog(),
            appliances: household_fleet(),
            pv: PvParams { peak_power_w: 3300.0, efficiency: 1.0 },
            weather,
            sim_start: SimStart { date: "2015-01-01".into(), second: 0 },
            sim_length: SECONDS_PER_DAY,
            seed: 42,
            pricing: PricingParams::default(),
            norms: NormParams::default(),
        };
        debug_assert!(cfg.validate().is_ok());
        cfg
    }
}
