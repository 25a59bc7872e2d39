//! Scenario definition.
//!
//! A scenario is read from a TOML file whose keys map one-to-one onto
//! [`ScenarioFile`]. Powers are given in dBm, losses in dB; [`ScenarioConfig`]
//! holds the validated values in linear SI units (watts, Hz, seconds, bits).
//! Missing keys fall back to [`default_scenario`]; unknown keys are rejected.
//!
//! Overrides use dotted paths (`solver.max_outer=50`,
//! `channel.bs_device.rician_factor=0.5`) and are applied after the file is
//! loaded, against the full key tree.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::units::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm};

/// How `arrival_min` / `arrival_max` in the file are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalUnit {
    Bits,
    Bytes,
}

impl ArrivalUnit {
    pub fn bits_per_unit(self) -> u64 {
        match self {
            ArrivalUnit::Bits => 1,
            ArrivalUnit::Bytes => 8,
        }
    }
}

/// Tolerance and iteration caps of the alternating per-slot solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Convergence threshold on the squared objective change (outer loop)
    /// and on the squared phase-vector change (inner loop).
    pub tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// After the FP loop, run exact discrete coordinate ascent on the
    /// weighted sum rate until no single element change helps.
    pub polish: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_outer: 30,
            max_inner: 30,
            polish: true,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::config("solver.tolerance must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::config("solver iteration caps must be >= 1"));
        }
        Ok(())
    }
}

/// Placement of the BS, the IRS arc and the device disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deployment {
    pub bs: Point3,
    /// Diameter of the half circle (y-z plane, x = 0) carrying the IRSs.
    pub irs_arc_diameter: f64,
    /// Center of the device disk in the x-z plane.
    pub device_center: Point3,
    pub device_radius: f64,
}

/// Channel parameters of the three link classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub bs_irs: ChannelParams,
    pub irs_device: ChannelParams,
    pub bs_device: ChannelParams,
}

/// Validated scenario, linear SI units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_irs: usize,
    pub num_devices: usize,
    pub elements_x: usize,
    pub elements_y: usize,
    pub phase_bits: u32,
    /// Per-device sub-carrier bandwidth, Hz.
    pub bandwidth: f64,
    /// Slot length, s.
    pub slot_duration: f64,
    /// Number of slots per episode.
    pub horizon: usize,
    /// Drift-plus-penalty trade-off parameter.
    pub control_v: f64,
    /// Per-device transmit power ceiling, W.
    pub max_power: f64,
    /// Static power per IRS element, W.
    pub element_power: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_density: f64,
    /// Average-delay bound, s (same for every device).
    pub delay_threshold: f64,
    /// Arrival bounds per slot, bits.
    pub arrival_min: u64,
    pub arrival_max: u64,
    pub deployment: Deployment,
    pub links: LinkParams,
    pub solver: SolverSettings,
    /// Fraction of leading slots dropped from stationary averages.
    pub burn_in_fraction: f64,
    /// Largest candidate count the exhaustive oracle will enumerate.
    pub exhaustive_budget: u64,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    pub fn elements_per_irs(&self) -> usize {
        self.elements_x * self.elements_y
    }

    /// Total reflecting elements `M * N`.
    pub fn total_elements(&self) -> usize {
        self.num_irs * self.elements_per_irs()
    }

    /// Noise power `sigma^2 = N0 * B`, W.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth
    }

    /// Static IRS power `M * N * P_I`, W.
    pub fn irs_static_power(&self) -> f64 {
        self.total_elements() as f64 * self.element_power
    }

    pub fn phase_levels(&self) -> u32 {
        1 << self.phase_bits
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_devices", self.num_devices),
            ("elements_x", self.elements_x),
            ("elements_y", self.elements_y),
            ("horizon", self.horizon),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::config(format!("{name} must be >= 1")));
            }
        }
        if !(1..=16).contains(&self.phase_bits) {
            return Err(Error::config("phase_bits must be in 1..=16"));
        }
        let positive = [
            ("bandwidth_hz", self.bandwidth),
            ("slot_duration_s", self.slot_duration),
            ("control_v", self.control_v),
            ("max_power", self.max_power),
            ("element_power", self.element_power),
            ("noise_density", self.noise_density),
            ("delay_threshold_s", self.delay_threshold),
            (
                "geometry.irs_arc_diameter_m",
                self.deployment.irs_arc_diameter,
            ),
            ("geometry.device_radius_m", self.deployment.device_radius),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("{name} must be positive and finite")));
            }
        }
        if self.arrival_min > self.arrival_max {
            return Err(Error::config("arrival_min must not exceed arrival_max"));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::config("burn_in_fraction must be in [0, 1)"));
        }
        for (name, params) in [
            ("channel.bs_irs", &self.links.bs_irs),
            ("channel.irs_device", &self.links.irs_device),
            ("channel.bs_device", &self.links.bs_device),
        ] {
            params
                .validate()
                .map_err(|e| Error::config(format!("{name}: {e}")))?;
        }
        self.solver.validate()
    }

    /// Loads a scenario file, then applies `overrides` (`key=value`).
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
            .map_err(|e| Error::config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// Parses a scenario from TOML text, then applies `overrides`.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let mut tree = default_tree();
        merge_checked(&mut tree, user, "")?;
        apply_overrides(&mut tree, overrides)?;
        ScenarioFile::from_tree(tree)?.into_config()
    }

    /// Built-in defaults with `overrides` applied.
    pub fn default_with(overrides: &[String]) -> Result<Self> {
        let mut tree = default_tree();
        apply_overrides(&mut tree, overrides)?;
        ScenarioFile::from_tree(tree)?.into_config()
    }

    /// Renders the scenario back to its file form.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ScenarioFile::from(self)).expect("scenario file always serializes")
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// The published defaults.
pub fn default_scenario() -> ScenarioConfig {
    ScenarioFile::default()
        .into_config()
        .expect("default scenario is valid")
}

/// Smallest scenario the exhaustive oracle handles comfortably:
/// one IRS of 2x1 elements, 1-bit phases, two devices.
pub fn tiny_scenario() -> ScenarioConfig {
    let mut cfg = default_scenario();
    cfg.num_irs = 1;
    cfg.elements_x = 2;
    cfg.elements_y = 1;
    cfg.phase_bits = 1;
    cfg.num_devices = 2;
    cfg
}

// ---------------------------------------------------------------------------
// File representation
// ---------------------------------------------------------------------------

/// On-disk form of [`ScenarioConfig`]. Unit suffixes on the keys say how each
/// value is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub num_irs: usize,
    pub num_devices: usize,
    pub elements_x: usize,
    pub elements_y: usize,
    pub phase_bits: u32,
    pub bandwidth_hz: f64,
    pub slot_duration_s: f64,
    pub horizon: usize,
    pub control_v: f64,
    pub max_power_dbm: f64,
    pub element_power_dbm: f64,
    pub noise_density_dbm_per_hz: f64,
    pub delay_threshold_s: f64,
    pub arrival_min: u64,
    pub arrival_max: u64,
    pub arrival_unit: ArrivalUnit,
    pub burn_in_fraction: f64,
    pub exhaustive_budget: u64,
    pub rng_seed: u64,
    pub solver: SolverSettings,
    pub geometry: GeometryFile,
    pub channel: ChannelFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub bs_position_m: [f64; 3],
    pub irs_arc_diameter_m: f64,
    pub device_center_m: [f64; 3],
    pub device_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub bs_irs: LinkFile,
    pub irs_device: LinkFile,
    pub bs_device: LinkFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFile {
    pub rician_factor: f64,
    pub pathloss_exponent: f64,
    /// Power gain at the reference distance, dB.
    pub reference_loss_db: f64,
    pub reference_distance_m: f64,
}

impl LinkFile {
    fn new(rician_factor: f64, pathloss_exponent: f64) -> Self {
        Self {
            rician_factor,
            pathloss_exponent,
            reference_loss_db: DEFAULT_REFERENCE_LOSS_DB,
            reference_distance_m: 1.0,
        }
    }

    fn to_params(self) -> ChannelParams {
        ChannelParams {
            rician_factor: self.rician_factor,
            pathloss_exponent: self.pathloss_exponent,
            reference_loss: db_to_linear(self.reference_loss_db),
            reference_distance: self.reference_distance_m,
        }
    }

    fn from_params(p: &ChannelParams) -> Self {
        Self {
            rician_factor: p.rician_factor,
            pathloss_exponent: p.pathloss_exponent,
            reference_loss_db: linear_to_db(p.reference_loss),
            reference_distance_m: p.reference_distance,
        }
    }
}

/// Reference loss at 1 m, dB.
pub const DEFAULT_REFERENCE_LOSS_DB: f64 = -30.0;

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            num_irs: 2,
            num_devices: 10,
            elements_x: 4,
            elements_y: 4,
            phase_bits: 3,
            bandwidth_hz: 15e3,
            slot_duration_s: 0.01,
            horizon: 1000,
            control_v: 50.0,
            max_power_dbm: 20.0,
            element_power_dbm: 2.0,
            noise_density_dbm_per_hz: -170.0,
            delay_threshold_s: 0.05,
            arrival_min: 1,
            arrival_max: 150,
            arrival_unit: ArrivalUnit::Bytes,
            burn_in_fraction: 0.2,
            exhaustive_budget: 1 << 20,
            rng_seed: 1,
            solver: SolverSettings::default(),
            geometry: GeometryFile {
                bs_position_m: [-200.0, 0.0, 0.0],
                irs_arc_diameter_m: 10.0,
                device_center_m: [0.0, 0.0, 200.0],
                device_radius_m: 100.0,
            },
            channel: ChannelFile {
                bs_irs: LinkFile::new(1.0, 2.2),
                irs_device: LinkFile::new(1.0, 2.2),
                bs_device: LinkFile::new(0.5, 3.5),
            },
        }
    }
}

impl ScenarioFile {
    fn from_tree(tree: toml::Table) -> Result<Self> {
        toml::Table::try_into(tree).map_err(|e| Error::config(e.to_string()))
    }

    pub fn into_config(self) -> Result<ScenarioConfig> {
        let unit = self.arrival_unit.bits_per_unit();
        let g = &self.geometry;
        let cfg = ScenarioConfig {
            num_irs: self.num_irs,
            num_devices: self.num_devices,
            elements_x: self.elements_x,
            elements_y: self.elements_y,
            phase_bits: self.phase_bits,
            bandwidth: self.bandwidth_hz,
            slot_duration: self.slot_duration_s,
            horizon: self.horizon,
            control_v: self.control_v,
            max_power: dbm_to_watts(self.max_power_dbm),
            element_power: dbm_to_watts(self.element_power_dbm),
            noise_density: dbm_to_watts(self.noise_density_dbm_per_hz),
            delay_threshold: self.delay_threshold_s,
            arrival_min: self.arrival_min.saturating_mul(unit),
            arrival_max: self.arrival_max.saturating_mul(unit),
            deployment: Deployment {
                bs: Point3::from(g.bs_position_m),
                irs_arc_diameter: g.irs_arc_diameter_m,
                device_center: Point3::from(g.device_center_m),
                device_radius: g.device_radius_m,
            },
            links: LinkParams {
                bs_irs: self.channel.bs_irs.to_params(),
                irs_device: self.channel.irs_device.to_params(),
                bs_device: self.channel.bs_device.to_params(),
            },
            solver: self.solver,
            burn_in_fraction: self.burn_in_fraction,
            exhaustive_budget: self.exhaustive_budget,
            rng_seed: self.rng_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&ScenarioConfig> for ScenarioFile {
    fn from(c: &ScenarioConfig) -> Self {
        let d = &c.deployment;
        Self {
            num_irs: c.num_irs,
            num_devices: c.num_devices,
            elements_x: c.elements_x,
            elements_y: c.elements_y,
            phase_bits: c.phase_bits,
            bandwidth_hz: c.bandwidth,
            slot_duration_s: c.slot_duration,
            horizon: c.horizon,
            control_v: c.control_v,
            max_power_dbm: watts_to_dbm(c.max_power),
            element_power_dbm: watts_to_dbm(c.element_power),
            noise_density_dbm_per_hz: watts_to_dbm(c.noise_density),
            delay_threshold_s: c.delay_threshold,
            arrival_min: c.arrival_min,
            arrival_max: c.arrival_max,
            arrival_unit: ArrivalUnit::Bits,
            burn_in_fraction: c.burn_in_fraction,
            exhaustive_budget: c.exhaustive_budget,
            rng_seed: c.rng_seed,
            solver: c.solver,
            geometry: GeometryFile {
                bs_position_m: d.bs.into(),
                irs_arc_diameter_m: d.irs_arc_diameter,
                device_center_m: d.device_center.into(),
                device_radius_m: d.device_radius,
            },
            channel: ChannelFile {
                bs_irs: LinkFile::from_params(&c.links.bs_irs),
                irs_device: LinkFile::from_params(&c.links.irs_device),
                bs_device: LinkFile::from_params(&c.links.bs_device),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Key-tree plumbing
// ---------------------------------------------------------------------------

fn default_tree() -> toml::Table {
    toml::Table::try_from(ScenarioFile::default()).expect("default scenario serializes")
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Merges `user` into `base`; every key in `user` must already exist.
fn merge_checked(base: &mut toml::Table, user: toml::Table, prefix: &str) -> Result<()> {
    for (key, value) in user {
        let path = join(prefix, &key);
        let slot = base
            .get_mut(&key)
            .ok_or_else(|| Error::config(format!("unknown key `{path}`")))?;
        match (slot, value) {
            (toml::Value::Table(inner), toml::Value::Table(user_inner)) => {
                merge_checked(inner, user_inner, &path)?;
            }
            (toml::Value::Table(_), _) => {
                return Err(Error::config(format!("key `{path}` must be a table")));
            }
            (slot, value) => *slot = coerce(slot, value, &path)?,
        }
    }
    Ok(())
}

/// Integer literals are accepted where a float is expected.
fn coerce(existing: &toml::Value, value: toml::Value, path: &str) -> Result<toml::Value> {
    use toml::Value as V;
    match (existing, value) {
        (V::Float(_), V::Integer(i)) => Ok(V::Float(i as f64)),
        (V::Array(_), V::Array(items)) => Ok(V::Array(
            items
                .into_iter()
                .map(|v| match v {
                    V::Integer(i) => V::Float(i as f64),
                    other => other,
                })
                .collect(),
        )),
        (V::Table(_), _) => Err(Error::config(format!("key `{path}` must be a table"))),
        (_, value) => Ok(value),
    }
}

/// Applies `key.path=value` overrides to a full key tree.
pub fn apply_overrides(tree: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{item}` is not key=value")))?;
        let key = key.trim();
        let value = parse_override_value(raw.trim());
        let mut parts = key.split('.').peekable();
        let mut table = &mut *tree;
        let mut walked = String::new();
        while let Some(part) = parts.next() {
            walked = join(&walked, part);
            let entry = table
                .get_mut(part)
                .ok_or_else(|| Error::config(format!("unknown key `{walked}` in override")))?;
            if parts.peek().is_none() {
                *entry = coerce(entry, value.clone(), &walked)?;
                break;
            }
            table = match entry {
                toml::Value::Table(t) => t,
                _ => return Err(Error::config(format!("key `{walked}` is not a table"))),
            };
        }
    }
    Ok(())
}

/// Bare words that are not TOML literals (`bits`, `bytes`) become strings.
fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Axes that [`crate::simulator::sweep`] can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    ControlV,
    Devices,
    Irs,
    ElementsPerIrs,
    DelayThreshold,
    ArrivalMax,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::ControlV,
        SweepAxis::Devices,
        SweepAxis::Irs,
        SweepAxis::ElementsPerIrs,
        SweepAxis::DelayThreshold,
        SweepAxis::ArrivalMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::ControlV => "V",
            SweepAxis::Devices => "K",
            SweepAxis::Irs => "M",
            SweepAxis::ElementsPerIrs => "N",
            SweepAxis::DelayThreshold => "d_th",
            SweepAxis::ArrivalMax => "A_max",
        }
    }

    /// Returns a copy of `base` with this axis set to `value`.
    ///
    /// `N` keeps `elements_y` fixed and scales `elements_x`; a non-integer
    /// quotient is rejected. `A_max` is in bits.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = |name: &str| -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::config(format!(
                    "{name} must be a non-negative integer, got {value}"
                )))
            }
        };
        match self {
            SweepAxis::ControlV => cfg.control_v = value,
            SweepAxis::Devices => cfg.num_devices = count("K")?,
            SweepAxis::Irs => cfg.num_irs = count("M")?,
            SweepAxis::ElementsPerIrs => {
                let n = count("N")?;
                if n % cfg.elements_y != 0 {
                    return Err(Error::config(format!(
                        "N={n} is not a multiple of elements_y={}: N_x would be {}",
                        cfg.elements_y,
                        n as f64 / cfg.elements_y as f64
                    )));
                }
                cfg.elements_x = n / cfg.elements_y;
            }
            SweepAxis::DelayThreshold => cfg.delay_threshold = value,
            SweepAxis::ArrivalMax => cfg.arrival_max = count("A_max")? as u64,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
                Error::config(format!("unknown axis `{s}`; valid: {}", names.join(", ")))
            })
    }
}
