//! Run configuration: an INI file with `[sensor]`, `[filtration]`, `[graph]`,
//! `[model]`, `[hw]` and `[io]` sections.
//!
//! ```ini
//! [sensor]
//! channels = 64
//! topology = cascade
//!
//! [filtration]
//! enabled = true
//! div_factor = 8
//! weight = 32
//! threshold.kind = exponential
//! threshold.start = 64
//! threshold.end = 32
//!
//! [sweep]
//! graph.r_c = 10, 20
//! filtration.div_factor = 6, 8
//! ```
//!
//! Every key can be overridden as `section.key=value`. A `[sweep]` section
//! lists comma-separated values per key and expands into the Cartesian
//! product of runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{SensorConfig, Topology};
use crate::filtration::{make_thresholds, FiltrationParams, ScheduleKind, ThresholdSchedule};
use crate::gnn::{load_weights, random_weights, Arch, HeadSpec, ModelWeights};
use crate::graph::GraphParams;
use crate::hw::{HwParams, WindowClosure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationConfig {
    pub enabled: bool,
    pub div_factor: u32,
    pub weight: u32,
    pub threshold: ThresholdSchedule,
}

impl Default for FiltrationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            div_factor: 8,
            weight: 32,
            threshold: ThresholdSchedule::exponential(64, 32),
        }
    }
}

impl FiltrationConfig {
    /// Parameters for a sensor, or `None` when filtration is disabled.
    pub fn params(&self, channels: usize) -> Result<Option<FiltrationParams>> {
        if !self.enabled {
            return Ok(None);
        }
        FiltrationParams::from_schedule(self.div_factor, self.weight, self.threshold, channels).map(Some)
    }
}

/// Where model parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    File(PathBuf),
    /// Seeded random parameters with the default head layout.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub weights: WeightSource,
    /// Conv width used for random weights.
    pub width: usize,
    /// Class count used for random weights.
    pub class_count: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { weights: WeightSource::Random, width: 72, class_count: 12, seed: 0 }
    }
}

impl ModelConfig {
    pub fn arch(&self) -> Arch {
        let mut arch = Arch::with_classes(self.class_count);
        arch.conv_widths = [self.width; 4];
        arch.head[0] = HeadSpec::Linear(self.width);
        arch.head[1] = HeadSpec::Gru(self.width);
        arch
    }

    pub fn load(&self) -> Result<ModelWeights> {
        match &self.weights {
            WeightSource::File(p) => load_weights(p),
            WeightSource::Random => random_weights(self.seed, &self.arch()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoConfig {
    /// `auto`, `binary` or `csv`.
    pub format: String,
    pub output: Option<PathBuf>,
    pub window_us: u32,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self { format: "auto".into(), output: None, window_us: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    pub sensor: SensorConfig,
    pub filtration: FiltrationConfig,
    pub graph: GraphParams,
    pub model: ModelConfig,
    pub hw: HwParams,
    pub io: IoConfig,
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

/// Sweep axes as `(section.key, values)` in file order.
pub type SweepAxes = Vec<(String, Vec<String>)>;

const SECTIONS: [&str; 6] = ["sensor", "filtration", "graph", "model", "hw", "io"];
const SWEEP: &str = "sweep";

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::config(format!("{key} = {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(format!("{key} = {value:?}: expected a boolean"))),
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_ini_str(&text)
    }

    /// Parses a configuration; a `[sweep]` section is ignored here.
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let (base, _) = split_ini(text)?;
        let mut cfg = Self::default();
        for (section, keys) in &base {
            for (k, v) in keys {
                cfg.set(&format!("{section}.{k}"), v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `section.key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (section, name) = key
            .split_once('.')
            .ok_or_else(|| Error::config(format!("override {key:?} must look like section.key")))?;
        let v = value.trim();
        match (section, name) {
            ("sensor", "channels") => {
                self.sensor = SensorConfig::new(parse(key, v)?, self.sensor.topology)
                    .map_err(|e| Error::config(e.to_string()))?
            }
            ("sensor", "topology") => self.sensor.topology = parse::<Topology>(key, v)?,
            ("filtration", "enabled") => self.filtration.enabled = parse_bool(key, v)?,
            ("filtration", "div_factor") => self.filtration.div_factor = parse(key, v)?,
            ("filtration", "weight") => self.filtration.weight = parse(key, v)?,
            ("filtration", "threshold.kind") => self.filtration.threshold.kind = parse::<ScheduleKind>(key, v)?,
            ("filtration", "threshold.start") => self.filtration.threshold.start = parse(key, v)?,
            ("filtration", "threshold.end") => self.filtration.threshold.end = parse(key, v)?,
            ("graph", "r_c") => self.graph.r_c = parse(key, v)?,
            ("graph", "skip_step") => self.graph.skip_step = parse(key, v)?,
            ("graph", "r_t_low") => self.graph.r_t_low = parse(key, v)?,
            ("graph", "r_t_high") => self.graph.r_t_high = parse(key, v)?,
            ("model", "weights") => {
                self.model.weights = if v.eq_ignore_ascii_case("random") || v.is_empty() {
                    WeightSource::Random
                } else {
                    WeightSource::File(PathBuf::from(v))
                }
            }
            ("model", "width") => self.model.width = parse(key, v)?,
            ("model", "class_count") => self.model.class_count = parse(key, v)?,
            ("model", "seed") => self.model.seed = parse(key, v)?,
            ("hw", "clock_hz") => self.hw.clock_hz = parse(key, v)?,
            ("hw", "parallel_multipliers") => self.hw.parallel_multipliers = parse(key, v)?,
            ("hw", "cycle_base") => self.hw.cycle_base = parse(key, v)?,
            ("hw", "cycle_per_vertex") => self.hw.cycle_per_vertex = parse(key, v)?,
            ("hw", "fifo_depth") => self.hw.fifo_depth = parse(key, v)?,
            ("hw", "nas_latency_us") => self.hw.nas_latency_us = parse(key, v)?,
            ("hw", "head_latency_us") => self.hw.head_latency_us = parse(key, v)?,
            ("hw", "window_us") => self.hw.window_us = parse(key, v)?,
            ("hw", "closure") => self.hw.closure = parse::<WindowClosure>(key, v)?,
            ("hw", "flush_timeout_us") => self.hw.flush_timeout_us = parse(key, v)?,
            ("io", "format") => {
                if !["auto", "binary", "csv"].contains(&v) {
                    return Err(Error::config(format!("{key} = {v:?}: expected auto, binary or csv")));
                }
                self.io.format = v.to_string()
            }
            ("io", "output") => self.io.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            ("io", "window_us") => self.io.window_us = parse(key, v)?,
            _ if SECTIONS.contains(&section) => return Err(Error::config(format!("unknown key {key:?}"))),
            _ => return Err(Error::config(format!("unknown section in {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order, then revalidates.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override {:?} must look like section.key=value", o.as_ref())))?;
            self.set(k.trim(), v)?;
        }
        self.validate()
    }

    /// Cross-field consistency checks.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::config(e.to_string());
        let channels = self.sensor.channels() as usize;
        if self.filtration.enabled {
            make_thresholds(self.filtration.threshold, channels).map_err(wrap)?;
            self.filtration.params(channels).map_err(wrap)?;
        }
        self.graph.validate().map_err(wrap)?;
        self.hw.validate().map_err(wrap)?;
        if self.model.width == 0 || self.model.class_count == 0 {
            return Err(Error::config("model width and class_count must be positive"));
        }
        if self.io.window_us == 0 {
            return Err(Error::config("io.window_us must be positive"));
        }
        if self.hw.window_us != self.io.window_us {
            return Err(Error::config(format!(
                "hw.window_us ({}) and io.window_us ({}) disagree",
                self.hw.window_us, self.io.window_us
            )));
        }
        Ok(())
    }

    pub fn filtration_params(&self) -> Result<Option<FiltrationParams>> {
        self.filtration.params(self.sensor.channels() as usize)
    }
}

fn split_ini(text: &str) -> Result<(Sections, SweepAxes)> {
    let ini = Ini::load_from_str(text).map_err(|e| Error::config(format!("malformed configuration: {e}")))?;
    let mut base = Sections::new();
    let mut sweep = Vec::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if props.iter().next().is_some() {
                return Err(Error::config("keys outside a [section]"));
            }
            continue;
        };
        let section = section.trim().to_ascii_lowercase();
        if section == SWEEP {
            for (k, v) in props.iter() {
                let values: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                if values.is_empty() {
                    return Err(Error::config(format!("sweep key {k:?} has no values")));
                }
                sweep.push((k.trim().to_string(), values));
            }
            continue;
        }
        if !SECTIONS.contains(&section.as_str()) {
            return Err(Error::config(format!("unknown section [{section}]")));
        }
        let entry = base.entry(section).or_default();
        for (k, v) in props.iter() {
            entry.insert(k.trim().to_string(), v.to_string());
        }
    }
    Ok((base, sweep))
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub settings: BTreeMap<String, String>,
    pub config: RunConfig,
}

/// Cartesian product of `axes` applied on top of `base`. Axes vary in order,
/// the last one fastest.
pub fn expand_sweep(base: &RunConfig, axes: &[(String, Vec<String>)]) -> Result<Vec<SweepPoint>> {
    let mut points = vec![SweepPoint { settings: BTreeMap::new(), config: base.clone() }];
    for (key, values) in axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for v in values {
                let mut cfg = p.config.clone();
                cfg.set(key, v)?;
                let mut settings = p.settings.clone();
                settings.insert(key.clone(), v.clone());
                next.push(SweepPoint { settings, config: cfg });
            }
        }
        points = next;
    }
    for p in &points {
        p.config.validate()?;
    }
    Ok(points)
}

/// Reads the `[sweep]` section of a configuration file.
pub fn sweep_axes(text: &str) -> Result<SweepAxes> {
    Ok(split_ini(text)?.1)
}

/// Parses a command-line sweep spec `key=v1,v2`.
pub fn parse_sweep_arg(arg: &str) -> Result<(String, Vec<String>)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::config(format!("sweep {arg:?} must look like section.key=v1,v2")))?;
    let values: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if values.is_empty() {
        return Err(Error::config(format!("sweep {arg:?} has no values")));
    }
    Ok((k.trim().to_string(), values))
}
