//! Sensor events, streams and sensor configuration.
//!
//! An event is the `(t, c, p)` tuple emitted by the auditory sensor after
//! timestamping: a microsecond timestamp, a frequency channel index and a
//! polarity. A stream is one recorded sample: a time-sorted event sequence
//! plus optional ground truth used by evaluation.

mod codec;
mod stats;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use codec::{decode_binary, encode_binary, read_csv, read_stream, write_csv, write_stream, Format};
pub use stats::{compute_stats, ChannelStat, StatsReport, StreamStats, WindowStat, DEFAULT_WINDOW_US};
pub use synth::synth_stream;

/// Channel counts the sensor can be synthesized with.
pub const SUPPORTED_CHANNELS: [u16; 3] = [32, 64, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
#[repr(i8)]
pub enum Polarity {
    Negative = -1,
    Positive = 1,
}

impl Polarity {
    pub fn as_i8(self) -> i8 {
        self as i8
    }
}

impl TryFrom<i8> for Polarity {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Polarity::Negative),
            1 => Ok(Polarity::Positive),
            other => Err(Error::validation(format!("polarity must be -1 or +1, got {other}"))),
        }
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        p.as_i8()
    }
}

/// One sensor output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    /// Timestamp in microseconds.
    pub t: u32,
    /// Frequency channel index.
    pub c: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: u32, c: u16, p: Polarity) -> Self {
        Self { t, c, p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Cascade,
    Parallel,
}

impl Topology {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Topology::Cascade => 0,
            Topology::Parallel => 1,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Topology::Cascade),
            1 => Some(Topology::Parallel),
            _ => None,
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Cascade => "cascade",
            Topology::Parallel => "parallel",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cascade" | "serial" => Ok(Topology::Cascade),
            "parallel" => Ok(Topology::Parallel),
            other => Err(Error::validation(format!("unknown topology {other:?}"))),
        }
    }
}

/// Channel count and filter-bank topology of the sensor that produced a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSensorConfig")]
pub struct SensorConfig {
    channels: u16,
    pub topology: Topology,
}

#[derive(Deserialize)]
struct RawSensorConfig {
    channels: u16,
    topology: Topology,
}

impl TryFrom<RawSensorConfig> for SensorConfig {
    type Error = Error;

    fn try_from(raw: RawSensorConfig) -> Result<Self> {
        SensorConfig::new(raw.channels, raw.topology)
    }
}

impl SensorConfig {
    pub fn new(channels: u16, topology: Topology) -> Result<Self> {
        if !SUPPORTED_CHANNELS.contains(&channels) {
            return Err(Error::validation(format!(
                "unsupported channel count {channels}; expected one of {SUPPORTED_CHANNELS:?}"
            )));
        }
        Ok(Self { channels, topology })
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }
}

/// 64 channels, cascade topology.
impl Default for SensorConfig {
    fn default() -> Self {
        Self { channels: 64, topology: Topology::Cascade }
    }
}

impl fmt::Display for SensorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.channels, self.topology)
    }
}

/// One recorded sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub config: SensorConfig,
    pub events: Vec<Event>,
    pub sample_id: String,
    /// Ground-truth class id, when known.
    pub label: Option<u32>,
    /// Ground-truth end-of-word bin (10 ms units), when known.
    pub end_of_word_bin: Option<u32>,
}

impl EventStream {
    pub fn new(config: SensorConfig, events: Vec<Event>) -> Self {
        Self {
            config,
            events,
            sample_id: String::new(),
            label: None,
            end_of_word_bin: None,
        }
    }

    pub fn with_sample_id(mut self, id: impl Into<String>) -> Self {
        self.sample_id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Checks channel bounds and timestamp ordering.
    pub fn validate(&self) -> Result<()> {
        validate_events(&self.events, self.config.channels())
    }
}

pub(crate) fn validate_event(ev: &Event, channels: u16) -> Result<()> {
    if ev.c >= channels {
        return Err(Error::validation(format!(
            "event at t={} has channel {} but the sensor has {channels} channels",
            ev.t, ev.c
        )));
    }
    Ok(())
}

pub(crate) fn validate_events(events: &[Event], channels: u16) -> Result<()> {
    let mut last = 0u32;
    for (i, ev) in events.iter().enumerate() {
        validate_event(ev, channels)?;
        if ev.t < last {
            return Err(Error::Ordering(format!(
                "event {i} has t={} after an event with t={last}",
                ev.t
            )));
        }
        last = ev.t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensor_config_rejects_unsupported_counts() {
        assert!(SensorConfig::new(64, Topology::Cascade).is_ok());
        assert!(SensorConfig::new(48, Topology::Cascade).is_err());
        assert!(SensorConfig::new(0, Topology::Parallel).is_err());
    }

    #[test]
    fn polarity_conversion() {
        assert_eq!(Polarity::try_from(1).unwrap(), Polarity::Positive);
        assert_eq!(Polarity::try_from(-1).unwrap(), Polarity::Negative);
        assert!(Polarity::try_from(0).is_err());
        assert_eq!(i8::from(Polarity::Negative), -1);
    }

    #[test]
    fn validate_catches_order_and_bounds() {
        let cfg = SensorConfig::new(32, Topology::Parallel).unwrap();
        let ok = EventStream::new(
            cfg,
            vec![Event::new(0, 0, Polarity::Positive), Event::new(0, 31, Polarity::Negative)],
        );
        assert!(ok.validate().is_ok());

        let bad_c = EventStream::new(cfg, vec![Event::new(0, 32, Polarity::Positive)]);
        assert!(matches!(bad_c.validate(), Err(Error::Validation(_))));

        let bad_t = EventStream::new(
            cfg,
            vec![Event::new(5, 0, Polarity::Positive), Event::new(4, 0, Polarity::Positive)],
        );
        assert!(matches!(bad_t.validate(), Err(Error::Ordering(_))));
    }

    #[test]
    fn topology_parses_case_insensitively() {
        assert_eq!("Parallel".parse::<Topology>().unwrap(), Topology::Parallel);
        assert_eq!("cascade".parse::<Topology>().unwrap(), Topology::Cascade);
        assert!("ring".parse::<Topology>().is_err());
    }
}
