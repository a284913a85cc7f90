//! Per-channel decayed-potential event filtration.
//!
//! Every channel keeps an integer potential that decays by one unit per
//! `2^div_factor` µs since that channel's previous event and grows by
//! `weight` on every event. An event passes when the potential reaches the
//! channel's threshold, which resets the potential to zero. Polarity plays no
//! part in the decision.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, EventStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Constant,
    Linear,
    Exponential,
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" | "const" => Ok(ScheduleKind::Constant),
            "linear" | "lin" => Ok(ScheduleKind::Linear),
            "exponential" | "exp" => Ok(ScheduleKind::Exponential),
            other => Err(Error::validation(format!("unknown threshold schedule {other:?}"))),
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::Linear => "linear",
            ScheduleKind::Exponential => "exponential",
        })
    }
}

/// Threshold profile across channels, from `start` at channel 0 down to `end`
/// at the last channel. Constant schedules ignore `end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub kind: ScheduleKind,
    pub start: u32,
    pub end: u32,
}

impl ThresholdSchedule {
    pub fn constant(value: u32) -> Self {
        Self { kind: ScheduleKind::Constant, start: value, end: value }
    }

    pub fn linear(start: u32, end: u32) -> Self {
        Self { kind: ScheduleKind::Linear, start, end }
    }

    pub fn exponential(start: u32, end: u32) -> Self {
        Self { kind: ScheduleKind::Exponential, start, end }
    }
}

/// Expands a schedule into one integer threshold per channel.
///
/// Intermediate values are rounded half-up and clamped to at least 1.
/// Exponential schedules interpolate geometrically between the endpoints.
pub fn make_thresholds(schedule: ThresholdSchedule, channels: usize) -> Result<Vec<u32>> {
    let ThresholdSchedule { kind, start, end } = schedule;
    if start < 1 || (kind != ScheduleKind::Constant && end < 1) {
        return Err(Error::validation(format!(
            "threshold endpoints must be >= 1 (got {start} -> {end})"
        )));
    }
    if kind != ScheduleKind::Constant && start < end {
        return Err(Error::validation(format!(
            "threshold schedules decrease with channel index (got {start} -> {end})"
        )));
    }
    if channels == 0 {
        return Err(Error::validation("channel count must be positive"));
    }
    if channels == 1 {
        return Ok(vec![start]);
    }

    let span = (channels - 1) as u64;
    let out = (0..channels as u64)
        .map(|c| match kind {
            ScheduleKind::Constant => start,
            ScheduleKind::Linear => {
                // start - (start - end) * c / span, rounded half up in exact integers
                let num = start as u64 * span - (start - end) as u64 * c;
                ((2 * num + span) / (2 * span)) as u32
            }
            ScheduleKind::Exponential => {
                let ratio = end as f64 / start as f64;
                let v = start as f64 * ratio.powf(c as f64 / span as f64);
                (v + 0.5).floor() as u32
            }
        })
        .map(|v| v.max(1))
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiltrationParams {
    /// Decay time quantum is `2^div_factor` µs.
    pub div_factor: u32,
    pub weight: u32,
    pub thresholds: Vec<u32>,
}

impl FiltrationParams {
    pub fn new(div_factor: u32, weight: u32, thresholds: Vec<u32>) -> Result<Self> {
        let p = Self { div_factor, weight, thresholds };
        p.validate()?;
        Ok(p)
    }

    pub fn from_schedule(
        div_factor: u32,
        weight: u32,
        schedule: ThresholdSchedule,
        channels: usize,
    ) -> Result<Self> {
        Self::new(div_factor, weight, make_thresholds(schedule, channels)?)
    }

    pub fn validate(&self) -> Result<()> {
        // timestamps are 32-bit, so shifts up to 32 cover every difference
        if self.div_factor > 32 {
            return Err(Error::validation(format!(
                "div_factor {} exceeds the 32-bit timestamp range",
                self.div_factor
            )));
        }
        if self.thresholds.contains(&0) {
            return Err(Error::validation("thresholds must be positive"));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.thresholds.len()
    }
}

/// Per-channel filter memory. Starts with every `t_last` and potential at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationState {
    pub t_last: Vec<u32>,
    pub v: Vec<u32>,
}

impl FiltrationState {
    pub fn new(channels: usize) -> Self {
        Self { t_last: vec![0; channels], v: vec![0; channels] }
    }

    pub fn reset(&mut self) {
        self.t_last.fill(0);
        self.v.fill(0);
    }
}

/// Runs one event through the filter and reports whether it is kept.
pub fn filter_step(state: &mut FiltrationState, event: &Event, params: &FiltrationParams) -> Result<bool> {
    let c = event.c as usize;
    let (Some(&t_last), Some(&theta)) = (state.t_last.get(c), params.thresholds.get(c)) else {
        return Err(Error::validation(format!(
            "channel {} outside the filter's {} channels",
            event.c,
            params.thresholds.len()
        )));
    };
    if event.t < t_last {
        return Err(Error::Ordering(format!(
            "channel {c} saw t={} after t={t_last}",
            event.t
        )));
    }
    let decay = (event.t - t_last) as u64 >> params.div_factor;
    let decayed = (state.v[c] as u64).saturating_sub(decay) as u32;
    let v = decayed.checked_add(params.weight).ok_or_else(|| {
        Error::Overflow(format!("potential of channel {c} overflowed at t={}", event.t))
    })?;
    state.t_last[c] = event.t;
    if v >= theta {
        state.v[c] = 0;
        Ok(true)
    } else {
        state.v[c] = v;
        Ok(false)
    }
}

/// Filters a whole stream, keeping the accepted events in their input order.
pub fn filter_stream(stream: &EventStream, params: &FiltrationParams) -> Result<EventStream> {
    params.validate()?;
    let channels = stream.config.channels() as usize;
    if params.channels() != channels {
        return Err(Error::validation(format!(
            "{} thresholds configured for a {channels}-channel stream",
            params.channels()
        )));
    }
    let mut state = FiltrationState::new(channels);
    let mut kept = Vec::new();
    for ev in &stream.events {
        if filter_step(&mut state, ev, params)? {
            kept.push(*ev);
        }
    }
    Ok(EventStream { events: kept, ..stream.clone_meta() })
}

impl EventStream {
    /// Copy of everything but the events.
    pub(crate) fn clone_meta(&self) -> EventStream {
        EventStream {
            config: self.config,
            events: Vec::new(),
            sample_id: self.sample_id.clone(),
            label: self.label,
            end_of_word_bin: self.end_of_word_bin,
        }
    }
}
