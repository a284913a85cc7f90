//! Cycle-level model of the hardware pipeline.
//!
//! The convolution stage spends `c0 + c1 * (1 + E)` clock cycles on an event
//! with `E` edges. Events wait in a bounded FIFO in front of it. Window
//! predictions are produced by a separate head stage after the window closes.

mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sim::{
    latency_report, simulate, EventTrace, LatencyReport, LatencyStats, SimEvent, SimTrace, WindowTrace,
    ENVELOPE_BEST_US, ENVELOPE_WORST_US, WINDOW_BOUND_US,
};

pub const DEFAULT_CLOCK_HZ: u64 = 200_000_000;
pub const DEFAULT_MIN_LATENCY_US: f64 = 0.47;
pub const DEFAULT_MAX_LATENCY_US: f64 = 4.07;
pub const DEFAULT_MAX_EDGES: u32 = 20;

/// How the open window is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowClosure {
    /// A window closes at its end on a free-running counter, or when its last
    /// event leaves the convolution stage if that is later.
    #[default]
    FreeRunning,
    /// A window closes when the first event of a later window leaves the
    /// convolution stage. The last window of a stream closes on a flush
    /// `flush_timeout_us` after its end.
    EventDriven,
}

impl std::str::FromStr for WindowClosure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "free_running" | "counter" => Ok(Self::FreeRunning),
            "event_driven" | "timestamp" => Ok(Self::EventDriven),
            other => Err(Error::config(format!("unknown window closure {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwParams {
    pub clock_hz: u64,
    pub parallel_multipliers: u32,
    /// `c0`
    pub cycle_base: u32,
    /// `c1`
    pub cycle_per_vertex: u32,
    /// Events that may wait in front of the convolution stage.
    pub fifo_depth: usize,
    pub nas_latency_us: f64,
    pub head_latency_us: f64,
    pub window_us: u32,
    pub closure: WindowClosure,
    pub flush_timeout_us: f64,
}

impl Default for HwParams {
    fn default() -> Self {
        Self {
            clock_hz: DEFAULT_CLOCK_HZ,
            parallel_multipliers: 2,
            cycle_base: 58,
            cycle_per_vertex: 36,
            fifo_depth: 1024,
            nas_latency_us: 23.0,
            head_latency_us: 2.11,
            window_us: 10_000,
            closure: WindowClosure::FreeRunning,
            flush_timeout_us: 0.0,
        }
    }
}

impl HwParams {
    pub fn validate(&self) -> Result<()> {
        if self.clock_hz == 0 {
            return Err(Error::validation("clock_hz must be positive"));
        }
        if self.cycle_base == 0 || self.cycle_per_vertex == 0 {
            return Err(Error::validation("cycle constants must be positive"));
        }
        if self.parallel_multipliers == 0 {
            return Err(Error::validation("parallel_multipliers must be positive"));
        }
        if self.window_us == 0 {
            return Err(Error::validation("window_us must be positive"));
        }
        for (name, v) in [
            ("nas_latency_us", self.nas_latency_us),
            ("head_latency_us", self.head_latency_us),
            ("flush_timeout_us", self.flush_timeout_us),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }

    pub fn cycles(&self, edges: u32) -> u64 {
        self.cycle_base as u64 + self.cycle_per_vertex as u64 * (1 + edges as u64)
    }

    /// Convolution-stage occupancy for an event with `edges` edges, µs.
    pub fn latency_us(&self, edges: u32) -> f64 {
        self.cycles(edges) as f64 * 1e6 / self.clock_hz as f64
    }

    /// Per-vertex cycles implied by a feature width split across the
    /// parallel multipliers.
    pub fn vertex_cycles_for_width(&self, width: u32) -> u32 {
        width.div_ceil(self.parallel_multipliers)
    }
}

/// Result of fitting the affine cycle model to two latency endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub cycle_base: u32,
    pub cycle_per_vertex: u32,
    /// Fitted minus requested cycles at `E = 0`.
    pub residual_min_cycles: f64,
    /// Fitted minus requested cycles at `E = max_edges`.
    pub residual_max_cycles: f64,
}

impl Calibration {
    pub fn is_exact(&self) -> bool {
        self.residual_min_cycles.abs() < 1e-9 && self.residual_max_cycles.abs() < 1e-9
    }
}

/// Solves `latency(0) = min`, `latency(max_edges) = max` for integer `c0`, `c1`.
pub fn calibrate_cycle_model(min_latency_us: f64, max_latency_us: f64, max_edges: u32, clock_hz: u64) -> Result<Calibration> {
    if !(min_latency_us > 0.0 && max_latency_us > min_latency_us) {
        return Err(Error::validation(format!(
            "need 0 < min latency < max latency, got {min_latency_us} and {max_latency_us}"
        )));
    }
    if max_edges == 0 {
        return Err(Error::validation("max_edges must be at least 1"));
    }
    if clock_hz == 0 {
        return Err(Error::validation("clock_hz must be positive"));
    }
    let lo = min_latency_us * clock_hz as f64 / 1e6;
    let hi = max_latency_us * clock_hz as f64 / 1e6;
    let c1 = ((hi - lo) / max_edges as f64).round();
    let c0 = (lo - c1).round();
    if c1 < 1.0 || c0 < 1.0 {
        return Err(Error::validation(format!(
            "endpoints give non-positive cycle constants (c0 = {c0}, c1 = {c1})"
        )));
    }
    Ok(Calibration {
        cycle_base: c0 as u32,
        cycle_per_vertex: c1 as u32,
        residual_min_cycles: c0 + c1 - lo,
        residual_max_cycles: c0 + c1 * (1.0 + max_edges as f64) - hi,
    })
}

/// Peak and worst-case sustained event rates, events per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub max_eps: f64,
    pub min_eps: f64,
}

pub fn throughput_envelope(params: &HwParams, max_edges: u32) -> Envelope {
    let clock = params.clock_hz as f64;
    Envelope {
        max_eps: clock / params.cycles(0) as f64,
        min_eps: clock / params.cycles(max_edges) as f64,
    }
}
