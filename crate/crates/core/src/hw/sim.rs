//! Discrete-event simulation of the convolution and head stages.
//!
//! Time is kept in integer picoseconds. An event with sensor timestamp `t`
//! reaches the FIFO at `t + nas_latency`. Window `w` covers sensor time
//! `[w W, (w + 1) W)`; its hardware end is `(w + 1) W + nas_latency`, the
//! moment the last event it could contain has arrived.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{HwParams, WindowClosure};
use crate::error::Result;

/// Published best-case end-to-end latency, µs.
pub const ENVELOPE_BEST_US: f64 = 25.0;
/// Published worst-case end-to-end latency, µs.
pub const ENVELOPE_WORST_US: f64 = 42.0;
/// Published worst-case window-to-prediction latency, µs.
pub const WINDOW_BOUND_US: f64 = 18.62;

const PS_PER_US: u64 = 1_000_000;

fn us_to_ps(us: f64) -> u64 {
    (us * PS_PER_US as f64).round() as u64
}

fn ps_to_us(ps: u64) -> f64 {
    ps as f64 / PS_PER_US as f64
}

/// One event entering the graph stage: its sensor timestamp and edge count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: u32,
    pub edges: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTrace {
    pub index: usize,
    pub t: u32,
    pub edges: u32,
    pub arrival_ps: u64,
    /// `None` when the event found the FIFO full.
    pub admit_ps: Option<u64>,
    pub done_ps: Option<u64>,
    /// Events waiting in the FIFO right after this arrival.
    pub queue_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowTrace {
    pub window: u64,
    pub end_ps: u64,
    pub close_ps: u64,
    pub emit_ps: u64,
}

impl WindowTrace {
    /// Prediction time after the window's hardware end, µs.
    pub fn window_to_prediction_us(&self) -> f64 {
        ps_to_us(self.emit_ps - self.end_ps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub params: HwParams,
    pub events: Vec<EventTrace>,
    pub windows: Vec<WindowTrace>,
    pub overflows: usize,
    /// Events that had to wait for the convolution stage.
    pub stalls: usize,
    pub max_queue_depth: usize,
}

impl SimTrace {
    pub fn processed(&self) -> usize {
        self.events.len() - self.overflows
    }

    /// CSV with columns `event_index,arrival_us,admit_us,done_us,edges`.
    /// Dropped events have empty admit and done fields.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("event_index,arrival_us,admit_us,done_us,edges\n");
        let fmt = |v: Option<u64>| v.map(|p| format!("{:.6}", ps_to_us(p))).unwrap_or_default();
        for e in &self.events {
            let _ = writeln!(
                s,
                "{},{:.6},{},{},{}",
                e.index,
                ps_to_us(e.arrival_ps),
                fmt(e.admit_ps),
                fmt(e.done_ps),
                e.edges
            );
        }
        s
    }
}

/// Runs the pipeline over `events`, which must be sorted by `t`.
///
/// One window prediction is produced for every window from 0 through the
/// window of the last event.
pub fn simulate(events: &[SimEvent], params: &HwParams) -> Result<SimTrace> {
    params.validate()?;
    if let Some(w) = events.windows(2).find(|w| w[1].t < w[0].t) {
        return Err(crate::Error::Ordering(format!(
            "simulation input goes back from t={} to t={}",
            w[0].t, w[1].t
        )));
    }
    let nas = us_to_ps(params.nas_latency_us);
    let service_ps = |edges: u32| -> u64 {
        (params.cycles(edges) as u128 * 1_000_000_000_000u128 / params.clock_hz as u128) as u64
    };

    // convolution stage
    let mut trace = Vec::with_capacity(events.len());
    let mut waiting: VecDeque<u64> = VecDeque::new();
    let mut server_free = 0u64;
    let (mut overflows, mut stalls, mut max_depth) = (0, 0, 0);
    for (index, ev) in events.iter().enumerate() {
        let arrival = ev.t as u64 * PS_PER_US + nas;
        while waiting.front().is_some_and(|&a| a <= arrival) {
            waiting.pop_front();
        }
        let (admit, done) = if waiting.len() >= params.fifo_depth {
            overflows += 1;
            (None, None)
        } else {
            let admit = arrival.max(server_free);
            if admit > arrival {
                stalls += 1;
                waiting.push_back(admit);
            }
            server_free = admit + service_ps(ev.edges);
            (Some(admit), Some(server_free))
        };
        max_depth = max_depth.max(waiting.len());
        trace.push(EventTrace {
            index,
            t: ev.t,
            edges: ev.edges,
            arrival_ps: arrival,
            admit_ps: admit,
            done_ps: done,
            queue_depth: waiting.len(),
        });
    }

    // window closure and head stage
    let window_ps = params.window_us as u64 * PS_PER_US;
    let head = us_to_ps(params.head_latency_us);
    let flush = us_to_ps(params.flush_timeout_us);
    let mut windows = Vec::new();
    if let Some(last) = events.last() {
        let last_window = (last.t / params.window_us) as u64;
        let window_of = |e: &EventTrace| (e.t / params.window_us) as u64;
        let mut cursor = 0usize;
        let mut head_free = 0u64;
        let mut prev_close = 0u64;
        for w in 0..=last_window {
            let end = (w + 1) * window_ps + nas;
            // last processed completion inside window w
            let mut last_done = None;
            while cursor < trace.len() && window_of(&trace[cursor]) == w {
                last_done = trace[cursor].done_ps.or(last_done);
                cursor += 1;
            }
            let close = match params.closure {
                WindowClosure::FreeRunning => end.max(last_done.unwrap_or(0)),
                WindowClosure::EventDriven => {
                    let next = trace[cursor..].iter().find_map(|e| e.done_ps);
                    match next {
                        Some(d) => d,
                        None => (end + flush).max(last_done.unwrap_or(0)),
                    }
                }
            }
            .max(prev_close);
            prev_close = close;
            let start = close.max(head_free);
            head_free = start + head;
            windows.push(WindowTrace { window: w, end_ps: end, close_ps: close, emit_ps: head_free });
        }
    }

    Ok(SimTrace {
        params: *params,
        events: trace,
        windows,
        overflows,
        stalls,
        max_queue_depth: max_depth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl LatencyStats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { min, mean: values.iter().sum::<f64>() / values.len() as f64, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub windows: usize,
    pub events: usize,
    pub processed: usize,
    pub overflows: usize,
    pub stalls: usize,
    pub max_queue_depth: usize,
    /// Prediction time minus window end, µs.
    pub window_to_prediction_us: Option<LatencyStats>,
    /// NAS latency plus window-to-prediction, µs.
    pub end_to_end_us: Option<LatencyStats>,
    /// Best case rounds below the published 25 µs.
    pub below_best_case: bool,
    /// Some window exceeded the published 42 µs.
    pub exceeds_worst_case: bool,
    /// Some window-to-prediction latency exceeded 18.62 µs.
    pub exceeds_window_bound: bool,
    pub note: Option<String>,
}

pub fn latency_report(trace: &SimTrace) -> LatencyReport {
    let w2p: Vec<f64> = trace.windows.iter().map(WindowTrace::window_to_prediction_us).collect();
    let e2e: Vec<f64> = w2p.iter().map(|v| v + trace.params.nas_latency_us).collect();
    let w2p_stats = LatencyStats::of(&w2p);
    let e2e_stats = LatencyStats::of(&e2e);
    LatencyReport {
        windows: trace.windows.len(),
        events: trace.events.len(),
        processed: trace.processed(),
        overflows: trace.overflows,
        stalls: trace.stalls,
        max_queue_depth: trace.max_queue_depth,
        window_to_prediction_us: w2p_stats,
        end_to_end_us: e2e_stats,
        below_best_case: e2e_stats.is_some_and(|s| s.min.round() < ENVELOPE_BEST_US),
        exceeds_worst_case: e2e_stats.is_some_and(|s| s.max > ENVELOPE_WORST_US),
        exceeds_window_bound: w2p_stats.is_some_and(|s| s.max > WINDOW_BOUND_US),
        note: trace.windows.is_empty().then(|| "no windows: the trace has no events".to_string()),
    }
}
