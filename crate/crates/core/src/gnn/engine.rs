//! Streaming inference: filtration, graph, convolutions, window pooling, head.

use serde::{Deserialize, Serialize};

use super::conv::{encode_dc, encode_dt, first_layer_inputs, pointnet_conv, ConvInput};
use super::head::{head_forward, RecurrentState};
use super::weights::ModelWeights;
use crate::error::{Error, Result};
use crate::event::{Event, EventStream};
use crate::filtration::{filter_step, FiltrationParams, FiltrationState};
use crate::graph::{GraphBuilder, GraphParams};

pub const DEFAULT_WINDOW_US: u32 = 10_000;

/// Max pooling over fixed windows aligned at `t = 0`.
///
/// Windows close when a later timestamp is observed or on [`flush`]. Windows
/// that saw no update emit the all-zero vector.
///
/// [`flush`]: WindowPool::flush
#[derive(Debug, Clone)]
pub struct WindowPool {
    window_us: u32,
    current: u64,
    running: Vec<i8>,
    started: bool,
    last_t: u32,
}

impl WindowPool {
    pub fn new(width: usize, window_us: u32) -> Result<Self> {
        if window_us == 0 {
            return Err(Error::validation("window length must be positive"));
        }
        Ok(Self { window_us, current: 0, running: vec![0; width], started: false, last_t: 0 })
    }

    pub fn window_us(&self) -> u32 {
        self.window_us
    }

    pub fn reset(&mut self) {
        self.current = 0;
        self.running.fill(0);
        self.started = false;
        self.last_t = 0;
    }

    /// Advances to the window holding `t`, returning every window closed on the way.
    pub fn observe(&mut self, t: u32) -> Result<Vec<(u64, Vec<i8>)>> {
        if self.started && t < self.last_t {
            return Err(Error::Ordering(format!("pool saw t={t} after t={}", self.last_t)));
        }
        self.started = true;
        self.last_t = t;
        let target = (t / self.window_us) as u64;
        let mut closed = Vec::new();
        let width = self.running.len();
        while self.current < target {
            closed.push((self.current, std::mem::replace(&mut self.running, vec![0; width])));
            self.current += 1;
        }
        Ok(closed)
    }

    /// Folds one node output into the open window.
    pub fn update(&mut self, features: &[i8]) -> Result<()> {
        if features.len() != self.running.len() {
            return Err(Error::config(format!(
                "pool width {} but node output has {} values",
                self.running.len(),
                features.len()
            )));
        }
        for (m, &f) in self.running.iter_mut().zip(features) {
            *m = (*m).max(f);
        }
        Ok(())
    }

    /// Closes the open window. Emits nothing if no timestamp was observed.
    pub fn flush(&mut self) -> Option<(u64, Vec<i8>)> {
        if !self.started {
            return None;
        }
        let out = (self.current, self.running.clone());
        self.reset();
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub window: u64,
    pub logits: Vec<i32>,
    pub conf: i32,
    pub class: u32,
}

impl Prediction {
    pub fn new(window: u64, logits: Vec<i32>, conf: i32) -> Self {
        Self { window, class: argmax(&logits) as u32, logits, conf }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("prediction serializes")
    }
}

/// Index of the largest value, first on ties. Empty input gives 0.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-sample counters collected by an [`Engine`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineCounters {
    pub events_in: u64,
    pub events_accepted: u64,
    pub edges: u64,
}

/// Sequential inference state for one stream at a time.
#[derive(Debug, Clone)]
pub struct Engine<'w> {
    weights: &'w ModelWeights,
    filtration: Option<(FiltrationParams, FiltrationState)>,
    graph: GraphBuilder,
    pool: WindowPool,
    recurrent: RecurrentState,
    counters: EngineCounters,
}

impl<'w> Engine<'w> {
    pub fn new(
        weights: &'w ModelWeights,
        channels: usize,
        graph: GraphParams,
        filtration: Option<FiltrationParams>,
    ) -> Result<Self> {
        weights.validate()?;
        let filtration = match filtration {
            Some(p) => {
                p.validate()?;
                if p.channels() != channels {
                    return Err(Error::validation(format!(
                        "filtration has {} thresholds for a {channels}-channel sensor",
                        p.channels()
                    )));
                }
                Some((p, FiltrationState::new(channels)))
            }
            None => None,
        };
        let width = weights.conv.last().map(|c| c.out_width()).unwrap_or(0);
        Ok(Self {
            weights,
            filtration,
            graph: GraphBuilder::new(channels, graph)?,
            pool: WindowPool::new(width, DEFAULT_WINDOW_US)?,
            recurrent: RecurrentState::new(weights),
            counters: EngineCounters::default(),
        })
    }

    /// Clears all per-sample state.
    pub fn reset(&mut self) {
        if let Some((_, state)) = &mut self.filtration {
            state.reset();
        }
        self.graph.reset();
        self.pool.reset();
        self.recurrent.reset();
        self.counters = EngineCounters::default();
    }

    pub fn counters(&self) -> EngineCounters {
        self.counters
    }

    fn predict(&mut self, window: u64, pooled: &[i8]) -> Result<Prediction> {
        let out = head_forward(self.weights, pooled, &mut self.recurrent)?;
        Ok(Prediction::new(window, out.logits, out.conf))
    }

    /// Feeds one raw event. Returns predictions for windows it closed.
    pub fn push(&mut self, event: &Event) -> Result<Vec<Prediction>> {
        let closed = self.pool.observe(event.t)?;
        let mut out = Vec::with_capacity(closed.len());
        for (w, pooled) in closed {
            out.push(self.predict(w, &pooled)?);
        }
        self.counters.events_in += 1;
        if let Some((params, state)) = &mut self.filtration {
            if !filter_step(state, event, params)? {
                return Ok(out);
            }
        }
        self.counters.events_accepted += 1;

        let set = self.graph.neighbors(event)?;
        self.counters.edges += set.len() as u64;
        let mut features = Vec::with_capacity(self.weights.conv.len());
        let mut x = first_layer_inputs(&set);
        for (l, layer) in self.weights.conv.iter().enumerate() {
            let inputs: Vec<ConvInput<'_>> = set
                .neighbors
                .iter()
                .map(|n| {
                    let rec = self.graph.record(n.event.c).expect("neighbour is in memory");
                    ConvInput { features: &rec.features[l], dc: encode_dc(n.dc), dt: encode_dt(n.dt) }
                })
                .collect();
            let next = pointnet_conv(layer, &x, &inputs)?;
            features.push(std::mem::replace(&mut x, next));
        }
        self.graph.commit(*event, features)?;
        self.pool.update(&x)?;
        Ok(out)
    }

    /// Ends the sample: closes the open window and resets all state.
    pub fn finish(&mut self) -> Result<Vec<Prediction>> {
        let last = match self.pool.flush() {
            Some((w, pooled)) => vec![self.predict(w, &pooled)?],
            None => Vec::new(),
        };
        let counters = self.counters;
        self.reset();
        self.counters = counters;
        Ok(last)
    }

    /// Runs a whole stream from a clean state.
    pub fn run(&mut self, stream: &EventStream) -> Result<Vec<Prediction>> {
        self.reset();
        stream.validate()?;
        let mut out = Vec::new();
        for ev in &stream.events {
            out.extend(self.push(ev)?);
        }
        out.extend(self.finish()?);
        Ok(out)
    }
}

/// Full pipeline over one stream with fresh state.
pub fn infer_stream(
    stream: &EventStream,
    weights: &ModelWeights,
    graph: GraphParams,
    filtration: Option<&FiltrationParams>,
) -> Result<Vec<Prediction>> {
    let channels = stream.config.channels() as usize;
    Engine::new(weights, channels, graph, filtration.cloned())?.run(stream)
}
