//! Incremental, time-directed event graph.
//!
//! The builder keeps the most recent accepted event of every channel. A new
//! event on channel `c` links to the retained event of each channel `c'` with
//! `0 < |c' - c| <= r_c` and `(c' - c) % skip_step == 0`, provided the edge's
//! age `Δt = t - t'` lies in `[r_t_low, r_t_high]`. The event's own channel
//! position is the self-loop, which the convolution adds separately, so a
//! neighbourhood holds at most `2 * floor(r_c / skip_step)` edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Event;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphParams {
    /// Channel radius.
    pub r_c: u16,
    pub skip_step: u16,
    /// Inclusive lower bound on edge age, µs.
    pub r_t_low: u32,
    /// Inclusive upper bound on edge age, µs.
    pub r_t_high: u32,
}

/// Channel radius 20 with skip step 2 and a 2–10 ms time band: at most 20
/// edges per event.
impl Default for GraphParams {
    fn default() -> Self {
        Self { r_c: 20, skip_step: 2, r_t_low: 2_000, r_t_high: 10_000 }
    }
}

impl GraphParams {
    pub fn new(r_c: u16, skip_step: u16, r_t_low: u32, r_t_high: u32) -> Result<Self> {
        let p = Self { r_c, skip_step, r_t_low, r_t_high };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.skip_step == 0 {
            return Err(Error::validation("skip_step must be >= 1"));
        }
        if self.r_t_low > self.r_t_high {
            return Err(Error::validation(format!(
                "r_t_low ({}) exceeds r_t_high ({})",
                self.r_t_low, self.r_t_high
            )));
        }
        Ok(())
    }

    /// Largest possible neighbour count.
    pub fn max_degree(&self) -> usize {
        2 * (self.r_c / self.skip_step) as usize
    }

    /// Signed channel offsets probed around a centre channel, ascending.
    fn offsets(&self) -> impl Iterator<Item = i32> + '_ {
        let reach = (self.r_c / self.skip_step) as i32;
        let step = self.skip_step as i32;
        (-reach..=reach).filter(|&k| k != 0).map(move |k| k * step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbor {
    pub event: Event,
    /// `neighbor.c - center.c`
    pub dc: i32,
    /// `center.t - neighbor.t`, never negative.
    pub dt: u32,
}

/// Edges of one new event, sorted by channel offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub center: Event,
    pub neighbors: Vec<Neighbor>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// One JSON line `{t, c, neighbors: [{c, dt}]}` for debug dumps.
    pub fn to_json_line(&self) -> String {
        let neighbors: Vec<_> = self
            .neighbors
            .iter()
            .map(|n| serde_json::json!({ "c": n.event.c, "dt": n.dt }))
            .collect();
        serde_json::json!({ "t": self.center.t, "c": self.center.c, "neighbors": neighbors }).to_string()
    }
}

/// Memory entry for the latest event on one channel, with the per-layer
/// input features computed for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub event: Event,
    pub features: Vec<Vec<i8>>,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct GraphBuilder {
    params: GraphParams,
    memory: Vec<Option<NodeRecord>>,
    last_t: Option<u32>,
}

impl GraphBuilder {
    pub fn new(channels: usize, params: GraphParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, memory: vec![None; channels], last_t: None })
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn reset(&mut self) {
        self.memory.iter_mut().for_each(|m| *m = None);
        self.last_t = None;
    }

    pub fn record(&self, channel: u16) -> Option<&NodeRecord> {
        self.memory.get(channel as usize).and_then(|r| r.as_ref()).filter(|r| r.valid)
    }

    /// Computes the neighbourhood of `event` without storing it.
    pub fn neighbors(&self, event: &Event) -> Result<NeighborSet> {
        self.check(event)?;
        let center = event.c as i32;
        let neighbors = self
            .params
            .offsets()
            .filter_map(|dc| {
                let c = center + dc;
                if c < 0 || c as usize >= self.memory.len() {
                    return None;
                }
                let rec = self.memory[c as usize].as_ref().filter(|r| r.valid)?;
                let dt = event.t - rec.event.t;
                (self.params.r_t_low..=self.params.r_t_high)
                    .contains(&dt)
                    .then_some(Neighbor { event: rec.event, dc, dt })
            })
            .collect();
        Ok(NeighborSet { center: *event, neighbors })
    }

    /// Stores `event` as the latest on its channel, overwriting the previous one.
    pub fn commit(&mut self, event: Event, features: Vec<Vec<i8>>) -> Result<()> {
        self.check(&event)?;
        self.memory[event.c as usize] = Some(NodeRecord { event, features, valid: true });
        self.last_t = Some(event.t);
        Ok(())
    }

    /// Neighbourhood query followed by a featureless commit.
    pub fn insert_event(&mut self, event: Event) -> Result<NeighborSet> {
        let set = self.neighbors(&event)?;
        self.commit(event, Vec::new())?;
        Ok(set)
    }

    fn check(&self, event: &Event) -> Result<()> {
        if event.c as usize >= self.memory.len() {
            return Err(Error::validation(format!(
                "channel {} outside the builder's {} channels",
                event.c,
                self.memory.len()
            )));
        }
        if let Some(last) = self.last_t {
            if event.t < last {
                return Err(Error::Ordering(format!(
                    "graph insert at t={} after t={last}",
                    event.t
                )));
            }
        }
        Ok(())
    }
}

/// Reference neighbourhood computed by scanning the whole history.
///
/// For each qualifying channel the most recent event in `history` is found;
/// it becomes a neighbour when its age lies in the time window.
pub fn brute_force_neighbors(history: &[Event], event: &Event, params: &GraphParams) -> NeighborSet {
    let mut neighbors = Vec::new();
    let reach = params.r_c as i32;
    for dc in -reach..=reach {
        if dc == 0 || dc % params.skip_step as i32 != 0 {
            continue;
        }
        let c = event.c as i32 + dc;
        if c < 0 {
            continue;
        }
        if let Some(prev) = history.iter().rev().find(|h| h.c as i32 == c) {
            let dt = event.t as i64 - prev.t as i64;
            if dt >= params.r_t_low as i64 && dt <= params.r_t_high as i64 {
                neighbors.push(Neighbor { event: *prev, dc, dt: dt as u32 });
            }
        }
    }
    NeighborSet { center: *event, neighbors }
}
