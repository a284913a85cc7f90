//! Glue between the front end and the hardware model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::event::EventStream;
use crate::filtration::{filter_step, FiltrationParams, FiltrationState};
use crate::graph::{GraphBuilder, GraphParams};
use crate::hw::SimEvent;

/// Filters `stream` and replays the graph builder, returning each accepted
/// event's timestamp and edge count.
pub fn replay_edges(stream: &EventStream, graph: GraphParams, filtration: Option<&FiltrationParams>) -> Result<Vec<SimEvent>> {
    stream.validate()?;
    let channels = stream.config.channels() as usize;
    let mut builder = GraphBuilder::new(channels, graph)?;
    let mut state = FiltrationState::new(channels);
    let mut out = Vec::new();
    for ev in &stream.events {
        if let Some(p) = filtration {
            if !filter_step(&mut state, ev, p)? {
                continue;
            }
        }
        let edges = builder.insert_event(*ev)?.len() as u32;
        out.push(SimEvent { t: ev.t, edges });
    }
    Ok(out)
}

/// Poisson arrivals at `rate_eps` events per second over `duration_us`, each
/// with an edge count drawn uniformly from `edges`.
pub fn synthetic_load(
    seed: u64,
    rate_eps: f64,
    duration_us: u32,
    edges: std::ops::RangeInclusive<u32>,
) -> Result<Vec<SimEvent>> {
    if !(rate_eps.is_finite() && rate_eps > 0.0) {
        return Err(Error::validation(format!("load rate must be positive, got {rate_eps}")));
    }
    if edges.is_empty() {
        return Err(Error::validation("edge range is empty"));
    }
    let gap = Exp::new(rate_eps * 1e-6).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut t = rng.sample(gap);
    while t < duration_us as f64 {
        out.push(SimEvent { t: t as u32, edges: rng.random_range(edges.clone()) });
        t += rng.sample(gap);
    }
    Ok(out)
}
