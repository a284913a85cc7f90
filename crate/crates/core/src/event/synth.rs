use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use super::{Event, EventStream, Polarity, SensorConfig};
use crate::error::{Error, Result};

/// Generates a synthetic stream with independent Poisson arrivals per channel.
///
/// `rates_hz[c]` is the mean event rate of channel `c` in events per second.
/// Arrival times are floored to whole microseconds; events at equal times are
/// ordered by channel.
pub fn synth_stream(
    seed: u64,
    config: SensorConfig,
    duration_us: u32,
    rates_hz: &[f64],
) -> Result<EventStream> {
    let channels = config.channels() as usize;
    if rates_hz.len() != channels {
        return Err(Error::validation(format!(
            "rate profile has {} entries for a {channels}-channel sensor",
            rates_hz.len()
        )));
    }
    if let Some(r) = rates_hz.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(Error::validation(format!("channel rates must be finite and >= 0, got {r}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    for (c, &rate) in rates_hz.iter().enumerate() {
        if rate == 0.0 {
            continue;
        }
        let gap = Exp::new(rate * 1e-6).map_err(|e| Error::validation(e.to_string()))?;
        let mut t = rng.sample(gap);
        while t < duration_us as f64 {
            let p = if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            events.push(Event::new(t as u32, c as u16, p));
            t += rng.sample(gap);
        }
    }
    events.sort_by_key(|e| (e.t, e.c));
    Ok(EventStream::new(config, events).with_sample_id(format!("synth-{seed}")))
}
