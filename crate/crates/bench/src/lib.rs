//! Shared inputs for the pipeline benchmarks in `benches/`.

use naskws::event::synth_stream;
use naskws::{EventStream, SensorConfig};

/// A 64-channel stream at roughly `kev_per_s` thousand events per second,
/// with rates falling off towards the high channels.
pub fn sample_stream(seed: u64, duration_us: u32, kev_per_s: f64) -> EventStream {
    let shape: Vec<f64> = (0..64).map(|c| 1.0 / (1.0 + c as f64 / 16.0)).collect();
    let total: f64 = shape.iter().sum();
    let rates: Vec<f64> = shape.iter().map(|s| s / total * kev_per_s * 1e3).collect();
    synth_stream(seed, SensorConfig::default(), duration_us, &rates).expect("valid synthetic profile")
}
