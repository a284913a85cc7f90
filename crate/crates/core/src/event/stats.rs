use serde::{Deserialize, Serialize};

use super::EventStream;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW_US: u32 = 10_000;

/// Samples whose first-to-last span is shorter than this are left out of
/// rate statistics.
pub const MIN_RATE_SPAN_US: u32 = 1_000;

/// Dataset statistics over a set of samples from one sensor configuration.
///
/// Rates are per sample: `(n - 1) / (t_last - t_first)`, i.e. the number of
/// inter-event intervals over the recorded span. Windows are aligned at
/// `t = 0` of each sample and run through the window holding its last event.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamStats {
    pub samples: usize,
    pub total_events: u64,
    pub events_per_sample_avg: f64,
    pub events_per_sample_std: f64,
    pub events_per_sample_max: u64,
    /// Samples that entered rate aggregation.
    pub rate_samples: usize,
    /// kEv/s
    pub events_per_second_avg: f64,
    /// kEv/s
    pub events_per_second_max: f64,
    pub per_channel_mean: Vec<f64>,
    pub per_channel_std: Vec<f64>,
    pub window_us: u32,
    pub events_per_window_avg: f64,
    pub events_per_window_max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStat {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStat {
    pub avg: f64,
    pub max: u64,
}

/// JSON shape of [`StreamStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub samples: usize,
    pub total_events: u64,
    pub events_per_sample: SampleStat,
    pub kev_per_s_avg: f64,
    pub kev_per_s_max: f64,
    pub rate_samples: usize,
    pub per_channel: Vec<ChannelStat>,
    pub window_us: u32,
    pub per_window: WindowStat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStat {
    pub avg: f64,
    pub std: f64,
    pub max: u64,
}

impl StreamStats {
    pub fn to_report(&self) -> StatsReport {
        StatsReport {
            samples: self.samples,
            total_events: self.total_events,
            events_per_sample: SampleStat {
                avg: self.events_per_sample_avg,
                std: self.events_per_sample_std,
                max: self.events_per_sample_max,
            },
            kev_per_s_avg: self.events_per_second_avg,
            kev_per_s_max: self.events_per_second_max,
            rate_samples: self.rate_samples,
            per_channel: self
                .per_channel_mean
                .iter()
                .zip(&self.per_channel_std)
                .map(|(&mean, &std)| ChannelStat { mean, std })
                .collect(),
            window_us: self.window_us,
            per_window: WindowStat {
                avg: self.events_per_window_avg,
                max: self.events_per_window_max,
            },
        }
    }
}

pub fn compute_stats(streams: &[EventStream], window_us: u32) -> Result<StreamStats> {
    let first = streams
        .first()
        .ok_or_else(|| Error::validation("statistics need at least one stream"))?;
    if window_us == 0 {
        return Err(Error::validation("window width must be positive"));
    }
    let config = first.config;
    let channels = config.channels() as usize;
    if let Some(s) = streams.iter().find(|s| s.config != config) {
        return Err(Error::validation(format!(
            "sample {:?} was recorded with {} but the set uses {config}",
            s.sample_id, s.config
        )));
    }

    let k = streams.len() as u128;
    let mut ch_sum = vec![0u128; channels];
    let mut ch_sq = vec![0u128; channels];
    let mut counts = Vec::with_capacity(streams.len());
    let mut rates = Vec::new();
    let mut windows_total = 0u64;
    let mut window_max = 0u64;

    for s in streams {
        let mut per_ch = vec![0u64; channels];
        for ev in &s.events {
            per_ch[ev.c as usize] += 1;
        }
        for (c, &n) in per_ch.iter().enumerate() {
            ch_sum[c] += n as u128;
            ch_sq[c] += (n as u128) * (n as u128);
        }
        let n = s.events.len() as u64;
        counts.push(n);

        if let (Some(a), Some(b)) = (s.events.first(), s.events.last()) {
            let span = b.t - a.t;
            if n >= 2 && span >= MIN_RATE_SPAN_US {
                // (n-1) intervals per span, in kEv/s
                rates.push((n - 1) as f64 * 1_000.0 / span as f64);
            }
            windows_total += (b.t / window_us) as u64 + 1;
            window_max = window_max.max(max_window_count(s, window_us));
        }
    }

    let (ch_mean, ch_std): (Vec<f64>, Vec<f64>) =
        ch_sum.iter().zip(&ch_sq).map(|(&s, &q)| mean_std(s, q, k)).unzip();

    let total: u64 = counts.iter().sum();
    let count_sq: u128 = counts.iter().map(|&n| (n as u128) * (n as u128)).sum();
    let (sample_avg, sample_std) = mean_std(total as u128, count_sq, k);

    // sorted summation keeps the result independent of sample order
    rates.sort_by(f64::total_cmp);
    let rate_avg = if rates.is_empty() {
        0.0
    } else {
        rates.iter().sum::<f64>() / rates.len() as f64
    };

    Ok(StreamStats {
        samples: streams.len(),
        total_events: total,
        events_per_sample_avg: sample_avg,
        events_per_sample_std: sample_std,
        events_per_sample_max: counts.iter().copied().max().unwrap_or(0),
        rate_samples: rates.len(),
        events_per_second_avg: rate_avg,
        events_per_second_max: rates.last().copied().unwrap_or(0.0),
        per_channel_mean: ch_mean,
        per_channel_std: ch_std,
        window_us,
        events_per_window_avg: if windows_total == 0 {
            0.0
        } else {
            total as f64 / windows_total as f64
        },
        events_per_window_max: window_max,
    })
}

/// Population mean and standard deviation from exact integer moments.
fn mean_std(sum: u128, sum_sq: u128, k: u128) -> (f64, f64) {
    let mean = sum as f64 / k as f64;
    let var_num = k * sum_sq - sum * sum;
    let std = ((var_num as f64) / ((k * k) as f64)).sqrt();
    (mean, std)
}

fn max_window_count(s: &EventStream, window_us: u32) -> u64 {
    let mut best = 0u64;
    let mut cur_window = u32::MAX;
    let mut cur = 0u64;
    for ev in &s.events {
        let w = ev.t / window_us;
        if w != cur_window {
            cur_window = w;
            cur = 0;
        }
        cur += 1;
        best = best.max(cur);
    }
    best
}
