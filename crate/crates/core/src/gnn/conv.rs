//! PointNet-style graph convolution over a node's neighbourhood.

use super::quant::{dot_bias, saturate_i8};
use super::weights::{ConvLayer, POSITION_INPUTS};
use crate::error::{Error, Result};
use crate::graph::NeighborSet;

/// Right shift applied to edge ages before 8-bit encoding (µs / 64).
pub const DT_SHIFT: u32 = 6;

/// Channel offset as a positional input.
pub fn encode_dc(dc: i32) -> i8 {
    saturate_i8(dc as i64)
}

/// Neighbour time relative to the centre, `(t_j - t_i) / 64` truncated.
/// Ages are non-negative, so the result lies in `[-128, 0]`.
pub fn encode_dt(dt: u32) -> i8 {
    -((dt >> DT_SHIFT).min(128) as i32) as i8
}

/// Mean neighbour age in units of 64 µs, truncated, saturated at 127.
pub fn encode_mean_dt(sum_dt: u64, count: usize) -> i8 {
    if count == 0 {
        return 0;
    }
    ((sum_dt / count as u64) >> DT_SHIFT).min(127) as i8
}

/// Integer mean rounded half away from zero.
fn round_mean(sum: i64, count: usize) -> i64 {
    let n = count as i64;
    let q = (2 * sum.abs() + n) / (2 * n);
    if sum < 0 {
        -q
    } else {
        q
    }
}

/// Layer-one node features `[mean Δc, mean age, polarity]`.
pub fn first_layer_inputs(set: &NeighborSet) -> Vec<i8> {
    let n = set.neighbors.len();
    let (mean_dc, mean_dt) = if n == 0 {
        (0, 0)
    } else {
        let sum_dc: i64 = set.neighbors.iter().map(|nb| nb.dc as i64).sum();
        let sum_dt: u64 = set.neighbors.iter().map(|nb| nb.dt as u64).sum();
        (saturate_i8(round_mean(sum_dc, n)), encode_mean_dt(sum_dt, n))
    };
    vec![mean_dc, mean_dt, set.center.p.as_i8()]
}

/// One neighbour input to a convolution: its features and relative position.
#[derive(Debug, Clone, Copy)]
pub struct ConvInput<'a> {
    pub features: &'a [i8],
    pub dc: i8,
    pub dt: i8,
}

/// `max over {centre} ∪ neighbours of relu(requant(b + W [x_j, dc_j, dt_j]))`.
///
/// The centre takes part with position `(0, 0)`.
pub fn pointnet_conv(layer: &ConvLayer, center: &[i8], neighbors: &[ConvInput<'_>]) -> Result<Vec<i8>> {
    let width = layer.in_width;
    if center.len() != width {
        return Err(Error::config(format!(
            "conv input has {} features, layer expects {width}",
            center.len()
        )));
    }
    if let Some(bad) = neighbors.iter().find(|n| n.features.len() != width) {
        return Err(Error::config(format!(
            "neighbour has {} features, layer expects {width}",
            bad.features.len()
        )));
    }
    let out = layer.out_width();
    let mut result = vec![0i8; out];
    let mut concat = vec![0i8; width + POSITION_INPUTS];
    let self_input = ConvInput { features: center, dc: 0, dt: 0 };
    for input in std::iter::once(&self_input).chain(neighbors) {
        concat[..width].copy_from_slice(input.features);
        concat[width] = input.dc;
        concat[width + 1] = input.dt;
        for (o, slot) in result.iter_mut().enumerate() {
            let acc = dot_bias(layer.phi.weight.row(o), &concat, layer.phi.bias[o]);
            let z = layer.phi.requant.apply(acc).max(0);
            if z > *slot {
                *slot = z;
            }
        }
    }
    Ok(result)
}
