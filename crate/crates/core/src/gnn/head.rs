//! Linear + GRU network head evaluated once per pooled window.

use super::quant::{dot_bias, round_shift, saturate_i32, saturate_i8, sigmoid_q, tanh_q, STATE_FRAC_BITS, STATE_ONE};
use super::weights::{GruBlock, HeadBlock, ModelWeights};
use crate::error::{Error, Result};

/// Hidden state of every GRU block in the head, in units of 1/128.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecurrentState {
    hidden: Vec<Vec<i8>>,
}

impl RecurrentState {
    pub fn new(weights: &ModelWeights) -> Self {
        let hidden = weights
            .head
            .iter()
            .filter_map(|b| match b {
                HeadBlock::Gru(g) => Some(vec![0i8; g.hidden]),
                HeadBlock::Linear(_) => None,
            })
            .collect();
        Self { hidden }
    }

    pub fn reset(&mut self) {
        self.hidden.iter_mut().for_each(|h| h.fill(0));
    }

    pub fn hidden(&self) -> &[Vec<i8>] {
        &self.hidden
    }
}

/// Raw head output split into class logits and the end-of-word confidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadOutput {
    pub logits: Vec<i32>,
    pub conf: i32,
}

fn gate_pre(g: &GruBlock, row: usize, x: &[i8], h: &[i8]) -> i8 {
    let acc = dot_bias(g.w_input.row(row), x, g.bias[row]) as i64 + dot_bias(g.w_hidden.row(row), h, 0) as i64;
    g.requant.apply(saturate_i32(acc))
}

/// One gated-recurrent update.
///
/// `z = σ(Wz x + Uz h + bz)`, `r = σ(Wr x + Ur h + br)`,
/// `n = tanh(Wn x + Un (r ⊙ h) + bn)`, `h' = z ⊙ h + (1 - z) ⊙ n`.
pub fn gru_step(g: &GruBlock, x: &[i8], h: &[i8]) -> Vec<i8> {
    let hs = g.hidden;
    let z: Vec<i32> = (0..hs).map(|k| sigmoid_q(gate_pre(g, k, x, h))).collect();
    let rh: Vec<i8> = (0..hs)
        .map(|k| {
            let r = sigmoid_q(gate_pre(g, hs + k, x, h));
            saturate_i8(round_shift(r as i64 * h[k] as i64, STATE_FRAC_BITS))
        })
        .collect();
    (0..hs)
        .map(|k| {
            let n = tanh_q(gate_pre(g, 2 * hs + k, x, &rh));
            let mix = z[k] as i64 * h[k] as i64 + (STATE_ONE - z[k]) as i64 * n as i64;
            saturate_i8(round_shift(mix, STATE_FRAC_BITS))
        })
        .collect()
}

/// Runs the head blocks in order. Every linear block except the last is
/// followed by a ReLU.
pub fn head_forward(weights: &ModelWeights, pooled: &[i8], state: &mut RecurrentState) -> Result<HeadOutput> {
    let first = weights.head.first().map(HeadBlock::in_width).unwrap_or(0);
    if pooled.len() != first {
        return Err(Error::config(format!(
            "pooled vector has {} values, head expects {first}",
            pooled.len()
        )));
    }
    if state.hidden.len() != weights.head.iter().filter(|b| matches!(b, HeadBlock::Gru(_))).count() {
        return Err(Error::config("recurrent state does not match the head's GRU blocks"));
    }
    let last = weights.head.len() - 1;
    let mut x = pooled.to_vec();
    let mut gru_index = 0;
    for (i, block) in weights.head.iter().enumerate() {
        x = match block {
            HeadBlock::Linear(a) => {
                let relu = i != last;
                (0..a.out_width())
                    .map(|o| {
                        let v = a.requant.apply(dot_bias(a.weight.row(o), &x, a.bias[o]));
                        if relu {
                            v.max(0)
                        } else {
                            v
                        }
                    })
                    .collect()
            }
            HeadBlock::Gru(g) => {
                let h = gru_step(g, &x, &state.hidden[gru_index]);
                state.hidden[gru_index] = h.clone();
                gru_index += 1;
                h
            }
        };
    }
    let class_count = weights.class_count;
    if x.len() != class_count + 1 {
        return Err(Error::config(format!(
            "head emitted {} values, expected {}",
            x.len(),
            class_count + 1
        )));
    }
    Ok(HeadOutput {
        logits: x[..class_count].iter().map(|&v| v as i32).collect(),
        conf: x[class_count] as i32,
    })
}
