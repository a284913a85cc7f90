//! Symmetric 8-bit fixed-point arithmetic.
//!
//! Tensors are int8 with zero point 0. Affine layers accumulate into a
//! saturating 32-bit accumulator, then requantize by an integer multiplier and
//! a rounding right shift (`round half up`), saturating to `[-128, 127]`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantTensor {
    pub data: Vec<i8>,
    pub shape: Vec<usize>,
    pub scale: f32,
    pub zero_point: i32,
}

impl QuantTensor {
    pub fn new(data: Vec<i8>, shape: Vec<usize>, scale: f32) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::validation(format!(
                "tensor of shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::validation(format!("tensor scale must be positive, got {scale}")));
        }
        Ok(Self { data, shape, scale, zero_point: 0 })
    }

    pub fn vector(data: Vec<i8>) -> Self {
        let n = data.len();
        Self { data, shape: vec![n], scale: 1.0, zero_point: 0 }
    }

    pub fn dequantize(&self) -> Vec<f32> {
        self.data
            .iter()
            .map(|&q| self.scale * (q as i32 - self.zero_point) as f32)
            .collect()
    }

    /// Row `r` of a 2-D tensor.
    pub fn row(&self, r: usize) -> &[i8] {
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }
}

/// Integer output rescaling: `round(acc * num / 2^shift)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requant {
    pub scale_num: i32,
    pub scale_shift: u32,
}

impl Requant {
    pub const MAX_SHIFT: u32 = 31;

    pub fn new(scale_num: i32, scale_shift: u32) -> Result<Self> {
        if scale_num <= 0 {
            return Err(Error::validation(format!("scale_num must be positive, got {scale_num}")));
        }
        if scale_shift > Self::MAX_SHIFT {
            return Err(Error::validation(format!(
                "scale_shift {scale_shift} exceeds {}",
                Self::MAX_SHIFT
            )));
        }
        Ok(Self { scale_num, scale_shift })
    }

    pub fn apply(&self, acc: i32) -> i8 {
        let scaled = acc as i64 * self.scale_num as i64;
        saturate_i8(round_shift(scaled, self.scale_shift))
    }
}

/// Arithmetic right shift rounding half up.
pub fn round_shift(v: i64, shift: u32) -> i64 {
    if shift == 0 {
        v
    } else {
        (v + (1i64 << (shift - 1))) >> shift
    }
}

pub fn saturate_i8(v: i64) -> i8 {
    v.clamp(i8::MIN as i64, i8::MAX as i64) as i8
}

pub fn saturate_i32(v: i64) -> i32 {
    v.clamp(i32::MIN as i64, i32::MAX as i64) as i32
}

/// `bias + row · input` with a saturating 32-bit result.
pub fn dot_bias(row: &[i8], input: &[i8], bias: i32) -> i32 {
    debug_assert_eq!(row.len(), input.len());
    // each chunk's partial sum stays below 2^30 in magnitude
    let sum: i64 = row
        .chunks(1 << 16)
        .zip(input.chunks(1 << 16))
        .map(|(r, x)| r.iter().zip(x).map(|(&w, &x)| w as i32 * x as i32).sum::<i32>() as i64)
        .sum();
    saturate_i32(sum + bias as i64)
}

/// Fractional bits of a gate pre-activation: int8 `q` stands for `q / 16`.
pub const GATE_FRAC_BITS: u32 = 4;
/// Fractional bits of gate outputs and recurrent state: `q / 128`.
pub const STATE_FRAC_BITS: u32 = 7;
pub const STATE_ONE: i32 = 1 << STATE_FRAC_BITS;

fn lut_input(i: usize) -> f64 {
    (i as f64 - 128.0) / (1u32 << GATE_FRAC_BITS) as f64
}

fn sigmoid_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0u8; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            let y = 1.0 / (1.0 + (-lut_input(i)).exp());
            *slot = (y * STATE_ONE as f64 + 0.5).floor().clamp(0.0, STATE_ONE as f64) as u8;
        }
        t
    })
}

fn tanh_table() -> &'static [i8; 256] {
    static TABLE: OnceLock<[i8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0i8; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            let y = lut_input(i).tanh();
            *slot = (y * STATE_ONE as f64 + 0.5).floor().clamp(-128.0, 127.0) as i8;
        }
        t
    })
}

/// Sigmoid of `pre / 16`, in units of 1/128 (0..=128).
pub fn sigmoid_q(pre: i8) -> i32 {
    sigmoid_table()[(pre as i16 + 128) as usize] as i32
}

/// Tanh of `pre / 16`, in units of 1/128 (-128..=127).
pub fn tanh_q(pre: i8) -> i32 {
    tanh_table()[(pre as i16 + 128) as usize] as i32
}
