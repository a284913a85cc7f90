//! Model parameters and the JSON weight-file container.
//!
//! ```json
//! { "version": 1, "class_count": 12, "conv_widths": [72, 72, 72, 72],
//!   "blocks": [ { "kind": "conv", "in": 5, "out": 72, "scale_num": 1, "scale_shift": 5,
//!                 "weight": "<base64 int8, row-major out x in>", "bias": [..] }, ... ] }
//! ```
//!
//! The four `conv` blocks come first. For a conv block `in` counts the two
//! relative-position inputs. A `gru` block with hidden size `out` stores the
//! input matrix `[z; r; n]` (`3*out x in`) followed by the recurrent matrix
//! (`3*out x out`) in one weight blob, and `3*out` biases.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::quant::{QuantTensor, Requant};
use crate::error::{Error, Result};

pub const WEIGHT_FILE_VERSION: u32 = 1;
pub const CONV_LAYERS: usize = 4;
/// Layer-one node features: mean neighbour channel offset, mean neighbour
/// age and polarity.
pub const FIRST_LAYER_FEATURES: usize = 3;
/// Relative channel and time inputs appended at every conv layer.
pub const POSITION_INPUTS: usize = 2;
pub const DEFAULT_WIDTH: usize = 72;
pub const DEFAULT_CLASS_COUNT: usize = 12;

/// Quantized affine map `requant(bias + W x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    /// `[out x in]`
    pub weight: QuantTensor,
    pub bias: Vec<i32>,
    pub requant: Requant,
}

impl Affine {
    pub fn in_width(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn out_width(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.data.len() + self.bias.len()
    }
}

/// One graph convolution. `phi.in_width()` is `in_width + POSITION_INPUTS`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_width: usize,
    pub phi: Affine,
}

impl ConvLayer {
    pub fn out_width(&self) -> usize {
        self.phi.out_width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruBlock {
    pub hidden: usize,
    /// `[3*hidden x input]`, gate rows ordered update, reset, candidate.
    pub w_input: QuantTensor,
    /// `[3*hidden x hidden]`
    pub w_hidden: QuantTensor,
    pub bias: Vec<i32>,
    /// Rescales gate accumulators into the LUT input domain.
    pub requant: Requant,
}

impl GruBlock {
    pub fn input(&self) -> usize {
        self.w_input.shape[1]
    }

    pub fn parameter_count(&self) -> usize {
        self.w_input.data.len() + self.w_hidden.data.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeadBlock {
    Linear(Affine),
    Gru(GruBlock),
}

impl HeadBlock {
    pub fn in_width(&self) -> usize {
        match self {
            HeadBlock::Linear(a) => a.in_width(),
            HeadBlock::Gru(g) => g.input(),
        }
    }

    pub fn out_width(&self) -> usize {
        match self {
            HeadBlock::Linear(a) => a.out_width(),
            HeadBlock::Gru(g) => g.hidden,
        }
    }

    fn parameter_count(&self) -> usize {
        match self {
            HeadBlock::Linear(a) => a.parameter_count(),
            HeadBlock::Gru(g) => g.parameter_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub class_count: usize,
    pub conv: Vec<ConvLayer>,
    pub head: Vec<HeadBlock>,
}

impl ModelWeights {
    pub fn conv_widths(&self) -> Vec<usize> {
        self.conv.iter().map(ConvLayer::out_width).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.conv.iter().map(|c| c.phi.parameter_count()).sum::<usize>()
            + self.head.iter().map(HeadBlock::parameter_count).sum::<usize>()
    }

    /// Checks widths and block order.
    pub fn validate(&self) -> Result<()> {
        if self.class_count == 0 {
            return Err(Error::schema("model", "class_count must be at least 1"));
        }
        if self.conv.len() != CONV_LAYERS {
            return Err(Error::schema(
                "model",
                format!("expected {CONV_LAYERS} conv blocks, found {}", self.conv.len()),
            ));
        }
        let mut width = FIRST_LAYER_FEATURES;
        for (i, layer) in self.conv.iter().enumerate() {
            let name = format!("block {i} (conv)");
            if layer.in_width != width || layer.phi.in_width() != width + POSITION_INPUTS {
                return Err(Error::schema(
                    name,
                    format!(
                        "input width {} does not match {width} features + {POSITION_INPUTS} positions",
                        layer.phi.in_width()
                    ),
                ));
            }
            check_affine(&layer.phi, &name)?;
            width = layer.out_width();
        }
        if self.head.is_empty() {
            return Err(Error::schema("model", "head has no blocks"));
        }
        for (j, block) in self.head.iter().enumerate() {
            let idx = CONV_LAYERS + j;
            let name = match block {
                HeadBlock::Linear(_) => format!("block {idx} (linear)"),
                HeadBlock::Gru(_) => format!("block {idx} (gru)"),
            };
            if block.in_width() != width {
                return Err(Error::schema(
                    name,
                    format!("input width {} but the previous block emits {width}", block.in_width()),
                ));
            }
            match block {
                HeadBlock::Linear(a) => check_affine(a, &name)?,
                HeadBlock::Gru(g) => check_gru(g, &name)?,
            }
            width = block.out_width();
        }
        if width != self.class_count + 1 {
            return Err(Error::schema(
                "model",
                format!(
                    "final block emits {width} values, expected class_count + 1 = {}",
                    self.class_count + 1
                ),
            ));
        }
        Ok(())
    }
}

fn check_affine(a: &Affine, name: &str) -> Result<()> {
    if a.weight.shape.len() != 2 || a.weight.data.len() != a.out_width() * a.in_width() {
        return Err(Error::schema(name, "weight shape does not match in/out"));
    }
    if a.bias.len() != a.out_width() {
        return Err(Error::schema(
            name,
            format!("{} biases for {} outputs", a.bias.len(), a.out_width()),
        ));
    }
    Requant::new(a.requant.scale_num, a.requant.scale_shift).map_err(|e| Error::schema(name, e.to_string()))?;
    Ok(())
}

fn check_gru(g: &GruBlock, name: &str) -> Result<()> {
    let h = g.hidden;
    if g.w_input.shape != [3 * h, g.input()] || g.w_hidden.shape != [3 * h, h] {
        return Err(Error::schema(name, "gate matrices do not match in/out"));
    }
    if g.bias.len() != 3 * h {
        return Err(Error::schema(name, format!("{} biases for {} gate rows", g.bias.len(), 3 * h)));
    }
    Requant::new(g.requant.scale_num, g.requant.scale_shift).map_err(|e| Error::schema(name, e.to_string()))?;
    Ok(())
}

// ---- file container ----

#[derive(Debug, Serialize, Deserialize)]
struct WeightFile {
    version: u32,
    class_count: usize,
    conv_widths: Vec<usize>,
    blocks: Vec<BlockRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BlockKind {
    Conv,
    Linear,
    Gru,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlockRecord {
    kind: BlockKind,
    #[serde(rename = "in")]
    in_width: usize,
    #[serde(rename = "out")]
    out_width: usize,
    scale_num: i32,
    scale_shift: u32,
    weight: String,
    bias: Vec<i32>,
}

fn to_i8(bytes: Vec<u8>) -> Vec<i8> {
    bytes.into_iter().map(|b| b as i8).collect()
}

fn to_u8(data: &[i8]) -> Vec<u8> {
    data.iter().map(|&b| b as u8).collect()
}

impl WeightFile {
    fn into_weights(self) -> Result<ModelWeights> {
        if self.version != WEIGHT_FILE_VERSION {
            return Err(Error::schema(
                "header",
                format!("unsupported version {} (expected {WEIGHT_FILE_VERSION})", self.version),
            ));
        }
        if self.class_count == 0 {
            return Err(Error::schema("header", "class_count must be at least 1"));
        }
        let mut conv = Vec::new();
        let mut head = Vec::new();
        for (i, b) in self.blocks.into_iter().enumerate() {
            let name = format!("block {i} ({})", match b.kind {
                BlockKind::Conv => "conv",
                BlockKind::Linear => "linear",
                BlockKind::Gru => "gru",
            });
            let bytes = BASE64
                .decode(b.weight.as_bytes())
                .map_err(|e| Error::schema(&name, format!("weight is not valid base64: {e}")))?;
            let requant = Requant::new(b.scale_num, b.scale_shift).map_err(|e| Error::schema(&name, e.to_string()))?;
            let tensor = |data: Vec<i8>, rows: usize, cols: usize| {
                QuantTensor::new(data, vec![rows, cols], 1.0).map_err(|e| Error::schema(&name, e.to_string()))
            };
            match b.kind {
                BlockKind::Conv | BlockKind::Linear => {
                    if bytes.len() != b.in_width * b.out_width {
                        return Err(Error::schema(
                            &name,
                            format!("{} weight bytes for {}x{}", bytes.len(), b.out_width, b.in_width),
                        ));
                    }
                    let affine = Affine {
                        weight: tensor(to_i8(bytes), b.out_width, b.in_width)?,
                        bias: b.bias,
                        requant,
                    };
                    if matches!(b.kind, BlockKind::Conv) {
                        if !head.is_empty() {
                            return Err(Error::schema(&name, "conv block after head blocks"));
                        }
                        if b.in_width < POSITION_INPUTS {
                            return Err(Error::schema(&name, "conv input narrower than the position inputs"));
                        }
                        conv.push(ConvLayer { in_width: b.in_width - POSITION_INPUTS, phi: affine });
                    } else {
                        head.push(HeadBlock::Linear(affine));
                    }
                }
                BlockKind::Gru => {
                    let h = b.out_width;
                    let n_in = 3 * h * b.in_width;
                    if bytes.len() != n_in + 3 * h * h {
                        return Err(Error::schema(
                            &name,
                            format!("{} weight bytes for a {}->{} gru", bytes.len(), b.in_width, h),
                        ));
                    }
                    let mut data = to_i8(bytes);
                    let hidden_part = data.split_off(n_in);
                    head.push(HeadBlock::Gru(GruBlock {
                        hidden: h,
                        w_input: tensor(data, 3 * h, b.in_width)?,
                        w_hidden: tensor(hidden_part, 3 * h, h)?,
                        bias: b.bias,
                        requant,
                    }));
                }
            }
        }
        let weights = ModelWeights { class_count: self.class_count, conv, head };
        weights.validate()?;
        if weights.conv_widths() != self.conv_widths {
            return Err(Error::schema(
                "header",
                format!(
                    "conv_widths {:?} disagree with conv blocks {:?}",
                    self.conv_widths,
                    weights.conv_widths()
                ),
            ));
        }
        Ok(weights)
    }

    fn from_weights(w: &ModelWeights) -> Self {
        let affine_record = |kind, a: &Affine| BlockRecord {
            kind,
            in_width: a.in_width(),
            out_width: a.out_width(),
            scale_num: a.requant.scale_num,
            scale_shift: a.requant.scale_shift,
            weight: BASE64.encode(to_u8(&a.weight.data)),
            bias: a.bias.clone(),
        };
        let mut blocks: Vec<BlockRecord> = w.conv.iter().map(|c| affine_record(BlockKind::Conv, &c.phi)).collect();
        for b in &w.head {
            blocks.push(match b {
                HeadBlock::Linear(a) => affine_record(BlockKind::Linear, a),
                HeadBlock::Gru(g) => {
                    let mut bytes = to_u8(&g.w_input.data);
                    bytes.extend(to_u8(&g.w_hidden.data));
                    BlockRecord {
                        kind: BlockKind::Gru,
                        in_width: g.input(),
                        out_width: g.hidden,
                        scale_num: g.requant.scale_num,
                        scale_shift: g.requant.scale_shift,
                        weight: BASE64.encode(bytes),
                        bias: g.bias.clone(),
                    }
                }
            });
        }
        WeightFile {
            version: WEIGHT_FILE_VERSION,
            class_count: w.class_count,
            conv_widths: w.conv_widths(),
            blocks,
        }
    }
}

pub fn weights_from_json(text: &str) -> Result<ModelWeights> {
    let file: WeightFile =
        serde_json::from_str(text).map_err(|e| Error::schema("weight file", e.to_string()))?;
    file.into_weights()
}

pub fn weights_to_json(weights: &ModelWeights) -> Result<String> {
    weights.validate()?;
    serde_json::to_string(&WeightFile::from_weights(weights)).map_err(|e| Error::schema("weight file", e.to_string()))
}

pub fn load_weights(path: &Path) -> Result<ModelWeights> {
    weights_from_json(&fs::read_to_string(path)?)
}

pub fn save_weights(weights: &ModelWeights, path: &Path) -> Result<()> {
    fs::write(path, weights_to_json(weights)?)?;
    Ok(())
}

// ---- random fixtures ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "out")]
pub enum HeadSpec {
    Linear(usize),
    Gru(usize),
}

/// Layer widths for [`random_weights`]. The last head entry must emit
/// `class_count + 1` values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub conv_widths: [usize; CONV_LAYERS],
    pub head: Vec<HeadSpec>,
    pub class_count: usize,
}

impl Arch {
    /// Four 72-wide conv layers, then linear 72, GRU 72, linear 48,
    /// linear 48 and the class + confidence output.
    pub fn with_classes(class_count: usize) -> Self {
        Self {
            conv_widths: [DEFAULT_WIDTH; CONV_LAYERS],
            head: vec![
                HeadSpec::Linear(DEFAULT_WIDTH),
                HeadSpec::Gru(DEFAULT_WIDTH),
                HeadSpec::Linear(48),
                HeadSpec::Linear(48),
                HeadSpec::Linear(class_count + 1),
            ],
            class_count,
        }
    }
}

impl Default for Arch {
    fn default() -> Self {
        Self::with_classes(DEFAULT_CLASS_COUNT)
    }
}

/// Shift that maps a random accumulator over `fan_in` inputs back to roughly
/// ±32 for weights in [-32, 31] and activations of similar size.
fn fixture_shift(fan_in: usize) -> u32 {
    ((fan_in as f64).sqrt() * 14.5).log2().ceil().max(0.0) as u32
}

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> QuantTensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-32i8..32)).collect();
    QuantTensor::new(data, vec![rows, cols], 1.0).expect("shape by construction")
}

fn random_affine(rng: &mut ChaCha8Rng, in_width: usize, out_width: usize) -> Affine {
    Affine {
        weight: random_tensor(rng, out_width, in_width),
        bias: (0..out_width).map(|_| rng.random_range(-256..=256)).collect(),
        requant: Requant { scale_num: 1, scale_shift: fixture_shift(in_width) },
    }
}

/// Deterministic random parameters for `arch`.
pub fn random_weights(seed: u64, arch: &Arch) -> Result<ModelWeights> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conv = Vec::with_capacity(CONV_LAYERS);
    let mut width = FIRST_LAYER_FEATURES;
    for &out in &arch.conv_widths {
        conv.push(ConvLayer { in_width: width, phi: random_affine(&mut rng, width + POSITION_INPUTS, out) });
        width = out;
    }
    let mut head = Vec::with_capacity(arch.head.len());
    for spec in &arch.head {
        match *spec {
            HeadSpec::Linear(out) => {
                head.push(HeadBlock::Linear(random_affine(&mut rng, width, out)));
                width = out;
            }
            HeadSpec::Gru(h) => {
                head.push(HeadBlock::Gru(GruBlock {
                    hidden: h,
                    w_input: random_tensor(&mut rng, 3 * h, width),
                    w_hidden: random_tensor(&mut rng, 3 * h, h),
                    bias: (0..3 * h).map(|_| rng.random_range(-256..=256)).collect(),
                    requant: Requant { scale_num: 1, scale_shift: fixture_shift(width + h) },
                }));
                width = h;
            }
        }
    }
    let weights = ModelWeights { class_count: arch.class_count, conv, head };
    weights.validate()?;
    Ok(weights)
}
