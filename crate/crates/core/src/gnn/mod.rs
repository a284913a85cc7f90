//! 8-bit quantized graph neural network.

pub mod conv;
pub mod engine;
pub mod head;
pub mod quant;
pub mod weights;

pub use conv::{encode_dc, encode_dt, encode_mean_dt, first_layer_inputs, pointnet_conv, ConvInput};
pub use engine::{argmax, infer_stream, Engine, EngineCounters, Prediction, WindowPool, DEFAULT_WINDOW_US};
pub use head::{gru_step, head_forward, HeadOutput, RecurrentState};
pub use quant::{QuantTensor, Requant};
pub use weights::{
    load_weights, random_weights, save_weights, weights_from_json, weights_to_json, Affine, Arch, ConvLayer,
    GruBlock, HeadBlock, HeadSpec, ModelWeights,
};
