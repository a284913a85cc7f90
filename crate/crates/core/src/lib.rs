//! Streaming event-based keyword spotting.
//!
//! Events from a neuromorphic auditory sensor pass through a per-channel
//! decayed-potential filter, are linked into a time-directed graph, and are
//! classified by an 8-bit graph neural network that pools node features over
//! 10 ms windows and feeds a recurrent head. The crate also provides the
//! evaluation metrics and a cycle-level model of the hardware pipeline.

pub mod config;
pub mod dataset;
pub mod error;
pub mod event;
pub mod filtration;
pub mod gnn;
pub mod graph;
pub mod hw;
pub mod metrics;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{Error, Location, Result};
pub use event::{Event, EventStream, Polarity, SensorConfig, Topology};
pub use filtration::{filter_step, filter_stream, make_thresholds, FiltrationParams, FiltrationState, ThresholdSchedule};
pub use gnn::{infer_stream, Engine, ModelWeights, Prediction};
pub use graph::{brute_force_neighbors, GraphBuilder, GraphParams, NeighborSet};
pub use hw::{calibrate_cycle_model, latency_report, simulate, throughput_envelope, HwParams, SimEvent, SimTrace};
pub use metrics::{accuracy, macro_f1, ts_accuracy, EvalRecord, MetricReport};
