//! NeuTNN: a cycle-level simulator for temporal neural networks built from
//! active-dendrite neurons, with STDP training, weight pruning and a
//! structural hardware compiler with PPA forecasting.

pub mod data;
pub mod error;
pub mod flow;
pub mod hwgen;
pub mod learning;
pub mod model_doc;
pub mod network;
pub mod neuron;
pub mod placecell;
pub mod presets;
pub mod pruning;
pub mod temporal;
pub mod weights;

pub use error::{Error, Result, WidthDiagnostic};
pub use learning::{stdp_update, train_cycle, train_dataset, StdpParams, TrainConfig, TrainOptions};
pub use model_doc::ModelDocument;
pub use network::{count_synapses, LayerSpec, ModelSpec, VoteRule};
pub use neuron::{DendriteSpec, NeuronSpec, ResponseKind, SegmentKind, SegmentSpec};
pub use pruning::{prune, PruneConfig, PruneMode, PruneReport};
pub use temporal::{GammaCycle, SpikeTime, SpikeVolley};
pub use weights::WeightMatrix;
