//! Operation-counting functional simulator.

pub mod compare;
pub mod conv;
pub mod counts;
pub mod lif;
pub mod recurrent;
pub mod rng;
pub mod tensor;

pub use compare::{rel_dev, simulate_layer, Comparison, SimConfig};
pub use conv::{ann_conv_layer, snn_conv_layer, AnnOptions, SnnOptions, SpikeReads, Traversal, ZeroSkip};
pub use counts::{counts_to_energy, OpCounts};
pub use lif::{lif_step, LifState, StepOutcome};
pub use recurrent::{
    recurrent_step, rnn_recurrent_step, snn_recurrent_step, Activation, RecurrentKind, RecurrentLayer, RecurrentState,
    RnnWeights,
};
pub use rng::{gen_sparse_activations, gen_sparse_spikes, gen_uniform_int8};
pub use tensor::QuantTensor;
