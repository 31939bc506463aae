//! Energy cost modelling for spiking and conventional neural network
//! accelerators: an analytic per-element estimator, an op-counting
//! functional simulator that checks it, and Pareto analysis of published
//! accelerator results.

pub mod analytic;
pub mod cost;
pub mod error;
pub mod network;
pub mod pareto;
pub mod report;
pub mod sim;
pub mod survey;

pub use analytic::{
    ann_conv_window, element_energy, format_energy, layer_total, network_total, rnn_recurrent_neuron, scale,
    snn_conv_window, snn_recurrent_neuron, sweep_sparsity, EnergyBreakdown, EnergyKind, NetKind, SweepRow,
};
pub use cost::{load_cost_table, mem_energy, Access, CostTable};
pub use error::{Error, Result};
pub use network::{
    conv_output_dims, load_layer, n_rd, ConvShape, LayerShape, NeuronParams, RecurrentShape, ResetMode, SparsityMode,
    SparsitySpec,
};
pub use pareto::{dominates, emit_scatter, frontier, FrontierResult};
pub use survey::{load_survey, parse_survey, AcceleratorRecord, Family, Task};
